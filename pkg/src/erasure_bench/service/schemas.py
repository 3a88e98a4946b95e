"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class ScenarioSpec(BaseModel):
    mode: str = "random"
    attribute: Optional[str] = None
    selected_values: list[str] = Field(default_factory=list)
    reversed: bool = False
    age_cutoff: float = 45.0
    value_order: Optional[list[str]] = None
    combine_with: Optional["ScenarioSpec"] = None
    incremental: bool = False
    seed: int = 42


ScenarioSpec.model_rebuild()


class HyperparamsSpec(BaseModel):
    knn_k: Optional[int] = None
    knn_metric: Optional[str] = None
    svm_c: Optional[float] = None
    svm_epochs: Optional[int] = None
    rf_trees: Optional[int] = None
    rf_max_depth: Optional[int] = None
    rf_feature_subsample: Optional[float] = None
    gbt_rounds: Optional[int] = None
    gbt_depth: Optional[int] = None
    gbt_learning_rate: Optional[float] = None
    model_seed: Optional[int] = None


class RunRequest(BaseModel):
    dataset: str
    scenario: ScenarioSpec = Field(default_factory=ScenarioSpec)
    classifiers: Optional[list[str]] = None
    hyperparams: Optional[HyperparamsSpec] = None
    percentages: Optional[list[float]] = None
    split_seed: int = 42
    repetitions: int = 1
    fixed_test: bool = False
    compare_random: bool = False
    smooth_sigma: float = 2.0


class RunSubmitted(BaseModel):
    run_id: str
    status: str


class RunStatus(BaseModel):
    run_id: str
    status: str
    scenario: Optional[str] = None
    error: Optional[str] = None
    manifest: Optional[dict] = None


class ResultRowModel(BaseModel):
    dataset: str
    classifier: str
    scenario: str
    percentage: float
    seed: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    n_remaining: int
    warnings: str = ""


class ResultsResponse(BaseModel):
    run_id: str
    rows: list[ResultRowModel]


class DatasetInfo(BaseModel):
    dataset_id: str
    filename: str
    target: str
    feature_columns: list[str]
    columns: list[tuple[str, str]]
    averaging: str
    positive_class: Optional[str] = None


class SmoothRequest(BaseModel):
    values: list[float]
    sigma: float = 2.0


class SmoothResponse(BaseModel):
    values: list[float]


class MetricsRequest(BaseModel):
    y_true: list[int]
    y_pred: list[int]
    class_names: list[str]
    averaging: str = "macro"
    positive_class: Optional[str] = None


class MetricsResponse(BaseModel):
    accuracy: float
    precision: float
    recall: float
    f1: float
    averaging: str


class HealthResponse(BaseModel):
    status: str
    version: str
