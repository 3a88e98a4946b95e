"""FastAPI application wrapping the benchmark harness.

Runs are submitted as JSON configs, executed sequentially on a worker thread
(sweeps can take minutes) and persisted under the service's output directory;
clients poll run status and fetch results as JSON or the canonical CSV.
"""

from __future__ import annotations

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse

from .. import __version__
from ..classifiers import Hyperparams
from ..datasets import BUILTIN_DATASETS, dataset_config_from_dict, load_dataset
from ..deletion import DeletionScenario, scenario_from_dict
from ..experiment import DEFAULT_CLASSIFIERS, ExperimentConfig, merge_results, run_sweep
from ..metrics import compute_metrics, confusion, gaussian_smooth
from ..reporting import build_manifest, emit_results
from .schemas import (
    DatasetInfo,
    HealthResponse,
    MetricsRequest,
    MetricsResponse,
    ResultRowModel,
    ResultsResponse,
    RunRequest,
    RunStatus,
    RunSubmitted,
    ScenarioSpec,
    SmoothRequest,
    SmoothResponse,
)

logger = logging.getLogger(__name__)


class RunRecord:
    def __init__(self, run_id: str, scenario: str):
        self.run_id = run_id
        self.scenario = scenario
        self.status = "queued"
        self.error: str | None = None
        self.manifest: dict | None = None
        self.result = None
        self.out_dir: Path | None = None


class RunRegistry:
    def __init__(self):
        self._lock = threading.Lock()
        self._runs: dict[str, RunRecord] = {}
        self._counter = 0

    def create(self, scenario: str) -> RunRecord:
        with self._lock:
            self._counter += 1
            run_id = f"run-{self._counter:04d}"
            record = RunRecord(run_id, scenario)
            self._runs[run_id] = record
            return record

    def get(self, run_id: str) -> RunRecord:
        with self._lock:
            if run_id not in self._runs:
                raise KeyError(run_id)
            return self._runs[run_id]

    def all(self) -> list[RunRecord]:
        with self._lock:
            return list(self._runs.values())


def _scenario_from_spec(spec: ScenarioSpec) -> DeletionScenario:
    return scenario_from_dict(spec.model_dump(exclude_none=True))


def _hyperparams_from_spec(spec) -> Hyperparams:
    if spec is None:
        return Hyperparams()
    overrides = {k: v for k, v in spec.model_dump().items() if v is not None}
    return Hyperparams(**overrides)


def create_app(data_dir=None, out_dir="service-runs", harness_config=None) -> FastAPI:
    app = FastAPI(title="erasure-bench", version=__version__)
    registry = RunRegistry()
    executor = ThreadPoolExecutor(max_workers=1)
    out_root = Path(out_dir)
    harness_config = harness_config or {}

    catalog = dict(BUILTIN_DATASETS)
    for ds_id, entry in harness_config.get("datasets", {}).items():
        catalog[ds_id] = dataset_config_from_dict(ds_id, entry)

    def _execute(record: RunRecord, request: RunRequest) -> None:
        record.status = "running"
        try:
            dcfg = catalog[request.dataset]
            scenario = _scenario_from_spec(request.scenario)
            cfg = ExperimentConfig(
                dataset=dcfg.dataset_id,
                scenario=scenario,
                classifiers=tuple(request.classifiers or DEFAULT_CLASSIFIERS),
                hyperparams=_hyperparams_from_spec(request.hyperparams),
                percentages=tuple(request.percentages) if request.percentages
                else ExperimentConfig(dataset=dcfg.dataset_id).percentages,
                split_seed=request.split_seed,
                repetitions=request.repetitions,
                fixed_test=request.fixed_test,
            )
            ds = load_dataset(dcfg, data_dir=data_dir)
            result = run_sweep(cfg, ds, dcfg)
            if request.compare_random and scenario.mode != "random":
                random_cfg = replace(cfg, scenario=DeletionScenario(seed=scenario.seed))
                result = merge_results(result, run_sweep(random_cfg, ds, dcfg))
            manifest = build_manifest(cfg, dcfg)
            record.out_dir = out_root / record.run_id
            emit_results(result, manifest, record.out_dir,
                         smooth_sigma=request.smooth_sigma)
            record.result = result
            record.manifest = {k: (list(v) if isinstance(v, tuple) else v)
                               for k, v in asdict(manifest).items()}
            record.status = "completed"
        except Exception as exc:  # noqa: BLE001 - reported through run status
            logger.exception("run %s failed", record.run_id)
            record.status = "failed"
            record.error = str(exc)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.get("/datasets", response_model=list[DatasetInfo])
    def datasets() -> list[DatasetInfo]:
        return [
            DatasetInfo(
                dataset_id=cfg.dataset_id,
                filename=cfg.filename,
                target=cfg.schema.target,
                feature_columns=list(cfg.schema.feature_columns),
                columns=list(cfg.schema.columns),
                averaging=cfg.averaging,
                positive_class=cfg.positive_class,
            )
            for cfg in catalog.values()
        ]

    @app.post("/runs", response_model=RunSubmitted, status_code=202)
    def submit_run(request: RunRequest) -> RunSubmitted:
        if request.dataset not in catalog:
            raise HTTPException(status_code=404, detail=f"unknown dataset {request.dataset!r}")
        try:
            scenario = _scenario_from_spec(request.scenario)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        record = registry.create(scenario.label())
        executor.submit(_execute, record, request)
        return RunSubmitted(run_id=record.run_id, status=record.status)

    @app.get("/runs", response_model=list[RunStatus])
    def list_runs() -> list[RunStatus]:
        return [
            RunStatus(run_id=r.run_id, status=r.status, scenario=r.scenario,
                      error=r.error, manifest=r.manifest)
            for r in registry.all()
        ]

    @app.get("/runs/{run_id}", response_model=RunStatus)
    def run_status(run_id: str) -> RunStatus:
        try:
            record = registry.get(run_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id!r}") from None
        return RunStatus(run_id=record.run_id, status=record.status,
                         scenario=record.scenario, error=record.error,
                         manifest=record.manifest)

    @app.get("/runs/{run_id}/results", response_model=ResultsResponse)
    def run_results(run_id: str) -> ResultsResponse:
        try:
            record = registry.get(run_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id!r}") from None
        if record.status != "completed":
            raise HTTPException(status_code=409,
                                detail=f"run {run_id} is {record.status}")
        rows = [ResultRowModel(**asdict(row)) for row in record.result.rows]
        return ResultsResponse(run_id=run_id, rows=rows)

    @app.get("/runs/{run_id}/results.csv", response_class=PlainTextResponse)
    def run_results_csv(run_id: str) -> PlainTextResponse:
        try:
            record = registry.get(run_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id!r}") from None
        if record.status != "completed" or record.out_dir is None:
            raise HTTPException(status_code=409,
                                detail=f"run {run_id} is {record.status}")
        csv_path = record.out_dir / "results.csv"
        return PlainTextResponse(csv_path.read_text(encoding="utf-8"),
                                 media_type="text/csv")

    @app.post("/metrics", response_model=MetricsResponse)
    def metrics(request: MetricsRequest) -> MetricsResponse:
        try:
            stats = confusion(request.y_true, request.y_pred, request.class_names)
            report = compute_metrics(stats, averaging=request.averaging,
                                     positive_class=request.positive_class)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        return MetricsResponse(accuracy=report.accuracy, precision=report.precision,
                               recall=report.recall, f1=report.f1,
                               averaging=report.averaging)

    @app.post("/smooth", response_model=SmoothResponse)
    def smooth(request: SmoothRequest) -> SmoothResponse:
        try:
            values = gaussian_smooth(request.values, request.sigma)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        return SmoothResponse(values=[float(v) for v in values])

    return app
