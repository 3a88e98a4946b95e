"""Sweep orchestration: baseline, deletion levels, retraining and metric rows.

The pipeline per deletion percentage: build or extend the deletion plan, drop
the deleted records from the full dataset, re-encode with the vocabulary frozen
on the undeleted data, split 70/30 with the experiment's split seed, retrain
every classifier from scratch and score the test split. Repetitions run the
same sweep with deletion seeds base, base+1, ... Rows come out in a fixed
sorted order, so a run is reproducible byte-for-byte downstream.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .classifiers import Hyperparams, fit, predict
from .datasets import Dataset, DatasetConfig, FeatureEncoder, train_test_split
from .deletion import DeletionScenario, apply_deletion, build_plan
from .metrics import MetricsReport, compute_metrics, confusion

logger = logging.getLogger(__name__)

DEFAULT_CLASSIFIERS = ("knn", "svm_linear", "random_forest", "gbt")
TRAIN_RATIO = 0.7
MIN_SWEEP_ROWS = 10


def default_percent_grid() -> tuple[float, ...]:
    return tuple(step * 0.05 for step in range(20))  # 0.00 .. 0.95


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    scenario: DeletionScenario = field(default_factory=DeletionScenario)
    classifiers: tuple[str, ...] = DEFAULT_CLASSIFIERS
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    percentages: tuple[float, ...] = field(default_factory=default_percent_grid)
    split_seed: int = 42
    repetitions: int = 1
    fixed_test: bool = False

    def __post_init__(self):
        ps = self.percentages
        if any(p < 0 or p >= 1 for p in ps):
            raise ValueError("percentages must lie in [0, 1)")
        if any(b <= a for a, b in zip(ps, ps[1:])):
            raise ValueError("percentages must be strictly increasing")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        for kind in self.classifiers:
            if kind not in ("knn", "svm_linear", "random_forest", "gbt", "zero_rule"):
                raise ValueError(f"unknown classifier kind {kind!r}")

    def deletion_seeds(self) -> tuple[int, ...]:
        return tuple(self.scenario.seed + r for r in range(self.repetitions))


@dataclass(frozen=True)
class ResultRow:
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


@dataclass(frozen=True)
class SweepResult:
    dataset: str
    scenario: str
    classifiers: tuple[str, ...]
    percentages: tuple[float, ...]
    seeds: tuple[int, ...]
    averaging: str
    positive_class: str | None
    rows: tuple[ResultRow, ...]

    def select(self, classifier=None, percentage=None, seed=None,
               scenario=None) -> list[ResultRow]:
        out = []
        for row in self.rows:
            if classifier is not None and row.classifier != classifier:
                continue
            if percentage is not None and abs(row.percentage - percentage) > 1e-12:
                continue
            if seed is not None and row.seed != seed:
                continue
            if scenario is not None and row.scenario != scenario:
                continue
            out.append(row)
        return out


def _row_sort_key(row: ResultRow):
    return (row.scenario, row.classifier, row.percentage, row.seed)


def _score(model, X_test, y_test, class_names, averaging, positive_class) -> MetricsReport:
    y_pred = predict(model, X_test)
    stats = confusion(y_test, y_pred, class_names)
    return compute_metrics(stats, averaging=averaging, positive_class=positive_class)


def _evaluate_cell(
    pd_current,
    kinds,
    hp: Hyperparams,
    split_seed: int,
    averaging: str,
    positive_class: str | None,
    fixed_test_ids=None,
) -> dict[str, tuple[MetricsReport, str]]:
    """Train and score the requested classifier kinds on one prepared dataset."""
    if fixed_test_ids is None:
        split = train_test_split(pd_current, TRAIN_RATIO, split_seed)
        train_ids, test_ids = split.train_ids, split.test_ids
    else:
        test_ids = fixed_test_ids
        current = set(int(i) for i in pd_current.row_ids)
        test_ids = np.array([i for i in fixed_test_ids if int(i) in current], dtype=np.int64)
        train_ids = np.array(
            sorted(current - {int(i) for i in test_ids}), dtype=np.int64
        )
    X_train, y_train = pd_current.take_ids(train_ids)
    X_test, y_test = pd_current.take_ids(test_ids)

    warnings = []
    present = np.unique(y_train)
    if present.size < len(pd_current.class_names):
        missing = [pd_current.class_names[c] for c in range(len(pd_current.class_names))
                   if c not in present]
        warnings.append("class_absent_train:" + "|".join(missing))
        logger.warning("classes absent from training split: %s", missing)
    warning_text = ";".join(warnings)

    out = {}
    for kind in kinds:
        model = fit(kind, X_train, y_train, hp, class_names=pd_current.class_names)
        report = _score(model, X_test, y_test, pd_current.class_names,
                        averaging, positive_class)
        out[kind] = (report, warning_text)
    return out


def run_baseline(cfg: ExperimentConfig, ds: Dataset, dcfg: DatasetConfig) -> list[ResultRow]:
    """Undeleted 70/30 baseline for every configured classifier plus zero-rule."""
    encoder = FeatureEncoder(ds.schema, dcfg.preprocess).fit(ds)
    pd_full = encoder.transform(ds)
    kinds = tuple(dict.fromkeys(cfg.classifiers)) + ("zero_rule",)
    cells = _evaluate_cell(
        pd_full, kinds, cfg.hyperparams, cfg.split_seed,
        dcfg.averaging, dcfg.positive_class,
    )
    rows = [
        ResultRow(
            dataset=cfg.dataset,
            classifier=kind,
            scenario=cfg.scenario.label(),
            percentage=0.0,
            seed=cfg.scenario.seed,
            accuracy=report.accuracy,
            precision=report.precision,
            recall=report.recall,
            f1=report.f1,
            n_remaining=pd_full.n_rows,
            warnings=warning,
        )
        for kind, (report, warning) in cells.items()
    ]
    return sorted(rows, key=_row_sort_key)


def run_sweep(cfg: ExperimentConfig, ds: Dataset, dcfg: DatasetConfig) -> SweepResult:
    """Full deletion sweep; always includes the percentage-0 baseline rows."""
    encoder = FeatureEncoder(ds.schema, dcfg.preprocess).fit(ds)
    pd_full = encoder.transform(ds)
    kinds = tuple(dict.fromkeys(cfg.classifiers))
    seeds = cfg.deletion_seeds()

    fixed_test_ids = None
    base_ds = ds
    if cfg.fixed_test:
        split = train_test_split(pd_full, TRAIN_RATIO, cfg.split_seed)
        fixed_test_ids = split.test_ids
        base_ds = apply_deletion(ds, split.test_ids)  # deletions only hit training rows

    rows: list[ResultRow] = []

    # Baseline block at percentage 0: classifier rows replicated per seed so the
    # (classifier, percentage, seed) grid stays complete, plus one zero-rule row.
    baseline_cells = _evaluate_cell(
        pd_full, kinds + ("zero_rule",), cfg.hyperparams, cfg.split_seed,
        dcfg.averaging, dcfg.positive_class, fixed_test_ids,
    )
    include_zero = any(abs(p) < 1e-12 for p in cfg.percentages)
    baseline_seeds = seeds if include_zero else seeds[:1]
    for kind in kinds:
        report, warning = baseline_cells[kind]
        for seed in baseline_seeds:
            rows.append(ResultRow(
                dataset=cfg.dataset, classifier=kind, scenario=cfg.scenario.label(),
                percentage=0.0, seed=seed, accuracy=report.accuracy,
                precision=report.precision, recall=report.recall, f1=report.f1,
                n_remaining=ds.n_rows, warnings=warning,
            ))
    zr_report, zr_warning = baseline_cells["zero_rule"]
    rows.append(ResultRow(
        dataset=cfg.dataset, classifier="zero_rule", scenario=cfg.scenario.label(),
        percentage=0.0, seed=seeds[0], accuracy=zr_report.accuracy,
        precision=zr_report.precision, recall=zr_report.recall, f1=zr_report.f1,
        n_remaining=ds.n_rows, warnings=zr_warning,
    ))

    positive_ps = tuple(p for p in cfg.percentages if p > 0)
    for seed in seeds:
        scenario = cfg.scenario.with_seed(seed)
        if positive_ps:
            plan = build_plan(base_ds, scenario, positive_ps)
        for p in positive_ps:
            surviving = apply_deletion(base_ds, plan.deleted_ids(p))
            n_remaining = surviving.n_rows + (len(fixed_test_ids) if cfg.fixed_test else 0)
            if n_remaining < MIN_SWEEP_ROWS:
                logger.warning("sweep stopped at p=%s: %d rows remaining", p, n_remaining)
                break
            if cfg.fixed_test:
                pd_current = encoder.transform(
                    apply_deletion(ds, np.setdiff1d(ds.row_ids, np.concatenate(
                        [surviving.row_ids, fixed_test_ids])))
                )
            else:
                pd_current = encoder.transform(surviving)
            cells = _evaluate_cell(
                pd_current, kinds, cfg.hyperparams, cfg.split_seed,
                dcfg.averaging, dcfg.positive_class, fixed_test_ids,
            )
            for kind in kinds:
                report, warning = cells[kind]
                rows.append(ResultRow(
                    dataset=cfg.dataset, classifier=kind, scenario=cfg.scenario.label(),
                    percentage=p, seed=seed, accuracy=report.accuracy,
                    precision=report.precision, recall=report.recall, f1=report.f1,
                    n_remaining=n_remaining, warnings=warning,
                ))

    return SweepResult(
        dataset=cfg.dataset,
        scenario=cfg.scenario.label(),
        classifiers=kinds,
        percentages=cfg.percentages,
        seeds=seeds,
        averaging=dcfg.averaging,
        positive_class=dcfg.positive_class,
        rows=tuple(sorted(rows, key=_row_sort_key)),
    )


def merge_results(*results: SweepResult) -> SweepResult:
    """Combine sweeps over the same dataset/grid (e.g. one per scenario) into one result."""
    first = results[0]
    for other in results[1:]:
        if other.dataset != first.dataset:
            raise ValueError("cannot merge results from different datasets")
        if other.percentages != first.percentages:
            raise ValueError("cannot merge results with different percentage grids")
    rows = tuple(sorted((r for res in results for r in res.rows), key=_row_sort_key))
    scenarios = list(dict.fromkeys(res.scenario for res in results))
    return SweepResult(
        dataset=first.dataset,
        scenario="+".join(scenarios),
        classifiers=tuple(dict.fromkeys(k for res in results for k in res.classifiers)),
        percentages=first.percentages,
        seeds=tuple(dict.fromkeys(s for res in results for s in res.seeds)),
        averaging=first.averaging,
        positive_class=first.positive_class,
        rows=rows,
    )


@dataclass(frozen=True)
class DiffRow:
    classifier: str
    percentage: float
    difference: float


def diff_series(a: SweepResult, b: SweepResult, metric: str = "f1") -> list[DiffRow]:
    """Per (classifier, percentage): metric(a) - metric(b), averaged over seeds."""
    if a.dataset != b.dataset:
        raise ValueError("difference series requires a common dataset")
    if set(a.classifiers) != set(b.classifiers):
        raise ValueError("difference series requires matching classifier sets")
    if a.percentages != b.percentages:
        raise ValueError("difference series requires matching percentage grids")

    def grid_mean(res: SweepResult) -> dict[tuple[str, float], float]:
        acc: dict[tuple[str, float], list[float]] = {}
        for row in res.rows:
            if row.classifier == "zero_rule":
                continue
            acc.setdefault((row.classifier, row.percentage), []).append(
                getattr(row, metric)
            )
        return {key: float(np.mean(vals)) for key, vals in acc.items()}

    mean_a, mean_b = grid_mean(a), grid_mean(b)
    if set(mean_a) != set(mean_b):
        raise ValueError("difference series requires matching (classifier, percentage) grids")
    return [
        DiffRow(classifier=c, percentage=p, difference=mean_a[(c, p)] - mean_b[(c, p)])
        for c, p in sorted(mean_a)
    ]
