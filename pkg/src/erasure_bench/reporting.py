"""Result CSV emission, run manifests and plot-data files.

The normative artifacts are the CSVs: `results.csv` with one row per
(classifier, percentage, seed) plus baselines, and the plot-data files mirroring
the figure families (F1 curves, difference-vs-random series, smoothed curves).
All floats are written with 9 significant digits so reruns can be compared
textually.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .datasets import DatasetConfig
from .deletion import scenario_to_dict
from .experiment import ExperimentConfig, ResultRow, SweepResult, diff_series
from .metrics import gaussian_smooth

RESULTS_HEADER = (
    "dataset", "classifier", "scenario", "percentage", "seed",
    "accuracy", "precision", "recall", "f1", "n_remaining", "warnings",
)


def format_float(x: float) -> str:
    return format(float(x), ".9g")


def config_digest(cfg: ExperimentConfig, dcfg: DatasetConfig) -> str:
    """Deterministic hash over the semantic experiment configuration."""
    payload = {
        "dataset": cfg.dataset,
        "scenario": scenario_to_dict(cfg.scenario),
        "classifiers": list(cfg.classifiers),
        "hyperparams": {
            "knn_k": cfg.hyperparams.knn_k,
            "knn_metric": cfg.hyperparams.knn_metric,
            "svm_c": cfg.hyperparams.svm_c,
            "svm_epochs": cfg.hyperparams.svm_epochs,
            "rf_trees": cfg.hyperparams.rf_trees,
            "rf_max_depth": cfg.hyperparams.rf_max_depth,
            "rf_feature_subsample": cfg.hyperparams.rf_feature_subsample,
            "gbt_rounds": cfg.hyperparams.gbt_rounds,
            "gbt_depth": cfg.hyperparams.gbt_depth,
            "gbt_learning_rate": cfg.hyperparams.gbt_learning_rate,
            "model_seed": cfg.hyperparams.model_seed,
        },
        "percentages": [format_float(p) for p in cfg.percentages],
        "split_seed": cfg.split_seed,
        "repetitions": cfg.repetitions,
        "fixed_test": cfg.fixed_test,
        "averaging": dcfg.averaging,
        "positive_class": dcfg.positive_class,
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    config_hash: str
    harness_version: str
    dataset_checksums: dict[str, str]
    seeds: tuple[int, ...]
    split_seed: int
    scenario: str
    averaging: str
    positive_class: str | None
    created: str


def file_checksum(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def build_manifest(cfg: ExperimentConfig, dcfg: DatasetConfig,
                   dataset_paths=()) -> RunManifest:
    return RunManifest(
        config_hash=config_digest(cfg, dcfg),
        harness_version=__version__,
        dataset_checksums={Path(p).name: file_checksum(p) for p in dataset_paths},
        seeds=cfg.deletion_seeds(),
        split_seed=cfg.split_seed,
        scenario=cfg.scenario.label(),
        averaging=dcfg.averaging,
        positive_class=dcfg.positive_class,
        created=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )


def _write_results_csv(path: Path, rows) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULTS_HEADER)
        for row in rows:
            writer.writerow([
                row.dataset, row.classifier, row.scenario,
                format_float(row.percentage), row.seed,
                format_float(row.accuracy), format_float(row.precision),
                format_float(row.recall), format_float(row.f1),
                row.n_remaining, row.warnings,
            ])


def _mean_f1_series(sr: SweepResult) -> dict[tuple[str, str], list[tuple[float, float]]]:
    """(scenario, classifier) -> [(percentage, mean F1 over seeds)] sorted by percentage."""
    acc: dict[tuple[str, str], dict[float, list[float]]] = {}
    for row in sr.rows:
        if row.classifier == "zero_rule":
            continue
        acc.setdefault((row.scenario, row.classifier), {}).setdefault(
            row.percentage, []
        ).append(row.f1)
    return {
        key: [(p, float(np.mean(vals))) for p, vals in sorted(by_p.items())]
        for key, by_p in acc.items()
    }


def emit_results(sr: SweepResult, manifest: RunManifest, out_dir,
                 smooth_sigma: float = 2.0) -> list[Path]:
    """Write results.csv, manifest.json and the plot-data CSV families."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    plotdata = out / "plotdata"
    plotdata.mkdir(exist_ok=True)
    written: list[Path] = []

    results_path = out / "results.csv"
    _write_results_csv(results_path, sr.rows)
    written.append(results_path)

    manifest_path = out / "manifest.json"
    manifest_payload = {
        "config_hash": manifest.config_hash,
        "harness_version": manifest.harness_version,
        "dataset_checksums": manifest.dataset_checksums,
        "seeds": list(manifest.seeds),
        "split_seed": manifest.split_seed,
        "scenario": manifest.scenario,
        "averaging": manifest.averaging,
        "positive_class": manifest.positive_class,
        "created": manifest.created,
    }
    manifest_path.write_text(json.dumps(manifest_payload, indent=2, sort_keys=True) + "\n",
                             encoding="utf-8")
    written.append(manifest_path)

    series = _mean_f1_series(sr)

    curves_path = plotdata / "f1_vs_percentage.csv"
    with curves_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["scenario", "classifier", "percentage", "f1_mean"])
        for (scenario, classifier), points in sorted(series.items()):
            for p, f1 in points:
                writer.writerow([scenario, classifier, format_float(p), format_float(f1)])
    written.append(curves_path)

    smooth_path = plotdata / f"f1_smoothed_sigma{format_float(smooth_sigma)}.csv"
    with smooth_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["scenario", "classifier", "percentage", "f1_smoothed"])
        for (scenario, classifier), points in sorted(series.items()):
            values = gaussian_smooth([f1 for _, f1 in points], smooth_sigma)
            for (p, _), smoothed in zip(points, values):
                writer.writerow([scenario, classifier, format_float(p), format_float(smoothed)])
    written.append(smooth_path)

    scenarios = sorted({s for s, _ in series})
    if "Random" in scenarios and len(scenarios) > 1:
        diff_path = plotdata / "f1_diff_vs_random.csv"
        random_series = {c: dict(pts) for (s, c), pts in series.items() if s == "Random"}
        with diff_path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["scenario", "classifier", "percentage", "f1_random_minus_scenario"])
            for (scenario, classifier), points in sorted(series.items()):
                if scenario == "Random" or classifier not in random_series:
                    continue
                for p, f1 in points:
                    if p in random_series[classifier]:
                        writer.writerow([
                            scenario, classifier, format_float(p),
                            format_float(random_series[classifier][p] - f1),
                        ])
        written.append(diff_path)

    return written


def emit_diff(a: SweepResult, b: SweepResult, metric: str, path) -> Path:
    """Write a diff_series(a, b) table to CSV."""
    rows = diff_series(a, b, metric=metric)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["classifier", "percentage", f"{metric}_difference"])
        for row in rows:
            writer.writerow([row.classifier, format_float(row.percentage),
                             format_float(row.difference)])
    return path


def load_results(results_csv) -> SweepResult:
    """Reconstruct a SweepResult from a previously written results.csv."""
    path = Path(results_csv)
    rows: list[ResultRow] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(RESULTS_HEADER) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path.name}: missing result columns {sorted(missing)}")
        for rec in reader:
            rows.append(ResultRow(
                dataset=rec["dataset"],
                classifier=rec["classifier"],
                scenario=rec["scenario"],
                percentage=float(rec["percentage"]),
                seed=int(rec["seed"]),
                accuracy=float(rec["accuracy"]),
                precision=float(rec["precision"]),
                recall=float(rec["recall"]),
                f1=float(rec["f1"]),
                n_remaining=int(rec["n_remaining"]),
                warnings=rec["warnings"],
            ))
    if not rows:
        raise ValueError(f"{path.name}: no result rows")

    manifest_path = path.parent / "manifest.json"
    averaging, positive_class = "macro", None
    if manifest_path.exists():
        meta = json.loads(manifest_path.read_text(encoding="utf-8"))
        averaging = meta.get("averaging", averaging)
        positive_class = meta.get("positive_class")

    return SweepResult(
        dataset=rows[0].dataset,
        scenario="+".join(dict.fromkeys(r.scenario for r in rows)),
        classifiers=tuple(dict.fromkeys(
            r.classifier for r in rows if r.classifier != "zero_rule")),
        percentages=tuple(sorted({r.percentage for r in rows})),
        seeds=tuple(sorted({r.seed for r in rows})),
        averaging=averaging,
        positive_class=positive_class,
        rows=tuple(rows),
    )


def render_plots(out_dir) -> list[Path]:
    """Render static PNGs from the plot-data CSVs (requires matplotlib)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    plotdata = out / "plotdata"
    rendered: list[Path] = []
    for csv_path in sorted(plotdata.glob("*.csv")):
        with csv_path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            value_col = [c for c in (reader.fieldnames or []) if c not in
                         ("scenario", "classifier", "percentage")]
            if not value_col or "percentage" not in (reader.fieldnames or []):
                continue
            value_col = value_col[0]
            series: dict[str, list[tuple[float, float]]] = {}
            for rec in reader:
                label = f"{rec.get('scenario', '')} / {rec['classifier']}".strip(" /")
                series.setdefault(label, []).append(
                    (float(rec["percentage"]), float(rec[value_col]))
                )
        fig, ax = plt.subplots(figsize=(8, 5))
        for label, points in sorted(series.items()):
            points.sort()
            ax.plot([p for p, _ in points], [v for _, v in points], marker="o",
                    markersize=3, label=label)
        ax.set_xlabel("deletion percentage")
        ax.set_ylabel(value_col)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=7)
        png_path = csv_path.with_suffix(".png")
        fig.tight_layout()
        fig.savefig(png_path, dpi=150)
        plt.close(fig)
        rendered.append(png_path)
    return rendered
