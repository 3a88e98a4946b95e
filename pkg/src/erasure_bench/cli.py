"""Command-line entry point.

`erasure-bench run ...` executes an experiment in-process (or submits it to a
running service with --server); `diff` compares two result files, `plot`
renders plot-data CSVs, `serve` starts the HTTP service. A bare flag list is
treated as an implicit `run`, so `erasure-bench --dataset adult --mode random`
works as well. Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from .classifiers import CLASSIFIER_KINDS, Hyperparams
from .datasets import (
    BUILTIN_DATASETS,
    DatasetConfig,
    dataset_config_from_dict,
    load_dataset,
    resolve_data_dir,
)
from .deletion import DELETION_MODES, DeletionScenario, scenario_from_dict, scenario_to_dict
from .experiment import (
    DEFAULT_CLASSIFIERS,
    ExperimentConfig,
    merge_results,
    run_sweep,
)
from .reporting import build_manifest, emit_diff, emit_results, load_results, render_plots

logger = logging.getLogger(__name__)

COMMANDS = ("run", "diff", "plot", "serve")


class UsageError(Exception):
    pass


def parse_percent_grid(spec: str) -> tuple[float, ...]:
    """Expand `start:stop:step` (percent units) into an inclusive fraction grid."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise UsageError(f"--percent expects start:stop:step, got {spec!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"--percent expects numeric start:stop:step, got {spec!r}") from None
    if step <= 0 or start < 0 or stop >= 100 or stop < start:
        raise UsageError(f"--percent grid out of range: {spec!r}")
    grid = []
    value = start
    while value <= stop + 1e-9:
        grid.append(value / 100.0)
        value += step
    return tuple(grid)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="erasure-bench",
        description="Simulate biased right-to-erasure deletion and measure classifier impact.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a deletion sweep experiment")
    run.add_argument("--dataset", required=True,
                     help="dataset id (adult|cahousing|cmc|mgm), config-file id, or CSV path")
    run.add_argument("--classifier", action="append", choices=CLASSIFIER_KINDS,
                     help="classifier kind; repeatable (default: knn svm_linear random_forest gbt)")
    run.add_argument("--mode", choices=DELETION_MODES, help="deletion bias mode")
    run.add_argument("--attribute", help="attribute the bias applies to")
    run.add_argument("--values", help="comma-separated attribute values for selection mode")
    run.add_argument("--reversed", action="store_true",
                     help="reverse the weighting order (thirds, positive_numeric)")
    run.add_argument("--age-cutoff", type=float, default=None,
                     help="age-mode cutoff in years (default 45)")
    run.add_argument("--value-order", default=None,
                     help="comma-separated value order for positive_numeric on categoricals")
    run.add_argument("--incremental", action="store_true",
                     help="nest deletion sets across increasing percentages")
    run.add_argument("--seed", type=int, default=None, help="deletion RNG seed (default 42)")
    run.add_argument("--split-seed", type=int, default=42, help="train/test split seed")
    run.add_argument("--percent", default="0:95:5", metavar="START:STOP:STEP",
                     help="deletion percentage grid in percent units (default 0:95:5)")
    run.add_argument("--repetitions", type=int, default=1,
                     help="number of deletion seeds to run (seed, seed+1, ...)")
    run.add_argument("--fixed-test", action="store_true",
                     help="hold out a fixed test split and delete from training rows only")
    run.add_argument("--smooth-sigma", type=float, default=2.0,
                     help="sigma of the Gaussian used for the smoothed plot data")
    run.add_argument("--out", default="results", help="output directory")
    run.add_argument("--data-dir", default=None,
                     help="dataset folder root (default $ERASURE_BENCH_DATA_DIR or ./data)")
    run.add_argument("--config", default=None, help="harness config file (JSON)")
    run.add_argument("--scenario", default=None,
                     help="named scenario from the config file instead of --mode flags")
    run.add_argument("--compare-random", action="store_true",
                     help="also sweep random deletion with the same seeds and emit differences")
    run.add_argument("--server", default=None,
                     help="submit to a running erasure-bench service at this base URL")
    run.add_argument("--knn-k", type=int, default=None)
    run.add_argument("--svm-c", type=float, default=None)
    run.add_argument("--svm-epochs", type=int, default=None)
    run.add_argument("--rf-trees", type=int, default=None)
    run.add_argument("--rf-max-depth", type=int, default=None)
    run.add_argument("--rf-feature-subsample", type=float, default=None)
    run.add_argument("--gbt-rounds", type=int, default=None)
    run.add_argument("--gbt-depth", type=int, default=None)
    run.add_argument("--gbt-learning-rate", type=float, default=None)
    run.add_argument("--model-seed", type=int, default=None)
    run.set_defaults(func=_cmd_run)

    diff = sub.add_parser("diff", help="difference series between two results.csv files")
    diff.add_argument("results_a")
    diff.add_argument("results_b")
    diff.add_argument("--metric", default="f1",
                      choices=("accuracy", "precision", "recall", "f1"))
    diff.add_argument("--out", default="diff.csv", help="output CSV path")
    diff.set_defaults(func=_cmd_diff)

    plot = sub.add_parser("plot", help="render PNG plots from an output directory")
    plot.add_argument("out_dir")
    plot.set_defaults(func=_cmd_plot)

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--data-dir", default=None)
    serve.add_argument("--out", default="service-runs", help="directory for run outputs")
    serve.add_argument("--config", default=None, help="harness config file (JSON)")
    serve.set_defaults(func=_cmd_serve)

    return parser


def _load_harness_config(path: str | None) -> dict:
    if path is None:
        return {}
    file_path = Path(path)
    if not file_path.exists():
        raise UsageError(f"config file not found: {file_path}")
    try:
        data = json.loads(file_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {file_path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config file must contain a JSON object")
    return data


def resolve_dataset(name: str, harness_cfg: dict, data_dir) -> tuple[DatasetConfig, Path]:
    """Map a --dataset value (id or CSV path) to its config and CSV path."""
    configured = {
        ds_id: dataset_config_from_dict(ds_id, entry)
        for ds_id, entry in harness_cfg.get("datasets", {}).items()
    }
    catalog = {**BUILTIN_DATASETS, **configured}
    if name in catalog:
        cfg = catalog[name]
        return cfg, resolve_data_dir(data_dir) / cfg.filename
    as_path = Path(name)
    if as_path.suffix == ".csv":
        stem = as_path.stem
        if stem in catalog:
            return catalog[stem], as_path
        raise UsageError(
            f"no dataset definition for {name!r}; define {stem!r} in the config file"
        )
    raise UsageError(f"unknown dataset {name!r} (known: {sorted(catalog)})")


def _scenario_from_args(args, harness_cfg: dict) -> DeletionScenario:
    flag_fields = (args.mode, args.attribute, args.values, args.value_order)
    if args.scenario is not None:
        if any(f is not None for f in flag_fields) or args.reversed:
            raise UsageError("--scenario cannot be combined with --mode/--attribute/"
                             "--values/--value-order/--reversed")
        scenarios = harness_cfg.get("scenarios", {})
        if args.scenario not in scenarios:
            raise UsageError(f"scenario {args.scenario!r} not found in config file")
        scenario = scenario_from_dict(scenarios[args.scenario])
    else:
        mode = args.mode or "random"
        if args.values is not None and mode != "selection":
            raise UsageError("--values requires --mode selection")
        if mode == "selection" and args.values is None:
            raise UsageError("--mode selection requires --values")
        if args.attribute is None and mode != "random":
            raise UsageError(f"--mode {mode} requires --attribute")
        try:
            scenario = DeletionScenario(
                mode=mode,
                attribute=args.attribute,
                selected_values=tuple(
                    v.strip() for v in args.values.split(",")) if args.values else (),
                reversed=args.reversed,
                age_cutoff=args.age_cutoff if args.age_cutoff is not None else 45.0,
                value_order=tuple(
                    v.strip() for v in args.value_order.split(",")) if args.value_order else None,
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    if args.incremental:
        scenario = replace(scenario, incremental=True)
    if args.seed is not None:
        scenario = scenario.with_seed(args.seed)
    if args.age_cutoff is not None and args.scenario is not None:
        scenario = replace(scenario, age_cutoff=args.age_cutoff)
    return scenario


def _hyperparams_from_args(args) -> Hyperparams:
    overrides = {
        "knn_k": args.knn_k,
        "svm_c": args.svm_c,
        "svm_epochs": args.svm_epochs,
        "rf_trees": args.rf_trees,
        "rf_max_depth": args.rf_max_depth,
        "rf_feature_subsample": args.rf_feature_subsample,
        "gbt_rounds": args.gbt_rounds,
        "gbt_depth": args.gbt_depth,
        "gbt_learning_rate": args.gbt_learning_rate,
        "model_seed": args.model_seed,
    }
    try:
        return Hyperparams(**{k: v for k, v in overrides.items() if v is not None})
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _experiment_from_args(args) -> tuple[ExperimentConfig, DatasetConfig, Path]:
    harness_cfg = _load_harness_config(args.config)
    dcfg, csv_path = resolve_dataset(args.dataset, harness_cfg, args.data_dir)
    scenario = _scenario_from_args(args, harness_cfg)
    try:
        cfg = ExperimentConfig(
            dataset=dcfg.dataset_id,
            scenario=scenario,
            classifiers=tuple(args.classifier) if args.classifier else DEFAULT_CLASSIFIERS,
            hyperparams=_hyperparams_from_args(args),
            percentages=parse_percent_grid(args.percent),
            split_seed=args.split_seed,
            repetitions=args.repetitions,
            fixed_test=args.fixed_test,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return cfg, dcfg, csv_path


def parse_cli(argv) -> ExperimentConfig:
    """Parse run-style CLI flags into an ExperimentConfig (usage errors exit 2)."""
    argv = list(argv)
    if argv and argv[0] != "run":
        argv = ["run"] + argv
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg, _, _ = _experiment_from_args(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits with code 2
    return cfg


def _cmd_run(args) -> int:
    cfg, dcfg, csv_path = _experiment_from_args(args)
    if args.server:
        return _submit_to_server(args, cfg, dcfg)

    ds = load_dataset(dcfg, path=csv_path)
    result = run_sweep(cfg, ds, dcfg)
    if args.compare_random and cfg.scenario.mode != "random":
        random_cfg = replace(cfg, scenario=DeletionScenario(seed=cfg.scenario.seed))
        result = merge_results(result, run_sweep(random_cfg, ds, dcfg))
    manifest = build_manifest(cfg, dcfg, dataset_paths=[csv_path])
    written = emit_results(result, manifest, args.out, smooth_sigma=args.smooth_sigma)
    for path in written:
        print(path)
    return 0


def _submit_to_server(args, cfg: ExperimentConfig, dcfg: DatasetConfig) -> int:
    import httpx

    base = args.server.rstrip("/")
    payload = {
        "dataset": cfg.dataset,
        "scenario": scenario_to_dict(cfg.scenario),
        "classifiers": list(cfg.classifiers),
        "percentages": list(cfg.percentages),
        "split_seed": cfg.split_seed,
        "repetitions": cfg.repetitions,
        "fixed_test": cfg.fixed_test,
        "compare_random": bool(args.compare_random),
        "smooth_sigma": args.smooth_sigma,
    }
    with httpx.Client(base_url=base, timeout=30.0) as client:
        submitted = client.post("/runs", json=payload)
        submitted.raise_for_status()
        run_id = submitted.json()["run_id"]
        print(f"submitted run {run_id}")
        while True:
            status = client.get(f"/runs/{run_id}").json()
            if status["status"] in ("completed", "failed"):
                break
            time.sleep(0.5)
        if status["status"] == "failed":
            print(f"run failed: {status.get('error')}", file=sys.stderr)
            return 1
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        results = client.get(f"/runs/{run_id}/results.csv")
        results.raise_for_status()
        target = out / "results.csv"
        target.write_text(results.text, encoding="utf-8")
        print(target)
    return 0


def _cmd_diff(args) -> int:
    a = load_results(args.results_a)
    b = load_results(args.results_b)
    path = emit_diff(a, b, args.metric, args.out)
    print(path)
    return 0


def _cmd_plot(args) -> int:
    rendered = render_plots(args.out_dir)
    if not rendered:
        print("no plot-data files found", file=sys.stderr)
        return 1
    for path in rendered:
        print(path)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        data_dir=args.data_dir,
        out_dir=args.out,
        harness_config=_load_harness_config(args.config),
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    if argv[0] not in COMMANDS and argv[0] not in ("-h", "--help"):
        argv = ["run"] + argv
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
