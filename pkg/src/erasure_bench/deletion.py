"""Biased record deletion: scenario weighting and seeded sampling without replacement.

Normative sampling algorithm
----------------------------
Deletion sets are drawn by weighted sampling without replacement, realised with
exponential order keys: using the 64-bit PCG64 generator seeded with the given
seed, one uniform u_i in [0, 1) is drawn per record in row order, the key is
key_i = -log1p(-u_i) / w_i, and the `count` records with the smallest keys are
selected. This is distributionally equivalent to sequential draws with
probability proportional to the remaining weights and is the reference
algorithm other implementations must match bit-for-bit given the same seed.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .datasets import Dataset

logger = logging.getLogger(__name__)

DELETION_MODES = ("random", "selection", "thirds", "age", "positive_numeric")


@dataclass(frozen=True)
class DeletionScenario:
    """Declarative description of one deletion bias.

    `value_order` maps categorical values to the 1-based ordinal scale required
    by positive_numeric mode (for attributes that are categorical in the raw
    data but carry an ordering). `combine_with` multiplies in the weights of a
    second scenario; its seed and flags are ignored.
    """

    mode: str = "random"
    attribute: str | None = None
    selected_values: tuple[str, ...] = ()
    reversed: bool = False
    age_cutoff: float = 45.0
    value_order: tuple[str, ...] | None = None
    combine_with: "DeletionScenario | None" = None
    incremental: bool = False
    seed: int = 42

    def __post_init__(self):
        if self.mode not in DELETION_MODES:
            raise ValueError(f"unknown deletion mode {self.mode!r}")
        if self.mode != "random" and not self.attribute:
            raise ValueError(f"mode {self.mode!r} requires an attribute")
        if self.mode == "selection" and not self.selected_values:
            raise ValueError("selection mode requires at least one selected value")
        if self.age_cutoff <= 0:
            raise ValueError("age_cutoff must be positive")

    def with_seed(self, seed: int) -> "DeletionScenario":
        return replace(self, seed=seed)

    def label(self) -> str:
        """Human-readable scenario label used in result files and figures."""
        text = self._label_body()
        if self.combine_with is not None:
            text = f"{text} and {self.combine_with._label_body()}"
        if self.incremental:
            text = f"{text} Incremental"
        return text

    def _label_body(self) -> str:
        if self.mode == "random":
            return "Random"
        if self.mode == "age":
            return "Age"
        title = str(self.attribute).replace("-", " ").replace("_", " ").title()
        if self.mode == "selection":
            return f"{title} [{', '.join(self.selected_values)}]"
        if self.reversed:
            return f"{title} Reversed"
        return title


@dataclass(frozen=True)
class WeightVector:
    """Positive per-record deletion weights aligned to the dataset's row order."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1:
            raise ValueError("weights must be one-dimensional")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("weights must be positive and finite")
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return int(self.weights.size)


@dataclass(frozen=True)
class DeletionPlan:
    """Row ids to delete at each percentage; nested sets in incremental mode."""

    percentages: tuple[float, ...]
    deleted: dict[float, np.ndarray] = field(repr=False)

    def deleted_ids(self, percentage: float) -> np.ndarray:
        return self.deleted[percentage]


def scenario_to_dict(scenario: DeletionScenario) -> dict:
    """JSON-ready representation of a scenario (round-trips via scenario_from_dict)."""
    out: dict = {"mode": scenario.mode, "seed": scenario.seed}
    if scenario.attribute is not None:
        out["attribute"] = scenario.attribute
    if scenario.selected_values:
        out["selected_values"] = list(scenario.selected_values)
    if scenario.reversed:
        out["reversed"] = True
    if scenario.mode == "age":
        out["age_cutoff"] = scenario.age_cutoff
    if scenario.value_order is not None:
        out["value_order"] = list(scenario.value_order)
    if scenario.incremental:
        out["incremental"] = True
    if scenario.combine_with is not None:
        out["combine_with"] = scenario_to_dict(scenario.combine_with)
    return out


def scenario_from_dict(data: dict) -> DeletionScenario:
    known = {"mode", "attribute", "selected_values", "reversed", "age_cutoff",
             "value_order", "combine_with", "incremental", "seed"}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown scenario fields: {sorted(unknown)}")
    combine = data.get("combine_with")
    return DeletionScenario(
        mode=data.get("mode", "random"),
        attribute=data.get("attribute"),
        selected_values=tuple(data.get("selected_values", ())),
        reversed=bool(data.get("reversed", False)),
        age_cutoff=float(data.get("age_cutoff", 45.0)),
        value_order=tuple(data["value_order"]) if data.get("value_order") else None,
        combine_with=scenario_from_dict(combine) if combine else None,
        incremental=bool(data.get("incremental", False)),
        seed=int(data.get("seed", 42)),
    )


def _numeric_attribute(ds: Dataset, scenario: DeletionScenario) -> np.ndarray:
    """Attribute values as floats, applying value_order for ordered categoricals."""
    attr = scenario.attribute
    values = ds.column(attr)
    if scenario.value_order is not None:
        order = {v: i + 1 for i, v in enumerate(scenario.value_order)}
        missing = sorted({str(v) for v in values} - set(order))
        if missing:
            raise ValueError(f"values {missing} of {attr!r} missing from value_order")
        return np.array([order[str(v)] for v in values], dtype=np.float64)
    try:
        return np.array([float(v) for v in values], dtype=np.float64)
    except (TypeError, ValueError):
        raise ValueError(
            f"mode {scenario.mode!r} needs numeric values for {attr!r}; "
            "provide value_order for categorical attributes"
        ) from None


def compute_weights(ds: Dataset, scenario: DeletionScenario) -> WeightVector:
    """Translate a scenario into per-record deletion weights.

    random: all 1. selection: 2 for records whose attribute value is selected,
    else 1. thirds: 1/2/3 for the low/middle/high third of the attribute
    (split at the 1/3 and 2/3 percentiles, boundary values to the lower
    group), swapped when reversed. age: 2 below the cutoff, else 1.
    positive_numeric: v - v_min + 1 (so the minimum maps to 1), reversed:
    v_max - v + 1. combine_with multiplies weight vectors elementwise.
    """
    n = ds.n_rows
    if scenario.mode == "random":
        w = np.ones(n, dtype=np.float64)
    elif scenario.mode == "selection":
        values = ds.column(scenario.attribute)
        selected = {str(v) for v in scenario.selected_values}
        w = np.where(np.isin(np.array([str(v) for v in values]), list(selected)), 2.0, 1.0)
    elif scenario.mode == "thirds":
        v = _numeric_attribute(ds, scenario)
        q1, q2 = np.quantile(v, [1.0 / 3.0, 2.0 / 3.0])
        if q1 == q2 and np.all(v == v[0]):
            logger.warning("thirds mode: attribute %r is constant, using uniform weights",
                           scenario.attribute)
            w = np.ones(n, dtype=np.float64)
        else:
            low, mid, high = (3.0, 2.0, 1.0) if scenario.reversed else (1.0, 2.0, 3.0)
            w = np.full(n, mid, dtype=np.float64)
            w[v <= q1] = low
            w[v > q2] = high
    elif scenario.mode == "age":
        v = _numeric_attribute(ds, scenario)
        w = np.where(v < scenario.age_cutoff, 2.0, 1.0)
    elif scenario.mode == "positive_numeric":
        v = _numeric_attribute(ds, scenario)
        v_min, v_max = float(np.min(v)), float(np.max(v))
        if v_min <= 0:
            logger.warning("positive_numeric: %r has non-positive minimum %s, shifting",
                           scenario.attribute, v_min)
        w = (v_max - v + 1.0) if scenario.reversed else (v - v_min + 1.0)
    else:  # pragma: no cover - rejected in __post_init__
        raise ValueError(f"unknown deletion mode {scenario.mode!r}")

    if scenario.combine_with is not None:
        w = w * compute_weights(ds, scenario.combine_with).weights
    return WeightVector(weights=w)


def derive_seed(seed: int, token) -> int:
    """Stable 64-bit sub-seed from (seed, token); identical across runs and platforms."""
    digest = hashlib.sha256(f"{seed}|{token}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def exponential_keys(weights: np.ndarray, seed: int) -> np.ndarray:
    """Order-sampling keys: one PCG64 uniform per record, key = Exp(1)/weight."""
    w = np.asarray(weights, dtype=np.float64)
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random(w.size)
    return -np.log1p(-u) / w


def select_deletions(w: WeightVector | np.ndarray, count: int, seed: int) -> np.ndarray:
    """Indices (into the weight vector) of `count` records drawn without replacement.

    Draws follow the normative exponential-keys algorithm documented in the
    module docstring; identical (weights, count, seed) always yield the same
    sorted index array.
    """
    weights = w.weights if isinstance(w, WeightVector) else np.asarray(w, dtype=np.float64)
    n = weights.size
    if count < 0 or count > n:
        raise ValueError(f"count {count} outside [0, {n}]")
    if count == 0:
        return np.array([], dtype=np.int64)
    keys = exponential_keys(weights, seed)
    chosen = np.argsort(keys, kind="stable")[:count]
    return np.sort(chosen).astype(np.int64)


def deletion_count(percentage: float, n: int) -> int:
    """Records to delete at a percentage: round(p*n), ties to even."""
    return round(percentage * n)


def build_plan(ds: Dataset, scenario: DeletionScenario, percentages) -> DeletionPlan:
    """Sample the deleted row ids for every percentage of a sweep.

    Non-incremental plans draw each percentage independently with the derived
    seed `derive_seed(scenario.seed, p)`, so a given percentage is stable
    across runs and across differently shaped grids. Incremental plans extend
    the previous percentage's set with fresh draws from the survivors.
    """
    ps = [float(p) for p in percentages]
    if any(p < 0 or p >= 1 for p in ps):
        raise ValueError("percentages must lie in [0, 1)")
    if any(b <= a for a, b in zip(ps, ps[1:])):
        raise ValueError("percentages must be strictly increasing")

    w = compute_weights(ds, scenario).weights
    row_ids = np.asarray(ds.row_ids, dtype=np.int64)
    n = ds.n_rows
    deleted: dict[float, np.ndarray] = {}

    if scenario.incremental:
        current = np.array([], dtype=np.int64)  # positions into row order
        for p in ps:
            target = deletion_count(p, n)
            shortfall = target - current.size
            if shortfall > 0:
                alive_mask = np.ones(n, dtype=bool)
                alive_mask[current] = False
                alive = np.nonzero(alive_mask)[0]
                picked = select_deletions(w[alive], shortfall, derive_seed(scenario.seed, f"{p:.10g}"))
                current = np.sort(np.concatenate([current, alive[picked]]))
            deleted[p] = row_ids[current].copy()
    else:
        for p in ps:
            count = deletion_count(p, n)
            positions = select_deletions(w, count, derive_seed(scenario.seed, f"{p:.10g}"))
            deleted[p] = row_ids[positions]

    return DeletionPlan(percentages=tuple(ps), deleted=deleted)


def apply_deletion(ds: Dataset, deleted) -> Dataset:
    """Dataset containing exactly the surviving records, original row ids kept."""
    doomed = {int(i) for i in np.asarray(deleted, dtype=np.int64).ravel()}
    known = {int(i) for i in ds.row_ids}
    unknown = doomed - known
    if unknown:
        raise ValueError(f"unknown row ids in deletion set: {sorted(unknown)[:5]}")
    keep = [i for i, rid in enumerate(ds.row_ids) if int(rid) not in doomed]
    return ds.take(keep)
