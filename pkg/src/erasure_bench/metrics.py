"""Confusion statistics, classification metrics and 1-D Gaussian smoothing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

AVERAGING_MODES = ("binary_positive_class", "macro")


@dataclass(frozen=True)
class ConfusionStats:
    """One-vs-rest confusion counts per class.

    For every class c: tp[c] + tn[c] + fp[c] + fn[c] == n_samples.
    """

    class_names: tuple[str, ...]
    tp: np.ndarray
    tn: np.ndarray
    fp: np.ndarray
    fn: np.ndarray
    n_samples: int


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    averaging: str


def confusion(y_true, y_pred, class_names) -> ConfusionStats:
    """Count one-vs-rest TP/TN/FP/FN per class from integer class-index labels."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"label length mismatch: {y_true.shape} vs {y_pred.shape}")
    if y_true.size == 0:
        raise ValueError("empty label vectors")
    k = len(class_names)
    for arr, name in ((y_true, "y_true"), (y_pred, "y_pred")):
        if arr.min() < 0 or arr.max() >= k:
            raise ValueError(f"{name} contains labels outside [0, {k})")

    n = int(y_true.size)
    tp = np.zeros(k, dtype=np.int64)
    fp = np.zeros(k, dtype=np.int64)
    fn = np.zeros(k, dtype=np.int64)
    for c in range(k):
        is_true = y_true == c
        is_pred = y_pred == c
        tp[c] = int(np.sum(is_true & is_pred))
        fp[c] = int(np.sum(~is_true & is_pred))
        fn[c] = int(np.sum(is_true & ~is_pred))
    tn = n - tp - fp - fn
    return ConfusionStats(
        class_names=tuple(class_names), tp=tp, tn=tn, fp=fp, fn=fn, n_samples=n
    )


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    # 0/0 -> 0 by convention so degenerate classes do not poison averages.
    out = np.zeros_like(num, dtype=np.float64)
    nz = den > 0
    out[nz] = num[nz] / den[nz]
    return out


def compute_metrics(
    cs: ConfusionStats,
    averaging: str = "macro",
    positive_class: str | None = None,
) -> MetricsReport:
    """Derive accuracy, precision, recall and F1 from confusion counts.

    `binary_positive_class` reports the designated positive class (defaults to
    the last class name); `macro` averages the per-class values unweighted.
    Accuracy is always the global fraction of correct predictions.
    """
    if averaging not in AVERAGING_MODES:
        raise ValueError(f"unknown averaging {averaging!r}, expected one of {AVERAGING_MODES}")

    prec = _safe_div(cs.tp.astype(np.float64), (cs.tp + cs.fp).astype(np.float64))
    rec = _safe_div(cs.tp.astype(np.float64), (cs.tp + cs.fn).astype(np.float64))
    f1 = _safe_div(2.0 * prec * rec, prec + rec)
    accuracy = float(np.sum(cs.tp)) / float(cs.n_samples)

    if averaging == "binary_positive_class":
        if positive_class is None:
            pos = len(cs.class_names) - 1
        else:
            if positive_class not in cs.class_names:
                raise ValueError(f"positive class {positive_class!r} not in {cs.class_names}")
            pos = cs.class_names.index(positive_class)
        return MetricsReport(
            accuracy=accuracy,
            precision=float(prec[pos]),
            recall=float(rec[pos]),
            f1=float(f1[pos]),
            averaging=averaging,
        )

    return MetricsReport(
        accuracy=accuracy,
        precision=float(np.mean(prec)),
        recall=float(np.mean(rec)),
        f1=float(np.mean(f1)),
        averaging=averaging,
    )


def gaussian_smooth(series, sigma: float) -> np.ndarray:
    """Smooth a 1-D series with a Gaussian kernel truncated at 4*sigma.

    Near the boundaries the truncated kernel is renormalized over the samples
    that exist, so a constant series is returned unchanged and the output
    always stays within [min(series), max(series)].
    """
    values = np.asarray(series, dtype=np.float64)
    if values.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if values.size == 0:
        raise ValueError("series must contain at least one value")
    if sigma <= 0:
        raise ValueError("sigma must be positive")

    radius = int(np.ceil(4.0 * sigma))
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(offsets**2) / (2.0 * sigma * sigma))

    n = values.size
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        lo = max(0, i - radius)
        hi = min(n, i + radius + 1)
        k = kernel[lo - i + radius : hi - i + radius]
        out[i] = float(np.dot(k, values[lo:hi]) / np.sum(k))
    return out
