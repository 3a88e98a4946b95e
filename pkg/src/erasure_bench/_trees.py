"""Histogram-binned CART trees shared by the forest and boosting learners.

Features are quantised once per fit into at most `max_bins` ordered bins; split
search then scans bin boundaries with vectorised class/residual histograms.
Tie-breaks are positional (first feature in the candidate order, lowest bin),
so growth is fully deterministic for a given RNG state.
"""

from __future__ import annotations

import numpy as np

MAX_BINS = 64


class FeatureBinner:
    """Maps raw feature values to integer bin codes with frozen thresholds."""

    def __init__(self, max_bins: int = MAX_BINS):
        self.max_bins = max_bins
        self.edges_: list[np.ndarray] = []

    def fit(self, X: np.ndarray) -> "FeatureBinner":
        self.edges_ = []
        for j in range(X.shape[1]):
            uniq = np.unique(X[:, j])
            if uniq.size <= 1:
                edges = np.empty(0, dtype=np.float64)
            elif uniq.size <= self.max_bins:
                edges = (uniq[1:] + uniq[:-1]) / 2.0
            else:
                qs = np.quantile(X[:, j], np.linspace(0, 1, self.max_bins + 1)[1:-1])
                edges = np.unique(qs)
            self.edges_.append(edges.astype(np.float64))
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        codes = np.empty(X.shape, dtype=np.int16)
        for j, edges in enumerate(self.edges_):
            codes[:, j] = np.searchsorted(edges, X[:, j], side="left")
        return codes

    @property
    def n_bins(self) -> int:
        return max((e.size + 1 for e in self.edges_), default=1)


class Tree:
    """Flat-array binary tree over bin codes; leaves hold a class index or a float."""

    __slots__ = ("feature", "threshold", "left", "right", "value", "is_leaf")

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[int] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []
        self.is_leaf: list[bool] = []

    def _add_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(-1)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        self.is_leaf.append(False)
        return len(self.feature) - 1

    def predict(self, codes: np.ndarray) -> np.ndarray:
        out = np.empty(codes.shape[0], dtype=np.float64)
        stack = [(0, np.arange(codes.shape[0]))]
        while stack:
            nid, idx = stack.pop()
            if idx.size == 0:
                continue
            if self.is_leaf[nid]:
                out[idx] = self.value[nid]
                continue
            goes_left = codes[idx, self.feature[nid]] <= self.threshold[nid]
            stack.append((self.left[nid], idx[goes_left]))
            stack.append((self.right[nid], idx[~goes_left]))
        return out

    @property
    def n_nodes(self) -> int:
        return len(self.feature)


def _best_split_gini(hist: np.ndarray, counts: np.ndarray):
    """Lowest weighted Gini impurity over (candidate feature, bin boundary).

    hist: (features, bins, classes) sample counts; counts: (classes,) node totals.
    Returns (feature position, threshold bin) or None when no boundary separates.
    """
    m = float(counts.sum())
    cum = np.cumsum(hist, axis=1)[:, :-1, :]  # left-of-boundary class counts
    n_left = cum.sum(axis=2)
    n_right = m - n_left
    valid = (n_left > 0) & (n_right > 0)
    if not valid.any():
        return None
    sum_left = np.einsum("fbc,fbc->fb", cum, cum)
    right = counts[None, None, :] - cum
    sum_right = np.einsum("fbc,fbc->fb", right, right)
    with np.errstate(divide="ignore", invalid="ignore"):
        impurity = (n_left - sum_left / n_left) + (n_right - sum_right / n_right)
    impurity[~valid] = np.inf
    f, t = np.unravel_index(int(np.argmin(impurity)), impurity.shape)
    return int(f), int(t)


def _best_split_sse(sums: np.ndarray, cnts: np.ndarray):
    """Highest variance reduction over (feature, bin boundary) for regression."""
    total_sum = float(sums[0].sum())
    total_cnt = float(cnts[0].sum())
    cum_sum = np.cumsum(sums, axis=1)[:, :-1]
    cum_cnt = np.cumsum(cnts, axis=1)[:, :-1]
    n_right = total_cnt - cum_cnt
    valid = (cum_cnt > 0) & (n_right > 0)
    if not valid.any():
        return None
    with np.errstate(divide="ignore", invalid="ignore"):
        score = cum_sum**2 / cum_cnt + (total_sum - cum_sum) ** 2 / n_right
    score[~valid] = -np.inf
    f, t = np.unravel_index(int(np.argmax(score)), score.shape)
    if not np.isfinite(score[f, t]):
        return None
    return int(f), int(t)


def grow_classification_tree(
    codes: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    sample_idx: np.ndarray,
    rng: np.random.Generator | None,
    mtry: int,
    max_depth: int | None,
    n_bins: int,
) -> Tree:
    """CART with Gini impurity; leaves predict the majority class (ties: lowest index).

    `sample_idx` may contain repeats (bootstrap). When `rng` is given, `mtry`
    candidate features are redrawn at every split; otherwise all features are
    candidates.
    """
    n_features = codes.shape[1]
    tree = Tree()
    root = tree._add_node()
    stack = [(root, sample_idx, 0)]
    while stack:
        nid, idx, depth = stack.pop()
        y_node = y[idx]
        counts = np.bincount(y_node, minlength=n_classes).astype(np.float64)
        nonzero = np.count_nonzero(counts)
        if (
            nonzero <= 1
            or idx.size < 2
            or (max_depth is not None and depth >= max_depth)
        ):
            tree.is_leaf[nid] = True
            tree.value[nid] = float(np.argmax(counts))
            continue

        if rng is not None and mtry < n_features:
            feats = rng.permutation(n_features)[:mtry]
        else:
            feats = np.arange(n_features)

        sub = codes[np.ix_(idx, feats)].astype(np.int64)
        flat = (np.arange(feats.size)[None, :] * n_bins + sub) * n_classes + y_node[:, None]
        hist = np.bincount(
            flat.ravel(), minlength=feats.size * n_bins * n_classes
        ).reshape(feats.size, n_bins, n_classes).astype(np.float64)

        split = _best_split_gini(hist, counts)
        if split is None:
            tree.is_leaf[nid] = True
            tree.value[nid] = float(np.argmax(counts))
            continue
        f_pos, thr = split
        feature = int(feats[f_pos])
        goes_left = codes[idx, feature] <= thr
        left_id = tree._add_node()
        right_id = tree._add_node()
        tree.feature[nid] = feature
        tree.threshold[nid] = thr
        tree.left[nid] = left_id
        tree.right[nid] = right_id
        stack.append((left_id, idx[goes_left], depth + 1))
        stack.append((right_id, idx[~goes_left], depth + 1))
    return tree


def grow_regression_tree(
    codes: np.ndarray,
    residual: np.ndarray,
    max_depth: int,
    n_bins: int,
) -> Tree:
    """Squared-error tree on all features; leaves predict the mean residual."""
    n_features = codes.shape[1]
    tree = Tree()
    root = tree._add_node()
    stack = [(root, np.arange(codes.shape[0]), 0)]
    while stack:
        nid, idx, depth = stack.pop()
        r_node = residual[idx]
        if idx.size < 2 or depth >= max_depth or np.all(r_node == r_node[0]):
            tree.is_leaf[nid] = True
            tree.value[nid] = float(np.mean(r_node))
            continue

        sub = codes[idx].astype(np.int64)
        offset = np.arange(n_features)[None, :] * n_bins + sub
        sums = np.bincount(
            offset.ravel(), weights=np.repeat(r_node, n_features), minlength=n_features * n_bins
        ).reshape(n_features, n_bins)
        cnts = np.bincount(offset.ravel(), minlength=n_features * n_bins).reshape(
            n_features, n_bins
        ).astype(np.float64)

        split = _best_split_sse(sums, cnts)
        if split is None:
            tree.is_leaf[nid] = True
            tree.value[nid] = float(np.mean(r_node))
            continue
        feature, thr = split
        goes_left = codes[idx, feature] <= thr
        left_id = tree._add_node()
        right_id = tree._add_node()
        tree.feature[nid] = feature
        tree.threshold[nid] = thr
        tree.left[nid] = left_id
        tree.right[nid] = right_id
        stack.append((left_id, idx[goes_left], depth + 1))
        stack.append((right_id, idx[~goes_left], depth + 1))
    return tree
