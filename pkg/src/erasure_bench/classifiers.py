"""The classifier suite behind one fit/predict contract.

Five kinds: k-nearest-neighbours, one-vs-rest linear SVM trained by stochastic
subgradient descent on the hinge loss, a random forest of Gini CART trees, a
gradient-boosted tree ensemble minimising multiclass softmax log-loss, and the
zero-rule majority baseline. All are deterministic given `model_seed`.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from ._trees import FeatureBinner, grow_classification_tree, grow_regression_tree

logger = logging.getLogger(__name__)

CLASSIFIER_KINDS = ("knn", "svm_linear", "random_forest", "gbt", "zero_rule")


@dataclass(frozen=True)
class Hyperparams:
    knn_k: int = 5
    knn_metric: str = "euclidean"
    svm_c: float = 1.0
    svm_epochs: int = 20
    rf_trees: int = 100
    rf_max_depth: int | None = None
    rf_feature_subsample: float | None = None  # None -> sqrt(d) features per split
    gbt_rounds: int = 100
    gbt_depth: int = 3
    gbt_learning_rate: float = 0.1
    model_seed: int = 0

    def __post_init__(self):
        if self.knn_k < 1:
            raise ValueError("knn_k must be >= 1")
        if self.knn_metric != "euclidean":
            raise ValueError("only the euclidean knn metric is supported")
        if self.svm_c <= 0:
            raise ValueError("svm_c must be positive")
        if self.svm_epochs < 1:
            raise ValueError("svm_epochs must be >= 1")
        if self.rf_trees < 1:
            raise ValueError("rf_trees must be >= 1")
        if not 0.0 < self.gbt_learning_rate <= 1.0:
            raise ValueError("gbt_learning_rate must lie in (0, 1]")


@dataclass(frozen=True)
class Model:
    kind: str
    class_names: tuple[str, ...]
    n_features: int
    impl: object


def _validate_training_data(X: np.ndarray, y: np.ndarray, n_classes: int) -> None:
    if X.ndim != 2:
        raise ValueError("features must be a 2-D matrix")
    if X.shape[0] == 0:
        raise ValueError("empty training set")
    if X.shape[0] != y.shape[0]:
        raise ValueError("feature/label row counts differ")
    if not np.all(np.isfinite(X)):
        raise ValueError("training features must be finite")
    if y.min() < 0 or y.max() >= n_classes:
        raise ValueError(f"labels outside [0, {n_classes})")
    if np.unique(y).size == 1:
        logger.warning("training labels contain a single class; model degenerates "
                       "to a constant predictor")


class _ZeroRule:
    def __init__(self, majority: int):
        self.majority = majority

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.full(X.shape[0], self.majority, dtype=np.int64)


class _Knn:
    def __init__(self, X: np.ndarray, y: np.ndarray, k: int, n_classes: int):
        self.X = X
        self.y = y
        self.k = min(k, X.shape[0])
        self.n_classes = n_classes

    def predict(self, X: np.ndarray) -> np.ndarray:
        train_sq = np.sum(self.X**2, axis=1)
        out = np.empty(X.shape[0], dtype=np.int64)
        chunk = max(1, 2_000_000 // max(1, self.X.shape[0]))
        for start in range(0, X.shape[0], chunk):
            block = X[start : start + chunk]
            d2 = np.sum(block**2, axis=1)[:, None] + train_sq[None, :] - 2.0 * block @ self.X.T
            # stable sort: equal distances resolve to the earliest training row
            nearest = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
            votes = self.y[nearest]
            counts = np.zeros((block.shape[0], self.n_classes), dtype=np.int64)
            np.add.at(counts, (np.arange(block.shape[0])[:, None], votes), 1)
            out[start : start + chunk] = np.argmax(counts, axis=1)
        return out


class _LinearSvm:
    """One-vs-rest hinge-loss SVM; bias folded into an augmented weight vector."""

    def __init__(self, weights: np.ndarray):
        self.weights = weights  # (classes, d + 1)

    def decision_values(self, X: np.ndarray) -> np.ndarray:
        aug = np.hstack([X, np.ones((X.shape[0], 1))])
        return aug @ self.weights.T

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.decision_values(X), axis=1).astype(np.int64)


def svm_objective(weights: np.ndarray, X: np.ndarray, y_signed: np.ndarray, lam: float) -> float:
    """Regularised hinge objective for a single binary problem (augmented weights)."""
    aug = np.hstack([X, np.ones((X.shape[0], 1))])
    margins = y_signed * (aug @ weights)
    hinge = np.maximum(0.0, 1.0 - margins)
    return 0.5 * lam * float(weights @ weights) + float(np.mean(hinge))


def _fit_binary_svm(
    X: np.ndarray, y_signed: np.ndarray, lam: float, epochs: int, rng: np.random.Generator
) -> tuple[np.ndarray, list[float]]:
    """Projected stochastic subgradient descent on the hinge + L2 objective.

    The solver standardizes features internally (the step schedule assumes
    roughly unit-scale inputs) and averages the iterates of the last half of
    the run; the returned weights are folded back to raw feature space. Also
    returns the per-epoch objective of the would-be output, for diagnostics.
    """
    n, d = X.shape
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0] = 1.0
    aug = np.hstack([(X - mean) / std, np.ones((n, 1))])

    w = np.zeros(d + 1, dtype=np.float64)
    radius = 1.0 / np.sqrt(lam)
    tail_start = (epochs * n) // 2
    acc = np.zeros(d + 1, dtype=np.float64)
    n_acc = 0
    objectives: list[float] = []
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            margin = y_signed[i] * (aug[i] @ w)
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w += eta * y_signed[i] * aug[i]
            norm = np.sqrt(w @ w)
            if norm > radius:
                w *= radius / norm
            if t > tail_start:
                acc += w
                n_acc += 1
        w_out = acc / n_acc if n_acc else w
        margins = y_signed * (aug @ w_out)
        hinge = np.maximum(0.0, 1.0 - margins)
        objectives.append(0.5 * lam * float(w_out @ w_out) + float(np.mean(hinge)))

    w_out = acc / n_acc if n_acc else w
    w_raw = np.empty(d + 1, dtype=np.float64)
    w_raw[:d] = w_out[:d] / std
    w_raw[d] = w_out[d] - float(np.sum(w_out[:d] * mean / std))
    return w_raw, objectives


class _RandomForest:
    def __init__(self, trees, binner: FeatureBinner, n_classes: int):
        self.trees = trees
        self.binner = binner
        self.n_classes = n_classes

    def predict(self, X: np.ndarray) -> np.ndarray:
        codes = self.binner.transform(X)
        counts = np.zeros((X.shape[0], self.n_classes), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for tree in self.trees:
            votes = tree.predict(codes).astype(np.int64)
            np.add.at(counts, (rows, votes), 1)
        return np.argmax(counts, axis=1)


class _GradientBoostedTrees:
    def __init__(self, rounds, binner: FeatureBinner, n_classes: int, learning_rate: float):
        self.rounds = rounds  # list of per-round lists with one tree per class
        self.binner = binner
        self.n_classes = n_classes
        self.learning_rate = learning_rate

    def raw_scores(self, X: np.ndarray) -> np.ndarray:
        codes = self.binner.transform(X)
        scores = np.zeros((X.shape[0], self.n_classes), dtype=np.float64)
        for trees in self.rounds:
            for k, tree in enumerate(trees):
                scores[:, k] += self.learning_rate * tree.predict(codes)
        return scores

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.raw_scores(X), axis=1).astype(np.int64)


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _mtry(d: int, fraction: float | None) -> int:
    if fraction is None:
        return max(1, int(round(np.sqrt(d))))
    return max(1, min(d, int(np.ceil(fraction * d))))


def fit(kind: str, train_features, train_labels, hp: Hyperparams,
        class_names=None) -> Model:
    """Train one classifier kind on a feature matrix and class-index labels."""
    X = np.asarray(train_features, dtype=np.float64)
    y = np.asarray(train_labels, dtype=np.int64)
    if class_names is None:
        class_names = tuple(str(c) for c in range(int(y.max()) + 1 if y.size else 1))
    class_names = tuple(class_names)
    n_classes = len(class_names)
    _validate_training_data(X, y, n_classes)
    n, d = X.shape

    if kind == "zero_rule":
        counts = np.bincount(y, minlength=n_classes)
        impl: object = _ZeroRule(int(np.argmax(counts)))
    elif kind == "knn":
        impl = _Knn(X.copy(), y.copy(), hp.knn_k, n_classes)
    elif kind == "svm_linear":
        lam = 1.0 / (hp.svm_c * n)
        seeds = np.random.SeedSequence(hp.model_seed).spawn(n_classes)
        weights = np.empty((n_classes, d + 1), dtype=np.float64)
        for c in range(n_classes):
            y_signed = np.where(y == c, 1.0, -1.0)
            rng = np.random.Generator(np.random.PCG64(seeds[c]))
            weights[c], _ = _fit_binary_svm(X, y_signed, lam, hp.svm_epochs, rng)
        impl = _LinearSvm(weights)
    elif kind == "random_forest":
        binner = FeatureBinner().fit(X)
        codes = binner.transform(X)
        mtry = _mtry(d, hp.rf_feature_subsample)
        seeds = np.random.SeedSequence(hp.model_seed).spawn(hp.rf_trees)
        trees = []
        for s in seeds:
            rng = np.random.Generator(np.random.PCG64(s))
            bootstrap = rng.integers(0, n, size=n)
            trees.append(
                grow_classification_tree(
                    codes, y, n_classes, bootstrap, rng, mtry,
                    hp.rf_max_depth, binner.n_bins,
                )
            )
        impl = _RandomForest(trees, binner, n_classes)
    elif kind == "gbt":
        binner = FeatureBinner().fit(X)
        codes = binner.transform(X)
        onehot = np.zeros((n, n_classes), dtype=np.float64)
        onehot[np.arange(n), y] = 1.0
        scores = np.zeros((n, n_classes), dtype=np.float64)
        rounds = []
        for _ in range(hp.gbt_rounds):
            probs = _softmax(scores)
            round_trees = []
            for k in range(n_classes):
                residual = onehot[:, k] - probs[:, k]
                tree = grow_regression_tree(codes, residual, hp.gbt_depth, binner.n_bins)
                scores[:, k] += hp.gbt_learning_rate * tree.predict(codes)
                round_trees.append(tree)
            rounds.append(round_trees)
        impl = _GradientBoostedTrees(rounds, binner, n_classes, hp.gbt_learning_rate)
    else:
        raise ValueError(f"unknown classifier kind {kind!r}")

    return Model(kind=kind, class_names=class_names, n_features=d, impl=impl)


def predict(model: Model, features) -> np.ndarray:
    """Predict class indices for a feature matrix; deterministic per model."""
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(
            f"expected feature matrix with {model.n_features} columns, got shape {X.shape}"
        )
    return model.impl.predict(X)


def dump_model(model: Model) -> str:
    """Plain-text summary of a fitted model (debugging aid, not a stable format)."""
    info: dict = {
        "kind": model.kind,
        "classes": list(model.class_names),
        "n_features": model.n_features,
    }
    impl = model.impl
    if isinstance(impl, _ZeroRule):
        info["majority_class"] = model.class_names[impl.majority]
    elif isinstance(impl, _Knn):
        info["stored_rows"] = int(impl.X.shape[0])
        info["k"] = impl.k
    elif isinstance(impl, _LinearSvm):
        info["weight_norms"] = [float(np.linalg.norm(w)) for w in impl.weights]
    elif isinstance(impl, _RandomForest):
        info["trees"] = len(impl.trees)
        info["nodes"] = [t.n_nodes for t in impl.trees[:10]]
    elif isinstance(impl, _GradientBoostedTrees):
        info["rounds"] = len(impl.rounds)
        info["learning_rate"] = impl.learning_rate
    return json.dumps(info, indent=2, sort_keys=True)
