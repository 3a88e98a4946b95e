import numpy as np
import pytest

from erasure_bench.metrics import (
    ConfusionStats,
    compute_metrics,
    confusion,
    gaussian_smooth,
)


def brute_force_counts(y_true, y_pred, n_classes):
    """Independent per-class tally: loop over every sample and class."""
    counts = {c: {"tp": 0, "tn": 0, "fp": 0, "fn": 0} for c in range(n_classes)}
    for t, p in zip(y_true, y_pred):
        for c in range(n_classes):
            if t == c and p == c:
                counts[c]["tp"] += 1
            elif t != c and p == c:
                counts[c]["fp"] += 1
            elif t == c and p != c:
                counts[c]["fn"] += 1
            else:
                counts[c]["tn"] += 1
    return counts


def brute_force_metrics(y_true, y_pred, n_classes, averaging, positive=None):
    """Direct evaluation of the accuracy/precision/recall/F1 equations."""
    counts = brute_force_counts(y_true, y_pred, n_classes)
    n = len(y_true)
    acc = sum(t == p for t, p in zip(y_true, y_pred)) / n

    def prf(c):
        tp, fp, fn = counts[c]["tp"], counts[c]["fp"], counts[c]["fn"]
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        return prec, rec, f1

    if averaging == "binary_positive_class":
        prec, rec, f1 = prf(positive)
    else:
        per_class = [prf(c) for c in range(n_classes)]
        prec = sum(p for p, _, _ in per_class) / n_classes
        rec = sum(r for _, r, _ in per_class) / n_classes
        f1 = sum(f for _, _, f in per_class) / n_classes
    return acc, prec, rec, f1


class TestConfusion:
    def test_perfect_prediction(self):
        cs = confusion([1, 1, 0], [1, 1, 0], ("a", "b"))
        assert cs.tp[1] == 2 and cs.tn[1] == 1 and cs.fp[1] == 0 and cs.fn[1] == 0

    def test_total_confusion(self):
        cs = confusion([1, 0], [0, 1], ("a", "b"))
        assert cs.tp[1] == 0 and cs.tn[1] == 0 and cs.fp[1] == 1 and cs.fn[1] == 1

    def test_counts_sum_to_n_per_class(self):
        rng = np.random.default_rng(0)
        y_true = rng.integers(0, 3, 500)
        y_pred = rng.integers(0, 3, 500)
        cs = confusion(y_true, y_pred, ("a", "b", "c"))
        assert np.all(cs.tp + cs.tn + cs.fp + cs.fn == 500)
        assert int(np.sum(cs.tp) + np.sum(cs.fp)) == 500

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            k = int(rng.integers(2, 5))
            n = int(rng.integers(5, 80))
            y_true = rng.integers(0, k, n)
            y_pred = rng.integers(0, k, n)
            cs = confusion(y_true, y_pred, tuple(str(c) for c in range(k)))
            expected = brute_force_counts(y_true, y_pred, k)
            for c in range(k):
                assert cs.tp[c] == expected[c]["tp"]
                assert cs.tn[c] == expected[c]["tn"]
                assert cs.fp[c] == expected[c]["fp"]
                assert cs.fn[c] == expected[c]["fn"]

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="mismatch"):
            confusion([0, 1], [0], ("a", "b"))

    def test_unknown_label_rejected(self):
        with pytest.raises(ValueError, match="outside"):
            confusion([0, 2], [0, 1], ("a", "b"))

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            confusion([], [], ("a", "b"))


class TestComputeMetrics:
    def test_direct_substitution(self):
        # positive-class counts: TP=2, TN=3, FP=1, FN=4 over 10 samples
        y_true = [1, 1, 0, 1, 1, 1, 1, 0, 0, 0]
        y_pred = [1, 1, 1, 0, 0, 0, 0, 0, 0, 0]
        cs = confusion(y_true, y_pred, ("neg", "pos"))
        assert (cs.tp[1], cs.tn[1], cs.fp[1], cs.fn[1]) == (2, 3, 1, 4)
        report = compute_metrics(cs, "binary_positive_class", positive_class="pos")
        assert report.accuracy == pytest.approx(0.5, abs=1e-15)
        assert report.precision == pytest.approx(2 / 3, abs=1e-15)
        assert report.recall == pytest.approx(1 / 3, abs=1e-15)
        assert report.f1 == pytest.approx(4 / 9, abs=1e-15)

    def test_perfect_classifier(self):
        cs = confusion([0, 1, 2, 1], [0, 1, 2, 1], ("a", "b", "c"))
        report = compute_metrics(cs, "macro")
        assert (report.accuracy, report.precision, report.recall, report.f1) == (1, 1, 1, 1)

    def test_degenerate_denominators_yield_zero(self):
        # positive class never predicted and never correct: TP=0, FP=0, FN=5
        cs = confusion([1, 1, 1, 1, 1, 0, 0], [0, 0, 0, 0, 0, 0, 0], ("neg", "pos"))
        report = compute_metrics(cs, "binary_positive_class", positive_class="pos")
        assert report.precision == 0.0
        assert report.recall == 0.0
        assert report.f1 == 0.0

    def test_accuracy_equals_direct_count(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            k = int(rng.integers(2, 5))
            y_true = rng.integers(0, k, 1000)
            y_pred = rng.integers(0, k, 1000)
            cs = confusion(y_true, y_pred, tuple(str(c) for c in range(k)))
            report = compute_metrics(cs, "macro")
            assert report.accuracy == np.mean(y_true == y_pred)

    def test_macro_f1_invariant_under_relabeling(self):
        rng = np.random.default_rng(3)
        y_true = rng.integers(0, 3, 300)
        y_pred = rng.integers(0, 3, 300)
        base = compute_metrics(confusion(y_true, y_pred, ("a", "b", "c")), "macro")
        perm = np.array([2, 0, 1])
        relabeled = compute_metrics(
            confusion(perm[y_true], perm[y_pred], ("a", "b", "c")), "macro"
        )
        assert relabeled.f1 == pytest.approx(base.f1, abs=1e-12)
        assert relabeled.accuracy == pytest.approx(base.accuracy, abs=1e-12)

    def test_positive_class_defaults_to_last(self):
        cs = confusion([0, 1], [0, 1], ("neg", "pos"))
        assert compute_metrics(cs, "binary_positive_class").f1 == 1.0

    def test_unknown_averaging_rejected(self):
        cs = confusion([0, 1], [0, 1], ("a", "b"))
        with pytest.raises(ValueError, match="averaging"):
            compute_metrics(cs, "micro")

    def test_unknown_positive_class_rejected(self):
        cs = confusion([0, 1], [0, 1], ("a", "b"))
        with pytest.raises(ValueError, match="positive"):
            compute_metrics(cs, "binary_positive_class", positive_class="c")


class TestGaussianSmooth:
    def test_constant_series_unchanged(self):
        out = gaussian_smooth([0.7] * 20, sigma=2.0)
        assert np.max(np.abs(out - 0.7)) < 1e-12

    @pytest.mark.parametrize("sigma", [2.0, 3.0, 5.0])
    def test_figure_sigmas_accepted(self, sigma):
        out = gaussian_smooth(np.linspace(0, 1, 30), sigma)
        assert out.shape == (30,)

    def test_impulse_matches_analytic_kernel(self):
        sigma = 2.0
        series = np.zeros(41)
        series[20] = 1.0
        out = gaussian_smooth(series, sigma)
        radius = int(np.ceil(4 * sigma))
        offsets = np.arange(-radius, radius + 1)
        kernel = np.exp(-(offsets**2) / (2 * sigma**2))
        kernel = kernel / kernel.sum()
        expected = np.zeros(41)
        expected[20 - radius : 20 + radius + 1] = kernel
        assert np.max(np.abs(out - expected)) < 1e-9

    def test_range_preserved(self):
        rng = np.random.default_rng(4)
        series = rng.random(50)
        out = gaussian_smooth(series, sigma=3.0)
        assert np.all(out >= series.min() - 1e-12)
        assert np.all(out <= series.max() + 1e-12)

    def test_tiny_sigma_is_identity(self):
        rng = np.random.default_rng(5)
        series = rng.random(25)
        out = gaussian_smooth(series, sigma=1e-6)
        assert np.max(np.abs(out - series)) < 1e-9

    def test_length_preserved_and_single_element(self):
        assert gaussian_smooth([0.3], 2.0) == pytest.approx([0.3])

    def test_invalid_inputs_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            gaussian_smooth([1.0, 2.0], 0.0)
        with pytest.raises(ValueError, match="at least one"):
            gaussian_smooth([], 1.0)
