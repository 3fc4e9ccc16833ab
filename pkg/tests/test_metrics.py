import itertools

import numpy as np
import pytest
from sklearn.metrics import balanced_accuracy_score, fbeta_score

from protofed.errors import UndefinedMetricError
from protofed.metrics import (
    ConfusionCounts,
    balanced_accuracy,
    client_metrics,
    confusion_counts,
    f_beta,
    macro_means,
    precision_recall,
    round_averaged,
)


def direct_fbeta(tp, fp, fn, beta=2.0):
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision == 0.0 or recall == 0.0:
        return 0.0
    return (1 + beta ** 2) * precision * recall / (beta ** 2 * precision + recall)


class TestConfusion:
    def test_counts(self):
        counts = confusion_counts([1, 1, 0, 0, 1], [1, 0, 0, 1, 1])
        assert counts == ConfusionCounts(tp=2, tn=1, fp=1, fn=1)
        assert counts.positives == 3 and counts.negatives == 2

    def test_single_class_input(self):
        assert confusion_counts([0, 0, 0], [0, 1, 0]) == ConfusionCounts(tn=2, fp=1)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            ConfusionCounts(tp=-1)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            confusion_counts([0, 1], [0])

    def test_add(self):
        assert ConfusionCounts(1, 2, 3, 4) + ConfusionCounts(1, 1, 1, 1) == ConfusionCounts(2, 3, 4, 5)


class TestFBeta:
    def test_examples(self):
        precision, recall = precision_recall(ConfusionCounts(tp=8, fp=2, fn=2, tn=5))
        assert (precision, recall) == (pytest.approx(0.8), pytest.approx(0.8))
        assert f_beta(precision, recall) == pytest.approx(0.8)
        assert f_beta(0.5, 1.0) == pytest.approx(2.5 / 3.0)

    def test_zero_cases(self):
        assert precision_recall(ConfusionCounts(tn=4)) == (0.0, 0.0)
        assert f_beta(0.0, 0.0) == 0.0
        assert f_beta(0.0, 1.0) == 0.0

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            f_beta(1.2, 0.5)

    def test_exhaustive_small_counts(self):
        for tp, fp, fn in itertools.product(range(6), repeat=3):
            precision, recall = precision_recall(ConfusionCounts(tp=tp, fp=fp, fn=fn))
            assert f_beta(precision, recall) == pytest.approx(direct_fbeta(tp, fp, fn), abs=1e-12)

    def test_recall_weighs_more(self):
        # β=2 favours recall over precision
        assert f_beta(0.5, 0.9) > f_beta(0.9, 0.5)

    def test_matches_sklearn(self, rng):
        for _ in range(10):
            y_true = rng.integers(0, 2, size=200)
            y_pred = rng.integers(0, 2, size=200)
            row = client_metrics(confusion_counts(y_true, y_pred))
            assert row.fbeta == pytest.approx(fbeta_score(y_true, y_pred, beta=2.0, zero_division=0))
            assert row.ba == pytest.approx(balanced_accuracy_score(y_true, y_pred))


class TestBalancedAccuracy:
    def test_example(self):
        assert balanced_accuracy(ConfusionCounts(tp=1, fn=1, tn=3, fp=1)) == pytest.approx(0.625)

    def test_perfect_and_inverted(self):
        assert balanced_accuracy(ConfusionCounts(tp=3, tn=7)) == 1.0
        assert balanced_accuracy(ConfusionCounts(fn=3, fp=7)) == 0.0

    def test_random_predictor(self, rng):
        y_true = (rng.random(10000) < 0.1).astype(int)
        y_pred = rng.integers(0, 2, size=10000)
        assert balanced_accuracy(confusion_counts(y_true, y_pred)) == pytest.approx(0.5, abs=0.02)

    def test_undefined_without_both_classes(self):
        with pytest.raises(UndefinedMetricError):
            balanced_accuracy(ConfusionCounts(tn=5, fp=1))
        with pytest.raises(UndefinedMetricError):
            client_metrics(ConfusionCounts(tp=5))


class TestMeans:
    def test_macro_means(self):
        assert macro_means([(0.2, 0.6), (0.4, 0.8)]) == (pytest.approx(0.3), pytest.approx(0.7))

    def test_unweighted(self):
        assert macro_means([(1.0, 1.0), (0.0, 0.5), (0.5, 0.0)])[0] == pytest.approx(0.5)

    def test_round_averaged(self):
        assert round_averaged([(0.1, 0.5), (0.3, 0.7)]) == (pytest.approx(0.2), pytest.approx(0.6))

    def test_empty(self):
        with pytest.raises(UndefinedMetricError):
            macro_means([])
        with pytest.raises(UndefinedMetricError):
            round_averaged([])
