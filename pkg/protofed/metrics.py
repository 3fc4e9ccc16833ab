""" Fβ, balanced accuracy and their cross-client means (icing is the positive class) """

from dataclasses import asdict, dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np
from sklearn.metrics import confusion_matrix

from .errors import UndefinedMetricError

DEFAULT_BETA = 2.0


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        for name in ('tp', 'tn', 'fp', 'fn'):
            if getattr(self, name) < 0:
                raise ValueError(f"Confusion count {name} must be nonnegative")

    @property
    def positives(self) -> int:
        return self.tp + self.fn

    @property
    def negatives(self) -> int:
        return self.tn + self.fp

    def to_dict(self) -> dict:
        return asdict(self)

    def __add__(self, other: 'ConfusionCounts') -> 'ConfusionCounts':
        return ConfusionCounts(self.tp + other.tp, self.tn + other.tn, self.fp + other.fp, self.fn + other.fn)


@dataclass(frozen=True)
class MetricRow:
    precision: float
    recall: float
    fbeta: float
    ba: float


def confusion_counts(y_true: Iterable[int], y_pred: Iterable[int]) -> ConfusionCounts:
    y_true = np.asarray(list(y_true)).reshape(-1)
    y_pred = np.asarray(list(y_pred)).reshape(-1)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"{y_true.size} labels vs {y_pred.size} predictions")
    tn, fp, fn, tp = confusion_matrix(y_true, y_pred, labels=[0, 1]).ravel()
    return ConfusionCounts(tp=int(tp), tn=int(tn), fp=int(fp), fn=int(fn))


def _ratio(num: int, den: int) -> float:
    # 0/0 is reported as 0
    return num / den if den else 0.0


def precision_recall(counts: ConfusionCounts) -> Tuple[float, float]:
    return _ratio(counts.tp, counts.tp + counts.fp), _ratio(counts.tp, counts.tp + counts.fn)


def f_beta(precision: float, recall: float, beta: float = DEFAULT_BETA) -> float:
    if not (0.0 <= precision <= 1.0 and 0.0 <= recall <= 1.0):
        raise ValueError(f"Precision and recall must be in [0, 1], got {precision}, {recall}")
    b2 = beta * beta
    numerator = (1.0 + b2) * precision * recall
    if numerator == 0.0:
        return 0.0
    return numerator / (b2 * precision + recall)


def balanced_accuracy(counts: ConfusionCounts) -> float:
    if counts.positives == 0 or counts.negatives == 0:
        raise UndefinedMetricError(
            f"Balanced accuracy needs both classes (icing={counts.positives}, non-icing={counts.negatives})"
        )
    return 0.5 * (counts.tp / counts.positives + counts.tn / counts.negatives)


def client_metrics(counts: ConfusionCounts, beta: float = DEFAULT_BETA) -> MetricRow:
    precision, recall = precision_recall(counts)
    return MetricRow(precision, recall, f_beta(precision, recall, beta), balanced_accuracy(counts))


def macro_means(per_client: Sequence[Tuple[float, float]]) -> Tuple[float, float]:
    """Unweighted (mFβ, mBA) across clients."""
    if not per_client:
        raise UndefinedMetricError("No client metrics to average")
    values = np.asarray(per_client, dtype=np.float64)
    return float(values[:, 0].mean()), float(values[:, 1].mean())


def round_averaged(per_round_means: Sequence[Tuple[float, float]]) -> Tuple[float, float]:
    if not per_round_means:
        raise UndefinedMetricError("No rounds to average")
    return macro_means(per_round_means)
