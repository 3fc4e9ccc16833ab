""" Windowing, stratified splits and train-statistics normalization """

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from sklearn.model_selection import train_test_split

from ..errors import DimensionError, SizeError, StratificationError
from ..losses import ClassCounts
from ..models.enums.all import LabelRule

SIGMA_FLOOR = 1e-8


@dataclass
class ClientDataset:
    """Train and test windows (N×T×d) of one client, labels 0 = non-icing, 1 = icing."""

    client_id: int
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray

    @property
    def train_counts(self) -> ClassCounts:
        return ClassCounts.from_labels(self.y_train)

    @property
    def test_counts(self) -> ClassCounts:
        return ClassCounts.from_labels(self.y_test)

    @property
    def n_train(self) -> int:
        return int(self.y_train.shape[0])

    def to_series(self, split: str = 'train') -> Tuple[np.ndarray, np.ndarray]:
        """Concatenate windows into an L×d series with per-step flags (stride T recovers them)."""
        x, y = (self.x_train, self.y_train) if split == 'train' else (self.x_test, self.y_test)
        return x.reshape(-1, x.shape[2]), np.repeat(y, x.shape[1]).astype(np.int64)


def window_slice(
    series: np.ndarray,
    window: int,
    stride: int,
    flags: Optional[np.ndarray] = None,
    label_rule: LabelRule = LabelRule.ANY,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Cut an L×d series into floor((L−T)/stride)+1 windows of T×d.

    A window is icing when any step is flagged (rule "any") or when more than
    half of its steps are (rule "majority").
    """
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 2:
        raise DimensionError(f"Series must be L×d, got shape {series.shape}")
    if window < 1 or stride < 1:
        raise SizeError(f"Window and stride must be positive, got {window}, {stride}")
    length = series.shape[0]
    if length < window:
        raise SizeError(f"Series of length {length} is shorter than window {window}")
    if flags is None:
        flags = np.zeros(length, dtype=np.int64)
    flags = np.asarray(flags).reshape(-1)
    if flags.shape[0] != length:
        raise DimensionError(f"{flags.shape[0]} flags for a series of length {length}")

    starts = np.arange(0, length - window + 1, stride)
    index = starts[:, None] + np.arange(window)[None, :]
    windows = series[index]
    flagged = (flags[index] != 0).sum(axis=1)
    if LabelRule(label_rule) == LabelRule.MAJORITY:
        labels = (2 * flagged > window).astype(np.int64)
    else:
        labels = (flagged > 0).astype(np.int64)
    return windows, labels


def split_train_test(
    x: np.ndarray,
    y: np.ndarray,
    fraction: float = 0.6,
    seed: int = 0,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Stratified split returning (x_train, x_test, y_train, y_test)."""
    y = np.asarray(y).reshape(-1)
    present, counts = np.unique(y, return_counts=True)
    if len(present) < 2:
        raise StratificationError(f"Stratified split needs both classes, got {present.tolist()}")
    if counts.min() < 2:
        raise StratificationError("Each class needs at least two windows to appear in both splits")
    try:
        x_train, x_test, y_train, y_test = train_test_split(
            x, y, train_size=fraction, stratify=y, random_state=seed % (2 ** 32),
        )
    except ValueError as exc:
        raise StratificationError(str(exc)) from exc
    return x_train, x_test, y_train, y_test


def normalize(train: np.ndarray, test: np.ndarray, floor: float = SIGMA_FLOOR) -> Tuple[np.ndarray, np.ndarray]:
    """Z-score both arrays per channel (last axis) with train statistics; constant channels map to 0."""
    train = np.asarray(train, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    axes = tuple(range(train.ndim - 1))
    mean = train.mean(axis=axes)
    std = train.std(axis=axes)
    # channels at or below the floor carry no information
    std = np.where(std > floor, std, np.inf)
    return (train - mean) / std, (test - mean) / std
