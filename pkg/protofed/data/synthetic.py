""" Synthetic SCADA-like imbalanced windows with per-client distribution shift """

from typing import List, Tuple

import numpy as np
from loguru import logger as log

from ..errors import SizeError
from ..models.pd.dataset import DatasetSpec
from ..utils.utils import derive_seed
from .windows import ClientDataset


def class_sizes(total: int, rho: int) -> Tuple[int, int]:
    """(non-icing, icing) counts with an exact rho:1 ratio."""
    minority = total // (rho + 1)
    if minority == 0:
        raise SizeError(f"{total} windows cannot hold a {rho}:1 split with at least one icing window")
    return rho * minority, minority


def _ar_windows(rng: np.random.Generator, count: int, spec: DatasetSpec, chol: np.ndarray) -> np.ndarray:
    """Stationary unit-variance AR(1) windows with correlated innovations."""
    steps, channels = spec.window, spec.channels
    innovations = rng.standard_normal((count, steps, channels)) @ chol.T
    out = np.empty((count, steps, channels))
    out[:, 0] = innovations[:, 0]
    gain = np.sqrt(1.0 - spec.ar_coef ** 2)
    for t in range(1, steps):
        out[:, t] = spec.ar_coef * out[:, t - 1] + gain * innovations[:, t]
    return out


class ClientShift:
    """Per-client channel affine transform and icing signature channels."""

    def __init__(self, spec: DatasetSpec, client_id: int, rng: np.random.Generator):
        self.offset = rng.normal(0.0, spec.client_shift, spec.channels)
        self.scale = 1.0 + rng.uniform(-spec.client_scale, spec.client_scale, spec.channels)
        # signature rotates by one channel per client
        start = client_id % spec.channels
        self.signature = (start + np.arange(spec.signature_channels)) % spec.channels

    def apply(self, windows: np.ndarray, labels: np.ndarray, spec: DatasetSpec) -> np.ndarray:
        windows = windows.copy()
        icing = labels == 1
        block = windows[icing][:, :, self.signature]
        windows[np.ix_(icing, np.arange(spec.window), self.signature)] = block * spec.icing_scale + spec.icing_shift
        return windows * self.scale + self.offset


def _draw_split(rng, spec, shift, chol, total: int, rho: int) -> Tuple[np.ndarray, np.ndarray]:
    n_major, n_minor = class_sizes(total, rho)
    labels = np.concatenate([np.zeros(n_major, dtype=np.int64), np.ones(n_minor, dtype=np.int64)])
    labels = labels[rng.permutation(labels.size)]
    windows = _ar_windows(rng, labels.size, spec, chol)
    return shift.apply(windows, labels, spec), labels


def generate_synthetic(spec: DatasetSpec) -> List[ClientDataset]:
    """
    One (train, test) pair per client.

    Train sets hold rho:1 and test sets test_rho:1 non-icing to icing windows.
    Each client draws from its own seed so datasets do not depend on the
    number of clients generated before it.
    """
    channels = spec.channels
    corr = np.full((channels, channels), spec.channel_corr)
    np.fill_diagonal(corr, 1.0)
    chol = np.linalg.cholesky(corr)

    datasets = []
    for client_id in range(spec.clients):
        rng = np.random.default_rng(derive_seed(spec.seed, client_id))
        shift = ClientShift(spec, client_id, rng)
        x_train, y_train = _draw_split(rng, spec, shift, chol, spec.train_windows, spec.rho)
        x_test, y_test = _draw_split(rng, spec, shift, chol, spec.test_windows, spec.test_rho)
        dataset = ClientDataset(client_id, x_train, y_train, x_test, y_test)
        log.debug(
            "Client {}: train {} / test {} (icing {} / {})",
            client_id, y_train.size, y_test.size, int(y_train.sum()), int(y_test.sum()),
        )
        datasets.append(dataset)
    return datasets
