""" Class-imbalance-aware losses: weighted supervised, prototype contrastive, L2 ablation """

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigError, DimensionError, ImbalanceConfigError, SimilarityUndefinedError
from .models.pd.loss import LossConfig
from .ndkernel import Tensor, node
from .prototypes import CLASSES, PrototypeSet

NUM_CLASSES = len(CLASSES)
Scalar = Union[float, Tensor]


@dataclass(frozen=True)
class ClassCounts:
    """Training-set class counts of one client (0 = non-icing, 1 = icing)."""

    n0: int
    n1: int

    def __post_init__(self):
        if self.n0 < 0 or self.n1 < 0:
            raise ImbalanceConfigError(f"Class counts must be nonnegative, got {self.n0}, {self.n1}")

    @property
    def total(self) -> int:
        return self.n0 + self.n1

    def count(self, label: int) -> int:
        return self.n1 if label == 1 else self.n0

    @property
    def single_class(self) -> bool:
        return self.n0 == 0 or self.n1 == 0

    @classmethod
    def from_labels(cls, labels: np.ndarray) -> 'ClassCounts':
        labels = np.asarray(labels)
        return cls(int(np.sum(labels == 0)), int(np.sum(labels == 1)))


def class_weights(counts: ClassCounts, gamma: float, eps: float) -> Tuple[float, float]:
    """(1/(n0+ε))^γ for the non-icing term and (1/(n1+ε))^γ for the icing term."""
    if gamma < 0:
        raise ConfigError(f"gamma must be nonnegative, got {gamma}")
    w_pos = (1.0 / (counts.n0 + eps)) ** gamma
    w_neg = (1.0 / (counts.n1 + eps)) ** gamma
    return w_pos, w_neg


def weighted_supervised_loss(logits: Tensor, labels: np.ndarray, counts: ClassCounts) -> Tensor:
    """Batch mean of −(N/(C·n_y))·log softmax(logits)_y as a tape operation."""
    labels = np.asarray(labels).astype(np.int64).reshape(-1)
    if logits.ndim != 2 or logits.shape[1] != NUM_CLASSES or logits.shape[0] != labels.shape[0]:
        raise DimensionError(f"Logits {logits.shape} do not match {labels.shape[0]} binary labels")
    if np.any((labels < 0) | (labels >= NUM_CLASSES)):
        raise ValueError("Labels must be 0 or 1")
    for label in np.unique(labels):
        if counts.count(int(label)) <= 0:
            raise ImbalanceConfigError(f"Class {int(label)} appears in the batch but has no training count")

    class_weight = np.array([
        counts.total / (NUM_CLASSES * counts.count(label)) if counts.count(label) > 0 else 0.0
        for label in CLASSES
    ])
    sample_weight = class_weight[labels]
    batch = labels.shape[0]
    rows = np.arange(batch)

    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_norm
    loss = -np.sum(sample_weight * log_probs[rows, labels]) / batch

    def backward(g):
        probs = np.exp(log_probs)
        probs[rows, labels] -= 1.0
        logits.accumulate(g * probs * sample_weight[:, None] / batch)

    return node(np.array(loss), (logits,), backward)


def supervised_loss(logits, labels: np.ndarray, counts: ClassCounts) -> float:
    tensor = logits if isinstance(logits, Tensor) else Tensor(logits)
    return weighted_supervised_loss(tensor, labels, counts).item()


def _norm(vector: np.ndarray, what: str) -> float:
    value = float(np.linalg.norm(vector))
    if value == 0.0:
        raise SimilarityUndefinedError(f"Cosine similarity undefined for zero-norm {what}")
    return value


def prototype_contrastive(
    local: Tensor,
    classes: Sequence[int],
    global_matrix: np.ndarray,
    tau: float,
    eps: float,
) -> Tensor:
    """
    Per-class contrastive terms for local prototype rows against fixed global prototypes.

    Row r holds the local prototype of classes[r]; its term is
    −log(e^{s_same/τ} / (e^{s_same/τ} + e^{s_other/τ} + ε)) with cosine similarity s.
    """
    if tau <= 0:
        raise ConfigError(f"tau must be positive, got {tau}")
    global_matrix = np.asarray(global_matrix, dtype=np.float64)
    if local.ndim != 2 or global_matrix.shape != (NUM_CLASSES, local.shape[1]):
        raise DimensionError(f"Local prototypes {local.shape} do not match global {global_matrix.shape}")

    global_norms = np.array([_norm(g, f"global prototype {j}") for j, g in enumerate(global_matrix)])
    values = np.empty(len(classes))
    grads: List[np.ndarray] = []
    for row, label in enumerate(classes):
        u = local.data[row]
        u_norm = _norm(u, f"local prototype {label}")
        other = 1 - label
        sims = np.empty(NUM_CLASSES)
        dsims = []
        for j in (label, other):
            g = global_matrix[j]
            s = float(u @ g) / (u_norm * global_norms[j])
            sims[0 if j == label else 1] = s
            dsims.append(g / (u_norm * global_norms[j]) - s * u / (u_norm ** 2))
        a, b = sims / tau
        top = max(a, b)
        z = np.exp(a - top) + np.exp(b - top) + eps * np.exp(-top)
        values[row] = -a + top + np.log(z)
        dl_da = -1.0 + np.exp(a - top) / z
        dl_db = np.exp(b - top) / z
        grads.append((dl_da * dsims[0] + dl_db * dsims[1]) / tau)

    def backward(g):
        local.accumulate(g[:, None] * np.stack(grads))

    return node(values, (local,), backward)


def _terms_weights(classes: Sequence[int], counts: ClassCounts, config: LossConfig) -> np.ndarray:
    w_pos, w_neg = class_weights(counts, config.gamma, config.eps)
    return np.array([w_pos if label == 0 else w_neg for label in classes])


def contrastive_term(
    local: Tensor,
    classes: Sequence[int],
    global_: PrototypeSet,
    counts: ClassCounts,
    config: LossConfig,
) -> Tensor:
    """w_pos·L_pos + w_neg·L_neg over the classes present in local (tape form)."""
    terms = prototype_contrastive(local, classes, global_.as_matrix(), config.tau, config.eps)
    return (terms * Tensor(_terms_weights(classes, counts, config))).sum()


def contrastive_pair_losses(
    local: PrototypeSet,
    global_: PrototypeSet,
    tau: float,
    eps: float,
) -> Tuple[float, float]:
    if not local.has_all() or not global_.has_all():
        raise ValueError("Both prototype sets need classes 0 and 1")
    terms = prototype_contrastive(Tensor(local.as_matrix()), list(CLASSES), global_.as_matrix(), tau, eps)
    return float(terms.data[0]), float(terms.data[1])


def contrastive_loss(local: PrototypeSet, global_: PrototypeSet, counts: ClassCounts, config: LossConfig) -> float:
    l_pos, l_neg = contrastive_pair_losses(local, global_, config.tau, config.eps)
    w_pos, w_neg = class_weights(counts, config.gamma, config.eps)
    return w_pos * l_pos + w_neg * l_neg


def total_loss(l_s: Scalar, l_c: Scalar, lam: float) -> Scalar:
    """(1−λ)·L_s + λ·L_c for floats or tape tensors."""
    if not 0.0 <= lam <= 1.0:
        raise ConfigError(f"lambda must be in [0, 1], got {lam}")
    return l_s * (1.0 - lam) + l_c * lam


def l2_term(local: Tensor, classes: Sequence[int], global_: PrototypeSet) -> Tensor:
    """Σ_j ‖C_j − Ḡ_j‖₂ over the rows of local (tape form)."""
    targets = np.stack([global_.vector(label) for label in classes])
    if targets.shape != local.shape:
        raise DimensionError(f"Local prototypes {local.shape} do not match global {targets.shape}")
    diff = local.data - targets
    norms = np.linalg.norm(diff, axis=1)
    safe = np.where(norms > 0, norms, 1.0)

    def backward(g):
        local.accumulate(g * diff / safe[:, None] * (norms > 0)[:, None])

    return node(np.array(norms.sum()), (local,), backward)


def l2_proto_penalty(local: PrototypeSet, global_: PrototypeSet) -> float:
    shared = [label for label in local.classes() if label in global_]
    if not shared:
        return 0.0
    if local.dim != global_.dim:
        raise DimensionError(f"Prototype dims disagree: {local.dim} vs {global_.dim}")
    rows = Tensor(np.stack([local.vector(label) for label in shared]))
    return l2_term(rows, shared, global_).item()


def federated_objective(per_client: Sequence[Tuple[float, Optional[float], float]]) -> float:
    """Σ_i [(1−λ)·L_s,i + λ·L_c,i / |C|]; clients without a prototype term contribute L_s only."""
    total = 0.0
    for l_s, l_c, lam in per_client:
        if l_c is None:
            total += l_s
        else:
            total += (1.0 - lam) * l_s + lam * l_c / NUM_CLASSES
    return total
