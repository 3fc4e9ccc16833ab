""" Local class prototypes and server-side global aggregation """

from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from loguru import logger as log

from .errors import DimensionError
from .models.enums.all import Aggregation
from .ndkernel import Tensor, node

CLASSES = (0, 1)


@dataclass(frozen=True)
class ClassPrototype:
    vector: np.ndarray
    count: int


class PrototypeSet:
    """
    Per-class embedding means with the number of samples behind each.

    A class with no samples has no entry.
    """

    def __init__(self, entries: Optional[Mapping[int, ClassPrototype]] = None):
        self._entries: Dict[int, ClassPrototype] = {}
        dim = None
        for label, entry in sorted((entries or {}).items()):
            vector = np.array(entry.vector, dtype=np.float64).reshape(-1)
            if entry.count < 0:
                raise ValueError(f"Prototype count for class {label} is negative")
            if entry.count == 0:
                raise ValueError(f"Class {label} has count 0 and cannot carry a vector")
            if not np.all(np.isfinite(vector)):
                raise ValueError(f"Prototype for class {label} is not finite")
            if dim is not None and vector.size != dim:
                raise DimensionError(f"Prototype dims disagree: {vector.size} vs {dim}")
            dim = vector.size
            self._entries[int(label)] = ClassPrototype(vector, int(entry.count))

    @classmethod
    def from_vectors(cls, vectors: Mapping[int, Sequence[float]], counts: Mapping[int, int]) -> 'PrototypeSet':
        return cls({label: ClassPrototype(np.asarray(v, dtype=np.float64), int(counts[label]))
                    for label, v in vectors.items()})

    def classes(self) -> List[int]:
        return list(self._entries)

    def __contains__(self, label: int) -> bool:
        return label in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def items(self):
        return self._entries.items()

    def vector(self, label: int) -> np.ndarray:
        return self._entries[label].vector

    def count(self, label: int) -> int:
        entry = self._entries.get(label)
        return entry.count if entry else 0

    @property
    def dim(self) -> Optional[int]:
        for entry in self._entries.values():
            return entry.vector.size
        return None

    def has_all(self, classes: Iterable[int] = CLASSES) -> bool:
        return all(label in self._entries for label in classes)

    def as_matrix(self, classes: Iterable[int] = CLASSES) -> np.ndarray:
        return np.stack([self._entries[label].vector for label in classes])

    def to_dict(self) -> dict:
        return {
            str(label): {'count': entry.count, 'vector': entry.vector.tolist()}
            for label, entry in self._entries.items()
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> 'PrototypeSet':
        return cls({int(label): ClassPrototype(np.asarray(item['vector']), int(item['count']))
                    for label, item in data.items()})

    def allclose(self, other: 'PrototypeSet', atol: float = 1e-12) -> bool:
        if self.classes() != other.classes():
            return False
        return all(
            self.count(label) == other.count(label)
            and self.vector(label).shape == other.vector(label).shape
            and np.allclose(self.vector(label), other.vector(label), rtol=0.0, atol=atol)
            for label in self.classes()
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, PrototypeSet):
            return NotImplemented
        return self.classes() == other.classes() and all(
            self.count(label) == other.count(label)
            and np.array_equal(self.vector(label), other.vector(label))
            for label in self.classes()
        )

    def __repr__(self):
        counts = ', '.join(f"{label}: n={entry.count}" for label, entry in self._entries.items())
        return f"PrototypeSet({counts})"


def compute_local_prototypes(embeddings: np.ndarray, labels: np.ndarray) -> PrototypeSet:
    embeddings = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels).reshape(-1)
    if embeddings.ndim != 2 or embeddings.shape[0] != labels.shape[0]:
        raise DimensionError(f"Embeddings {embeddings.shape} do not match {labels.shape[0]} labels")
    entries = {}
    for label in np.unique(labels):
        members = embeddings[labels == label]
        entries[int(label)] = ClassPrototype(members.sum(axis=0) / len(members), len(members))
    return PrototypeSet(entries)


class RunningMean:
    """Per-class running sums and counts; finalize() yields the class means."""

    def __init__(self):
        self.sums: Dict[int, np.ndarray] = {}
        self.counts: Dict[int, int] = {}

    def update(self, embeddings: np.ndarray, labels: np.ndarray) -> 'RunningMean':
        embeddings = np.asarray(embeddings, dtype=np.float64)
        labels = np.asarray(labels).reshape(-1)
        if len(labels) == 0:
            return self
        if embeddings.shape[0] != labels.shape[0]:
            raise DimensionError(f"Embeddings {embeddings.shape} do not match {labels.shape[0]} labels")
        for label in np.unique(labels):
            label = int(label)
            batch_sum = embeddings[labels == label].sum(axis=0)
            if label in self.sums:
                self.sums[label] = self.sums[label] + batch_sum
            else:
                self.sums[label] = batch_sum
            self.counts[label] = self.counts.get(label, 0) + int(np.sum(labels == label))
        return self

    def finalize(self) -> PrototypeSet:
        return PrototypeSet({
            label: ClassPrototype(self.sums[label] / count, count)
            for label, count in self.counts.items() if count > 0
        })


def update_running(rm: RunningMean, batch_embeddings: np.ndarray, labels: np.ndarray) -> RunningMean:
    return rm.update(batch_embeddings, labels)


def batch_class_means(embeddings: Tensor, labels: np.ndarray) -> Tuple[Tensor, List[int]]:
    """
    Class means of a batch as a tape operation.

    Returns a k×m tensor (one row per class present, ascending) and the classes.
    """
    labels = np.asarray(labels).reshape(-1)
    present = [int(label) for label in np.unique(labels)]
    masks = np.stack([(labels == label).astype(np.float64) for label in present])
    weights = masks / masks.sum(axis=1, keepdims=True)
    return node(
        weights @ embeddings.data, (embeddings,),
        lambda g: embeddings.accumulate(weights.T @ g),
    ), present


def aggregate_global(
    locals_: Sequence[Tuple[int, PrototypeSet]],
    mode: Aggregation = Aggregation.NORMALIZED,
) -> PrototypeSet:
    """
    Combine client prototypes per class, weighting by each client's class count.

    normalized: Σ n_i·C_i / Σ n_i. literal: Σ n_i·C_i / |N_j|², with |N_j| the
    number of clients holding the class. Clients are summed in id order.
    """
    ordered = sorted(locals_, key=lambda item: item[0])
    labels = sorted({label for _, protos in ordered for label in protos.classes()})
    entries = {}
    for label in labels:
        contributors = [(cid, protos) for cid, protos in ordered if label in protos]
        total = sum(protos.count(label) for _, protos in contributors)
        if Aggregation(mode) == Aggregation.LITERAL:
            weighted = sum(protos.count(label) * protos.vector(label) for _, protos in contributors)
            vector = weighted / (len(contributors) ** 2)
        else:
            # offsets from the first contributor keep identical inputs exact
            anchor = contributors[0][1].vector(label)
            vector = anchor.copy()
            for _, protos in contributors[1:]:
                vector = vector + (protos.count(label) / total) * (protos.vector(label) - anchor)
        entries[label] = ClassPrototype(vector, total)
        log.debug("Class {} aggregated from {} clients ({} samples)", label, len(contributors), total)
    return PrototypeSet(entries)
