"""Core data types: predictions, labels, datasets, and rank decompositions.

All types are immutable after construction (backing arrays are marked
read-only) and all operations are pure functions, so values can be shared
freely across threads.

Class and bin indices are 0-based everywhere in this package.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyDataset,
    InvalidProbability,
    LabelOutOfRange,
)

# Sum-to-one is enforced at 1e-9 once a vector is constructed; raw inputs
# (file rows, float32 softmax outputs) are renormalized when their sum is
# within 1e-6 of one and rejected otherwise.
SUM_TOLERANCE = 1e-9
NORMALIZE_TOLERANCE = 1e-6


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ProbabilityVector:
    """A point on the probability simplex: one classifier prediction."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.shape[0] < 2:
            raise InvalidProbability(f"need at least 2 classes, got shape {p.shape}")
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise InvalidProbability(f"entries outside [0, 1]: {p}")
        total = p.sum()
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise InvalidProbability(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "probs", _frozen(p))

    @classmethod
    def from_raw(cls, values: Sequence[float]) -> "ProbabilityVector":
        """Build from unnormalized input, renormalizing a sum within 1e-6 of one."""
        p = np.asarray(values, dtype=np.float64)
        if p.ndim != 1 or p.shape[0] < 2:
            raise InvalidProbability(f"need at least 2 classes, got shape {p.shape}")
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise InvalidProbability(f"entries outside [0, 1]: {p}")
        total = p.sum()
        if abs(total - 1.0) > NORMALIZE_TOLERANCE:
            raise InvalidProbability(f"probabilities sum to {total!r}, off by more than {NORMALIZE_TOLERANCE}")
        if abs(total - 1.0) > SUM_TOLERANCE:  # renormalize only when needed: keeps round-trips exact
            p = p / total
        return cls(p)

    @property
    def num_classes(self) -> int:
        return self.probs.shape[0]


@dataclass(frozen=True)
class LabeledPrediction:
    """A prediction paired with the observed true class."""

    probs: ProbabilityVector
    true_class: int

    def __post_init__(self):
        c = self.probs.num_classes
        if not 0 <= self.true_class < c:
            raise LabelOutOfRange(f"label {self.true_class} outside [0, {c})")


@dataclass(frozen=True)
class Dataset:
    """A fixed-width batch of labeled predictions.

    Backed by a read-only ``(n, num_classes)`` float64 array plus an
    ``(n,)`` int64 label array; ``items()`` yields per-sample views for
    item-level code and tests.
    """

    probs: np.ndarray
    labels: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if p.ndim != 2 or p.shape[0] == 0:
            raise EmptyDataset("dataset must contain at least one sample")
        if p.shape[1] < 2:
            raise DimensionMismatch(f"need at least 2 classes, got {p.shape[1]}")
        if y.shape != (p.shape[0],):
            raise DimensionMismatch(f"labels shape {y.shape} does not match {p.shape[0]} samples")
        if np.any(y < 0) or np.any(y >= p.shape[1]):
            bad = int(np.argmax((y < 0) | (y >= p.shape[1])))
            raise LabelOutOfRange(f"sample {bad}: label {y[bad]} outside [0, {p.shape[1]})")
        if np.any(p < 0.0) or np.any(p > 1.0):
            bad = int(np.argmax(np.any((p < 0.0) | (p > 1.0), axis=1)))
            raise InvalidProbability(f"sample {bad}: entries outside [0, 1]")
        sums = p.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > SUM_TOLERANCE):
            bad = int(np.argmax(np.abs(sums - 1.0) > SUM_TOLERANCE))
            raise InvalidProbability(f"sample {bad}: probabilities sum to {sums[bad]!r}")
        object.__setattr__(self, "probs", _frozen(p))
        object.__setattr__(self, "labels", _frozen(y))

    @property
    def n(self) -> int:
        return self.probs.shape[0]

    @property
    def num_classes(self) -> int:
        return self.probs.shape[1]

    def __len__(self) -> int:
        return self.n

    def items(self) -> Iterator[LabeledPrediction]:
        for i in range(self.n):
            yield LabeledPrediction(ProbabilityVector(self.probs[i]), int(self.labels[i]))

    @classmethod
    def from_items(cls, items: Sequence[LabeledPrediction], meta: dict | None = None) -> "Dataset":
        if not items:
            raise EmptyDataset("no items")
        c = items[0].probs.num_classes
        for i, it in enumerate(items):
            if it.probs.num_classes != c:
                raise DimensionMismatch(f"item {i} has {it.probs.num_classes} classes, expected {c}")
        probs = np.stack([it.probs.probs for it in items])
        labels = np.array([it.true_class for it in items], dtype=np.int64)
        return cls(probs, labels, meta or {})


def validate_dataset(raw: Sequence[tuple[Sequence[float], int]], meta: dict | None = None) -> Dataset:
    """Validate and normalize raw (probs, label) pairs into a Dataset.

    Raises EmptyDataset, DimensionMismatch, InvalidProbability or
    LabelOutOfRange with the offending sample index in the message.
    """
    if len(raw) == 0:
        raise EmptyDataset("no samples supplied")
    c = len(raw[0][0])
    probs = np.empty((len(raw), c), dtype=np.float64)
    labels = np.empty(len(raw), dtype=np.int64)
    for i, (row, label) in enumerate(raw):
        if len(row) != c:
            raise DimensionMismatch(f"sample {i} has {len(row)} classes, expected {c}")
        try:
            probs[i] = ProbabilityVector.from_raw(row).probs
        except InvalidProbability as e:
            raise InvalidProbability(f"sample {i}: {e}") from None
        labels[i] = label
    return Dataset(probs, labels, meta or {})


@dataclass(frozen=True)
class RankedPrediction:
    """A prediction reordered by descending probability.

    ``q`` holds the sorted probabilities, ``class_order`` the class index
    occupying each sorted position, and ``r`` the one-hot indicator of the
    position occupied by the true class.
    """

    q: np.ndarray
    class_order: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", _frozen(np.asarray(self.q, dtype=np.float64)))
        object.__setattr__(self, "class_order", _frozen(np.asarray(self.class_order, dtype=np.int64)))
        object.__setattr__(self, "r", _frozen(np.asarray(self.r, dtype=np.int64)))


def rank_prediction(item: LabeledPrediction) -> RankedPrediction:
    """Sort one prediction into descending order and locate the true class.

    Ties are broken deterministically by ascending class index (stable
    sort), so equal probabilities keep their natural class order.
    """
    p = item.probs.probs
    order = np.argsort(-p, kind="stable")
    q = p[order]
    r = np.zeros(p.shape[0], dtype=np.int64)
    r[int(np.nonzero(order == item.true_class)[0][0])] = 1
    return RankedPrediction(q, order, r)


def ranked_arrays(probs: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized equivalent of rank_prediction over a batch.

    Returns ``q`` (rows sorted descending) and ``rank_pos`` where
    ``rank_pos[i]`` is the sorted position of the true class: the number
    of strictly larger entries plus earlier-indexed ties, matching the
    stable descending sort.
    """
    q = -np.sort(-probs, axis=1)
    p_true = np.take_along_axis(probs, labels[:, None], axis=1)
    cols = np.arange(probs.shape[1])
    rank_pos = (probs > p_true).sum(axis=1) + ((probs == p_true) & (cols < labels[:, None])).sum(axis=1)
    return q, rank_pos
