"""Perfectly-calibrated synthetic predictions via Dirichlet sampling.

Each prediction is drawn from a fixed Dirichlet distribution and its
"true" label is then drawn from the prediction itself, so the predicted
probabilities are the exact conditional label distribution by
construction.

Generation is chunked with per-chunk seeds derived from the spec seed
(numpy SeedSequence spawn keys over a PCG64 stream), so a dataset is a
deterministic function of its spec and can be produced in parallel or
streamed without materializing all samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .domain import Dataset, ProbabilityVector
from .errors import NonPositiveAlpha, ValidationError
from .numerics import DEFAULT_CHUNK_SIZE

GENERATOR_NAME = "numpy.PCG64"

ALPHA_PRESETS = ("equal", "skewed")


def resolve_alpha(preset: str, num_classes: int) -> tuple[float, ...]:
    """Expand an alpha preset name or comma-separated list to C values.

    ``equal`` weights all classes alike (alpha_c = 1); ``skewed`` puts
    alpha_1 = 10 with 1 elsewhere, concentrating mass on one class.
    """
    if preset == "equal":
        return (1.0,) * num_classes
    if preset == "skewed":
        return (10.0,) + (1.0,) * (num_classes - 1)
    try:
        values = tuple(float(v) for v in preset.split(","))
    except ValueError:
        raise ValidationError(f"alpha must be 'equal', 'skewed' or comma-separated floats, got {preset!r}") from None
    if len(values) != num_classes:
        raise ValidationError(f"alpha list has {len(values)} entries for {num_classes} classes")
    return values


@dataclass(frozen=True)
class DirichletSpec:
    """Parameters of one synthetic dataset."""

    alpha: tuple[float, ...]
    n: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        if any(a <= 0.0 for a in self.alpha):
            raise NonPositiveAlpha(f"all concentration parameters must be positive, got {self.alpha}")
        if len(self.alpha) < 2:
            raise ValidationError("need at least 2 classes")
        if self.n < 1:
            raise ValidationError("need at least 1 sample")

    @property
    def num_classes(self) -> int:
        return len(self.alpha)

    def meta(self) -> dict:
        return {
            "generator": GENERATOR_NAME,
            "seed": self.seed,
            "alpha": list(self.alpha),
            "n": self.n,
            "chunk_size": DEFAULT_CHUNK_SIZE,
        }


def _chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk_index,)))


def _dirichlet_rows(alpha: Sequence[float], count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` simplex points as normalized independent gamma variates."""
    a = np.asarray(alpha, dtype=np.float64)
    if np.any(a <= 0.0):
        raise NonPositiveAlpha(f"all concentration parameters must be positive, got {tuple(a)}")
    g = rng.standard_gamma(np.broadcast_to(a, (count, a.shape[0])))
    totals = g.sum(axis=1)
    while np.any(totals == 0.0):  # all-zero rows can occur for tiny alpha
        dead = totals == 0.0
        g[dead] = rng.standard_gamma(np.broadcast_to(a, (int(dead.sum()), a.shape[0])))
        totals = g.sum(axis=1)
    return g / totals[:, None]


def _labels_for(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF categorical draws: one label per row of ``probs``."""
    u = rng.random(probs.shape[0])
    cumulative = probs.cumsum(axis=1)
    labels = (cumulative <= u[:, None]).sum(axis=1)
    return np.minimum(labels, probs.shape[1] - 1)


def sample_dirichlet(alpha: Sequence[float], rng: np.random.Generator) -> ProbabilityVector:
    """Draw one prediction from Dir(alpha)."""
    return ProbabilityVector(_dirichlet_rows(alpha, 1, rng)[0])


def sample_label(p, rng: np.random.Generator) -> int:
    """Draw a class from a prediction: class c with probability p_c."""
    probs = np.asarray(p.probs if hasattr(p, "probs") else p, dtype=np.float64)
    return int(_labels_for(probs[None, :], rng)[0])


def iter_calibrated_chunks(
    spec: DirichletSpec, chunk_size: int = DEFAULT_CHUNK_SIZE
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield (probs, labels) chunks of the dataset described by ``spec``."""
    produced = 0
    chunk_index = 0
    while produced < spec.n:
        count = min(chunk_size, spec.n - produced)
        rng = _chunk_rng(spec.seed, chunk_index)
        probs = _dirichlet_rows(spec.alpha, count, rng)
        labels = _labels_for(probs, rng)
        yield probs, labels
        produced += count
        chunk_index += 1


class DirichletChunkSource:
    """Re-iterable chunk source that regenerates deterministically per pass."""

    def __init__(self, spec: DirichletSpec, chunk_size: int = DEFAULT_CHUNK_SIZE):
        self.spec = spec
        self.chunk_size = chunk_size
        self.n = spec.n
        self.num_classes = spec.num_classes

    def chunks(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        return iter_calibrated_chunks(self.spec, self.chunk_size)


def generate_calibrated_dataset(spec: DirichletSpec) -> Dataset:
    """Materialize the full dataset for ``spec`` (deterministic per seed)."""
    parts = list(iter_calibrated_chunks(spec))
    probs = parts[0][0] if len(parts) == 1 else np.concatenate([p for p, _ in parts])
    labels = parts[0][1] if len(parts) == 1 else np.concatenate([y for _, y in parts])
    return Dataset(probs, labels, spec.meta())
