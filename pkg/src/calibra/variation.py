"""Variation metrics: simplex-to-[0,1] summaries of how spread out a
categorical distribution is.

``entropy``, ``wvr`` and ``iqv`` score 0 on a point mass and 1 on the
uniform distribution; ``confidence`` (the max probability) is the inverted
degenerate member of the same plugin contract, kept so that confidence
calibration falls out as a special case of variation calibration.

All functions accept a single vector or a batch and reduce over the last
axis. Exactly-uniform rows return exactly 1.0: the closed form is exact
there, while evaluating the formula in floats can land 1 ulp off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import UnknownVariationMetric


def _as_batch(p) -> tuple[np.ndarray, bool]:
    if hasattr(p, "probs"):  # ProbabilityVector
        p = p.probs
    a = np.asarray(p, dtype=np.float64)
    scalar = a.ndim == 1
    return (a[None, :] if scalar else a), scalar


def _finish(values: np.ndarray, scalar: bool):
    return float(values[0]) if scalar else values


def _uniform_rows(a: np.ndarray) -> np.ndarray:
    return (a == a[..., :1]).all(axis=-1)


def entropy(p) -> float | np.ndarray:
    """Normalized Shannon entropy with base-C logarithm.

    0 * log 0 is taken as 0 by masking rather than by floating-point
    convention, so one-hot vectors give exactly 0 and boundary points
    (entries near 0) evaluate without NaN or -inf.
    """
    a, scalar = _as_batch(p)
    c = a.shape[-1]
    mask = a > 0.0
    safe = np.where(mask, a, 1.0)
    h = -np.where(mask, safe * np.log(safe), 0.0).sum(axis=-1) / math.log(c)
    h = np.where(_uniform_rows(a), 1.0, np.clip(h, 0.0, 1.0)) + 0.0  # +0.0 drops negative zero
    return _finish(h, scalar)


def confidence(p) -> float | np.ndarray:
    """Largest probability; its index is the predicted class."""
    a, scalar = _as_batch(p)
    return _finish(a.max(axis=-1), scalar)


def wvr(p) -> float | np.ndarray:
    """Wilcox's variation ratio, normalized: C * (1 - max p) / (C - 1)."""
    a, scalar = _as_batch(p)
    c = a.shape[-1]
    v = c * (1.0 - a.max(axis=-1)) / (c - 1)
    v = np.where(_uniform_rows(a), 1.0, np.clip(v, 0.0, 1.0)) + 0.0
    return _finish(v, scalar)


def iqv(p) -> float | np.ndarray:
    """Index of qualitative variation, normalized: C * (1 - sum p^2) / (C - 1)."""
    a, scalar = _as_batch(p)
    c = a.shape[-1]
    v = c * (1.0 - (a * a).sum(axis=-1)) / (c - 1)
    v = np.where(_uniform_rows(a), 1.0, np.clip(v, 0.0, 1.0)) + 0.0
    return _finish(v, scalar)


@dataclass(frozen=True)
class VariationMetric:
    """Named simplex-to-[0,1] map, permutation-invariant in its input."""

    name: str
    evaluate: Callable[[np.ndarray], "float | np.ndarray"]


ENTROPY = VariationMetric("entropy", entropy)
CONFIDENCE = VariationMetric("confidence", confidence)
WVR = VariationMetric("wvr", wvr)
IQV = VariationMetric("iqv", iqv)

VARIATION_METRICS: dict[str, VariationMetric] = {
    m.name: m for m in (ENTROPY, CONFIDENCE, WVR, IQV)
}


def get_variation_metric(name: str) -> VariationMetric:
    try:
        return VARIATION_METRICS[name]
    except KeyError:
        raise UnknownVariationMetric(
            f"unknown variation metric {name!r}; available: {sorted(VARIATION_METRICS)}"
        ) from None
