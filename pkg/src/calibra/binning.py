"""Partition samples into bins by a scalar statistic.

Two strategies: equal-width bins over a fixed domain with half-open-left
intervals (value v lands in bin m iff v is in (edge[m], edge[m+1]], the
domain minimum itself landing in bin 0 so no sample is dropped), and
adaptive equal-frequency bins holding the same number of samples each
(sizes differing by at most one when the count does not divide evenly).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidBinCount, TooFewSamples, ValueOutOfDomain

EQUAL_WIDTH = "equal-width"
EQUAL_FREQUENCY = "equal-frequency"
STRATEGIES = (EQUAL_WIDTH, EQUAL_FREQUENCY)

# Slack for values that should lie in the domain but drifted in float math.
DOMAIN_TOLERANCE = 1e-12


@dataclass(frozen=True)
class BinPartition:
    """Bin boundaries for one strategy.

    Equal-width edges are strictly increasing by construction.
    Equal-frequency membership is decided by rank, not by edges; the
    recorded midpoint edges are informational and may repeat when the
    data contains ties.
    """

    strategy: str
    edges: np.ndarray
    num_bins: int

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise InvalidBinCount(f"unknown binning strategy {self.strategy!r}")
        e = np.asarray(self.edges, dtype=np.float64)
        if self.num_bins < 1 or e.shape != (self.num_bins + 1,):
            raise InvalidBinCount(f"need num_bins >= 1 and {self.num_bins + 1} edges, got {e.shape}")
        if self.strategy == EQUAL_WIDTH and not np.all(np.diff(e) > 0):
            raise InvalidBinCount("equal-width edges must be strictly increasing")
        if self.strategy == EQUAL_FREQUENCY and not np.all(np.diff(e) >= 0):
            raise InvalidBinCount("edges must be non-decreasing")
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)


@dataclass(frozen=True)
class BinAssignment:
    """Per-sample bin membership plus the statistic values that drove it."""

    partition: BinPartition
    bin_index: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        for name in ("bin_index", "values"):
            a = np.asarray(getattr(self, name))
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def counts(self) -> np.ndarray:
        return np.bincount(self.bin_index, minlength=self.partition.num_bins)

    def members(self) -> list[np.ndarray]:
        """Per-bin arrays of sample indices; together they partition 0..n-1."""
        order = np.argsort(self.bin_index, kind="stable")
        bounds = np.searchsorted(self.bin_index[order], np.arange(self.partition.num_bins + 1))
        return [order[bounds[m] : bounds[m + 1]] for m in range(self.partition.num_bins)]


def equal_width_edges(num_bins: int, domain: tuple[float, float]) -> np.ndarray:
    """Edges lo + k*(hi-lo)/M for k=0..M, endpoints snapped exactly."""
    lo, hi = float(domain[0]), float(domain[1])
    if num_bins < 1:
        raise InvalidBinCount(f"need at least one bin, got {num_bins}")
    if not lo < hi:
        raise InvalidBinCount(f"domain must satisfy lo < hi, got ({lo}, {hi})")
    edges = lo + np.arange(num_bins + 1) * (hi - lo) / num_bins
    edges[0], edges[-1] = lo, hi
    if not np.all(np.diff(edges) > 0):
        raise InvalidBinCount(f"{num_bins} bins collapse over domain ({lo}, {hi})")
    return edges


def assign_equal_width(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Bin indices under the (edge[m], edge[m+1]] rule, lo inclusive in bin 0.

    Membership uses exact comparisons against the computed edges; values
    are only required to lie within DOMAIN_TOLERANCE of the domain.
    """
    v = np.asarray(values, dtype=np.float64)
    lo, hi = edges[0], edges[-1]
    if v.size and (v.min() < lo - DOMAIN_TOLERANCE or v.max() > hi + DOMAIN_TOLERANCE):
        bad = v[(v < lo - DOMAIN_TOLERANCE) | (v > hi + DOMAIN_TOLERANCE)][0]
        raise ValueOutOfDomain(f"value {bad!r} outside domain [{lo}, {hi}]")
    return np.clip(np.searchsorted(edges, v, side="left") - 1, 0, len(edges) - 2)


def equal_width_bins(values, num_bins: int, domain: tuple[float, float]) -> BinAssignment:
    """Assign values to M equally-spaced bins over the given domain."""
    edges = equal_width_edges(num_bins, domain)
    v = np.asarray(values, dtype=np.float64)
    idx = assign_equal_width(v, edges)
    return BinAssignment(BinPartition(EQUAL_WIDTH, edges, num_bins), idx, v)


def equal_frequency_sizes(n: int, num_bins: int) -> np.ndarray:
    """Chunk sizes: ceil(n/M) for the first n mod M bins, floor(n/M) after."""
    base, rem = divmod(n, num_bins)
    sizes = np.full(num_bins, base, dtype=np.int64)
    sizes[:rem] += 1
    return sizes


def assign_equal_frequency(values: np.ndarray, num_bins: int) -> np.ndarray:
    """Rank-based bin indices: ascending value, ties by sample index."""
    v = np.asarray(values, dtype=np.float64)
    order = np.argsort(v, kind="stable")
    idx = np.empty(v.shape[0], dtype=np.int64)
    idx[order] = np.repeat(np.arange(num_bins), equal_frequency_sizes(v.shape[0], num_bins))
    return idx


def equal_frequency_bins(values, num_bins: int) -> BinAssignment:
    """Split samples into M contiguous rank chunks of near-equal size."""
    if num_bins < 1:
        raise InvalidBinCount(f"need at least one bin, got {num_bins}")
    v = np.asarray(values, dtype=np.float64)
    n = v.shape[0]
    if n < num_bins:
        raise TooFewSamples(f"{n} samples cannot fill {num_bins} bins")
    idx = assign_equal_frequency(v, num_bins)
    sorted_v = np.sort(v, kind="stable")
    bounds = np.cumsum(equal_frequency_sizes(n, num_bins))[:-1]
    edges = np.concatenate(
        [[sorted_v[0]], (sorted_v[bounds - 1] + sorted_v[bounds]) / 2.0, [sorted_v[-1]]]
    )
    return BinAssignment(BinPartition(EQUAL_FREQUENCY, edges, num_bins), idx, v)
