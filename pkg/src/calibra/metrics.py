"""ECE, UCE and VCE with per-bin diagnostics.

All three metrics share one evaluation engine: samples are binned by a
scalar statistic (confidence for ECE, entropy for UCE, the chosen
variation for VCE) and per-bin quantities are accumulated chunk by chunk.
The in-memory ``compute_*`` entry points and the streaming evaluator used
by the experiment harness run the identical arithmetic over the identical
chunk boundaries, so their results are bit-equal.

Per-bin float sums are compensated (blockwise pairwise within a chunk,
Kahan-merged across chunks); counts and rank histograms are exact integer
tallies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Protocol

import numpy as np

from . import binning
from .binning import EQUAL_FREQUENCY, EQUAL_WIDTH, STRATEGIES
from .domain import Dataset, ranked_arrays
from .errors import InvalidBinCount, TooFewSamples, ValidationError
from .numerics import DEFAULT_CHUNK_SIZE, KahanAccumulator, compensated_colsum
from .variation import CONFIDENCE, ENTROPY, VariationMetric

METRIC_NAMES = ("ece", "uce", "vce")


@dataclass(frozen=True)
class BinDiagnostics:
    """One bin of a calibration report.

    ``predicted`` and ``observed`` are NaN for empty bins (serialized as
    an explicit "undefined" marker); empty bins contribute exactly 0.
    """

    bin_index: int
    count: int
    predicted: float
    observed: float
    contribution: float


@dataclass(frozen=True)
class CalibrationReport:
    """A scalar calibration metric plus the per-bin decomposition behind it."""

    metric: str
    variation: str | None
    value: float
    bins: tuple[BinDiagnostics, ...]
    n_samples: int
    num_bins: int
    binning: str
    domain: tuple[float, float]
    edges: tuple[float, ...]


@dataclass(frozen=True)
class MetricRequest:
    """One metric evaluation: what to compute and how to bin it."""

    metric: str
    num_bins: int = 10
    binning: str = EQUAL_WIDTH
    variation: VariationMetric = ENTROPY
    domain: tuple[float, float] | None = None

    def statistic(self) -> VariationMetric:
        """The simplex summary whose value drives bin membership."""
        if self.metric == "ece":
            return CONFIDENCE
        if self.metric == "uce":
            return ENTROPY
        return self.variation

    def resolved_domain(self, num_classes: int) -> tuple[float, float]:
        if self.domain is not None:
            return self.domain
        if self.metric == "ece":
            return (1.0 / num_classes, 1.0)
        return (0.0, 1.0)


class ChunkSource(Protocol):
    """Re-iterable supplier of (probs, labels) chunks of a fixed dataset."""

    n: int
    num_classes: int

    def chunks(self) -> Iterator[tuple[np.ndarray, np.ndarray]]: ...


class DatasetSource:
    """Chunked view over an in-memory Dataset."""

    def __init__(self, dataset: Dataset, chunk_size: int = DEFAULT_CHUNK_SIZE):
        self.dataset = dataset
        self.chunk_size = chunk_size
        self.n = dataset.n
        self.num_classes = dataset.num_classes

    def chunks(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        for start in range(0, self.n, self.chunk_size):
            stop = start + self.chunk_size
            yield self.dataset.probs[start:stop], self.dataset.labels[start:stop]


def _binned_sums(idx: np.ndarray, num_bins: int, a: np.ndarray) -> np.ndarray:
    """Compensated per-bin column sums of ``a`` grouped by bin index."""
    columns = a if a.ndim == 2 else a[:, None]
    order = np.argsort(idx, kind="stable")
    grouped = columns[order]
    bounds = np.searchsorted(idx[order], np.arange(num_bins + 1))
    out = np.zeros((num_bins, columns.shape[1]))
    for m in range(num_bins):
        if bounds[m + 1] > bounds[m]:
            out[m] = compensated_colsum(grouped[bounds[m] : bounds[m + 1]])
    return out if a.ndim == 2 else out[:, 0]


class _Accumulator:
    """Per-bin running state for one metric request."""

    def __init__(self, request: MetricRequest, num_classes: int):
        m = request.num_bins
        self.request = request
        self.counts = np.zeros(m, dtype=np.int64)
        if request.metric == "vce":
            self.q_sum = KahanAccumulator((m, num_classes))
            self.rank_hist = np.zeros((m, num_classes), dtype=np.int64)
        else:
            self.pred_sum = KahanAccumulator((m,))
            self.hits = np.zeros(m, dtype=np.int64)

    def update(self, idx, stat, correct, q, rank_pos):
        m = self.request.num_bins
        self.counts += np.bincount(idx, minlength=m)
        if self.request.metric == "vce":
            self.q_sum.add(_binned_sums(idx, m, q))
            self.rank_hist += np.bincount(idx * q.shape[1] + rank_pos, minlength=m * q.shape[1]).reshape(m, -1)
        else:
            self.pred_sum.add(_binned_sums(idx, m, stat))
            wanted = correct if self.request.metric == "ece" else ~correct
            self.hits += np.bincount(idx[wanted], minlength=m)

    def finalize(self, n: int, domain: tuple[float, float], edges: np.ndarray) -> CalibrationReport:
        req = self.request
        diagnostics = []
        contributions = []
        for m in range(req.num_bins):
            count = int(self.counts[m])
            if count == 0:
                diagnostics.append(BinDiagnostics(m, 0, math.nan, math.nan, 0.0))
                continue
            if req.metric == "vce":
                predicted = float(req.variation.evaluate(self.q_sum.value[m] / count))
                observed = float(req.variation.evaluate(self.rank_hist[m] / count))
            else:
                predicted = float(self.pred_sum.value[m]) / count
                observed = self.hits[m] / count
            contribution = count / n * abs(observed - predicted)
            contributions.append(contribution)
            diagnostics.append(BinDiagnostics(m, count, predicted, observed, contribution))
        variation = req.variation.name if req.metric == "vce" else None
        return CalibrationReport(
            metric=req.metric,
            variation=variation,
            value=math.fsum(contributions),
            bins=tuple(diagnostics),
            n_samples=n,
            num_bins=req.num_bins,
            binning=req.binning,
            domain=domain,
            edges=tuple(float(e) for e in edges),
        )


def evaluate(source: ChunkSource, requests: list[MetricRequest]) -> list[CalibrationReport]:
    """Evaluate several metric requests in shared passes over one source.

    Equal-width requests bin on the fly; equal-frequency requests need the
    full statistic distribution first, adding one extra pass. A source is
    streamed at most twice regardless of how many metrics are requested.
    """
    for req in requests:
        if req.metric not in METRIC_NAMES:
            raise ValidationError(f"unknown metric {req.metric!r}")
        if req.binning not in STRATEGIES:
            raise ValidationError(f"unknown binning strategy {req.binning!r}")
        if req.num_bins < 1:
            raise InvalidBinCount(f"need at least one bin, got {req.num_bins}")
        if req.binning == EQUAL_FREQUENCY and source.n < req.num_bins:
            raise TooFewSamples(f"{source.n} samples cannot fill {req.num_bins} bins")

    ef_stats: dict[str, np.ndarray] = {}
    ef_names = {req.statistic().name: req.statistic() for req in requests if req.binning == EQUAL_FREQUENCY}
    if ef_names:
        for name in ef_names:
            ef_stats[name] = np.empty(source.n)
        offset = 0
        for probs, labels in source.chunks():
            for name, metric in ef_names.items():
                ef_stats[name][offset : offset + len(probs)] = metric.evaluate(probs)
            offset += len(probs)

    ef_assignments = {
        (req.statistic().name, req.num_bins): binning.assign_equal_frequency(
            ef_stats[req.statistic().name], req.num_bins
        )
        for req in requests
        if req.binning == EQUAL_FREQUENCY
    }

    plans = []
    for req in requests:
        domain = req.resolved_domain(source.num_classes)
        if req.binning == EQUAL_WIDTH:
            edges = binning.equal_width_edges(req.num_bins, domain)
        else:
            edges = _ef_edges(ef_stats[req.statistic().name], req.num_bins)
        plans.append((req, domain, edges, _Accumulator(req, source.num_classes)))

    need_correct = any(req.metric in ("ece", "uce") for req in requests)
    need_rank = any(req.metric == "vce" for req in requests)
    needed_stats = {req.statistic().name: req.statistic() for req in requests}
    offset = 0
    for probs, labels in source.chunks():
        sl = slice(offset, offset + len(probs))
        chunk_stats = {
            name: ef_stats[name][sl] if name in ef_stats else metric.evaluate(probs)
            for name, metric in needed_stats.items()
        }
        correct = (probs.argmax(axis=1) == labels) if need_correct else None
        q, rank_pos = ranked_arrays(probs, labels) if need_rank else (None, None)
        for req, domain, edges, acc in plans:
            if req.binning == EQUAL_WIDTH:
                idx = binning.assign_equal_width(chunk_stats[req.statistic().name], edges)
            else:
                idx = ef_assignments[(req.statistic().name, req.num_bins)][sl]
            acc.update(idx, chunk_stats[req.statistic().name], correct, q, rank_pos)
        offset += len(probs)

    return [acc.finalize(source.n, domain, edges) for req, domain, edges, acc in plans]


def _ef_edges(values: np.ndarray, num_bins: int) -> np.ndarray:
    sorted_v = np.sort(values, kind="stable")
    bounds = np.cumsum(binning.equal_frequency_sizes(len(values), num_bins))[:-1]
    return np.concatenate([[sorted_v[0]], (sorted_v[bounds - 1] + sorted_v[bounds]) / 2.0, [sorted_v[-1]]])


def compute_ece(
    dataset: Dataset,
    num_bins: int = 10,
    binning_strategy: str = EQUAL_WIDTH,
    domain: tuple[float, float] | None = None,
) -> CalibrationReport:
    """Expected calibration error: per-bin |accuracy - mean confidence|.

    Bins cover [1/C, 1] by default (confidence cannot fall below 1/C);
    pass ``domain=(0.0, 1.0)`` to match the variation-metric bin edges.
    Argmax ties go to the lowest class index.
    """
    req = MetricRequest("ece", num_bins, binning_strategy, domain=domain)
    return evaluate(DatasetSource(dataset), [req])[0]


def compute_uce(
    dataset: Dataset,
    num_bins: int = 10,
    binning_strategy: str = EQUAL_WIDTH,
) -> CalibrationReport:
    """Uncertainty calibration error: per-bin |error rate - mean entropy|."""
    req = MetricRequest("uce", num_bins, binning_strategy)
    return evaluate(DatasetSource(dataset), [req])[0]


def compute_vce(
    dataset: Dataset,
    variation: VariationMetric = ENTROPY,
    num_bins: int = 10,
    binning_strategy: str = EQUAL_WIDTH,
    domain: tuple[float, float] | None = None,
) -> CalibrationReport:
    """Variation calibration error.

    Samples are binned by the variation of their prediction; within each
    bin the variation of the mean descending-sorted prediction (predicted
    spread) is compared against the variation of the empirical
    distribution of true-class ranks (observed spread).
    """
    req = MetricRequest("vce", num_bins, binning_strategy, variation, domain)
    return evaluate(DatasetSource(dataset), [req])[0]
