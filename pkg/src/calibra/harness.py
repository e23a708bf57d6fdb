"""Experiment grid runner: sweeps scenarios x sample sizes x binnings x
metrics over seeded replicates and aggregates medians + IQRs.

Each dataset cell (classes, alpha, n, seed) is generated once as a
streaming chunk source and every requested metric/binning pair is
evaluated against it in shared passes, so the harness adds no numerical
transformation on top of the metric evaluators. Cells are independent and
may run in worker processes; results are written incrementally so a crash
loses at most one cell.
"""

from __future__ import annotations

import concurrent.futures
import math
import os
import sys
import time
from dataclasses import dataclass, fields

import numpy as np

from .errors import ValidationError
from .metrics import CalibrationReport, MetricRequest, evaluate
from .synth import ALPHA_PRESETS, DirichletChunkSource, DirichletSpec, resolve_alpha
from .variation import get_variation_metric

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULT_SAMPLE_SIZES = (10**4, 10**5, 10**6, 10**7)


@dataclass(frozen=True)
class ExperimentGrid:
    """Axes of the convergence experiment.

    Cells with n >= large_n_threshold use only the first large_n_seeds
    replicates to keep runtimes sane at the 10^7 tier.
    """

    class_counts: tuple[int, ...] = (3, 10)
    alpha_presets: tuple[str, ...] = ("equal", "skewed")
    sample_sizes: tuple[int, ...] = DEFAULT_SAMPLE_SIZES
    binnings: tuple[str, ...] = ("equal-width", "equal-frequency")
    num_bins: int = 10
    metrics: tuple[str, ...] = ("ece", "uce", "vce")
    vce_variation: str = "entropy"
    seeds: tuple[int, ...] = tuple(range(10))
    large_n_threshold: int = 10**7
    large_n_seeds: int = 3

    def __post_init__(self):
        for axis in ("class_counts", "alpha_presets", "sample_sizes", "binnings", "metrics", "seeds"):
            if not getattr(self, axis):
                raise ValidationError(f"grid axis {axis} must be non-empty")
        get_variation_metric(self.vce_variation)

    @classmethod
    def from_toml(cls, path) -> "ExperimentGrid":
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValidationError(f"unknown grid config keys: {sorted(unknown)}")
        listy = {k: tuple(v) if isinstance(v, list) else v for k, v in raw.items()}
        return cls(**listy)

    def seeds_for(self, n: int) -> tuple[int, ...]:
        if n >= self.large_n_threshold:
            return self.seeds[: self.large_n_seeds]
        return self.seeds

    def dataset_cells(self) -> list[tuple[int, str, int, int]]:
        """Every (classes, alpha, n, seed) combination, in deterministic order."""
        return [
            (c, a, n, s)
            for c in self.class_counts
            for a in self.alpha_presets
            for n in self.sample_sizes
            for s in self.seeds_for(n)
        ]

    def expected_rows(self) -> int:
        return len(self.dataset_cells()) * len(self.binnings) * len(self.metrics)


@dataclass(frozen=True)
class GridRow:
    """One metric evaluation on one generated dataset."""

    classes: int
    alpha: str
    n: int
    binning: str
    metric: str
    variation: str | None
    seed: int
    value: float
    dataset_seed: int
    reliability_ref: str | None = None
    wall_time_s: float = 0.0  # informational; kept out of result tables

    def key(self):
        return (self.classes, self.alpha, self.n, self.binning, self.metric, self.seed)


@dataclass(frozen=True)
class SummaryRow:
    """Median and interquartile range over the replicate seeds of a cell."""

    classes: int
    alpha: str
    n: int
    binning: str
    metric: str
    variation: str | None
    median: float
    iqr: float
    n_seeds: int


def summarize_rows(rows) -> list[SummaryRow]:
    """Aggregate per-seed rows into medians and IQRs per grid cell."""
    groups: dict[tuple, list[GridRow]] = {}
    for row in rows:
        groups.setdefault((row.classes, row.alpha, row.n, row.binning, row.metric), []).append(row)
    out = []
    for (c, a, n, b, m), group in sorted(groups.items()):
        values = np.array([r.value for r in group])
        out.append(
            SummaryRow(
                c, a, n, b, m, group[0].variation,
                float(np.median(values)),
                float(np.percentile(values, 75) - np.percentile(values, 25)),
                len(group),
            )
        )
    return out


@dataclass(frozen=True)
class GridResult:
    grid: ExperimentGrid
    rows: tuple[GridRow, ...]
    errors: tuple[tuple[str, str], ...] = ()

    def summary(self) -> list[SummaryRow]:
        return summarize_rows(self.rows)

    def lookup_median(self, classes: int, alpha: str, n: int, binning: str, metric: str) -> float:
        for row in self.summary():
            if (row.classes, row.alpha, row.n, row.binning, row.metric) == (classes, alpha, n, binning, metric):
                return row.median
        raise KeyError((classes, alpha, n, binning, metric))


def cell_id(classes: int, alpha: str, n: int, binning: str, metric: str, variation: str | None, seed: int) -> str:
    tag = f"{metric}-{variation}" if variation else metric
    return f"C{classes}_{alpha}_N{n}_{binning}_{tag}_s{seed}"


def _run_dataset_cell(grid: ExperimentGrid, classes: int, alpha: str, n: int, seed: int):
    """Evaluate every metric x binning pair on one generated dataset."""
    spec = DirichletSpec(resolve_alpha(alpha, classes), n, seed)
    source = DirichletChunkSource(spec)
    requests = []
    for binning in grid.binnings:
        for metric in grid.metrics:
            requests.append(
                MetricRequest(metric, grid.num_bins, binning, get_variation_metric(grid.vce_variation))
            )
    started = time.perf_counter()
    reports = evaluate(source, requests)
    elapsed = time.perf_counter() - started
    rows, tables = [], []
    for request, report in zip(requests, reports):
        ref = cell_id(classes, alpha, n, request.binning, request.metric, report.variation, seed)
        rows.append(
            GridRow(
                classes, alpha, n, request.binning, request.metric, report.variation,
                seed, report.value, seed, f"reliability/{ref}.json", elapsed,
            )
        )
        tables.append((ref, reliability_data(report)))
    return rows, tables, spec


def run_grid(
    grid: ExperimentGrid,
    out_dir=None,
    workers: int | None = None,
    keep_data: bool = False,
    on_progress=None,
) -> GridResult:
    """Run every grid cell, optionally persisting tables under ``out_dir``.

    Worker count comes from the argument, else the CALIBRA_THREADS
    environment variable, else 1. Per-cell failures are recorded on the
    result (and surfaced by the CLI), never silently dropped.
    """
    env_cap = os.environ.get("CALIBRA_THREADS")
    if workers is None:
        workers = int(env_cap) if env_cap else 1
    elif env_cap:
        workers = min(workers, int(env_cap))
    workers = max(1, workers)

    from . import reportio  # late import: reportio depends on harness types

    writer = reportio.GridWriter(out_dir) if out_dir is not None else None
    cells = grid.dataset_cells()
    rows: list[GridRow] = []
    errors: list[tuple[str, str]] = []

    def handle(cell, outcome, error):
        classes, alpha, n, seed = cell
        if error is not None:
            errors.append((f"C{classes}_{alpha}_N{n}_s{seed}", error))
        else:
            cell_rows, tables, spec = outcome
            rows.extend(cell_rows)
            if writer is not None:
                writer.append_partial(cell_rows)
                for ref, table in tables:
                    writer.write_reliability(ref, table)
                if keep_data:
                    writer.write_dataset(spec)
        if on_progress is not None:
            on_progress(cell, error)

    if workers == 1:
        for cell in cells:
            try:
                outcome, error = _run_dataset_cell(grid, *cell), None
            except Exception as e:  # recorded, not dropped
                outcome, error = None, f"{type(e).__name__}: {e}"
            handle(cell, outcome, error)
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_run_dataset_cell, grid, *cell): cell for cell in cells}
            for future in concurrent.futures.as_completed(futures):
                try:
                    outcome, error = future.result(), None
                except Exception as e:
                    outcome, error = None, f"{type(e).__name__}: {e}"
                handle(futures[future], outcome, error)

    rows.sort(key=GridRow.key)
    result = GridResult(grid, tuple(rows), tuple(errors))
    if writer is not None:
        writer.finalize(result)
    return result


@dataclass(frozen=True)
class ReliabilityRow:
    bin_index: int
    predicted: float
    observed: float
    count: int


@dataclass(frozen=True)
class ReliabilityTable:
    """Per-bin predicted/observed pairs backing a reliability diagram.

    Only non-empty bins appear as rows; ``reference_line`` is the
    perfect-calibration identity segment over the statistic's domain.
    The scalar metric is exactly sum((count/n) * |observed - predicted|)
    over the rows.
    """

    metric: str
    variation: str | None
    binning: str
    num_bins: int
    n_samples: int
    value: float
    rows: tuple[ReliabilityRow, ...]
    reference_line: tuple[tuple[float, float], tuple[float, float]]

    def reconstruct_value(self) -> float:
        return math.fsum(r.count / self.n_samples * abs(r.observed - r.predicted) for r in self.rows)


def reliability_data(report: CalibrationReport) -> ReliabilityTable:
    """Extract the plot-ready per-bin table from a calibration report."""
    rows = tuple(
        ReliabilityRow(b.bin_index, b.predicted, b.observed, b.count)
        for b in report.bins
        if b.count > 0
    )
    lo, hi = report.domain
    return ReliabilityTable(
        metric=report.metric,
        variation=report.variation,
        binning=report.binning,
        num_bins=report.num_bins,
        n_samples=report.n_samples,
        value=report.value,
        rows=rows,
        reference_line=((lo, lo), (hi, hi)),
    )
