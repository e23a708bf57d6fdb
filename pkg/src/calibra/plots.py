"""Figure emission: convergence curves and reliability diagrams as SVG.

Convergence plots show each metric's aggregated value against sample
count on a log10 x-axis; reliability diagrams show per-bin observed
versus predicted values with the dashed perfect-calibration identity
line and the scalar metric in the legend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .errors import MissingSeries, ValidationError
from .harness import GridResult, ReliabilityTable, SummaryRow, reliability_data
from .metrics import CalibrationReport
from .svg import SvgCanvas

CONVERGENCE = "convergence"
RELIABILITY = "reliability"

_PALETTE = {"ece": "#1f77b4", "uce": "#d62728", "vce": "#2ca02c"}
_FALLBACK = "#9467bd"

_WIDTH, _HEIGHT = 560, 420
_LEFT, _RIGHT, _TOP, _BOTTOM = 78, 24, 40, 56


@dataclass(frozen=True)
class PlotSpec:
    """What to draw and where to put it."""

    kind: str
    output: str | Path
    series: tuple[str, ...] | None = None
    classes: int | None = None
    alpha: str | None = None
    binning: str | None = None
    log_y: bool = True
    title: str | None = None

    def __post_init__(self):
        if self.kind not in (CONVERGENCE, RELIABILITY):
            raise ValidationError(f"unknown plot kind {self.kind!r}")


def emit_plot(spec: PlotSpec, data) -> Path:
    """Render ``data`` per ``spec`` and write a self-contained SVG."""
    if spec.kind == CONVERGENCE:
        rows = data.summary() if isinstance(data, GridResult) else list(data)
        canvas = _convergence(spec, rows)
    else:
        table = reliability_data(data) if isinstance(data, CalibrationReport) else data
        canvas = _reliability(spec, table)
    path = Path(spec.output)
    canvas.write(path)
    return path


def _series_label(metric: str, variation: str | None) -> str:
    return f"{metric.upper()}({variation})" if metric == "vce" and variation else metric.upper()


def _convergence(spec: PlotSpec, rows: list[SummaryRow]) -> SvgCanvas:
    rows = [
        r
        for r in rows
        if (spec.classes is None or r.classes == spec.classes)
        and (spec.alpha is None or r.alpha == spec.alpha)
        and (spec.binning is None or r.binning == spec.binning)
    ]
    if not rows:
        raise MissingSeries("no summary rows match the requested scenario")
    scenarios = {(r.classes, r.alpha, r.binning) for r in rows}
    if len(scenarios) > 1:
        raise ValidationError(
            f"summary spans {len(scenarios)} scenarios; filter by classes/alpha/binning"
        )
    available = sorted({r.metric for r in rows})
    wanted = list(spec.series) if spec.series else available
    missing = [m for m in wanted if m not in available]
    if missing:
        raise MissingSeries(f"series {missing} not present (have {available})")

    by_metric = {
        m: sorted(((r.n, r.median) for r in rows if r.metric == m)) for m in wanted
    }
    xs = sorted({r.n for r in rows if r.metric in wanted})
    values = [v for pts in by_metric.values() for _, v in pts]
    log_y = spec.log_y and all(v > 0 for v in values)

    x_lo, x_hi = math.log10(min(xs)), math.log10(max(xs))
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if log_y:
        y_lo = math.floor(math.log10(min(values)))
        y_hi = math.ceil(math.log10(max(values)))
        if y_hi == y_lo:
            y_hi += 1
    else:
        y_lo, y_hi = 0.0, max(values) * 1.1 or 1.0

    canvas = SvgCanvas(_WIDTH, _HEIGHT)

    def sx(n):
        return _LEFT + (math.log10(n) - x_lo) / (x_hi - x_lo) * (_WIDTH - _LEFT - _RIGHT)

    def sy(v):
        t = (math.log10(v) - y_lo) / (y_hi - y_lo) if log_y else (v - y_lo) / (y_hi - y_lo)
        return _HEIGHT - _BOTTOM - t * (_HEIGHT - _TOP - _BOTTOM)

    x_ticks = [(sx(n), _tick_label(n)) for n in xs]
    if log_y:
        y_ticks = [(sy(10.0**e), f"1e{e}") for e in range(int(y_lo), int(y_hi) + 1)]
    else:
        y_ticks = [(sy(y_lo + k * (y_hi - y_lo) / 5), f"{y_lo + k * (y_hi - y_lo) / 5:.3g}") for k in range(6)]
    scenario = next(iter(scenarios))
    title = spec.title or f"C={scenario[0]}, alpha={scenario[1]}, {scenario[2]} bins"
    _frame(canvas, x_ticks, y_ticks, "samples N (log scale)", "metric value", title)

    legend_y = _TOP + 6
    for metric in wanted:
        color = _PALETTE.get(metric, _FALLBACK)
        pts = [(sx(n), sy(v)) for n, v in by_metric[metric]]
        if len(pts) > 1:
            canvas.polyline(pts, stroke=color)
        for x, y in pts:
            canvas.circle(x, y, 3.5, fill=color)
        variation = next(r.variation for r in rows if r.metric == metric)
        canvas.line(_WIDTH - _RIGHT - 130, legend_y, _WIDTH - _RIGHT - 110, legend_y, stroke=color, width=2)
        canvas.text(_WIDTH - _RIGHT - 104, legend_y + 4, _series_label(metric, variation), size=11)
        legend_y += 16
    return canvas


def _reliability(spec: PlotSpec, table: ReliabilityTable) -> SvgCanvas:
    (x0, y0), (x1, y1) = table.reference_line
    lo, hi = min(x0, y0), max(x1, y1)
    pad = 0.02 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    canvas = SvgCanvas(_WIDTH, _HEIGHT)

    def sx(v):
        return _LEFT + (v - lo) / (hi - lo) * (_WIDTH - _LEFT - _RIGHT)

    def sy(v):
        return _HEIGHT - _BOTTOM - (v - lo) / (hi - lo) * (_HEIGHT - _TOP - _BOTTOM)

    ticks = [lo + pad + k * (hi - lo - 2 * pad) / 5 for k in range(6)]
    label = _series_label(table.metric, table.variation)
    title = spec.title or f"Reliability: {label}, {table.binning}, N={table.n_samples}"
    _frame(
        canvas,
        [(sx(t), f"{t:.2f}") for t in ticks],
        [(sy(t), f"{t:.2f}") for t in ticks],
        "predicted",
        "observed",
        title,
    )
    canvas.line(sx(x0), sy(y0), sx(x1), sy(y1), stroke="black", width=1.2, dash="6,4")
    color = _PALETTE.get(table.metric, _FALLBACK)
    for row in table.rows:
        canvas.circle(sx(row.predicted), sy(row.observed), 4.0, fill=color)
    canvas.text(_LEFT + 10, _TOP + 10, f"{label} = {table.value:.6g}", size=12)
    return canvas


def _tick_label(n: int) -> str:
    e = math.log10(n)
    return f"1e{int(e)}" if e == int(e) else f"{n:g}"


def _frame(canvas: SvgCanvas, x_ticks, y_ticks, xlabel: str, ylabel: str, title: str) -> None:
    left, right = _LEFT, _WIDTH - _RIGHT
    top, bottom = _TOP, _HEIGHT - _BOTTOM
    canvas.line(left, bottom, right, bottom)
    canvas.line(left, bottom, left, top)
    for x, label in x_ticks:
        canvas.line(x, bottom, x, bottom + 5)
        canvas.text(x, bottom + 20, label, size=11, anchor="middle")
    for y, label in y_ticks:
        canvas.line(left - 5, y, left, y)
        canvas.text(left - 8, y + 4, label, size=11, anchor="end")
    canvas.text((left + right) / 2, _HEIGHT - 14, xlabel, size=12, anchor="middle")
    canvas.text(18, (top + bottom) / 2, ylabel, size=12, anchor="middle", rotate=-90.0)
    canvas.text((left + right) / 2, 22, title, size=13, anchor="middle")
