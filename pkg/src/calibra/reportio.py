"""File formats: prediction ingestion, report persistence, grid tables.

Prediction files are CSV (``p0,...,p{C-1},label`` after ``#`` comment
headers) or JSON-lines (a header object followed by one compact
``[p0,...,label]`` array per line). Reports serialize to JSON or CSV.

Floats are written in shortest round-trip decimal, so every emitted file
re-parses to bit-identical values. Empty-bin diagnostics serialize as the
explicit marker ``"undefined"``, never as 0. Payload files carry no
timestamps; run metadata lives in a separate sidecar, keeping outputs
byte-deterministic for identical inputs.
"""

from __future__ import annotations

import json
import math
import os
import platform
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .domain import NORMALIZE_TOLERANCE, SUM_TOLERANCE, Dataset
from .errors import (
    EmptyDataset,
    InvalidProbability,
    LabelOutOfRange,
    ParseError,
    ValidationError,
)
from .harness import (
    ExperimentGrid,
    GridResult,
    GridRow,
    ReliabilityRow,
    ReliabilityTable,
    SummaryRow,
)
from .metrics import BinDiagnostics, CalibrationReport
from .numerics import DEFAULT_CHUNK_SIZE
from .synth import DirichletSpec, iter_calibrated_chunks

SCHEMA_VERSION = 1
UNDEFINED = "undefined"

_ROW_BUFFER = 65_536

CSV_FORMAT = "csv"
JSONL_FORMAT = "json-lines"
_JSONL_ALIASES = {"jsonl", "json-lines", "ndjson"}


def _fmt(x: float) -> str:
    return repr(float(x))


def _cell(x: float) -> object:
    return UNDEFINED if math.isnan(x) else x


def _uncell(x) -> float:
    return math.nan if x == UNDEFINED else float(x)


def infer_format(path) -> str:
    suffix = Path(path).suffix.lower().lstrip(".")
    if suffix == "csv":
        return CSV_FORMAT
    if suffix in _JSONL_ALIASES:
        return JSONL_FORMAT
    raise ValidationError(f"cannot infer prediction format from {path!r}; pass format explicitly")


# ---------------------------------------------------------------------------
# predictions


def write_predictions(dataset: Dataset, path, format: str | None = None) -> None:
    """Write a dataset, streaming row chunks (bounded memory)."""
    source = ((dataset.probs[s : s + _ROW_BUFFER], dataset.labels[s : s + _ROW_BUFFER])
              for s in range(0, dataset.n, _ROW_BUFFER))
    write_prediction_stream(path, source, dataset.num_classes, dataset.meta, format)


def write_prediction_stream(path, chunks, num_classes: int, meta: dict, format: str | None = None) -> None:
    fmt = format or infer_format(path)
    if fmt not in (CSV_FORMAT, *_JSONL_ALIASES):
        raise ValidationError(f"unknown prediction format {fmt!r}")
    with open(path, "w", encoding="utf-8") as fh:
        if fmt == CSV_FORMAT:
            fh.write("# calibra predictions v1\n")
            fh.write(f"# classes: {num_classes}\n")
            fh.write(f"# meta: {json.dumps(meta, sort_keys=True)}\n")
            fh.write(",".join([f"p{c}" for c in range(num_classes)] + ["label"]) + "\n")
            for probs, labels in chunks:
                lines = [
                    ",".join(map(_fmt, row)) + f",{label}\n"
                    for row, label in zip(probs.tolist(), labels.tolist())
                ]
                fh.writelines(lines)
        else:
            header = {
                "schema_version": SCHEMA_VERSION,
                "kind": "predictions",
                "classes": num_classes,
                "meta": meta,
            }
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for probs, labels in chunks:
                for row, label in zip(probs.tolist(), labels.tolist()):
                    fh.write("[" + ",".join(map(_fmt, row)) + f",{label}]\n")


def read_predictions(path, format: str | None = None) -> Dataset:
    """Parse and validate a prediction file into a Dataset.

    Rows stream through a bounded buffer; malformed rows raise ParseError
    with their line number, and probability/label violations carry the
    offending line in the message. Rows whose probabilities sum within
    1e-6 of one are renormalized, matching ingestion semantics elsewhere.
    """
    fmt = format or infer_format(path)
    if fmt == CSV_FORMAT:
        probs, labels, meta = _read_csv(path)
    elif fmt in _JSONL_ALIASES:
        probs, labels, meta = _read_jsonl(path)
    else:
        raise ValidationError(f"unknown prediction format {fmt!r}")
    if not probs:
        raise EmptyDataset(f"{path}: no prediction rows")
    return Dataset(np.concatenate(probs), np.concatenate(labels), meta)


def _read_csv(path):
    chunks_p, chunks_y = [], []
    buffer, first_line = [], 0
    num_columns = None
    meta: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        saw_header = False
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("meta:"):
                    try:
                        meta = json.loads(body[len("meta:"):])
                    except json.JSONDecodeError as e:
                        raise ParseError(f"bad meta header: {e}", lineno) from None
                continue
            if not saw_header:
                saw_header = True
                parts = line.split(",")
                if parts[-1] != "label" or len(parts) < 3:
                    raise ParseError(f"expected header 'p0,...,label', got {line!r}", lineno)
                num_columns = len(parts)
                continue
            parts = line.split(",")
            if len(parts) != num_columns:
                raise ParseError(f"expected {num_columns} columns, got {len(parts)}", lineno)
            try:
                row = [float(v) for v in parts[:-1]]
                label = int(parts[-1])
            except ValueError as e:
                raise ParseError(str(e), lineno) from None
            if not buffer:
                first_line = lineno
            buffer.append((row, label))
            if len(buffer) >= _ROW_BUFFER:
                _flush(buffer, first_line, chunks_p, chunks_y)
        if not saw_header:
            raise ParseError(f"{path}: missing header row")
    if buffer:
        _flush(buffer, first_line, chunks_p, chunks_y)
    return chunks_p, chunks_y, meta


def _read_jsonl(path):
    chunks_p, chunks_y = [], []
    buffer, first_line = [], 0
    num_classes = None
    meta: dict = {}
    saw_header = False
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(str(e), lineno) from None
            if not saw_header:
                saw_header = True
                if not isinstance(obj, dict) or obj.get("kind") != "predictions":
                    raise ParseError("expected a predictions header object on the first line", lineno)
                num_classes = obj.get("classes")
                meta = obj.get("meta", {})
                continue
            if not isinstance(obj, list) or len(obj) < 3:
                raise ParseError("expected [p0,...,label] with at least two classes", lineno)
            if num_classes is not None and len(obj) != num_classes + 1:
                raise ParseError(f"expected {num_classes}+1 values, got {len(obj)}", lineno)
            if isinstance(obj[-1], bool) or not isinstance(obj[-1], int):
                raise ParseError(f"label must be an integer, got {obj[-1]!r}", lineno)
            if not buffer:
                first_line = lineno
            buffer.append(([float(v) for v in obj[:-1]], obj[-1]))
            if len(buffer) >= _ROW_BUFFER:
                _flush(buffer, first_line, chunks_p, chunks_y)
    if buffer:
        _flush(buffer, first_line, chunks_p, chunks_y)
    return chunks_p, chunks_y, meta


def _flush(buffer, first_line, chunks_p, chunks_y):
    """Validate one buffered row chunk and append its arrays."""
    probs = np.array([row for row, _ in buffer], dtype=np.float64)
    labels = np.array([label for _, label in buffer], dtype=np.int64)
    lines = first_line + np.arange(len(buffer))
    out_of_range = (probs < 0.0) | (probs > 1.0)
    if out_of_range.any():
        bad = int(np.argmax(out_of_range.any(axis=1)))
        raise InvalidProbability(f"line {lines[bad]}: probability outside [0, 1]")
    sums = probs.sum(axis=1)
    off = np.abs(sums - 1.0)
    if (off > NORMALIZE_TOLERANCE).any():
        bad = int(np.argmax(off > NORMALIZE_TOLERANCE))
        raise InvalidProbability(f"line {lines[bad]}: probabilities sum to {sums[bad]!r}")
    needs_norm = off > SUM_TOLERANCE
    if needs_norm.any():
        probs[needs_norm] /= sums[needs_norm, None]
    c = probs.shape[1]
    if (labels < 0).any() or (labels >= c).any():
        bad = int(np.argmax((labels < 0) | (labels >= c)))
        raise LabelOutOfRange(f"line {lines[bad]}: label {labels[bad]} outside [0, {c})")
    chunks_p.append(probs)
    chunks_y.append(labels)
    buffer.clear()


# ---------------------------------------------------------------------------
# reports


def report_to_dict(report: CalibrationReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "calibration_report",
        "metric": report.metric,
        "variation": report.variation,
        "value": report.value,
        "n_samples": report.n_samples,
        "num_bins": report.num_bins,
        "binning": report.binning,
        "domain": list(report.domain),
        "edges": list(report.edges),
        "bins": [
            {
                "bin_index": b.bin_index,
                "count": b.count,
                "predicted": _cell(b.predicted),
                "observed": _cell(b.observed),
                "contribution": b.contribution,
            }
            for b in report.bins
        ],
    }


def report_from_dict(data: dict) -> CalibrationReport:
    bins = tuple(
        BinDiagnostics(
            int(b["bin_index"]),
            int(b["count"]),
            _uncell(b["predicted"]),
            _uncell(b["observed"]),
            float(b["contribution"]),
        )
        for b in data["bins"]
    )
    return CalibrationReport(
        metric=data["metric"],
        variation=data["variation"],
        value=float(data["value"]),
        bins=bins,
        n_samples=int(data["n_samples"]),
        num_bins=int(data["num_bins"]),
        binning=data["binning"],
        domain=tuple(data["domain"]),
        edges=tuple(data["edges"]),
    )


def reliability_to_dict(table: ReliabilityTable) -> dict:
    data = asdict(table)
    data["reference_line"] = [list(p) for p in table.reference_line]
    data["rows"] = [asdict(r) for r in table.rows]
    return {"schema_version": SCHEMA_VERSION, "kind": "reliability_table", **data}


def reliability_from_dict(data: dict) -> ReliabilityTable:
    return ReliabilityTable(
        metric=data["metric"],
        variation=data["variation"],
        binning=data["binning"],
        num_bins=int(data["num_bins"]),
        n_samples=int(data["n_samples"]),
        value=float(data["value"]),
        rows=tuple(
            ReliabilityRow(int(r["bin_index"]), float(r["predicted"]), float(r["observed"]), int(r["count"]))
            for r in data["rows"]
        ),
        reference_line=tuple(tuple(p) for p in data["reference_line"]),
    )


_GRID_COLUMNS = ("classes", "alpha", "n", "binning", "metric", "variation", "seed",
                 "value", "dataset_seed", "reliability_ref")
_SUMMARY_COLUMNS = ("classes", "alpha", "n", "binning", "metric", "variation",
                    "median", "iqr", "n_seeds")


def grid_row_to_dict(row: GridRow) -> dict:
    return {k: getattr(row, k) for k in _GRID_COLUMNS}  # wall time goes to the sidecar


def grid_rows_to_dict(result: GridResult) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "grid_results",
        "rows": [grid_row_to_dict(r) for r in result.rows],
    }


def grid_rows_from_dict(data: dict) -> tuple[GridRow, ...]:
    return tuple(GridRow(**row) for row in data["rows"])


def summary_to_dict(rows: list[SummaryRow]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "grid_summary",
        "rows": [asdict(r) for r in rows],
    }


def summary_from_dict(data: dict) -> list[SummaryRow]:
    return [SummaryRow(**row) for row in data["rows"]]


def write_report(obj, path, format: str = "json") -> None:
    """Persist a report-like object as JSON or CSV.

    Accepts CalibrationReport, ReliabilityTable, GridResult and summary
    row lists. Output is byte-deterministic for identical inputs.
    """
    if format == "json":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(_to_payload(obj), fh, sort_keys=True, allow_nan=False, indent=1)
            fh.write("\n")
    elif format == "csv":
        _write_csv_report(obj, path)
    else:
        raise ValidationError(f"unknown report format {format!r}")


def _to_payload(obj) -> dict:
    if isinstance(obj, CalibrationReport):
        return report_to_dict(obj)
    if isinstance(obj, ReliabilityTable):
        return reliability_to_dict(obj)
    if isinstance(obj, GridResult):
        return grid_rows_to_dict(obj)
    if isinstance(obj, list) and all(isinstance(r, SummaryRow) for r in obj):
        return summary_to_dict(obj)
    raise ValidationError(f"cannot serialize {type(obj).__name__}")


def _csv_row(values) -> str:
    parts = []
    for v in values:
        if v is None:
            parts.append("")
        elif isinstance(v, float):
            parts.append(UNDEFINED if math.isnan(v) else _fmt(v))
        else:
            parts.append(str(v))
    return ",".join(parts) + "\n"


def _write_csv_report(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if isinstance(obj, CalibrationReport):
            head = report_to_dict(obj)
            del head["bins"]
            fh.write(f"# calibra report v1 {json.dumps(head, sort_keys=True, allow_nan=False)}\n")
            fh.write("bin_index,count,predicted,observed,contribution\n")
            for b in obj.bins:
                fh.write(_csv_row((b.bin_index, b.count, b.predicted, b.observed, b.contribution)))
        elif isinstance(obj, ReliabilityTable):
            head = reliability_to_dict(obj)
            del head["rows"]
            fh.write(f"# calibra reliability v1 {json.dumps(head, sort_keys=True, allow_nan=False)}\n")
            fh.write("bin_index,predicted,observed,count\n")
            for r in obj.rows:
                fh.write(_csv_row((r.bin_index, r.predicted, r.observed, r.count)))
        elif isinstance(obj, GridResult):
            fh.write(",".join(_GRID_COLUMNS) + "\n")
            for row in obj.rows:
                fh.write(_csv_row(tuple(getattr(row, k) for k in _GRID_COLUMNS)))
        elif isinstance(obj, list) and all(isinstance(r, SummaryRow) for r in obj):
            fh.write(",".join(_SUMMARY_COLUMNS) + "\n")
            for row in obj:
                fh.write(_csv_row(tuple(getattr(row, k) for k in _SUMMARY_COLUMNS)))
        else:
            raise ValidationError(f"cannot serialize {type(obj).__name__}")


def read_report(path):
    """Load a JSON report file back into its in-memory form."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    kind = data.get("kind")
    if kind == "calibration_report":
        return report_from_dict(data)
    if kind == "reliability_table":
        return reliability_from_dict(data)
    if kind == "grid_results":
        return grid_rows_from_dict(data)
    if kind == "grid_summary":
        return summary_from_dict(data)
    raise ParseError(f"{path}: unknown report kind {kind!r}")


def read_report_csv(path) -> CalibrationReport:
    """Round-trip reader for CSV calibration reports."""
    with open(path, "r", encoding="utf-8") as fh:
        header_line = fh.readline()
        marker = "# calibra report v1 "
        if not header_line.startswith(marker):
            raise ParseError(f"{path}: not a calibra CSV report")
        head = json.loads(header_line[len(marker):])
        columns = fh.readline().strip().split(",")
        if columns != ["bin_index", "count", "predicted", "observed", "contribution"]:
            raise ParseError(f"{path}: unexpected columns {columns}")
        bins = []
        for line in fh:
            if not line.strip():
                continue
            idx, count, predicted, observed, contribution = line.strip().split(",")
            bins.append(
                {
                    "bin_index": int(idx),
                    "count": int(count),
                    "predicted": _uncell(predicted) if predicted == UNDEFINED else float(predicted),
                    "observed": _uncell(observed) if observed == UNDEFINED else float(observed),
                    "contribution": float(contribution),
                }
            )
    head["bins"] = bins
    return report_from_dict(head)


# ---------------------------------------------------------------------------
# grid output directory


class GridWriter:
    """Incremental writer for one grid run's output directory.

    Appends completed cells to ``partial.jsonl`` as they finish (a crash
    loses at most one cell), then writes deterministic final tables and a
    non-deterministic ``run_meta.json`` sidecar on finalize.
    """

    def __init__(self, out_dir):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "reliability").mkdir(exist_ok=True)
        self.partial_path = self.out / "partial.jsonl"
        self._partial = open(self.partial_path, "w", encoding="utf-8")
        self._started = time.time()

    def append_partial(self, rows: list[GridRow]) -> None:
        for row in rows:
            self._partial.write(json.dumps(grid_row_to_dict(row), sort_keys=True) + "\n")
        self._partial.flush()
        os.fsync(self._partial.fileno())

    def write_reliability(self, ref: str, table: ReliabilityTable) -> None:
        write_report(table, self.out / "reliability" / f"{ref}.json", "json")

    def write_dataset(self, spec: DirichletSpec) -> None:
        path = self.out / "data"
        path.mkdir(exist_ok=True)
        name = f"C{spec.num_classes}_N{spec.n}_s{spec.seed}.csv"
        write_prediction_stream(
            path / name,
            iter_calibrated_chunks(spec, DEFAULT_CHUNK_SIZE),
            spec.num_classes,
            spec.meta(),
            CSV_FORMAT,
        )

    def finalize(self, result: GridResult) -> None:
        write_report(result, self.out / "results.json", "json")
        write_report(result, self.out / "results.csv", "csv")
        summary = result.summary()
        write_report(summary, self.out / "summary.json", "json")
        write_report(summary, self.out / "summary.csv", "csv")
        meta = {
            "kind": "run_meta",
            "schema_version": SCHEMA_VERSION,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "started_unix": self._started,
            "finished_unix": time.time(),
            "errors": [list(e) for e in result.errors],
            "wall_time_s": {
                f"C{r.classes}_{r.alpha}_N{r.n}_s{r.seed}": r.wall_time_s
                for r in result.rows
            },
        }
        with open(self.out / "run_meta.json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, sort_keys=True, indent=1)
            fh.write("\n")
        self._partial.close()
        self.partial_path.unlink(missing_ok=True)


def load_grid_config(path) -> ExperimentGrid:
    return ExperimentGrid.from_toml(path)
