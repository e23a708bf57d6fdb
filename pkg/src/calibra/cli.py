"""Command-line interface.

Subcommands: ``gen`` (synthesize calibrated predictions), ``eval``
(compute one calibration metric on a prediction file), ``grid`` (run the
full experiment sweep), ``plot`` (emit SVG figures), ``selftest``
(consistency checks).

Class labels are 0-based in every file format and flag. Exit codes:
0 success, 1 validation error, 2 I/O error, 3 internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import reportio
from .binning import EQUAL_FREQUENCY, EQUAL_WIDTH
from .errors import CalibraError, ValidationError
from .harness import DEFAULT_SAMPLE_SIZES, ExperimentGrid, GridResult, run_grid, summarize_rows
from .metrics import compute_ece, compute_uce, compute_vce
from .plots import CONVERGENCE, RELIABILITY, PlotSpec, emit_plot
from .selftest import format_reduction, reduction_check_synthetic
from .synth import DirichletSpec, iter_calibrated_chunks, resolve_alpha
from .variation import VARIATION_METRICS, get_variation_metric


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="calibra",
        description="Calibration metrics (ECE, UCE, VCE) over classifier predictions. "
        "Class labels are 0-based.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate perfectly calibrated synthetic predictions")
    gen.add_argument("--classes", type=int, required=True, help="number of classes C (>= 2)")
    gen.add_argument(
        "--alpha",
        default="equal",
        help="Dirichlet concentration: 'equal', 'skewed', or comma-separated values (default: equal)",
    )
    gen.add_argument("--n", type=int, required=True, help="number of samples")
    gen.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0)")
    gen.add_argument("--output", required=True, help="output file (.csv or .jsonl)")
    gen.add_argument("--format", choices=["csv", "jsonl"], default=None, help="override format inferred from suffix")
    gen.set_defaults(func=_cmd_gen)

    ev = sub.add_parser("eval", help="compute a calibration metric on a prediction file")
    ev.add_argument("--metric", choices=["ece", "uce", "vce"], required=True)
    ev.add_argument(
        "--variation",
        choices=sorted(VARIATION_METRICS),
        default="entropy",
        help="variation metric for VCE (default: entropy)",
    )
    ev.add_argument("--bins", type=int, default=10, help="number of bins M (default: 10)")
    ev.add_argument("--binning", choices=[EQUAL_WIDTH, EQUAL_FREQUENCY], default=EQUAL_WIDTH)
    ev.add_argument("--input", required=True, help="prediction file (.csv or .jsonl)")
    ev.add_argument("--input-format", choices=["csv", "jsonl"], default=None)
    ev.add_argument("--output", default=None, help="report file (default: JSON to stdout)")
    ev.add_argument("--format", choices=["json", "csv"], default="json")
    ev.add_argument(
        "--ece-domain",
        choices=["1/C", "0-1"],
        default="1/C",
        help="ECE bin domain: [1/C,1] per definition, or [0,1] to match variation-metric edges",
    )
    ev.set_defaults(func=_cmd_eval)

    grid = sub.add_parser("grid", help="run the convergence experiment grid")
    grid.add_argument("--config", default=None, help="grid config TOML (defaults to the built-in grid)")
    grid.add_argument("--out", required=True, help="output directory")
    grid.add_argument("--full", action="store_true", help="include the 10^7-sample tier in the default grid")
    grid.add_argument("--workers", type=int, default=None, help="parallel dataset cells (capped by CALIBRA_THREADS)")
    grid.add_argument("--keep-data", action="store_true", help="persist generated datasets for audit")
    grid.add_argument("--quiet", action="store_true", help="suppress per-cell progress lines")
    grid.set_defaults(func=_cmd_grid)

    plot = sub.add_parser("plot", help="render an SVG figure from grid or report output")
    plot.add_argument("--kind", choices=[CONVERGENCE, RELIABILITY], required=True)
    plot.add_argument("--data", required=True, help="summary/results JSON (convergence) or reliability/report JSON")
    plot.add_argument("--out", required=True, help="output SVG path")
    plot.add_argument("--classes", type=int, default=None, help="scenario filter for convergence plots")
    plot.add_argument("--alpha", default=None, help="scenario filter for convergence plots")
    plot.add_argument("--binning", choices=[EQUAL_WIDTH, EQUAL_FREQUENCY], default=None)
    plot.add_argument("--series", default=None, help="comma-separated metric names (default: all present)")
    plot.add_argument("--title", default=None)
    plot.add_argument("--linear-y", action="store_true", help="linear instead of log y-axis")
    plot.set_defaults(func=_cmd_plot)

    st = sub.add_parser("selftest", help="run built-in consistency checks")
    st.add_argument("check", nargs="?", choices=["reduction"], default="reduction")
    st.add_argument("--classes", type=int, default=2)
    st.add_argument("--n", type=int, default=100_000)
    st.add_argument("--seed", type=int, default=0)
    st.add_argument("--bins", type=int, default=10)
    st.set_defaults(func=_cmd_selftest)

    return parser


def _cmd_gen(args) -> int:
    alpha = resolve_alpha(args.alpha, args.classes)
    spec = DirichletSpec(alpha, args.n, args.seed)
    reportio.write_prediction_stream(
        args.output, iter_calibrated_chunks(spec), spec.num_classes, spec.meta(), args.format
    )
    print(f"wrote {args.n} samples to {args.output}")
    return 0


def _cmd_eval(args) -> int:
    dataset = reportio.read_predictions(args.input, args.input_format)
    if args.metric == "ece":
        domain = (0.0, 1.0) if args.ece_domain == "0-1" else None
        report = compute_ece(dataset, args.bins, args.binning, domain)
    elif args.metric == "uce":
        report = compute_uce(dataset, args.bins, args.binning)
    else:
        report = compute_vce(dataset, get_variation_metric(args.variation), args.bins, args.binning)
    if args.output is None:
        print(json.dumps(reportio.report_to_dict(report), sort_keys=True, indent=1))
    else:
        reportio.write_report(report, args.output, args.format)
        print(f"{report.metric}{'(' + report.variation + ')' if report.variation else ''} "
              f"= {report.value!r} -> {args.output}")
    return 0


def _cmd_grid(args) -> int:
    if args.config is not None:
        grid = ExperimentGrid.from_toml(args.config)
    else:
        sizes = DEFAULT_SAMPLE_SIZES if args.full else tuple(n for n in DEFAULT_SAMPLE_SIZES if n < 10**7)
        grid = dataclasses.replace(ExperimentGrid(), sample_sizes=sizes)

    def progress(cell, error):
        if not args.quiet:
            classes, alpha, n, seed = cell
            status = f"FAILED: {error}" if error else "ok"
            print(f"cell C={classes} alpha={alpha} N={n} seed={seed}: {status}", flush=True)

    result = run_grid(grid, out_dir=args.out, workers=args.workers, keep_data=args.keep_data,
                      on_progress=progress)
    print(f"{len(result.rows)} rows -> {args.out}")
    if result.errors:
        for cell, message in result.errors:
            print(f"error in {cell}: {message}", file=sys.stderr)
        return 3
    return 0


def _cmd_plot(args) -> int:
    data = reportio.read_report(args.data)
    if args.kind == CONVERGENCE and isinstance(data, tuple):
        data = summarize_rows(data)  # raw grid rows: aggregate first
    series = tuple(args.series.split(",")) if args.series else None
    spec = PlotSpec(
        kind=args.kind,
        output=args.out,
        series=series,
        classes=args.classes,
        alpha=args.alpha,
        binning=args.binning,
        log_y=not args.linear_y,
        title=args.title,
    )
    emit_plot(spec, data)
    print(f"wrote {args.out}")
    return 0


def _cmd_selftest(args) -> int:
    check = reduction_check_synthetic(args.classes, args.n, args.seed, args.bins)
    print(format_reduction(check))
    return 0 if check.passed else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 2
    except CalibraError as e:
        print(f"internal error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
