#!/usr/bin/env python3
"""Run the convergence experiments and render every figure.

Produces, under the output directory:
  - the grid result tables (results.*, summary.*),
  - convergence SVGs for each scenario x binning combination,
  - reliability diagrams for ECE/UCE/VCE on the C=3 equal-alpha scenario
    at the largest sample size in the run.

Use --full to add the 10^7-sample tier (minutes of extra runtime); by
default the grid stops at 10^6 samples.
"""

import argparse
import dataclasses
import sys
from pathlib import Path

from calibra import reportio
from calibra.harness import DEFAULT_SAMPLE_SIZES, ExperimentGrid, run_grid
from calibra.plots import PlotSpec, emit_plot


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results", help="output directory (default: results/)")
    parser.add_argument("--full", action="store_true", help="include the 10^7-sample tier")
    parser.add_argument("--workers", type=int, default=None, help="parallel dataset cells")
    parser.add_argument("--seeds", type=int, default=10, help="replicates per cell (default: 10)")
    args = parser.parse_args(argv)

    sizes = DEFAULT_SAMPLE_SIZES if args.full else tuple(n for n in DEFAULT_SAMPLE_SIZES if n < 10**7)
    grid = dataclasses.replace(ExperimentGrid(), sample_sizes=sizes, seeds=tuple(range(args.seeds)))
    out = Path(args.out)

    def progress(cell, error):
        classes, alpha, n, seed = cell
        print(f"  C={classes} alpha={alpha} N={n} seed={seed}: {'FAILED ' + error if error else 'ok'}", flush=True)

    print(f"running grid ({len(grid.dataset_cells())} dataset cells) -> {out}")
    result = run_grid(grid, out_dir=out, workers=args.workers, on_progress=progress)
    if result.errors:
        for cell, message in result.errors:
            print(f"error in {cell}: {message}", file=sys.stderr)
        return 1

    figures = out / "figures"
    figures.mkdir(exist_ok=True)
    summary = result.summary()
    for binning in grid.binnings:
        for classes in grid.class_counts:
            for alpha in grid.alpha_presets:
                path = figures / f"convergence_C{classes}_{alpha}_{binning}.svg"
                emit_plot(
                    PlotSpec(kind="convergence", output=path, classes=classes, alpha=alpha, binning=binning),
                    summary,
                )
                print(f"wrote {path}")

    biggest = max(grid.sample_sizes)
    for metric, variation in (("ece", None), ("uce", None), ("vce", "entropy")):
        tag = f"{metric}-{variation}" if variation else metric
        ref = out / "reliability" / f"C3_equal_N{biggest}_equal-width_{tag}_s0.json"
        table = reportio.read_report(ref)
        path = figures / f"reliability_C3_equal_N{biggest}_{metric}.svg"
        emit_plot(PlotSpec(kind="reliability", output=path), table)
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
