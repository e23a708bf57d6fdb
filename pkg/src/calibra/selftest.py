"""Self-checks runnable from the CLI.

The reduction check verifies on data that VCE with the confidence metric
collapses to the ECE: with matched bin edges, the predicted variation of
each bin equals its mean confidence unconditionally (the mean of
descending-sorted vectors is still descending, so its max is its first
entry), while the observed variation equals the bin accuracy exactly in
those bins where rank 1 is the modal observed rank. The equality of the
scalar metrics therefore holds whenever the modal condition holds in
every non-empty bin, and that is what is checked rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .binning import assign_equal_width, equal_width_edges
from .domain import Dataset, ranked_arrays
from .metrics import MetricRequest, DatasetSource, evaluate
from .synth import DirichletSpec, generate_calibrated_dataset
from .variation import CONFIDENCE, confidence

TOLERANCE = 1e-12


@dataclass(frozen=True)
class ReductionCheck:
    ece: float
    vce_confidence: float
    num_bins: int
    nonempty_bins: int
    modal_bins: int
    all_modal: bool
    max_predicted_delta: float
    max_observed_delta: float
    value_delta: float | None
    passed: bool


def reduction_check(dataset: Dataset, num_bins: int = 10) -> ReductionCheck:
    """Compare per-bin VCE(confidence) against ECE on matched bin edges."""
    domain = (1.0 / dataset.num_classes, 1.0)
    reports = evaluate(
        DatasetSource(dataset),
        [
            MetricRequest("ece", num_bins, domain=domain),
            MetricRequest("vce", num_bins, variation=CONFIDENCE, domain=domain),
        ],
    )
    ece_report, vce_report = reports

    # Independent tally of observed rank frequencies per confidence bin.
    edges = equal_width_edges(num_bins, domain)
    idx = assign_equal_width(confidence(dataset.probs), edges)
    _, rank_pos = ranked_arrays(dataset.probs, dataset.labels)
    c = dataset.num_classes
    hist = np.bincount(idx * c + rank_pos, minlength=num_bins * c).reshape(num_bins, c)

    max_p, max_o = 0.0, 0.0
    nonempty, modal = 0, 0
    all_modal = True
    for m in range(num_bins):
        if hist[m].sum() == 0:
            continue
        nonempty += 1
        if hist[m, 0] == hist[m].max():
            modal += 1
            max_p = max(max_p, abs(vce_report.bins[m].predicted - ece_report.bins[m].predicted))
            max_o = max(max_o, abs(vce_report.bins[m].observed - ece_report.bins[m].observed))
        else:
            all_modal = False
    value_delta = abs(vce_report.value - ece_report.value) if all_modal else None
    passed = (
        max_p <= TOLERANCE
        and max_o <= TOLERANCE
        and (value_delta is None or value_delta <= TOLERANCE)
    )
    return ReductionCheck(
        ece=ece_report.value,
        vce_confidence=vce_report.value,
        num_bins=num_bins,
        nonempty_bins=nonempty,
        modal_bins=modal,
        all_modal=all_modal,
        max_predicted_delta=max_p,
        max_observed_delta=max_o,
        value_delta=value_delta,
        passed=passed,
    )


def reduction_check_synthetic(classes: int = 2, n: int = 100_000, seed: int = 0, num_bins: int = 10) -> ReductionCheck:
    """Run the reduction check on a freshly generated calibrated dataset."""
    spec = DirichletSpec((1.0,) * classes, n, seed)
    return reduction_check(generate_calibrated_dataset(spec), num_bins)


def format_reduction(check: ReductionCheck) -> str:
    lines = [
        f"ECE                = {check.ece!r}",
        f"VCE(confidence)    = {check.vce_confidence!r}",
        f"non-empty bins     = {check.nonempty_bins}/{check.num_bins}",
        f"rank-1 modal bins  = {check.modal_bins}/{check.nonempty_bins}",
        f"max |P - conf|     = {check.max_predicted_delta:.3e}",
        f"max |O - acc|      = {check.max_observed_delta:.3e}",
    ]
    if check.value_delta is not None:
        lines.append(f"|VCE - ECE|        = {check.value_delta:.3e}")
    else:
        lines.append("|VCE - ECE|        = skipped (modal condition not met in every bin)")
    lines.append("PASS" if check.passed else "FAIL")
    return "\n".join(lines)
