"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines; add ``--full`` to extend the convergence grid to the 10^7 tier.
The suite takes a few minutes: it runs the full convergence grid at
N up to 10^6 over 10 seeds per scenario.
"""

import math
import time

import numpy as np
import pytest

from calibra.binning import (
    EQUAL_FREQUENCY,
    EQUAL_WIDTH,
    equal_frequency_bins,
    equal_width_bins,
)
from calibra.cli import main
from calibra.harness import ExperimentGrid, reliability_data, run_grid
from calibra.metrics import (
    DatasetSource,
    MetricRequest,
    compute_ece,
    compute_uce,
    compute_vce,
    evaluate,
)
from calibra.selftest import reduction_check_synthetic
from calibra.synth import DirichletChunkSource, DirichletSpec, generate_calibrated_dataset
from calibra.variation import ENTROPY, confidence, entropy, iqv, wvr

from . import oracles
from .conftest import random_dataset

SCENARIOS = [(3, "equal"), (3, "skewed"), (10, "equal"), (10, "skewed")]
CONVERGENCE_SIZES = (10**4, 10**5, 10**6)


def _criterion(num: int, description: str, passed: bool, detail: str = ""):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {num}: {description}"
    if detail:
        line += f" — {detail}"
    print(line, flush=True)
    assert passed, line


@pytest.fixture(scope="module")
def grid_medians(full_tier):
    sizes = CONVERGENCE_SIZES + ((10**7,) if full_tier else ())
    grid = ExperimentGrid(
        class_counts=(3, 10),
        alpha_presets=("equal", "skewed"),
        sample_sizes=sizes,
        binnings=(EQUAL_WIDTH, EQUAL_FREQUENCY),
        num_bins=10,
        metrics=("ece", "uce", "vce"),
        seeds=tuple(range(10)),
    )
    result = run_grid(grid)
    assert not result.errors, result.errors
    medians = {
        (row.classes, row.alpha, row.n, row.binning, row.metric): row.median
        for row in result.summary()
    }
    return medians, sizes


def test_criterion_1_oracle_equivalence():
    rng = np.random.default_rng(1234)
    started = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        m = int(rng.integers(1, 11))
        n = int(rng.integers(m, 51))
        c = int(rng.integers(2, 6))
        ds = random_dataset(rng, n, c)
        items = oracles.dataset_items(ds)
        for binning in (EQUAL_WIDTH, EQUAL_FREQUENCY):
            worst = max(
                worst,
                abs(compute_ece(ds, m, binning).value - oracles.brute_ece(items, m, binning)),
                abs(compute_uce(ds, m, binning).value - oracles.brute_uce(items, m, binning)),
                abs(compute_vce(ds, ENTROPY, m, binning).value - oracles.brute_vce(items, m, binning)),
            )
    elapsed = time.perf_counter() - started
    _criterion(
        1,
        "ECE/UCE/VCE match brute force on 1000 random datasets (1e-12, < 30 s)",
        worst <= 1e-12 and elapsed < 30.0,
        f"max |diff| = {worst:.2e}, {elapsed:.1f} s",
    )


def _convergence_failures(medians, binning, sizes, full):
    failures = []
    chain = CONVERGENCE_SIZES + ((10**7,) if full else ())
    for classes, alpha in SCENARIOS:
        for metric in ("ece", "vce"):
            values = [medians[(classes, alpha, n, binning, metric)] for n in chain]
            if not all(a > b for a, b in zip(values, values[1:])):
                failures.append(f"{metric} C={classes}/{alpha} not decreasing: {values}")
            if not values[2] < values[0] / 3.0:
                failures.append(f"{metric} C={classes}/{alpha}: median(1e6) >= median(1e4)/3")
    return failures


def _noise_floor_failures(medians, binning):
    failures = []
    for classes, alpha in SCENARIOS:
        u4 = medians[(classes, alpha, 10**4, binning, "uce")]
        u6 = medians[(classes, alpha, 10**6, binning, "uce")]
        if not 0.8 * u4 <= u6 <= 1.2 * u4:
            failures.append(f"UCE C={classes}/{alpha}: {u4:.4g} -> {u6:.4g} leaves ±20%")
    u6 = medians[(3, "equal", 10**6, binning, "uce")]
    v6 = medians[(3, "equal", 10**6, binning, "vce")]
    if not u6 >= 5.0 * v6:
        failures.append(f"UCE floor {u6:.4g} < 5 x VCE {v6:.4g}")
    return failures


def test_criterion_2_convergence_equal_width(grid_medians, full_tier):
    medians, sizes = grid_medians
    failures = _convergence_failures(medians, EQUAL_WIDTH, sizes, full_tier)
    _criterion(
        2,
        "VCE and ECE medians strictly decrease with N (equal-width), median(1e6) < median(1e4)/3",
        not failures,
        "; ".join(failures) or f"4 scenarios x 2 metrics over N={sizes}",
    )


def test_criterion_3_uce_noise_floor_equal_width(grid_medians):
    medians, _ = grid_medians
    failures = _noise_floor_failures(medians, EQUAL_WIDTH)
    u6 = medians[(3, "equal", 10**6, EQUAL_WIDTH, "uce")]
    v6 = medians[(3, "equal", 10**6, EQUAL_WIDTH, "vce")]
    _criterion(
        3,
        "UCE noise floor persists (±20% across N; >= 5x VCE at 1e6 for C=3/equal)",
        not failures,
        "; ".join(failures) or f"UCE(1e6) = {u6:.4g} vs VCE(1e6) = {v6:.4g} ({u6 / v6:.0f}x)",
    )


def test_criterion_4_equal_frequency_replication(grid_medians, full_tier):
    medians, sizes = grid_medians
    failures = _convergence_failures(medians, EQUAL_FREQUENCY, sizes, full_tier)
    failures += _noise_floor_failures(medians, EQUAL_FREQUENCY)
    _criterion(
        4,
        "criteria 2-3 re-pass with equal-frequency binning",
        not failures,
        "; ".join(failures) or "convergence and noise floor replicated",
    )


def test_criterion_5_ece_reduction():
    worst_p, worst_o, worst_v = 0.0, 0.0, 0.0
    all_modal_everywhere = True
    for seed in (0, 1, 2):
        check = reduction_check_synthetic(classes=2, n=100_000, seed=seed, num_bins=10)
        worst_p = max(worst_p, check.max_predicted_delta)
        worst_o = max(worst_o, check.max_observed_delta)
        all_modal_everywhere &= check.all_modal
        if check.all_modal:
            worst_v = max(worst_v, check.value_delta)
    _criterion(
        5,
        "VCE(confidence) reduces to ECE on matched [1/2,1] edges (1e-12)",
        worst_p <= 1e-12 and worst_o <= 1e-12 and all_modal_everywhere and worst_v <= 1e-12,
        f"max |P-conf| = {worst_p:.2e}, max |O-acc| = {worst_o:.2e}, max |VCE-ECE| = {worst_v:.2e}",
    )


def test_criterion_6_metric_invariants():
    rng = np.random.default_rng(99)
    ok = True
    details = []

    for c in range(2, 21):
        uniform = np.full(c, 1.0 / c)
        one_hot = np.zeros(c)
        one_hot[-1] = 1.0
        if entropy(uniform) != 1.0 or entropy(one_hot) != 0.0:
            ok = False
            details.append(f"entropy endpoints off at C={c}")
    probs = rng.dirichlet(np.ones(6), size=2000)
    h = entropy(probs)
    if not (np.all(h >= 0.0) and np.all(h <= 1.0)):
        ok = False
        details.append("entropy left [0,1]")

    for fn in (entropy, confidence, wvr, iqv):
        for _ in range(200):
            p = rng.dirichlet(np.ones(int(rng.integers(2, 8))))
            if abs(fn(p) - fn(p[rng.permutation(len(p))])) > 1e-12:
                ok = False
                details.append(f"{fn.__name__} not permutation-invariant")

    values = rng.random(10_000)
    for num_bins in (1, 7, 10):
        if equal_width_bins(values, num_bins, (0.0, 1.0)).counts().sum() != len(values):
            ok = False
            details.append("equal-width bins dropped samples")
        counts = equal_frequency_bins(values, num_bins).counts()
        if counts.sum() != len(values) or counts.max() - counts.min() > 1:
            ok = False
            details.append("equal-frequency imbalance > 1")

    _criterion(
        6,
        "metric invariant suite (entropy endpoints, permutation invariance, bin completeness, balance)",
        ok,
        "; ".join(details) or "all invariants hold on 10^4 random inputs",
    )


def test_criterion_7_calibration_by_construction():
    ds = generate_calibrated_dataset(DirichletSpec((1.0, 1.0, 1.0), 10**6, 2024))
    conf = confidence(ds.probs)
    assignment = equal_width_bins(conf, 10, (1.0 / 3.0, 1.0))
    correct = ds.probs.argmax(axis=1) == ds.labels
    within = 0
    populated = 0
    for member in assignment.members():
        if len(member) == 0:
            continue
        populated += 1
        mean_conf = conf[member].mean()
        accuracy = correct[member].mean()
        stderr = math.sqrt(mean_conf * (1.0 - mean_conf) / len(member))
        if abs(accuracy - mean_conf) <= 3.0 * stderr or stderr == 0.0:
            within += 1
    _criterion(
        7,
        "generated data passes the per-bin binomial consistency check (>= 9/10 bins)",
        within >= 9 and populated == 10,
        f"{within}/{populated} bins within 3 standard errors",
    )


def test_criterion_8_reliability_reconstruction(tmp_path):
    rng = np.random.default_rng(7)
    worst = 0.0
    tables = []
    for binning in (EQUAL_WIDTH, EQUAL_FREQUENCY):
        ds = random_dataset(rng, 2000, 4)
        tables += [
            reliability_data(compute_ece(ds, 10, binning)),
            reliability_data(compute_uce(ds, 10, binning)),
            reliability_data(compute_vce(ds, ENTROPY, 10, binning)),
        ]
    out = tmp_path / "grid"
    grid = ExperimentGrid(
        class_counts=(3,), alpha_presets=("equal",), sample_sizes=(1000,), seeds=(0, 1)
    )
    run_grid(grid, out_dir=out)
    from calibra import reportio

    emitted = sorted((out / "reliability").glob("*.json"))
    tables += [reportio.read_report(p) for p in emitted]
    for table in tables:
        worst = max(worst, abs(table.reconstruct_value() - table.value))
    _criterion(
        8,
        "every emitted reliability table reconstructs its scalar metric (1e-12)",
        worst <= 1e-12 and len(emitted) == 12,
        f"{len(tables)} tables, max |diff| = {worst:.2e}",
    )


def test_criterion_9_grid_determinism(tmp_path):
    config = tmp_path / "grid.toml"
    config.write_text(
        'class_counts = [3]\nalpha_presets = ["equal", "skewed"]\nsample_sizes = [500, 1000]\n'
        'binnings = ["equal-width", "equal-frequency"]\nmetrics = ["ece", "uce", "vce"]\n'
        "seeds = [0, 1]\n"
    )
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["grid", "--config", str(config), "--out", str(out_a), "--quiet"]) == 0
    assert main(["grid", "--config", str(config), "--out", str(out_b), "--quiet"]) == 0
    compared = []
    identical = True
    for name in ("results.csv", "results.json", "summary.csv", "summary.json"):
        same = (out_a / name).read_bytes() == (out_b / name).read_bytes()
        identical &= same
        compared.append(name)
    rel_a = sorted(p.name for p in (out_a / "reliability").glob("*.json"))
    rel_b = sorted(p.name for p in (out_b / "reliability").glob("*.json"))
    identical &= rel_a == rel_b
    for name in rel_a:
        identical &= (out_a / "reliability" / name).read_bytes() == (out_b / "reliability" / name).read_bytes()
    _criterion(
        9,
        "grid rerun with identical config produces byte-identical result tables",
        identical,
        f"{len(compared)} tables + {len(rel_a)} reliability files compared",
    )


def test_criterion_10_performance_floor():
    requests = [MetricRequest("ece"), MetricRequest("uce"), MetricRequest("vce")]

    ds = generate_calibrated_dataset(DirichletSpec((1.0,) * 10, 10**6, 0))
    started = time.perf_counter()
    evaluate(DatasetSource(ds), requests)
    elapsed_1m = time.perf_counter() - started

    started = time.perf_counter()
    evaluate(DirichletChunkSource(DirichletSpec((1.0,) * 10, 10**7, 0)), requests)
    elapsed_10m = time.perf_counter() - started

    _criterion(
        10,
        "all three metrics: N=1e6/C=10 under 10 s, N=1e7 (streamed, incl. generation) under 120 s",
        elapsed_1m < 10.0 and elapsed_10m < 120.0,
        f"N=1e6 in {elapsed_1m:.2f} s, N=1e7 in {elapsed_10m:.1f} s",
    )
