import dataclasses
import math

import numpy as np
import pytest

from calibra.binning import EQUAL_FREQUENCY, EQUAL_WIDTH
from calibra.errors import ValidationError
from calibra.harness import (
    ExperimentGrid,
    GridResult,
    cell_id,
    reliability_data,
    run_grid,
    summarize_rows,
)
from calibra.metrics import compute_ece, compute_uce, compute_vce
from calibra.synth import DirichletSpec, generate_calibrated_dataset, resolve_alpha
from calibra.variation import ENTROPY

SMALL_GRID = ExperimentGrid(
    class_counts=(3, 10),
    alpha_presets=("equal", "skewed"),
    sample_sizes=(100, 200),
    seeds=(0, 1, 2),
)


@pytest.fixture(scope="module")
def small_result() -> GridResult:
    return run_grid(SMALL_GRID)


def test_row_count_matches_grid_arithmetic(small_result):
    # 2 class counts x 2 alphas x 2 sizes x 2 binnings x 3 metrics x 3 seeds
    assert SMALL_GRID.expected_rows() == 144
    assert len(small_result.rows) == 144
    assert not small_result.errors


def test_all_values_in_unit_interval(small_result):
    assert all(0.0 <= row.value <= 1.0 for row in small_result.rows)


def test_rows_are_deterministically_ordered(small_result):
    keys = [row.key() for row in small_result.rows]
    assert keys == sorted(keys)


def test_rerun_reproduces_identical_values(small_result):
    again = run_grid(SMALL_GRID)
    assert [r.value for r in again.rows] == [r.value for r in small_result.rows]


def test_harness_adds_no_numerical_transformation(small_result):
    spec = DirichletSpec(resolve_alpha("equal", 3), 200, 1)
    ds = generate_calibrated_dataset(spec)
    direct = {
        ("ece", EQUAL_WIDTH): compute_ece(ds, 10, EQUAL_WIDTH).value,
        ("uce", EQUAL_WIDTH): compute_uce(ds, 10, EQUAL_WIDTH).value,
        ("vce", EQUAL_WIDTH): compute_vce(ds, ENTROPY, 10, EQUAL_WIDTH).value,
        ("ece", EQUAL_FREQUENCY): compute_ece(ds, 10, EQUAL_FREQUENCY).value,
        ("uce", EQUAL_FREQUENCY): compute_uce(ds, 10, EQUAL_FREQUENCY).value,
        ("vce", EQUAL_FREQUENCY): compute_vce(ds, ENTROPY, 10, EQUAL_FREQUENCY).value,
    }
    for row in small_result.rows:
        if (row.classes, row.alpha, row.n, row.seed) == (3, "equal", 200, 1):
            assert row.value == direct[(row.metric, row.binning)]


def test_summary_medians(small_result):
    summary = summarize_rows(small_result.rows)
    assert len(summary) == 48  # 144 rows / 3 seeds
    for cell in summary:
        values = [
            r.value
            for r in small_result.rows
            if (r.classes, r.alpha, r.n, r.binning, r.metric)
            == (cell.classes, cell.alpha, cell.n, cell.binning, cell.metric)
        ]
        assert cell.n_seeds == 3
        assert cell.median == float(np.median(values))
        assert cell.iqr >= 0.0


def test_large_n_seed_trim():
    grid = dataclasses.replace(SMALL_GRID, large_n_threshold=200, large_n_seeds=1)
    cells = grid.dataset_cells()
    assert sum(1 for (_, _, n, _) in cells if n == 200) == 4  # one seed per scenario
    assert sum(1 for (_, _, n, _) in cells if n == 100) == 12


def test_grid_validation():
    with pytest.raises(ValidationError):
        ExperimentGrid(metrics=())
    with pytest.raises(ValidationError):
        ExperimentGrid(vce_variation="gini")


def test_from_toml_round_trip(tmp_path):
    config = tmp_path / "grid.toml"
    config.write_text(
        'class_counts = [3]\nalpha_presets = ["equal"]\nsample_sizes = [50]\n'
        'binnings = ["equal-width"]\nnum_bins = 5\nmetrics = ["ece"]\nseeds = [0, 1]\n'
    )
    grid = ExperimentGrid.from_toml(config)
    assert grid.num_bins == 5
    assert grid.seeds == (0, 1)
    assert grid.expected_rows() == 2
    config.write_text("sample_count = [10]\n")
    with pytest.raises(ValidationError):
        ExperimentGrid.from_toml(config)


def test_per_cell_failures_are_recorded_not_raised():
    # 5 samples cannot fill 10 equal-frequency bins
    grid = ExperimentGrid(
        class_counts=(3,), alpha_presets=("equal",), sample_sizes=(5, 100), seeds=(0,)
    )
    result = run_grid(grid)
    assert len(result.errors) == 1
    assert "TooFewSamples" in result.errors[0][1]
    assert all(row.n == 100 for row in result.rows)


def test_parallel_workers_match_serial(small_result):
    parallel = run_grid(SMALL_GRID, workers=2)
    assert [r.value for r in parallel.rows] == [r.value for r in small_result.rows]


def test_workers_env_cap(monkeypatch, small_result):
    monkeypatch.setenv("CALIBRA_THREADS", "1")
    capped = run_grid(SMALL_GRID, workers=8)  # capped to 1: runs inline
    assert [r.value for r in capped.rows] == [r.value for r in small_result.rows]


def test_reliability_reconstruction(small_result, rng):
    from .conftest import random_dataset

    ds = random_dataset(rng, 500, 4)
    for report in (compute_ece(ds), compute_uce(ds), compute_vce(ds)):
        table = reliability_data(report)
        assert table.reconstruct_value() == report.value
        assert math.fsum(r.count / table.n_samples * abs(r.observed - r.predicted) for r in table.rows) == report.value


def test_reliability_single_row_for_single_bin():
    from calibra.domain import validate_dataset

    ds = validate_dataset([([0.95, 0.05], 0)] * 4)
    table = reliability_data(compute_ece(ds, num_bins=10))
    assert len(table.rows) == 1
    assert table.rows[0].count == 4
    assert table.reference_line == ((0.5, 0.5), (1.0, 1.0))


def test_cell_id_format():
    assert cell_id(3, "equal", 100, EQUAL_WIDTH, "vce", "entropy", 2) == "C3_equal_N100_equal-width_vce-entropy_s2"
    assert cell_id(10, "skewed", 500, EQUAL_FREQUENCY, "ece", None, 0) == "C10_skewed_N500_equal-frequency_ece_s0"
