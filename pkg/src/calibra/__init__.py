"""calibra: calibration metrics for probabilistic classifiers.

Implements the variation calibration error (VCE) alongside the expected
calibration error (ECE) and uncertainty calibration error (UCE), with
equal-width and equal-frequency binning, Dirichlet-sampled perfectly
calibrated synthetic data, a seeded experiment harness, and SVG
reliability/convergence figures.
"""

from .binning import (
    BinAssignment,
    BinPartition,
    EQUAL_FREQUENCY,
    EQUAL_WIDTH,
    equal_frequency_bins,
    equal_width_bins,
)
from .domain import (
    Dataset,
    LabeledPrediction,
    ProbabilityVector,
    RankedPrediction,
    rank_prediction,
    validate_dataset,
)
from .harness import (
    ExperimentGrid,
    GridResult,
    GridRow,
    ReliabilityTable,
    reliability_data,
    run_grid,
)
from .metrics import (
    BinDiagnostics,
    CalibrationReport,
    compute_ece,
    compute_uce,
    compute_vce,
)
from .synth import (
    DirichletSpec,
    generate_calibrated_dataset,
    sample_dirichlet,
    sample_label,
)
from .variation import (
    VariationMetric,
    confidence,
    entropy,
    get_variation_metric,
    iqv,
    wvr,
)

__version__ = "0.1.0"

__all__ = [
    "BinAssignment",
    "BinDiagnostics",
    "BinPartition",
    "CalibrationReport",
    "Dataset",
    "DirichletSpec",
    "EQUAL_FREQUENCY",
    "EQUAL_WIDTH",
    "ExperimentGrid",
    "GridResult",
    "GridRow",
    "LabeledPrediction",
    "ProbabilityVector",
    "RankedPrediction",
    "ReliabilityTable",
    "VariationMetric",
    "compute_ece",
    "compute_uce",
    "compute_vce",
    "confidence",
    "entropy",
    "equal_frequency_bins",
    "equal_width_bins",
    "generate_calibrated_dataset",
    "get_variation_metric",
    "iqv",
    "rank_prediction",
    "reliability_data",
    "run_grid",
    "sample_dirichlet",
    "sample_label",
    "validate_dataset",
    "wvr",
]
