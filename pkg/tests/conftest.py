import hypothesis
import numpy as np
import pytest

from calibra.domain import Dataset

hypothesis.settings.register_profile(
    "calibra",
    deadline=None,
    max_examples=60,
    suppress_health_check=[hypothesis.HealthCheck.too_slow],
)
hypothesis.settings.load_profile("calibra")


def random_dataset(rng: np.random.Generator, n: int, num_classes: int) -> Dataset:
    """A generic random dataset (not calibrated): Dirichlet probs, uniform labels."""
    probs = rng.dirichlet(np.ones(num_classes), size=n)
    labels = rng.integers(0, num_classes, size=n)
    return Dataset(probs, labels)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)


def pytest_addoption(parser):
    parser.addoption(
        "--full",
        action="store_true",
        default=False,
        help="include the 10^7-sample tier in the acceptance convergence grid",
    )


@pytest.fixture(scope="session")
def full_tier(request) -> bool:
    return request.config.getoption("--full")
