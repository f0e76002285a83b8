import numpy as np
import pytest

from xwtecg.pipeline import synthetic_template

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def template():
    return synthetic_template()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def cohort_features(template):
    """(FeatureVector, label) for the seeded 40-per-class cohort used across tests."""
    from xwtecg.pipeline import analyze_beat, synthetic_cohort
    return [(analyze_beat(b, template)[2], lb) for b, lb in synthetic_cohort(40, 0.05, seed=1)]
