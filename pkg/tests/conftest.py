import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_metric(rng, p, q):
    """A dense metric of signature (p, q) via a random change of basis."""
    d = p + q
    while True:
        T = rng.standard_normal((d, d))
        if abs(np.linalg.det(T)) > 0.2:
            break
    return T.T @ np.diag([1.0] * p + [-1.0] * q) @ T


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
