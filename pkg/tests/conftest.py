import numpy as np
import pytest
from hypothesis import settings

from distoco.problem import DecisionSet, ProblemInstance

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def make_instance(H, z, A, a, bound=5.0):
    """Build an instance from per-round arrays, promoting scalars/vectors to the full shapes."""
    H = np.asarray(H, dtype=float)
    p = H.shape[-1]
    return ProblemInstance(DecisionSet.box(-bound, bound, p), H, np.asarray(z, dtype=float),
                           np.asarray(A, dtype=float), np.asarray(a, dtype=float))


def random_instance(rng, T, n, p, d=2, m=2, bound=5.0, nonneg=True):
    H = rng.uniform(-1, 1, (T, n, d, p))
    z = H @ np.ones(p) + rng.standard_normal((T, n, d))
    A = rng.uniform(0, 2, (T, n, m, p)) if nonneg else rng.uniform(-1, 1, (T, n, m, p))
    a = rng.uniform(0, 1, (T, n, m))
    return make_instance(H, z, A, a, bound)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
