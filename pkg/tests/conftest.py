import numpy as np
import pytest
from hypothesis import settings

from dgrkit.regan import is_regularizable
from dgrkit.sysmodel import LtiSystem, chain_matrix, unit

settings.register_profile("dgrkit", deadline=None, max_examples=60)
settings.load_profile("dgrkit")


def random_system(rng, n, m=None, scale=1.5):
    m = int(rng.integers(1, n + 1)) if m is None else m
    A = rng.normal(size=(n, n)) * scale / np.sqrt(n)
    B = rng.normal(size=(n, m))
    return LtiSystem(A, B)


def random_regularizable(rng, n, m=None, scale=1.5, tries=200):
    for _ in range(tries):
        sys = random_system(rng, n, m, scale)
        if is_regularizable(sys)[0]:
            return sys
    raise RuntimeError("no regularizable sample found")


def example1(lams, input_index=None):
    """Upper bidiagonal chain with unit superdiagonal; input on ``e_n`` by default."""
    n = len(lams)
    i = n - 1 if input_index is None else input_index
    return LtiSystem(chain_matrix(lams), unit(n, i))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    # echo one line per acceptance criterion after the run
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
