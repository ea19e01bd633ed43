import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from l2reps.network import IDENTITY, RELU, init_params

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def matrices(max_rows=6, max_cols=6, scale=3.0):
    """Random dense matrices, built from a seed so shrinking stays cheap."""
    return st.builds(
        lambda r, c, seed: np.random.default_rng(seed).standard_normal((r, c)) * scale,
        st.integers(1, max_rows),
        st.integers(1, max_cols),
        st.integers(0, 2**32 - 1),
    )


def low_rank(max_n=6):
    def build(n, k, seed):
        g = np.random.default_rng(seed)
        return g.standard_normal((n, k)) @ g.standard_normal((k, n))

    return st.integers(1, max_n).flatmap(
        lambda n: st.builds(build, st.just(n), st.integers(1, n), st.integers(0, 2**32 - 1))
    )


@st.composite
def random_nets(draw, max_depth=3, max_width=6, max_n=8):
    depth = draw(st.integers(1, max_depth))
    widths = tuple(draw(st.integers(1, max_width)) for _ in range(depth + 1))
    act = draw(st.sampled_from([RELU, IDENTITY]))
    beta = draw(st.sampled_from([0.0, 1.0]))
    n = draw(st.integers(1, max_n))
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    params = init_params(widths, beta, act, rng, gain=1.5)
    X = rng.standard_normal((widths[0], n))
    Y = rng.standard_normal((widths[-1], n))
    return params, X, Y


ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line per criterion: ``criterion(number, passed, detail)``."""

    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})"
        ACCEPTANCE[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
