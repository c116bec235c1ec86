import numpy as np
import pytest
from hypothesis import strategies as st

from sobolev_lorentz import StepFunction


@st.composite
def step_functions(draw, max_pieces=12, allow_zero_values=False):
    k = draw(st.integers(1, max_pieces))
    lo = 0.0 if allow_zero_values else 1e-3
    values = draw(st.lists(st.floats(lo, 1e3), min_size=k, max_size=k))
    measures = draw(st.lists(st.floats(1e-3, 1e3), min_size=k, max_size=k))
    return StepFunction(values, measures)


def random_step_function(rng, k=None):
    k = int(rng.integers(1, 21)) if k is None else k
    values = rng.exponential(size=k) * 10.0 ** rng.uniform(-2, 2)
    measures = rng.exponential(size=k) * 10.0 ** rng.uniform(-2, 2)
    return StepFunction(values, measures)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
