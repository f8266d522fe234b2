import numpy as np
import pytest

from parabolic_bounds.discretization import build_space_time_grid, solve_parabolic
from parabolic_bounds.problem import embedding_constants, preset_problem


def solved(name, cells, K, **params):
    """Preset, exact solution, constants and a backward Euler solution."""
    spec, exact = preset_problem(name, **params)
    mesh, tgrid = build_space_time_grid(spec, cells, K)
    v = solve_parabolic(spec, mesh, tgrid)
    return spec, exact, embedding_constants(spec), v


@pytest.fixture(scope="session")
def ex1_small():
    return solved("ex1", 8, 4)


@pytest.fixture(scope="session")
def ex3_small():
    return solved("ex3", 10, 5)


@pytest.fixture(scope="session")
def ex4_small():
    return solved("ex4", 6, 4)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one summary line per acceptance check, printed after the run
_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        props = dict(report.user_properties)
        if "label" in props:
            _ACCEPTANCE.append((props["label"], report.outcome, props.get("detail", "")))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance")
    for label, outcome, detail in sorted(_ACCEPTANCE):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{label:<34} {status}  {detail}")
