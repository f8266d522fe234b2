import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parabolic_bounds.problem import (
    DIRICHLET,
    NEUMANN,
    PRESETS,
    NormWeights,
    ProblemSpec,
    efficiency_indexes,
    embedding_constants,
    preset_problem,
    weighted_error_norm,
)
from parabolic_bounds.majorant import MajorantParams

PRESET_ARGS = [
    ("ex1", {}),
    ("ex1_gaussian", {"sigma": 0.05}),
    ("ex1_gaussian", {"sigma": 0.5}),
    ("ex2", {"rho": 1e-3}),
    ("ex2", {"rho": 1e3}),
    ("ex3", {}),
    ("ex3", {"sigma": 0.1}),
    ("ex4", {}),
    ("ex5", {}),
    ("zero", {}),
]


def _sample_points(spec, n, rng):
    lo = np.array(spec.lower)
    return lo + rng.random((n, spec.dim)) * np.array(spec.lengths)


@pytest.mark.parametrize("name,params", PRESET_ARGS)
def test_manufactured_residual_vanishes(name, params, rng):
    spec, exact = preset_problem(name, **params)
    x = _sample_points(spec, 200, rng)
    scale = 1.0
    for t in np.linspace(0, spec.T, 7):
        res = exact.residual(spec, x, t)
        scale = max(scale, np.abs(np.asarray(exact.u_t(x, t))).max())
        assert np.abs(res).max() <= 1e-8 * scale


@pytest.mark.parametrize("name,params", PRESET_ARGS)
def test_initial_data_matches_solution(name, params, rng):
    spec, exact = preset_problem(name, **params)
    x = _sample_points(spec, 100, rng)
    np.testing.assert_allclose(spec.initial(x), exact.u(x, 0.0), atol=1e-12)


def test_ex1_solution_and_residual_point():
    spec, exact = preset_problem("ex1")
    assert spec.dim == 1 and spec.T == 10
    x = np.array([[0.5]])
    assert exact.u(x, 1.0)[0] == pytest.approx(0.25 * 3)
    assert exact.residual(spec, x, 1.0)[0] == pytest.approx(0.0, abs=1e-12)


def test_ex4_solution_formula():
    spec, exact = preset_problem("ex4")
    assert spec.dim == 2 and spec.T == 1
    x = np.array([[0.3, 0.7]])
    t = 0.4
    px, py = np.pi * 0.3, np.pi * 0.7
    expected = (np.sin(px) * np.sin(3 * py) + np.sin(3 * px) * np.sin(py)) * (t ** 3 + np.sin(t) + 1)
    assert exact.u(x, t)[0] == pytest.approx(expected)


def test_presets_cover_all_names():
    assert set(PRESETS) == {"ex1", "ex1_gaussian", "ex2", "ex3", "ex4", "ex5", "zero"}
    with pytest.raises(ValueError):
        preset_problem("nope")


def test_spec_validation():
    f = lambda x, t: np.zeros(x.shape[:-1])
    with pytest.raises(ValueError):
        ProblemSpec((0.0,), (1.0,), 1.0, f, f, (NEUMANN, NEUMANN))
    with pytest.raises(ValueError):
        ProblemSpec((0.0,), (-1.0,), 1.0, f, f, (DIRICHLET, DIRICHLET))
    with pytest.raises(ValueError):
        ProblemSpec((0.0,), (1.0,), 1.0, f, f, (DIRICHLET,))
    with pytest.raises(ValueError):
        ProblemSpec((0.0,), (1.0,), 1.0, f, f, (DIRICHLET, DIRICHLET), nu1=2.0, nu2=1.0)


def test_check_coefficients_rejects_negative_reaction():
    f = lambda x, t: np.zeros(np.asarray(x).shape[:-1])
    spec = ProblemSpec((0.0,), (1.0,), 1.0, f, f, (DIRICHLET, DIRICHLET),
                       reaction=lambda x, t: -np.ones(np.asarray(x).shape[:-1]))
    with pytest.raises(ValueError):
        spec.check_coefficients(np.linspace(0, 1, 5)[:, None], [0.0])


def _discrete_min_eig_1d(n, right_dirichlet):
    h = 1.0 / n
    if right_dirichlet:
        m = n - 1
        main = 2 * np.ones(m)
        off = -np.ones(m - 1)
    else:
        m = n
        main = 2 * np.ones(m)
        main[-1] = 1.0  # one-sided Neumann row, scaled below
        off = -np.ones(m - 1)
    from scipy.linalg import eigh_tridiagonal

    lam = eigh_tridiagonal(main, off, select="i", select_range=(0, 0))[0][0]
    return lam / h ** 2


def test_friedrichs_constant_dirichlet_interval():
    spec, _ = preset_problem("ex1")
    c = embedding_constants(spec)
    assert c.c_f == pytest.approx(1 / np.pi, rel=1e-14)
    assert c.c_tr is None
    c_discrete = 1 / np.sqrt(_discrete_min_eig_1d(10_000, True))
    assert abs(c.c_f - c_discrete) < 1e-4


def test_friedrichs_and_trace_constants_mixed_interval():
    spec, _ = preset_problem("ex3")
    c = embedding_constants(spec)
    assert c.c_f == pytest.approx(2 / np.pi, rel=1e-14)
    assert c.c_tr == pytest.approx(1.0)
    c_discrete = 1 / np.sqrt(_discrete_min_eig_1d(10_000, False))
    assert abs(c.c_f - c_discrete) < 1e-3


def test_friedrichs_constant_unit_square():
    spec, _ = preset_problem("ex4")
    c = embedding_constants(spec)
    assert c.c_f == pytest.approx(1 / (np.pi * np.sqrt(2)), rel=1e-14)
    n = 200
    lam_1d = _discrete_min_eig_1d(n, True)
    assert abs(c.c_f - 1 / np.sqrt(2 * lam_1d)) < 1e-3


def test_trace_inequality_on_linear_function():
    # w(x) = x on (0, 1): |w(1)|^2 = 1 = ||w'||^2, so C_tr = 1 is sharp
    spec, _ = preset_problem("ex3")
    c = embedding_constants(spec)
    assert c.c_tr ** 2 * 1.0 >= 1.0 - 1e-14


def test_trace_override():
    spec, _ = preset_problem("ex3")
    assert embedding_constants(spec, c_tr=0.5).c_tr == 0.5


def test_weighted_error_norm_examples():
    w = NormWeights(1.0, 1.0, 1.0)
    assert weighted_error_norm(0.0, 0.0, 0.0, w) == 0.0
    assert weighted_error_norm(1.0, 1.0, 1.0, w) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        weighted_error_norm(-1.0, 0.0, 0.0, w)


def test_majorant_weights_instantiate_definition():
    w = MajorantParams(delta=1.0, gamma=1.0).error_weights
    assert (w.nu, w.rho, w.zeta) == pytest.approx((1.0, 1.0, 1.0))
    assert w.combine(2.0, 0.0, 3.0, 5.0) == pytest.approx(2.0 + 3.0 + 5.0)


def test_efficiency_indexes_examples():
    assert efficiency_indexes(4.0, 1.0, 1.0) == pytest.approx((2.0, 1.0, 2.0))
    assert efficiency_indexes(1.0, 0.0, 1.0)[2] == np.inf
    with pytest.raises(ZeroDivisionError):
        efficiency_indexes(1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        efficiency_indexes(-1.0, 1.0, 1.0)


@given(st.floats(1e-8, 1e8), st.floats(0, 1e8), st.floats(1e-8, 1e8))
def test_efficiency_index_identity(maj, mino, err):
    i_maj, i_min, i_eff = efficiency_indexes(maj, mino, err)
    if mino > 0:
        assert i_eff == pytest.approx(i_maj / i_min, rel=1e-12)


@settings(max_examples=50)
@given(st.floats(0, 10), st.floats(0, 10), st.floats(0, 10), st.floats(0, 10))
def test_weighted_norm_monotone_in_components(g, l2, r, e):
    w = NormWeights(1.0, 0.5, 1.0, 0.7)
    base = w.combine(g, l2, r, e)
    assert w.combine(g + 1, l2, r, e) >= base
    assert w.combine(g, l2, r, e + 1) >= base
