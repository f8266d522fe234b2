import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from parabolic_bounds.discretization import (
    TIME_MOMENTS,
    AnalyticField,
    FEMSpace,
    SpatialMesh,
    TimeGrid,
    build_space_time_grid,
    exact_energy_components,
    gauss_legendre,
    interpolate_exact,
    slab_integral,
    solve_parabolic,
    tensor_rule,
    time_moment_quadrature,
    time_moments,
    true_error_components,
)
from parabolic_bounds.problem import DIRICHLET, preset_problem


def _zero(x, t=None):
    return np.zeros(np.asarray(x).shape[:-1])


# -- meshes -----------------------------------------------------------------


def test_interval_nodes():
    mesh = SpatialMesh((0.0,), (1.0,), (4,), (DIRICHLET, DIRICHLET))
    np.testing.assert_allclose(mesh.nodes[:, 0], [0, 0.25, 0.5, 0.75, 1])
    assert mesh.n_elements == 4
    np.testing.assert_array_equal(mesh.free_nodes, [1, 2, 3])


def test_square_counts():
    spec, _ = preset_problem("ex4")
    mesh, _ = build_space_time_grid(spec, 50, 10)
    assert mesh.n_elements == 2500
    assert mesh.n_nodes == 2601
    assert mesh.dirichlet_mask.sum() == 4 * 50


def test_connectivity_is_counterclockwise_free_bit_order():
    mesh = SpatialMesh((0.0, 0.0), (1.0, 1.0), (2, 2), ("dirichlet",) * 4)
    # local node l sits at offset (l & 1, l >> 1)
    el = mesh.connectivity[0]
    np.testing.assert_allclose(mesh.nodes[el], [[0, 0], [0.5, 0], [0, 0.5], [0.5, 0.5]])


def test_time_grid():
    tg = TimeGrid(10.0, 40)
    assert tg.tau == pytest.approx(0.25)
    np.testing.assert_allclose(tg.levels, np.arange(41) / 4)
    with pytest.raises(ValueError):
        TimeGrid(1.0, 0)
    with pytest.raises(IndexError):
        tg.slab(40)


# -- quadrature ---------------------------------------------------------------


@given(st.integers(1, 8), st.data())
def test_gauss_legendre_exact_for_degree(n, data):
    deg = data.draw(st.integers(0, 2 * n - 1))
    s, w = gauss_legendre(n)
    assert np.dot(w, s ** deg) == pytest.approx(1 / (deg + 1), rel=1e-13)


def test_tensor_rule_weights():
    ref, w = tensor_rule(3, 2)
    assert ref.shape == (9, 2)
    assert w.sum() == pytest.approx(1.0)


def test_time_moment_examples():
    assert time_moments(1.0, "(t-t_k)(t_{k+1}-t)") == pytest.approx(1 / 6, rel=1e-15)
    assert time_moments(2.0, "(t_k+t_{k+1}-2t)^2") == pytest.approx(8 / 3, rel=1e-15)
    with pytest.raises(ValueError):
        time_moments(1.0, "nope")
    with pytest.raises(ValueError):
        time_moments(0.0, "(t-t_k)")


@pytest.mark.parametrize("kind", sorted(TIME_MOMENTS))
@pytest.mark.parametrize("tau", [0.1, 1.0, 2.5])
def test_time_moments_match_quadrature(kind, tau):
    exact = time_moments(tau, kind)
    ref = time_moment_quadrature(tau, kind)
    assert abs(exact - ref) <= 1e-13 * max(abs(ref), tau ** 5)


def test_slab_integral_examples():
    mesh = SpatialMesh((0.0,), (1.0,), (5,), (DIRICHLET, DIRICHLET))
    one = lambda x, t: np.ones(x.shape[:-1])
    assert slab_integral(one, mesh, (0.0, 0.3)) == pytest.approx(0.3)
    tau = 0.7
    val = slab_integral(lambda x, t: x[..., 0] ** 2 * t ** 2, mesh, (0.0, tau))
    assert val == pytest.approx(tau ** 3 / 9, rel=1e-13)
    # degree (3, 3) is integrated exactly by two points per direction
    val = slab_integral(lambda x, t: x[..., 0] ** 3 * t ** 3, mesh, (1.0, 2.0), 2, 2)
    assert val == pytest.approx(0.25 * (16 - 1) / 4, rel=1e-13)


# -- the Q1 space -------------------------------------------------------------


@pytest.mark.parametrize("dim,bubbles", [(1, False), (1, True), (2, False), (2, True)])
def test_mass_and_stiffness_basic_identities(dim, bubbles):
    tags = ("dirichlet",) * (2 * dim)
    mesh = SpatialMesh((0.0,) * dim, (1.0,) * dim, (4,) * dim, tags)
    space = FEMSpace(mesh, bubbles=bubbles)
    M = space.mass_matrix(3)
    K = space.stiffness_matrix(3)
    ones = np.zeros(space.n_dofs)
    ones[: mesh.n_nodes] = 1.0
    assert ones @ M @ ones == pytest.approx(1.0)
    np.testing.assert_allclose(K @ ones, 0.0, atol=1e-12)
    assert abs(M - M.T).max() < 1e-14 and abs(K - K.T).max() < 1e-14


def test_interpolation_reproduces_bilinear():
    mesh = SpatialMesh((0.0, 0.0), (1.0, 2.0), (3, 5), ("dirichlet",) * 4)
    space = FEMSpace(mesh)
    f = lambda x: 1 + 2 * x[..., 0] - x[..., 1] + 3 * x[..., 0] * x[..., 1]
    coef = space.interpolate(f)
    pts = space.quadrature(3).points
    np.testing.assert_allclose(space.evaluate(coef, 3), f(pts), atol=1e-13)
    g = space.gradient(coef, 3)
    np.testing.assert_allclose(g[..., 0], 2 + 3 * pts[..., 1], atol=1e-12)
    np.testing.assert_allclose(g[..., 1], -1 + 3 * pts[..., 0], atol=1e-12)


# -- solver -------------------------------------------------------------------


def test_zero_data_gives_zero_solution():
    spec, _ = preset_problem("zero")
    mesh, tg = build_space_time_grid(spec, 6, 3)
    v = solve_parabolic(spec, mesh, tg)
    assert np.all(v.values == 0)


def test_single_cell_has_no_interior_dofs():
    spec, _ = preset_problem("ex1")
    mesh, tg = build_space_time_grid(spec, 1, 2)
    v = solve_parabolic(spec, mesh, tg)
    assert v.space.free_dofs.size == 0
    assert np.all(v.values == 0)


@pytest.mark.parametrize("scheme", ["backward_euler", "crank_nicolson"])
def test_solver_converges(scheme):
    spec, exact = preset_problem("ex1")
    errs = []
    for n in (8, 16):
        mesh, tg = build_space_time_grid(spec, n, 4 * n)
        v = solve_parabolic(spec, mesh, tg, scheme=scheme)
        errs.append(true_error_components(v, exact, spec).cumulative(tg.K)[0])
    assert errs[1] < errs[0] / 3


def test_solver_rejects_unknown_scheme():
    spec, _ = preset_problem("ex1")
    mesh, tg = build_space_time_grid(spec, 4, 2)
    with pytest.raises(ValueError):
        solve_parabolic(spec, mesh, tg, scheme="rk4")


def test_field_time_interpolation(ex1_small):
    _, _, _, v = ex1_small
    tg = v.tgrid
    mid = 0.5 * (tg.levels[1] + tg.levels[2])
    np.testing.assert_allclose(v.at(mid), 0.5 * (v.values[1] + v.values[2]))


# -- true errors --------------------------------------------------------------


def test_error_of_exact_field_is_zero():
    spec, exact = preset_problem("ex4")
    mesh, tg = build_space_time_grid(spec, 4, 3)
    u = AnalyticField(exact, FEMSpace(mesh), tg)
    ec = true_error_components(u, exact, spec)
    assert max(ec.grad_sq.max(), ec.l2_sq.max(), ec.final_sq.max()) < 1e-25


def test_exact_energy_of_ex1():
    spec, exact = preset_problem("ex1")
    mesh, tg = build_space_time_grid(spec, 4, 5)
    uc = exact_energy_components(exact, spec, FEMSpace(mesh), tg)
    g, l2, _, e = uc.cumulative(tg.K)
    # int (1-2x)^2 = 1/3, int x^2(1-x)^2 = 1/30, int_0^10 (t^2+t+1)^2 = 26110
    assert g == pytest.approx(26110 / 3, rel=1e-12)
    assert l2 == pytest.approx(26110 / 30, rel=1e-12)
    assert e == pytest.approx(111 ** 2 / 30, rel=1e-12)


def test_interpolant_gradient_error_rate():
    spec, exact = preset_problem("ex1")
    errs = []
    for n in (10, 20, 40):
        mesh, tg = build_space_time_grid(spec, n, 10 * n)
        v = interpolate_exact(exact, mesh, tg)
        errs.append(true_error_components(v, exact, spec).cumulative(tg.K)[0])
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    np.testing.assert_allclose(rates, 2.0, atol=0.05)


def test_elementwise_errors_sum_to_total(ex4_small):
    spec, exact, _, v = ex4_small
    ec = true_error_components(v, exact, spec, elementwise=True)
    np.testing.assert_allclose(ec.grad_elements.sum(axis=1), ec.grad_sq, rtol=1e-12)


def test_cumulative_components_nondecreasing(ex1_small):
    spec, exact, _, v = ex1_small
    ec = true_error_components(v, exact, spec, 3, 3)
    grads = [ec.cumulative(k)[0] for k in range(v.tgrid.K + 1)]
    assert np.all(np.diff(grads) >= 0)
