import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parabolic_bounds.discretization import FEMSpace, build_space_time_grid, interpolate_exact, true_error_components
from parabolic_bounds.flux import reconstruct_flux
from parabolic_bounds.majorant import MajorantParams, majorant_general, two_sided_weights
from parabolic_bounds.minorant import (
    MinorantParams,
    SpaceTimeTestField,
    maximize_minorant,
    maximize_minorant_slab,
    minorant_incremental,
    minorant_value,
)
from parabolic_bounds.problem import embedding_constants, preset_problem

from conftest import solved


def _kappas(spec, c, kappa=1e-3, reaction=False):
    return two_sided_weights(kappa, c, with_reaction=reaction)


def _random_eta(space, tg, rng, scale=1.0):
    eta = SpaceTimeTestField(space, tg)
    free = space.free_dofs
    eta.levels[:, free] = scale * rng.standard_normal((tg.K + 1, free.size))
    eta.alpha[:, free] = scale * rng.standard_normal((tg.K, free.size))
    return eta


def test_params_validation():
    with pytest.raises(ValueError):
        MinorantParams(kappa=(2.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        MinorantParams(kappa=(0.0, 1.0, 0.0, 2.0))
    with pytest.raises(ValueError):
        MinorantParams(kappa=(2.0, -1.0, 0.0, 2.0))


def test_zero_test_function_gives_zero(ex1_small):
    spec, _, c, v = ex1_small
    eta = SpaceTimeTestField(FEMSpace(v.mesh, bubbles=True), v.tgrid)
    b = minorant_value(v, eta, spec, MinorantParams(kappa=_kappas(spec, c)[1]))
    assert b.total == 0.0
    np.testing.assert_array_equal(b.cumulative, 0.0)


def test_test_function_must_vanish_on_boundary(ex1_small):
    spec, _, c, v = ex1_small
    eta = SpaceTimeTestField(FEMSpace(v.mesh), v.tgrid)
    eta.levels[:, 0] = 1.0
    with pytest.raises(ValueError):
        minorant_value(v, eta, spec)


def test_kappa_restrictions():
    spec, _, c, v = solved("ex2", 6, 3)
    space = FEMSpace(v.mesh)
    eta = _random_eta(space, v.tgrid, np.random.default_rng(0))
    with pytest.raises(ValueError):
        minorant_value(v, eta, spec, MinorantParams(kappa=(2.0, 1.0, 0.0, 2.0), bubbles=False))
    spec1, _, _, v1 = solved("ex1", 6, 3)
    eta1 = _random_eta(FEMSpace(v1.mesh), v1.tgrid, np.random.default_rng(0))
    with pytest.raises(ValueError):
        minorant_value(v1, eta1, spec1, MinorantParams(kappa=(2.0, 0.0, 0.0, 2.0)))
    with pytest.raises(ValueError):
        maximize_minorant(v1, spec1, MinorantParams(kappa=(2.0, 0.0, 0.0, 2.0)))


@settings(max_examples=25, deadline=None)
@given(
    name=st.sampled_from(["ex1", "ex1_gaussian", "ex2", "ex3", "ex4"]),
    seed=st.integers(0, 2 ** 16),
    scale=st.floats(1e-3, 10.0),
    kappa=st.floats(1e-4, 0.9),
    bubbles=st.booleans(),
)
def test_any_test_function_bounds_error_from_below(name, seed, scale, kappa, bubbles):
    spec, exact, c, v = solved(name, 5 if name != "ex4" else 3, 3)
    lam = spec.reaction(v.space.quadrature(2).points, 0.0)
    w, kap = two_sided_weights(kappa, c, with_reaction=bool(np.any(lam != 0)))
    space = FEMSpace(v.mesh, bubbles=bubbles)
    eta = _random_eta(space, v.tgrid, np.random.default_rng(seed), scale)
    b = minorant_value(v, eta, spec, MinorantParams(kappa=kap, bubbles=bubbles))
    err = true_error_components(v, exact, spec).weighted_sequence(w)
    assert np.all(b.cumulative <= err + 1e-9 * np.maximum(err, 1e-12))


@pytest.mark.parametrize("name", ["ex1", "ex1_gaussian", "ex3", "ex4"])
def test_maximised_minorant_sandwich(name):
    spec, exact, c, v = solved(name, 8 if name != "ex4" else 4, 4)
    lam = spec.reaction(v.space.quadrature(2).points, 0.0)
    w, kap = two_sided_weights(1e-3, c, with_reaction=bool(np.any(lam != 0)))
    mino = maximize_minorant(v, spec, MinorantParams(kappa=kap))
    err = true_error_components(v, exact, spec).weighted_sequence(w)
    params = MajorantParams(initial_order=5)
    maj = majorant_general(v, reconstruct_flux(v, spec, c, "optimize", params), spec, c, params)
    assert np.all(mino.cumulative <= err * (1 + 1e-9))
    assert np.all(maj.cumulative >= err * (1 - 1e-9))
    assert mino.total <= maj.total


def test_greedy_step_is_a_local_maximum(ex1_small):
    spec, _, c, v = ex1_small
    params = MinorantParams(kappa=_kappas(spec, c)[1])
    best = maximize_minorant(v, spec, params)
    eta = best.eta
    K = v.tgrid.K
    free = eta.space.free_dofs
    rng = np.random.default_rng(3)
    for _ in range(100):
        trial = SpaceTimeTestField(eta.space, eta.tgrid, eta.levels.copy(), eta.alpha.copy())
        scale = 10.0 ** rng.uniform(-6, 0)
        trial.levels[K, free] += scale * rng.standard_normal(free.size)
        trial.alpha[K - 1, free] += scale * rng.standard_normal(free.size)
        value = minorant_value(v, trial, spec, params).total
        assert value <= best.total + 1e-12 * abs(best.total)


def test_slab_maximiser_matches_global_sweep(ex1_small):
    spec, _, c, v = ex1_small
    params = MinorantParams(kappa=_kappas(spec, c)[1])
    best = maximize_minorant(v, spec, params)
    for k in range(1, v.tgrid.K):
        eta, _ = maximize_minorant_slab(v, spec, params, k, eta_start=best.eta)
        np.testing.assert_allclose(eta.levels[k + 1], best.eta.levels[k + 1], rtol=1e-8, atol=1e-12)
    eta2, _ = maximize_minorant_slab(v, spec, params, 1, eta_start=best.eta)
    np.testing.assert_allclose(eta2.levels[2], best.eta.levels[2], rtol=1e-8, atol=1e-12)


def test_closed_form_matches_quadrature(ex1_small):
    spec, _, c, v = ex1_small
    params = MinorantParams(kappa=_kappas(spec, c)[1], source_mode="interpolated")
    eta = _random_eta(FEMSpace(v.mesh, bubbles=True), v.tgrid, np.random.default_rng(11))
    direct = minorant_value(v, eta, spec, params)
    closed = minorant_incremental(v, spec, params, eta)
    for name in ("g1", "g2", "g3", "f", "g4"):
        np.testing.assert_allclose(getattr(closed, name), getattr(direct, name), rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(closed.cumulative, direct.cumulative, rtol=1e-12)


def test_zero_levels_give_zero_cumulative(ex1_small):
    spec, _, c, v = ex1_small
    params = MinorantParams(kappa=_kappas(spec, c)[1], source_mode="interpolated")
    eta = SpaceTimeTestField(FEMSpace(v.mesh, bubbles=True), v.tgrid)
    np.testing.assert_array_equal(minorant_incremental(v, spec, params, eta).cumulative, 0.0)


def test_interpolant_error_is_captured():
    spec, exact = preset_problem("ex1")
    c = embedding_constants(spec)
    mesh, tg = build_space_time_grid(spec, 80, 80)
    v = interpolate_exact(exact, mesh, tg)
    w, kap = two_sided_weights(1e-3, c)
    mino = maximize_minorant(v, spec, MinorantParams(kappa=kap))
    err = true_error_components(v, exact, spec).weighted(w)
    assert mino.total / err >= 0.95
