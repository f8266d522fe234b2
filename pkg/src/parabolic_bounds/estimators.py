"""Estimator-style wrappers around the functional core.

The objects follow the scikit-learn conventions for hyper-parameters
(``get_params``/``set_params``, fitted attributes with a trailing underscore)
but take a problem and an approximation instead of a data matrix.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .discretization import build_space_time_grid, solve_parabolic
from .flux import reconstruct_flux
from .indicators import bulk_mark, element_indicator
from .majorant import MajorantParams, majorant_general, two_sided_weights
from .minorant import MinorantParams, maximize_minorant
from .problem import efficiency_indexes, embedding_constants
from .validation import (
    check_cells,
    check_field,
    check_flux_mode,
    check_kappa,
    check_mu_mode,
    check_positive_int,
    check_slab,
    check_spec,
    check_theta,
)


class ParabolicSolver(BaseEstimator):
    """Q1 finite elements in space with implicit time stepping.

    Parameters
    ----------
    cells : int or tuple of int
        Elements per axis.
    slabs : int
        Number of time steps.
    scheme : {"backward_euler", "crank_nicolson"}
    quad_order : int
        Gauss points per axis for the load vector.
    """

    def __init__(self, cells=20, slabs=20, scheme="backward_euler", quad_order=3):
        self.cells = cells
        self.slabs = slabs
        self.scheme = scheme
        self.quad_order = quad_order

    def fit(self, spec):
        spec = check_spec(spec)
        cells = check_cells(self.cells, spec.dim)
        K = check_positive_int(self.slabs, "slabs")
        self.mesh_, self.tgrid_ = build_space_time_grid(spec, cells, K)
        self.solution_ = solve_parabolic(spec, self.mesh_, self.tgrid_, self.scheme, self.quad_order)
        self.spec_ = spec
        return self

    def predict(self, t):
        """Nodal values at time ``t`` (linear between time levels)."""
        check_is_fitted(self, "solution_")
        return self.solution_.at(t)


class FunctionalMajorant(BaseEstimator):
    """Guaranteed upper bound of the error for a given approximation.

    Parameters
    ----------
    flux : {"average", "optimize", "optimize+enrich"}
        How the auxiliary flux is built.
    delta, gamma : float
        Norm weights; see :class:`MajorantParams`.
    mu : {"zero", "one", "optimal"} or callable
    beta : float, optional
        Fixed balancing parameter; optimised per slab when omitted.
    rounds : int
        Alternation rounds of the flux optimisation.
    """

    def __init__(self, flux="optimize", delta=1.0, gamma=1.0, mu="optimal", beta=None, rounds=3):
        self.flux = flux
        self.delta = delta
        self.gamma = gamma
        self.mu = mu
        self.beta = beta
        self.rounds = rounds

    def _params(self):
        return MajorantParams(delta=self.delta, gamma=self.gamma, mu=check_mu_mode(self.mu), beta=self.beta)

    def fit(self, v, spec, constants=None):
        spec = check_spec(spec)
        check_field(v, spec)
        check_flux_mode(self.flux)
        params = self._params()
        self.constants_ = constants or embedding_constants(spec)
        self.flux_ = reconstruct_flux(v, spec, self.constants_, self.flux, params, rounds=self.rounds)
        self.breakdown_ = majorant_general(v, self.flux_, spec, self.constants_, params)
        self.error_weights_ = params.error_weights
        return self

    def transform(self, v=None):
        """Cumulative majorant at every time level."""
        check_is_fitted(self, "breakdown_")
        return self.breakdown_.cumulative

    def score(self, error_sq):
        """Efficiency index against the squared error at the final time."""
        check_is_fitted(self, "breakdown_")
        return efficiency_indexes(self.breakdown_.total, 0.0, error_sq)[0]


class FunctionalMinorant(BaseEstimator):
    """Guaranteed lower bound of the two-sided error norm.

    Parameters
    ----------
    kappa : float
        Share of the gradient term moved to the L2 term.
    delta, gamma : float
        Weights of the matching majorant.
    bubbles : bool
        Add element bubbles to the spatial test space.
    """

    def __init__(self, kappa=1e-3, delta=1.0, gamma=1.0, bubbles=True):
        self.kappa = kappa
        self.delta = delta
        self.gamma = gamma
        self.bubbles = bubbles

    def fit(self, v, spec, constants=None):
        spec = check_spec(spec)
        check_field(v, spec)
        kappa = check_kappa(self.kappa, self.delta)
        self.constants_ = constants or embedding_constants(spec)
        lam = spec.reaction(v.space.quadrature(2).points, 0.0)
        self.error_weights_, kappas = two_sided_weights(
            kappa, self.constants_, self.delta, spec.nu1, self.gamma,
            with_reaction=bool(np.any(np.asarray(lam) != 0)))
        self.breakdown_ = maximize_minorant(v, spec, MinorantParams(kappa=kappas, bubbles=self.bubbles))
        return self

    def transform(self, v=None):
        check_is_fitted(self, "breakdown_")
        return self.breakdown_.cumulative

    def score(self, error_sq):
        check_is_fitted(self, "breakdown_")
        return efficiency_indexes(0.0, max(self.breakdown_.total, 0.0), error_sq)[1]


class ErrorIndicator(BaseEstimator):
    """Element indicator on one slab and bulk marking.

    Parameters
    ----------
    slab : int
        Slab index; negative values count from the end.
    theta : float
        Bulk parameter used by :meth:`predict`.
    """

    def __init__(self, slab=-1, theta=0.3):
        self.slab = slab
        self.theta = theta

    def fit(self, v, y, spec):
        spec = check_spec(spec)
        check_field(v, spec)
        self.slab_ = check_slab(self.slab, v.tgrid.K)
        self.indicator_ = element_indicator(v, y, spec, self.slab_)
        return self

    def transform(self, v=None):
        check_is_fitted(self, "indicator_")
        return self.indicator_.values

    def predict(self, v=None):
        """Boolean mask of marked elements."""
        check_is_fitted(self, "indicator_")
        (theta,) = check_theta(self.theta)
        return bulk_mark(self.indicator_, theta).mask
