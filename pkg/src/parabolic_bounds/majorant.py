"""Guaranteed upper bound of the error (functional majorant).

For a conforming approximation ``v`` and any flux ``y`` with square
integrable divergence the majorant is

    ||phi - v(0)||^2 + int_0^T ( gamma ||mu R_f / sqrt(lambda)||^2
        + alpha_1 C_F^2 / nu_1 ||(1 - mu) R_f||^2 + alpha_2 ||R_d||^2_{A^-1}
        + alpha_3 C_tr^2 / nu_1 ||R_b||^2_{Gamma_N} ) dt

with ``R_f = f - v_t - lambda v + div y``, ``R_d = y - A grad v`` and
``R_b = g - y.n``.  It bounds ``(2 - delta) |||grad e|||^2
+ (2 - 1/gamma) ||sqrt(lambda) e||^2 + ||e(T)||^2`` whenever
``1/alpha_1 + 1/alpha_2 + 1/alpha_3 = delta``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .discretization.quadrature import gauss_legendre
from .problem import NormWeights

LAMBDA_FLOOR = 1e-12
BETA_MIN = 1e-8
BETA_MAX = 1e8
MU_MODES = ("zero", "one", "optimal")


@dataclass(frozen=True)
class MajorantParams:
    """Free parameters of the majorant.

    Parameters
    ----------
    delta : float
        In (0, 2]; the weight of the gradient error is ``2 - delta``.
    gamma : float
        At least 1/2; the reaction weight is ``2 - 1/gamma``.
    mu : {"zero", "one", "optimal"} or callable
        Splitting of the equation residual between the reaction channel and
        the Friedrichs channel.  A callable is evaluated as ``mu(x, t)``.
    alpha : tuple of float or callable, optional
        Fixed ``(alpha_1, alpha_2[, alpha_3])``, each a number or a function
        of ``t``.  When omitted the weights are optimised slab by slab.
    beta : float or array_like, optional
        Fixed balancing parameter (scalar or one per slab) giving
        ``alpha_1 = (1 + 1/beta)/delta`` and ``alpha_2 = (1 + beta)/delta``.
    source_mode : {"quadrature", "interpolated"}
        Whether ``f`` (and ``lambda v``) are sampled at the time quadrature
        points or replaced by their linear interpolant between time levels.
    """

    delta: float = 1.0
    gamma: float = 1.0
    mu: Union[str, Callable] = "zero"
    alpha: Optional[tuple] = None
    beta: Optional[object] = None
    source_mode: str = "quadrature"
    space_order: int = 3
    time_order: int = 3
    initial_order: int = 6
    lam_floor: float = LAMBDA_FLOOR
    mu_iterations: int = 100

    def __post_init__(self):
        if not 0 < self.delta <= 2:
            raise ValueError("delta must lie in (0, 2]")
        if self.gamma < 0.5:
            raise ValueError("gamma must be at least 1/2")
        if isinstance(self.mu, str) and self.mu not in MU_MODES:
            raise ValueError(f"mu must be one of {MU_MODES} or a callable")
        if self.source_mode not in ("quadrature", "interpolated"):
            raise ValueError("source_mode must be 'quadrature' or 'interpolated'")
        if self.alpha is not None and self.beta is not None:
            raise ValueError("give either alpha or beta, not both")
        if self.alpha is not None and len(self.alpha) not in (2, 3):
            raise ValueError("alpha needs two or three entries")

    @property
    def error_weights(self):
        """Weights of the error norm that this majorant bounds."""
        return NormWeights(nu=np.sqrt(2 - self.delta), theta=0.0, zeta=1.0, rho=np.sqrt(2 - 1 / self.gamma))

    def alpha_at(self, t):
        vals = [a(t) if callable(a) else float(a) for a in self.alpha]
        check_alpha_relation(vals, self.delta)
        return vals


def check_alpha_relation(alpha, delta, tol=1e-12):
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0):
        raise ValueError("alpha weights must be positive")
    gap = abs(np.sum(1.0 / alpha) - delta)
    if gap > tol:
        raise ValueError(f"1/alpha_1 + 1/alpha_2 + 1/alpha_3 differs from delta by {gap:.3g}")


def optimal_beta(d_sq, f_weighted_sq, beta_min=BETA_MIN, beta_max=BETA_MAX):
    """Minimiser of ``(1 + beta) d_sq + (1 + 1/beta) f_weighted_sq`` over beta > 0.

    Degenerate cases return the floor (``f_weighted_sq = 0``) or the cap
    (``d_sq = 0``).
    """
    if d_sq < 0 or f_weighted_sq < 0:
        raise ValueError("squared terms must be nonnegative")
    if f_weighted_sq == 0:
        return beta_min
    if d_sq == 0:
        return beta_max
    return float(np.clip(np.sqrt(f_weighted_sq / d_sq), beta_min, beta_max))


def optimal_alpha(terms, delta):
    """Weights minimising ``sum alpha_i P_i`` under ``sum 1/alpha_i = delta``.

    Returns ``(alpha, value)`` with ``value = (sum sqrt(P_i))^2 / delta``.
    Only strictly positive terms take part; the others get an infinite weight.
    """
    P = np.asarray(terms, dtype=float)
    roots = np.sqrt(np.maximum(P, 0.0))
    s = roots.sum()
    alpha = np.full(P.shape, np.inf)
    if s == 0:
        alpha[:] = len(P) / delta
        return alpha, 0.0
    pos = roots > 0
    alpha[pos] = s / (delta * roots[pos])
    return alpha, float(s ** 2 / delta)


def optimal_mu(lam, c_f, beta, gamma, delta=1.0, nu1=1.0, lam_floor=LAMBDA_FLOOR):
    """Pointwise minimiser of the residual weight ``gamma mu^2/lambda + a (1-mu)^2``.

    With ``a = alpha_1 C_F^2 / nu_1`` and ``alpha_1 = (1 + 1/beta)/delta`` this
    is ``a lambda / (gamma + a lambda)``; for ``delta = nu_1 = 1`` it equals
    ``C_F^2 (1 + beta) lambda / (beta gamma + C_F^2 (1 + beta) lambda)``.
    """
    if not (beta > 0 and gamma > 0):
        raise ValueError("beta and gamma must be positive")
    a = (1 + 1 / beta) / delta * c_f ** 2 / nu1
    return _mu_hat(np.asarray(lam, dtype=float), a, gamma, lam_floor)


def _mu_hat(lam, a, gamma, lam_floor):
    lam = np.asarray(lam, dtype=float)
    mu = np.where(lam >= lam_floor, a * lam / (gamma + a * np.maximum(lam, lam_floor)), 0.0)
    return mu


def residual_weight(mu, lam, a, gamma, lam_floor=LAMBDA_FLOOR):
    """``gamma mu^2 / lambda + a (1 - mu)^2`` with mu forced to 0 below the floor."""
    lam = np.asarray(lam, dtype=float)
    safe = lam >= lam_floor
    mu = np.where(safe, mu, 0.0)
    return np.where(safe, gamma * mu ** 2 / np.where(safe, lam, 1.0), 0.0) + a * (1 - mu) ** 2


# ---------------------------------------------------------------------------
# residual sampling


@dataclass
class TimeSample:
    """Everything the estimators need at one time quadrature point of a slab."""

    t: float
    s: float
    weight: float  # time weight, includes the slab length
    r0: np.ndarray  # f - v_t - lambda v at element points
    p: np.ndarray  # A grad v
    A_inv: Optional[np.ndarray]  # None when A is the identity
    lam: np.ndarray


@dataclass
class SlabSamples:
    k: int
    samples: list
    space_weights: np.ndarray  # per element point, shape (n_qp,)


def _space_of(v):
    return v.space


def sample_slab(v, spec, k, space_order=3, time_order=3, source_mode="quadrature"):
    """Sample ``f - v_t - lambda v`` and ``A grad v`` on slab ``k``."""
    space = _space_of(v)
    quad = space.quadrature(space_order)
    x = quad.points
    tg = v.tgrid
    t0, tau = tg.levels[k], tg.tau
    s_pts, s_wts = gauss_legendre(time_order)

    if source_mode == "interpolated":
        ends = []
        for s_end in (0.0, 1.0):
            t_end = t0 + s_end * tau
            val, _, _ = v.sample(space_order, k, s_end)
            lam_end = np.broadcast_to(np.asarray(spec.reaction(x, t_end), dtype=float), val.shape)
            ends.append(np.asarray(spec.source(x, t_end), dtype=float) - lam_end * val)

    out = []
    for s, ws in zip(s_pts, s_wts):
        t = t0 + s * tau
        val, grad, vt = v.sample(space_order, k, s)
        lam = np.broadcast_to(np.asarray(spec.reaction(x, t), dtype=float), val.shape)
        if source_mode == "interpolated":
            r0 = (1 - s) * ends[0] + s * ends[1] - vt
        else:
            r0 = np.asarray(spec.source(x, t), dtype=float) - vt - lam * val
        if spec.identity_diffusion:
            p, A_inv = grad, None
        else:
            A = np.asarray(spec.diffusion(x, t), dtype=float)
            p = np.einsum("eqij,eqj->eqi", A, grad)
            A_inv = np.linalg.inv(A)
        out.append(TimeSample(t, s, ws * tau, r0, p, A_inv, lam))
    return SlabSamples(k, out, quad.weights)


def flux_norm_sq(diff, A_inv):
    if A_inv is None:
        return np.sum(diff ** 2, axis=-1)
    return np.einsum("eqi,eqij,eqj->eq", diff, A_inv, diff)


@dataclass
class SlabResiduals:
    """Sampled residuals ``R_f`` and ``R_d`` of one slab for a given flux."""

    samples: SlabSamples
    r_f: list
    r_d_sq: list
    r_b_sq: float  # integral of R_b^2 over the Neumann part of the slab

    def terms(self, mu_list, c_f, nu1, gamma, lam_floor):
        """Raw integrals ``(reaction, F, D)`` for given mu samples."""
        wq = self.samples.space_weights
        react = fried = flux = 0.0
        for smp, rf, rd, mu in zip(self.samples.samples, self.r_f, self.r_d_sq, mu_list):
            safe = smp.lam >= lam_floor
            m = np.where(safe, mu, 0.0)
            if np.any(m > 0):
                react += smp.weight * np.sum((gamma * m ** 2 * rf ** 2 / np.where(safe, smp.lam, 1.0)) @ wq)
            fried += smp.weight * np.sum(((1 - m) ** 2 * rf ** 2) @ wq)
            flux += smp.weight * np.sum(rd @ wq)
        return react, c_f ** 2 / nu1 * fried, flux


def slab_residuals(samples, y, spec, space_order, boundary_order=None):
    """Combine sampled data with flux ``y`` into residuals on one slab."""
    k = samples.k
    r_f, r_d = [], []
    for smp in samples.samples:
        yv, div = y.sample(space_order, k, smp.s)
        r_f.append(smp.r0 + div)
        r_d.append(flux_norm_sq(yv - smp.p, smp.A_inv))
    r_b = 0.0
    if spec.has_neumann:
        r_b = boundary_residual_sq(y, spec, k, boundary_order or space_order + 2)
    return SlabResiduals(samples, r_f, r_d, r_b)


def boundary_residual_sq(y, spec, k, order, time_order=4):
    """``int_slab int_{Gamma_N} (g - y.n)^2`` by tensor Gauss quadrature."""
    tg = y.tgrid
    s_pts, s_wts = gauss_legendre(time_order)
    total = 0.0
    for face in y.space.mesh.neumann_faces:
        fq = y.space.face_quadrature(face, order)
        for s, ws in zip(s_pts, s_wts):
            t = tg.levels[k] + s * tg.tau
            yn = y.normal_trace(face, order, k, s)
            g = np.asarray(spec.neumann(fq.points, t), dtype=float)
            total += ws * tg.tau * float(np.sum(((g - yn) ** 2) @ fq.weights))
    return total


# ---------------------------------------------------------------------------
# breakdown


@dataclass
class MajorantBreakdown:
    """Terms of the majorant per slab together with the parameters used.

    ``cumulative[k]`` is the bound on ``(0, t^k)``; ``cumulative[0]`` is the
    initial term.
    """

    initial: float
    reaction: np.ndarray
    friedrichs: np.ndarray
    flux: np.ndarray
    boundary: np.ndarray
    raw_f: np.ndarray
    raw_d: np.ndarray
    raw_b: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    delta: float
    gamma: float
    mu_mode: str
    slab_totals: np.ndarray = field(init=False)
    cumulative: np.ndarray = field(init=False)

    def __post_init__(self):
        self.slab_totals = self.reaction + self.friedrichs + self.flux + self.boundary
        self.cumulative = self.initial + np.concatenate([[0.0], np.cumsum(self.slab_totals)])

    @property
    def total(self):
        return float(self.cumulative[-1])

    @property
    def K(self):
        return len(self.slab_totals)

    def rows(self):
        """One dictionary per time level with cumulative terms."""
        out = []
        for k in range(self.K + 1):
            out.append(
                {
                    "level": k,
                    "maj_initial": self.initial,
                    "maj_reaction": float(np.sum(self.reaction[:k])),
                    "maj_friedrichs": float(np.sum(self.friedrichs[:k])),
                    "maj_flux": float(np.sum(self.flux[:k])),
                    "maj_boundary": float(np.sum(self.boundary[:k])),
                    "maj_total": float(self.cumulative[k]),
                    "beta": float(self.beta[k - 1]) if k > 0 else float("nan"),
                }
            )
        return out


def initial_error_sq(v, spec, order=6):
    """``||phi - v(0)||^2`` against the analytic initial data."""
    space = v.space
    quad = space.quadrature(order)
    phi = np.asarray(spec.initial(quad.points), dtype=float)
    v0 = v.sample_level(order, 0)
    return float(np.sum(((phi - v0) ** 2) @ quad.weights))


def _mu_samples(mode, samples, a, gamma, lam_floor):
    out = []
    for smp in samples.samples:
        if mode == "zero":
            out.append(np.zeros_like(smp.lam))
        elif mode == "one":
            out.append(np.where(smp.lam >= lam_floor, 1.0, 0.0))
        elif mode == "optimal":
            out.append(_mu_hat(smp.lam, a, gamma, lam_floor))
        else:
            raise ValueError(mode)
    return out


def _explicit_mu(func, samples, x, lam_floor):
    out = []
    for smp in samples.samples:
        mu = np.asarray(func(x, smp.t), dtype=float)
        mu = np.broadcast_to(mu, smp.lam.shape)
        if np.any(mu < 0) or np.any(mu > 1):
            raise ValueError("mu must take values in [0, 1]")
        out.append(np.where(smp.lam >= lam_floor, mu, 0.0))
    return out


def _alpha_from_beta(beta, delta):
    return np.array([(1 + 1 / beta) / delta, (1 + beta) / delta])


@dataclass
class SlabMajorant:
    reaction: float
    raw_f: float
    raw_d: float
    raw_b: float
    alpha: np.ndarray  # (alpha_1, alpha_2, alpha_3)
    beta: float
    mu: list

    @property
    def total(self):
        return self.reaction + self.alpha[0] * self.raw_f + self.alpha[1] * self.raw_d + self.boundary

    @property
    def boundary(self):
        return self.alpha[2] * self.raw_b if self.raw_b > 0 else 0.0


def _weights_for(raw_f, raw_d, raw_b, params, slab_time):
    """Alpha triple and beta for given raw terms (optimised unless fixed)."""
    delta = params.delta
    fixed = params.alpha is not None or params.beta is not None
    if fixed and raw_b > 0 and (params.alpha is None or len(params.alpha) == 2):
        raise ValueError("a nonzero boundary residual needs three alpha weights")
    if params.alpha is not None:
        a = params.alpha_at(slab_time)
        if len(a) == 2:
            a = list(a) + [np.inf]
        beta = a[1] * delta - 1
        return np.array(a, dtype=float), beta
    if params.beta is not None:
        beta = float(np.atleast_1d(params.beta)[0])
        a = _alpha_from_beta(beta, delta)
        return np.array([a[0], a[1], np.inf]), beta
    if raw_b > 0:
        alpha, _ = optimal_alpha([raw_f, raw_d, raw_b], delta)
        beta = alpha[1] * delta - 1 if np.isfinite(alpha[1]) else BETA_MAX
        return alpha, beta
    beta = optimal_beta(raw_d, raw_f)
    a = _alpha_from_beta(beta, delta)
    return np.array([a[0], a[1], np.inf]), beta


def slab_majorant(res, spec, constants, params, slab_time, x=None, beta_override=None):
    """Majorant contribution of one slab for fixed residuals.

    In ``optimal`` mu mode the pair (beta, mu) is found by alternating
    minimisation started from both mu = 0 and mu = 1; the smaller value wins.
    """
    c_f, nu1, gamma, floor = constants.c_f, spec.nu1, params.gamma, params.lam_floor
    c_tr = constants.c_tr if constants.c_tr is not None else 0.0
    raw_b = c_tr ** 2 / nu1 * res.r_b_sq if res.r_b_sq > 0 else 0.0
    if res.r_b_sq > 0 and constants.c_tr is None:
        raise ValueError("nonzero boundary residual needs a trace constant")
    if beta_override is not None:
        params = _replace_beta(params, beta_override)

    def evaluate(mu):
        react, F, D = res.terms(mu, c_f, nu1, gamma, floor)
        alpha, beta = _weights_for(F, D, raw_b, params, slab_time)
        return SlabMajorant(react, F, D, raw_b, alpha, beta, mu)

    mode = params.mu
    if callable(mode):
        return evaluate(_explicit_mu(mode, res.samples, x, floor))
    if mode != "optimal":
        return evaluate(_mu_samples(mode, res.samples, 0.0, gamma, floor))

    best = None
    for start in ("zero", "one"):
        cur = evaluate(_mu_samples(start, res.samples, 0.0, gamma, floor))
        for _ in range(params.mu_iterations):
            a = cur.alpha[0] * c_f ** 2 / nu1
            nxt = evaluate(_mu_samples("optimal", res.samples, a, gamma, floor))
            done = nxt.total >= cur.total * (1 - 1e-14)
            if nxt.total <= cur.total:
                cur = nxt
            if done:
                break
        if best is None or cur.total < best.total:
            best = cur
    return best


def _replace_beta(params, beta):
    from dataclasses import replace

    return replace(params, beta=float(beta), alpha=None)


def _beta_for_slab(params, k):
    if params.beta is None:
        return None
    b = np.atleast_1d(np.asarray(params.beta, dtype=float))
    return float(b[0] if b.size == 1 else b[k])


def majorant_general(v, y, spec, constants, params=None, slabs=None):
    """Majorant on every slab (or the listed ones) by space-time quadrature.

    Parameters
    ----------
    v : SpaceTimeField or AnalyticField
    y : FluxField or AnalyticFlux
    spec : ProblemSpec
    constants : EmbeddingConstants
    params : MajorantParams, optional

    Returns
    -------
    MajorantBreakdown
    """
    params = params or MajorantParams()
    if params.beta is not None:
        b = np.atleast_1d(np.asarray(params.beta, dtype=float))
        if np.any(b <= 0):
            raise ValueError("beta must be positive")
    K = v.tgrid.K
    slabs = range(K) if slabs is None else slabs
    cols = {name: np.zeros(K) for name in ("reaction", "fried", "flux", "bnd", "F", "D", "B", "beta")}
    alphas = np.full((K, 3), np.nan)
    x = v.space.quadrature(params.space_order).points
    for k in slabs:
        samples = sample_slab(v, spec, k, params.space_order, params.time_order, params.source_mode)
        res = slab_residuals(samples, y, spec, params.space_order)
        slab_time = v.tgrid.levels[k] + 0.5 * v.tgrid.tau
        sm = slab_majorant(res, spec, constants, params, slab_time, x, _beta_for_slab(params, k))
        cols["reaction"][k] = sm.reaction
        cols["fried"][k] = sm.alpha[0] * sm.raw_f
        cols["flux"][k] = sm.alpha[1] * sm.raw_d
        cols["bnd"][k] = sm.boundary
        cols["F"][k], cols["D"][k], cols["B"][k] = sm.raw_f, sm.raw_d, sm.raw_b
        cols["beta"][k] = sm.beta
        alphas[k] = sm.alpha
    mode = params.mu if isinstance(params.mu, str) else "explicit"
    return MajorantBreakdown(
        initial=initial_error_sq(v, spec, params.initial_order),
        reaction=cols["reaction"],
        friedrichs=cols["fried"],
        flux=cols["flux"],
        boundary=cols["bnd"],
        raw_f=cols["F"],
        raw_d=cols["D"],
        raw_b=cols["B"],
        alpha=alphas,
        beta=cols["beta"],
        delta=params.delta,
        gamma=params.gamma,
        mu_mode=mode,
    )


# ---------------------------------------------------------------------------
# incremental form


@dataclass
class IncrementalMajorant:
    cumulative: np.ndarray
    beta: np.ndarray
    d_terms: np.ndarray  # tau/3 int (R_d^k^2 + R_d^k R_d^k+1 + R_d^k+1^2)
    f_terms: np.ndarray  # same for R_f, without C_F^2
    initial: float


def majorant_incremental(v, y, spec, constants, beta=None, space_order=3, initial_order=6):
    """Closed-form slab recurrence for identity diffusion and pure Dirichlet data.

    ``v`` must be a :class:`SpaceTimeField` and ``y`` a flux with nodal levels;
    ``f`` and ``lambda v`` enter through their values at the time levels.
    ``beta`` is a scalar, one value per slab, or ``None`` for the per-slab
    optimum.
    """
    if not spec.identity_diffusion:
        raise ValueError("the incremental majorant assumes identity diffusion")
    if spec.has_neumann:
        raise ValueError("the incremental majorant assumes a pure Dirichlet boundary")
    if not hasattr(v, "values"):
        raise TypeError("the incremental majorant needs nodal time levels")
    tg = v.tgrid
    K, tau = tg.K, tg.tau
    space = v.space
    quad = space.quadrature(space_order)
    x, wq = quad.points, quad.weights
    betas = None if beta is None else np.broadcast_to(np.asarray(beta, dtype=float), (K,))
    d_terms = np.zeros(K)
    f_terms = np.zeros(K)
    used = np.zeros(K)
    dv = None
    for k in range(K):
        dv = space.evaluate((v.values[k + 1] - v.values[k]) / tau, space_order)
        R_d, R_f = [], []
        for lvl, s in ((k, 0.0), (k + 1, 1.0)):
            t = tg.levels[lvl]
            vk = space.evaluate(v.values[lvl], space_order)
            gk = space.gradient(v.values[lvl], space_order)
            yk, divk = y.sample(space_order, k, s)
            lam = np.broadcast_to(np.asarray(spec.reaction(x, t), dtype=float), vk.shape)
            R_d.append(yk - gk)
            R_f.append(divk - lam * vk + np.asarray(spec.source(x, t), dtype=float) - dv)
        d_terms[k] = tau / 3 * np.sum(
            np.sum(R_d[0] ** 2 + R_d[0] * R_d[1] + R_d[1] ** 2, axis=-1) @ wq
        )
        f_terms[k] = tau / 3 * np.sum((R_f[0] ** 2 + R_f[0] * R_f[1] + R_f[1] ** 2) @ wq)
        used[k] = optimal_beta(d_terms[k], constants.c_f ** 2 * f_terms[k]) if betas is None else betas[k]
    init = initial_error_sq(v, spec, initial_order)
    slab = (1 + used) * d_terms + constants.c_f ** 2 * (1 + 1 / used) * f_terms
    cumulative = init + np.concatenate([[0.0], np.cumsum(slab)])
    return IncrementalMajorant(cumulative, used, d_terms, f_terms, init)


# ---------------------------------------------------------------------------
# two-sided configuration


def two_sided_weights(kappa, constants, delta=1.0, nu1=1.0, gamma=1.0, with_reaction=False):
    """Weights making majorant and minorant bound the same error norm.

    The norm is ``(1 - kappa) |||grad e|||^2 + kappa nu_1 / C_F^2 ||e||^2
    + ||e(T)||^2``; with ``with_reaction`` the term
    ``(2 - 1/gamma) ||sqrt(lambda) e||^2`` is added on both sides.

    Returns
    -------
    weights : NormWeights
    kappas : tuple
        ``(kappa_1, kappa_2, kappa_3, kappa_4)`` for the minorant.
    """
    if not 0 < kappa < 2 - delta:
        raise ValueError("kappa must lie in (0, 2 - delta)")
    c_f = constants.c_f
    nu = np.sqrt(2 - delta - kappa)
    theta = np.sqrt(kappa * nu1) / c_f
    rho2 = (2 - 1 / gamma) if with_reaction else 0.0
    weights = NormWeights(nu=nu, theta=theta, zeta=1.0, rho=np.sqrt(rho2))
    kappas = (2 * nu ** 2, 2 * theta ** 2, 2 * rho2, 2.0)
    return weights, kappas
