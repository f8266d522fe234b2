"""Guaranteed lower bound of the error (functional minorant).

For any test function ``eta`` vanishing on the Dirichlet part,

    G_1 + G_2 + G_3 + G_4 + F  <=  k1/2 |||grad e|||^2
        + ||sqrt((k2 + k3 lambda)/2) e||^2 + k4/2 ||e(T)||^2

with

    G_1 = int -grad eta . A grad v - |grad eta|_A^2 / (2 k1)
    G_2 = int eta_t v - eta_t^2 / (2 k2)
    G_3 = int lambda (-v eta - eta^2 / (2 k3))
    G_4 = int_Omega -v(T) eta(T) - eta(T)^2 / (2 k4)
    F   = int f eta + int_{S_N} g eta + int_Omega phi eta(0).

Test functions are continuous in time and, on each slab, of the form
``eta^k (1 - s) + eta^{k+1} s + tau^2 s (1 - s) alpha`` with ``s`` the
relative time inside the slab.  The penalty in ``G_1`` is measured in the
A-norm so that the bound holds for non-identity diffusion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .discretization.quadrature import gauss_legendre
from .discretization.space import FEMSpace
from .problem import NormWeights


@dataclass(frozen=True)
class MinorantParams:
    """Weights ``kappa_1..kappa_4`` and evaluation settings.

    ``kappa_2`` or ``kappa_3`` may be zero when the matching error term is
    dropped; a zero ``kappa_3`` requires ``lambda = 0`` and a zero
    ``kappa_2`` forces test functions that are constant in time.
    """

    kappa: tuple = (2.0, 0.0, 0.0, 2.0)
    space_order: int = 4
    time_order: int = 4
    source_mode: str = "quadrature"
    bubbles: bool = True

    def __post_init__(self):
        if len(self.kappa) != 4:
            raise ValueError("need four kappa values")
        k1, k2, k3, k4 = self.kappa
        if not (k1 > 0 and k4 > 0):
            raise ValueError("kappa_1 and kappa_4 must be positive")
        if k2 < 0 or k3 < 0:
            raise ValueError("kappa_2 and kappa_3 must be nonnegative")
        if self.source_mode not in ("quadrature", "interpolated"):
            raise ValueError("source_mode must be 'quadrature' or 'interpolated'")

    @property
    def error_weights(self):
        """Weights of the error norm bounded from below."""
        k1, k2, k3, k4 = self.kappa
        return NormWeights(nu=np.sqrt(k1 / 2), theta=np.sqrt(k2 / 2), zeta=np.sqrt(k4 / 2), rho=np.sqrt(k3 / 2))


class SpaceTimeTestField:
    """Continuous-in-time test function with one time bubble per slab.

    Parameters
    ----------
    space : FEMSpace
        Scalar space of each level (possibly with element bubbles).
    tgrid : TimeGrid
    levels : ndarray, shape (K + 1, n_dofs)
    alpha : ndarray, shape (K, n_dofs)
    """

    def __init__(self, space, tgrid, levels=None, alpha=None):
        self.space = space
        self.mesh = space.mesh
        self.tgrid = tgrid
        K, n = tgrid.K, space.n_dofs
        self.levels = np.zeros((K + 1, n)) if levels is None else np.asarray(levels, dtype=float)
        self.alpha = np.zeros((K, n)) if alpha is None else np.asarray(alpha, dtype=float)
        if self.levels.shape != (K + 1, n) or self.alpha.shape != (K, n):
            raise ValueError("test function coefficients have the wrong shape")

    def check_boundary(self, tol=0.0):
        mask = self.space.dirichlet_mask
        if np.any(np.abs(self.levels[:, mask]) > tol) or np.any(np.abs(self.alpha[:, mask]) > tol):
            raise ValueError("test function must vanish on the Dirichlet boundary")

    def slab_coefficients(self, k, s):
        tau = self.tgrid.tau
        val = (1 - s) * self.levels[k] + s * self.levels[k + 1] + tau ** 2 * s * (1 - s) * self.alpha[k]
        dt = (self.levels[k + 1] - self.levels[k]) / tau + tau * (1 - 2 * s) * self.alpha[k]
        return val, dt

    def sample(self, order, k, s):
        val, dt = self.slab_coefficients(k, s)
        sp_ = self.space
        return sp_.evaluate(val, order), sp_.gradient(val, order), sp_.evaluate(dt, order)


@dataclass
class MinorantBreakdown:
    """Slab terms and the cumulative bound at every time level.

    ``cumulative[m]`` bounds the error on ``(0, t^m)`` from below:
    ``initial + sum_{k<m}(g1 + g2 + g3 + f)[k] + g4[m]``.
    """

    initial: float
    g1: np.ndarray
    g2: np.ndarray
    g3: np.ndarray
    f: np.ndarray
    g4: np.ndarray
    kappa: tuple
    eta: Optional[SpaceTimeTestField] = None
    cumulative: np.ndarray = field(init=False)

    def __post_init__(self):
        slab = self.g1 + self.g2 + self.g3 + self.f
        self.cumulative = self.initial + np.concatenate([[0.0], np.cumsum(slab)]) + self.g4

    @property
    def total(self):
        return float(self.cumulative[-1])

    def slab_terms(self):
        return self.g1 + self.g2 + self.g3 + self.f


# ---------------------------------------------------------------------------
# direct evaluation


def _check_kappa_reaction(kappa, lam):
    if kappa[2] == 0 and np.any(np.asarray(lam) > 0):
        raise ValueError("kappa_3 = 0 is only admissible where lambda vanishes")


def _source_samples(spec, v, k, order, s_pts, mode):
    """``f`` at the slab quadrature times (linear interpolant in 'interpolated' mode)."""
    x = v.space.quadrature(order).points
    tg = v.tgrid
    t0, tau = tg.levels[k], tg.tau
    if mode == "interpolated":
        f0 = np.asarray(spec.source(x, t0), dtype=float)
        f1 = np.asarray(spec.source(x, t0 + tau), dtype=float)
        return [(1 - s) * f0 + s * f1 for s in s_pts]
    return [np.asarray(spec.source(x, t0 + s * tau), dtype=float) for s in s_pts]


def _neumann_samples(spec, space, k, tg, order, s_pts, mode):
    out = []
    for face in space.mesh.neumann_faces:
        fq = space.face_quadrature(face, order)
        t0, tau = tg.levels[k], tg.tau
        if mode == "interpolated":
            g0 = np.asarray(spec.neumann(fq.points, t0), dtype=float)
            g1 = np.asarray(spec.neumann(fq.points, t0 + tau), dtype=float)
            gs = [(1 - s) * g0 + s * g1 for s in s_pts]
        else:
            gs = [np.asarray(spec.neumann(fq.points, t0 + s * tau), dtype=float) for s in s_pts]
        out.append((face, fq, gs))
    return out


def minorant_value(v, eta, spec, params=None):
    """Evaluate the minorant functional for the test function ``eta``.

    Returns a :class:`MinorantBreakdown` whose ``cumulative[m]`` is the value
    of the functional on ``(0, t^m)``.
    """
    params = params or MinorantParams()
    eta.check_boundary()
    k1, k2, k3, k4 = params.kappa
    order = params.space_order
    quad = eta.space.quadrature(order)
    x, wq = quad.points, quad.weights
    tg = v.tgrid
    K, tau = tg.K, tg.tau
    s_pts, s_wts = gauss_legendre(params.time_order)
    g1 = np.zeros(K)
    g2 = np.zeros(K)
    g3 = np.zeros(K)
    fv = np.zeros(K)
    for k in range(K):
        fs = _source_samples(spec, v, k, order, s_pts, params.source_mode)
        gs = _neumann_samples(spec, eta.space, k, tg, order, s_pts, params.source_mode)
        for j, (s, ws) in enumerate(zip(s_pts, s_wts)):
            t = tg.levels[k] + s * tau
            w = ws * tau
            val, grad, vt = v.sample(order, k, s)
            e_val, e_grad, e_dt = eta.sample(order, k, s)
            A = np.asarray(spec.diffusion(x, t), dtype=float)
            lam = np.broadcast_to(np.asarray(spec.reaction(x, t), dtype=float), val.shape)
            _check_kappa_reaction(params.kappa, lam)
            Agv = np.einsum("eqij,eqj->eqi", A, grad)
            Age = np.einsum("eqij,eqj->eqi", A, e_grad)
            g1[k] += w * np.sum((-np.sum(e_grad * Agv, -1) - np.sum(e_grad * Age, -1) / (2 * k1)) @ wq)
            if k2 > 0:
                g2[k] += w * np.sum((e_dt * val - e_dt ** 2 / (2 * k2)) @ wq)
            else:
                if np.any(e_dt != 0):
                    raise ValueError("kappa_2 = 0 needs test functions constant in time")
            if k3 > 0:
                g3[k] += w * np.sum((lam * (-val * e_val - e_val ** 2 / (2 * k3))) @ wq)
            fv[k] += w * np.sum((fs[j] * e_val) @ wq)
            for face, fq, gvals in gs:
                B = eta.space.face_value_operator(face, order)
                c, _ = eta.slab_coefficients(k, s)
                e_face = (B @ c).reshape(-1, fq.n_qp)
                fv[k] += w * np.sum((gvals[j] * e_face) @ fq.weights)
    g4 = np.zeros(K + 1)
    for m in range(K + 1):
        vm = v.sample_level(order, m)
        em = eta.space.evaluate(eta.levels[m], order)
        g4[m] = np.sum((-vm * em - em ** 2 / (2 * k4)) @ wq)
    phi = np.asarray(spec.initial(x), dtype=float)
    initial = float(np.sum((phi * eta.space.evaluate(eta.levels[0], order)) @ wq))
    return MinorantBreakdown(initial, g1, g2, g3, fv, g4, tuple(params.kappa), eta)


# ---------------------------------------------------------------------------
# maximisation


class _SlabQuadratic:
    """Concave quadratic ``b.z - z.H.z / 2`` of one slab in ``z = [eta^k, eta^k+1, alpha]``.

    The terminal term ``G_4(eta^{k+1})`` is included; on slab 0 the initial
    term ``int (phi) eta^0`` and ``G_4``-free start are handled by the caller.
    """

    def __init__(self, v, spec, space, k, params):
        k1, k2, k3, k4 = params.kappa
        order = params.space_order
        tg = v.tgrid
        tau = tg.tau
        quad = space.quadrature(order)
        x = quad.points
        n = space.n_dofs
        E = space.value_operator(order)
        G = space.gradient_operators(order)
        wq = np.tile(quad.weights, space.mesh.n_elements)
        s_pts, s_wts = gauss_legendre(params.time_order)
        fs = _source_samples(spec, v, k, order, s_pts, params.source_mode)
        gs = _neumann_samples(spec, space, k, tg, order, s_pts, params.source_mode)

        blocks = [[None] * 3 for _ in range(3)]
        b = np.zeros(3 * n)

        def add(i, j, mat):
            blocks[i][j] = mat if blocks[i][j] is None else blocks[i][j] + mat

        M = (E.T @ sp.diags(wq) @ E).tocsr()
        for j, (s, ws) in enumerate(zip(s_pts, s_wts)):
            t = tg.levels[k] + s * tau
            w = ws * tau
            val, grad, _ = v.sample(order, k, s)
            A = np.asarray(spec.diffusion(x, t), dtype=float)
            lam = np.broadcast_to(np.asarray(spec.reaction(x, t), dtype=float), val.shape)
            _check_kappa_reaction(params.kappa, lam)
            P = (1 - s, s, tau ** 2 * s * (1 - s))  # eta = sum P_i z_i
            Q = (-1 / tau, 1 / tau, tau * (1 - 2 * s))  # eta_t = sum Q_i z_i

            Kmat = None
            for a in range(space.mesh.dim):
                for c in range(space.mesh.dim):
                    wac = wq * A[..., a, c].ravel()
                    if not np.any(wac):
                        continue
                    term = G[a].T @ sp.diags(wac) @ G[c]
                    Kmat = term if Kmat is None else Kmat + term
            Agv = np.einsum("eqij,eqj->eqi", A, grad).reshape(-1, space.mesh.dim)
            lin_grad = -sum(G[a].T @ (wq * Agv[:, a]) for a in range(space.mesh.dim))
            lin_val = E.T @ (wq * (fs[j].ravel() - lam.ravel() * val.ravel()))
            for face, fq, gvals in gs:
                Bf = space.face_value_operator(face, order)
                lin_val = lin_val + Bf.T @ (np.tile(fq.weights, fq.elements.size) * gvals[j].ravel())
            lin_dt = E.T @ (wq * val.ravel())
            quad_val = None
            if k3 > 0:
                quad_val = (E.T @ sp.diags(wq * lam.ravel() / k3) @ E).tocsr()
            for i in range(3):
                b[i * n:(i + 1) * n] += w * (P[i] * (lin_grad + lin_val) + (Q[i] * lin_dt if k2 > 0 else 0.0))
                for jj in range(3):
                    mat = (P[i] * P[jj] / k1) * Kmat
                    if k2 > 0:
                        mat = mat + (Q[i] * Q[jj] / k2) * M
                    if quad_val is not None:
                        mat = mat + (P[i] * P[jj]) * quad_val
                    add(i, jj, w * mat)
        # terminal term at t^{k+1}
        v_end = v.sample_level(order, k + 1)
        b[n:2 * n] += -(E.T @ (wq * v_end.ravel()))
        add(1, 1, M / k4)
        self.H = sp.bmat(blocks).tocsr()
        self.b = b
        self.n = n
        self.M = M
        self.k2 = k2

    def value(self, z):
        return float(self.b @ z - 0.5 * z @ (self.H @ z))


def _maximize(H, b, free, z_fixed_part, fixed_idx):
    """Maximise ``b.z - z.H.z/2`` over ``z[free]`` with the rest fixed."""
    z = np.zeros(H.shape[0])
    z[fixed_idx] = z_fixed_part
    Hff = H[free][:, free].tocsc()
    rhs = b[free] - H[free][:, fixed_idx] @ z_fixed_part
    z[free] = spla.spsolve(Hff, rhs)
    return z


def maximize_minorant(v, spec, params=None, space=None):
    """Slab-by-slab maximisation of the minorant with a continuous test function.

    Slab 0 optimises ``eta^0``, ``eta^1`` and the bubble jointly (including the
    initial term); every later slab keeps ``eta^k`` from the previous slab and
    optimises ``eta^{k+1}`` and its bubble, each time taking the final-time
    term at ``t^{k+1}`` into account.  The result bounds the error from below
    at every time level.
    """
    params = params or MinorantParams()
    if params.kappa[1] == 0:
        raise ValueError("maximisation needs kappa_2 > 0")
    space = space or FEMSpace(v.mesh, bubbles=params.bubbles)
    tg = v.tgrid
    K, n = tg.K, space.n_dofs
    eta = SpaceTimeTestField(space, tg)
    free_space = space.free_dofs
    order = params.space_order
    quad = space.quadrature(order)
    wq = np.tile(quad.weights, space.mesh.n_elements)
    E = space.value_operator(order)
    phi = np.asarray(spec.initial(quad.points), dtype=float).ravel()
    init_lin = E.T @ (wq * phi)

    for k in range(K):
        slab = _SlabQuadratic(v, spec, space, k, params)
        H, b = slab.H, slab.b.copy()
        if k == 0:
            b[:n] += init_lin
            free = np.concatenate([free_space, free_space + n, free_space + 2 * n])
            fixed_idx = np.setdiff1d(np.arange(3 * n), free)
            z = _maximize(H, b, free, np.zeros(fixed_idx.size), fixed_idx)
            eta.levels[0] = z[:n]
        else:
            free = np.concatenate([free_space + n, free_space + 2 * n])
            fixed_idx = np.setdiff1d(np.arange(3 * n), free)
            fixed_vals = np.zeros(fixed_idx.size)
            fixed_vals[: n] = eta.levels[k]  # first n fixed entries are eta^k
            z = _maximize(H, b, free, fixed_vals, fixed_idx)
        eta.levels[k + 1] = z[n:2 * n]
        eta.alpha[k] = z[2 * n:]
    return minorant_value(v, eta, spec, params)


def maximize_minorant_slab(v, spec, params, k, eta_start=None):
    """Best ``(eta^{k+1}, alpha)`` on slab ``k`` for fixed ``eta^k``.

    ``eta_start`` is a test field whose level ``k`` is kept (all zeros when
    omitted, in which case ``eta^k`` is optimised too).  Returns the updated
    test field and the slab contribution ``G_1 + G_2 + G_3 + F + G_4(t^{k+1})``.
    """
    space = eta_start.space if eta_start is not None else FEMSpace(v.mesh, bubbles=params.bubbles)
    tg = v.tgrid
    n = space.n_dofs
    eta = SpaceTimeTestField(space, tg) if eta_start is None else SpaceTimeTestField(
        space, tg, eta_start.levels.copy(), eta_start.alpha.copy())
    slab = _SlabQuadratic(v, spec, space, k, params)
    fs = space.free_dofs
    if eta_start is None:
        free = np.concatenate([fs, fs + n, fs + 2 * n])
        fixed_idx = np.setdiff1d(np.arange(3 * n), free)
        z = _maximize(slab.H, slab.b, free, np.zeros(fixed_idx.size), fixed_idx)
        eta.levels[k] = z[:n]
    else:
        free = np.concatenate([fs + n, fs + 2 * n])
        fixed_idx = np.setdiff1d(np.arange(3 * n), free)
        fixed_vals = np.zeros(fixed_idx.size)
        fixed_vals[:n] = eta.levels[k]
        z = _maximize(slab.H, slab.b, free, fixed_vals, fixed_idx)
    eta.levels[k + 1] = z[n:2 * n]
    eta.alpha[k] = z[2 * n:]
    return eta, slab.value(z)


# ---------------------------------------------------------------------------
# closed-form slab terms


def minorant_incremental(v, spec, params, eta):
    """Slab terms from closed-form time integrals of linear-in-time data.

    ``v`` must have nodal levels, ``A`` the identity and ``lambda`` must not
    depend on time; ``f`` and ``g`` enter through their values at the time
    levels.  Returns a :class:`MinorantBreakdown` in the same convention as
    :func:`minorant_value`.
    """
    if not spec.identity_diffusion:
        raise ValueError("closed-form minorant terms assume identity diffusion")
    if not hasattr(v, "values"):
        raise TypeError("closed-form minorant terms need nodal time levels")
    tg = v.tgrid
    if eta.tgrid.K != tg.K:
        raise ValueError("test function and approximation have different slab counts")
    k1, k2, k3, k4 = params.kappa
    order = params.space_order
    sp_e, sp_v = eta.space, v.space
    quad = sp_e.quadrature(order)
    x, wq = quad.points, quad.weights
    K, tau = tg.K, tg.tau

    def integ(a):
        return float(np.sum(a @ wq))

    def dot(a, b):
        return np.sum(a * b, axis=-1)

    g1 = np.zeros(K)
    g2 = np.zeros(K)
    g3 = np.zeros(K)
    fv = np.zeros(K)
    for k in range(K):
        lam0 = np.asarray(spec.reaction(x, tg.levels[k]), dtype=float)
        lam1 = np.asarray(spec.reaction(x, tg.levels[k + 1]), dtype=float)
        if not np.allclose(lam0, lam1, rtol=0, atol=0):
            raise ValueError("closed-form minorant terms need a time-independent reaction")
        lam = np.broadcast_to(lam0, x.shape[:-1])
        _check_kappa_reaction(params.kappa, lam)
        v0, v1 = sp_v.evaluate(v.values[k], order), sp_v.evaluate(v.values[k + 1], order)
        gv0, gv1 = sp_v.gradient(v.values[k], order), sp_v.gradient(v.values[k + 1], order)
        e0, e1 = sp_e.evaluate(eta.levels[k], order), sp_e.evaluate(eta.levels[k + 1], order)
        ge0, ge1 = sp_e.gradient(eta.levels[k], order), sp_e.gradient(eta.levels[k + 1], order)
        al = sp_e.evaluate(eta.alpha[k], order)
        gal = sp_e.gradient(eta.alpha[k], order)
        f0 = np.asarray(spec.source(x, tg.levels[k]), dtype=float)
        f1 = np.asarray(spec.source(x, tg.levels[k + 1]), dtype=float)

        g1[k] = -tau / 3 * integ(
            dot(ge0, gv0) + dot(ge1, gv1) + 0.5 * (dot(ge1, gv0) + dot(ge0, gv1))
            + tau ** 2 / 4 * dot(gal, gv0 + gv1)
            + (dot(ge0, ge0) + dot(ge1, ge1) + dot(ge0, ge1) + tau ** 2 / 2 * dot(gal, ge0 + ge1)
               + tau ** 4 / 10 * dot(gal, gal)) / (2 * k1)
        )
        if k2 > 0:
            g2[k] = 0.5 * integ(
                (v0 + v1) * (e1 - e0) + al * tau ** 2 / 3 * (v0 - v1)
                - ((e1 - e0) ** 2 / tau + al ** 2 * tau ** 3 / 3) / k2
            )
        if k3 > 0:
            g3[k] = -tau / 3 * integ(
                lam * (e0 * v0 + e1 * v1 + 0.5 * (e1 * v0 + e0 * v1) + tau ** 2 / 4 * al * (v0 + v1)
                       + (e0 ** 2 + e1 ** 2 + e0 * e1 + tau ** 2 / 2 * al * (e0 + e1)
                          + tau ** 4 / 10 * al ** 2) / (2 * k3))
            )
        fv[k] = tau / 3 * integ(e0 * f0 + e1 * f1 + 0.5 * (e1 * f0 + e0 * f1) + tau ** 2 / 4 * al * (f0 + f1))
        for face in sp_e.mesh.neumann_faces:
            fq = sp_e.face_quadrature(face, order)
            B = sp_e.face_value_operator(face, order)
            nq = fq.n_qp
            ef0 = (B @ eta.levels[k]).reshape(-1, nq)
            ef1 = (B @ eta.levels[k + 1]).reshape(-1, nq)
            af = (B @ eta.alpha[k]).reshape(-1, nq)
            gg0 = np.asarray(spec.neumann(fq.points, tg.levels[k]), dtype=float)
            gg1 = np.asarray(spec.neumann(fq.points, tg.levels[k + 1]), dtype=float)
            fv[k] += tau / 3 * float(np.sum(
                (ef0 * gg0 + ef1 * gg1 + 0.5 * (ef1 * gg0 + ef0 * gg1) + tau ** 2 / 4 * af * (gg0 + gg1))
                @ fq.weights))
    g4 = np.zeros(K + 1)
    for m in range(K + 1):
        vm = sp_v.evaluate(v.values[m], order)
        em = sp_e.evaluate(eta.levels[m], order)
        g4[m] = integ(-vm * em - em ** 2 / (2 * k4))
    phi = np.asarray(spec.initial(x), dtype=float)
    initial = integ(phi * sp_e.evaluate(eta.levels[0], order))
    return MinorantBreakdown(initial, g1, g2, g3, fv, g4, tuple(params.kappa), eta)
