"""Space-time fields and the theta-scheme solver producing them."""

from __future__ import annotations

import numpy as np
import scipy.sparse.linalg as spla

from .space import FEMSpace

SCHEMES = {"backward_euler": 1.0, "crank_nicolson": 0.5}


class SpaceTimeField:
    """Nodal levels ``v^0..v^K`` interpolated linearly in time on each slab.

    Parameters
    ----------
    space : FEMSpace
        Scalar space without bubbles.
    tgrid : TimeGrid
    values : ndarray, shape (K + 1, n_nodes)
    """

    def __init__(self, space, tgrid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (tgrid.K + 1, space.n_dofs):
            raise ValueError(
                f"expected levels of shape {(tgrid.K + 1, space.n_dofs)}, got {values.shape}"
            )
        self.space = space
        self.mesh = space.mesh
        self.tgrid = tgrid
        self.values = values

    def level(self, k):
        return self.values[k]

    def at(self, t):
        """Nodal coefficients at time ``t`` (linear interpolation between levels)."""
        levels = self.tgrid.levels
        if not levels[0] - 1e-14 <= t <= levels[-1] + 1e-14:
            raise ValueError("time outside the grid")
        k = min(int(np.searchsorted(levels, t, side="right")) - 1, self.tgrid.K - 1)
        k = max(k, 0)
        s = (t - levels[k]) / self.tgrid.tau
        return (1 - s) * self.values[k] + s * self.values[k + 1]

    def sample(self, order, k, s):
        """Value, gradient and time derivative at element points of slab ``k``.

        ``s`` in [0, 1] is the relative position inside the slab.
        """
        coef = (1 - s) * self.values[k] + s * self.values[k + 1]
        dt = (self.values[k + 1] - self.values[k]) / self.tgrid.tau
        return (
            self.space.evaluate(coef, order),
            self.space.gradient(coef, order),
            self.space.evaluate(dt, order),
        )

    def sample_level(self, order, k):
        return self.space.evaluate(self.values[k], order)


class AnalyticField:
    """An exact solution posing as an approximation, sampled on the same mesh."""

    def __init__(self, exact, space, tgrid):
        self.exact = exact
        self.space = space
        self.mesh = space.mesh
        self.tgrid = tgrid

    def sample(self, order, k, s):
        x = self.space.quadrature(order).points
        t = self.tgrid.levels[k] + s * self.tgrid.tau
        return self.exact.u(x, t), self.exact.grad(x, t), self.exact.u_t(x, t)

    def sample_level(self, order, k):
        x = self.space.quadrature(order).points
        return self.exact.u(x, self.tgrid.levels[k])


def _system_coefficients(spec, quad, t):
    x = quad.points
    A = np.asarray(spec.diffusion(x, t), dtype=float)
    lam = np.broadcast_to(np.asarray(spec.reaction(x, t), dtype=float), x.shape[:-1])
    return A, lam


def _load(spec, space, quad_order, t):
    quad = space.quadrature(quad_order)
    f = np.asarray(spec.source(quad.points, t), dtype=float)
    b = space.load_vector(f, quad_order)
    for face in space.mesh.neumann_faces:
        fq = space.face_quadrature(face, quad_order)
        g = np.asarray(spec.neumann(fq.points, t), dtype=float)
        B = space.face_value_operator(face, quad_order)
        b = b + B.T @ (np.tile(fq.weights, fq.elements.size) * g.ravel())
    return b


def solve_parabolic(spec, mesh, tgrid, scheme="backward_euler", quad_order=3):
    """Approximate the problem by Q1 elements and a theta time-stepping scheme.

    Returns the nodal levels as a :class:`SpaceTimeField`.  The initial level
    is the nodal interpolant of the initial data; Dirichlet nodes are zero.
    """
    try:
        theta = SCHEMES[scheme]
    except KeyError:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {sorted(SCHEMES)}") from None
    space = FEMSpace(mesh)
    free = space.free_dofs
    tau = tgrid.tau
    quad = space.quadrature(quad_order)
    M = space.mass_matrix(quad_order)

    values = np.zeros((tgrid.K + 1, space.n_dofs))
    values[0] = space.interpolate(spec.initial)
    values[0, space.dirichlet_dofs] = 0.0
    if free.size == 0:
        return SpaceTimeField(space, tgrid, values)

    def operator(t):
        A, lam = _system_coefficients(spec, quad, t)
        return (A, lam), space.stiffness_matrix(quad_order, A) + space.mass_matrix(quad_order, lam)

    cache = {"coef": None, "lu": None}
    _, L_prev = operator(tgrid.levels[0])
    b_prev = _load(spec, space, quad_order, tgrid.levels[0])
    Mff = M[free][:, free]
    for k in range(tgrid.K):
        t1 = tgrid.levels[k + 1]
        coef1, L1 = operator(t1)
        b1 = _load(spec, space, quad_order, t1)
        same = cache["coef"] is not None and all(
            np.array_equal(a, b) for a, b in zip(cache["coef"], coef1)
        )
        if not same:
            lhs = (Mff + theta * tau * L1[free][:, free]).tocsc()
            cache["lu"] = spla.splu(lhs)
            cache["coef"] = coef1
        rhs = M @ values[k] + tau * (theta * b1 + (1 - theta) * b_prev)
        if theta < 1:
            rhs = rhs - (1 - theta) * tau * (L_prev @ values[k])
        values[k + 1, free] = cache["lu"].solve(rhs[free])
        L_prev, b_prev = L1, b1
    return SpaceTimeField(space, tgrid, values)


def interpolate_exact(exact, mesh, tgrid):
    """Nodal interpolant of an exact solution at every time level."""
    space = FEMSpace(mesh)
    values = np.stack([space.interpolate(exact.u, t) for t in tgrid.levels])
    values[:, space.dirichlet_dofs] = 0.0
    return SpaceTimeField(space, tgrid, values)
