"""True error of an approximation measured against an exact solution."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .quadrature import gauss_legendre


@dataclass
class ErrorComponents:
    """Per-slab and per-level squared norms of a space-time function.

    Slab arrays have length ``K``; level arrays have length ``K + 1``.
    ``grad_elements`` (shape ``(K, n_elements)``) is filled on request.
    """

    levels: np.ndarray
    grad_sq: np.ndarray
    l2_sq: np.ndarray
    reaction_sq: np.ndarray
    final_sq: np.ndarray
    grad_elements: Optional[np.ndarray] = None

    def cumulative(self, k):
        """Integrals over ``(0, t^k)`` and the final-time term at level ``k``."""
        return (
            float(np.sum(self.grad_sq[:k])),
            float(np.sum(self.l2_sq[:k])),
            float(np.sum(self.reaction_sq[:k])),
            float(self.final_sq[k]),
        )

    def weighted(self, weights, k=None):
        """``nu^2 G + theta^2 L + rho^2 R + zeta^2 E`` up to level ``k``."""
        k = len(self.grad_sq) if k is None else k
        return weights.combine(*self.cumulative(k))

    def weighted_sequence(self, weights):
        return np.array([self.weighted(weights, k) for k in range(len(self.levels))])


def _components(sample, spec, space, tgrid, space_order, time_order, elementwise, final):
    quad = space.quadrature(space_order)
    x = quad.points
    wq = quad.weights
    s_pts, s_wts = gauss_legendre(time_order)
    K = tgrid.K
    n_el = space.mesh.n_elements
    grad_sq = np.zeros(K)
    l2_sq = np.zeros(K)
    react_sq = np.zeros(K)
    grad_el = np.zeros((K, n_el)) if elementwise else None
    for k in range(K):
        for s, ws in zip(s_pts, s_wts):
            t = tgrid.levels[k] + s * tgrid.tau
            val, grad = sample(k, s, t)
            A = np.asarray(spec.diffusion(x, t), dtype=float)
            lam = np.broadcast_to(np.asarray(spec.reaction(x, t), dtype=float), val.shape)
            energy = np.einsum("eqi,eqij,eqj->eq", grad, A, grad)
            w = ws * tgrid.tau
            per_el = energy @ wq
            grad_sq[k] += w * per_el.sum()
            l2_sq[k] += w * np.sum((val ** 2) @ wq)
            react_sq[k] += w * np.sum((lam * val ** 2) @ wq)
            if elementwise:
                grad_el[k] += w * per_el
    final_sq = np.array([np.sum(final(k) ** 2 @ wq) for k in range(K + 1)])
    return ErrorComponents(tgrid.levels.copy(), grad_sq, l2_sq, react_sq, final_sq, grad_el)


def true_error_components(v, exact, spec, space_order=5, time_order=5, elementwise=False):
    """Squared norms of ``e = u - v`` on every slab and at every level.

    ``v`` is any field exposing ``sample`` and ``sample_level`` (for instance
    a :class:`SpaceTimeField`).
    """
    x = v.space.quadrature(space_order).points

    def sample(k, s, t):
        val, grad, _ = v.sample(space_order, k, s)
        return exact.u(x, t) - val, exact.grad(x, t) - grad

    def final(k):
        return exact.u(x, v.tgrid.levels[k]) - v.sample_level(space_order, k)

    return _components(sample, spec, v.space, v.tgrid, space_order, time_order, elementwise, final)


def exact_energy_components(exact, spec, space, tgrid, space_order=5, time_order=5):
    """The same squared norms for the exact solution itself (the [u]^2 scale)."""
    x = space.quadrature(space_order).points

    def sample(k, s, t):
        return exact.u(x, t), exact.grad(x, t)

    def final(k):
        return exact.u(x, tgrid.levels[k])

    return _components(sample, spec, space, tgrid, space_order, time_order, False, final)
