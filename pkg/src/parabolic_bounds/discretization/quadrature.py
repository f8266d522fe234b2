"""Gauss-Legendre rules, closed-form time moments and slab integration."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

TIME_MOMENTS = {
    "(t-t_k)": lambda tau: tau ** 2 / 2,
    "(t-t_k)(t_{k+1}-t)": lambda tau: tau ** 3 / 6,
    "(t-t_k)^2(t_{k+1}-t)": lambda tau: tau ** 4 / 12,
    "(t-t_k)^2(t_{k+1}-t)^2": lambda tau: tau ** 5 / 30,
    "(t_k+t_{k+1}-2t)(t-t_k)/tau": lambda tau: -(tau ** 2) / 6,
    "(t_k+t_{k+1}-2t)": lambda tau: 0.0,
    "(t_k+t_{k+1}-2t)^2": lambda tau: tau ** 3 / 3,
    "(t-t_k)^2/2": lambda tau: tau ** 3 / 6,
}

# integrands in the local variable s = t - t_k on (0, tau)
TIME_INTEGRANDS = {
    "(t-t_k)": lambda s, tau: s,
    "(t-t_k)(t_{k+1}-t)": lambda s, tau: s * (tau - s),
    "(t-t_k)^2(t_{k+1}-t)": lambda s, tau: s ** 2 * (tau - s),
    "(t-t_k)^2(t_{k+1}-t)^2": lambda s, tau: s ** 2 * (tau - s) ** 2,
    "(t_k+t_{k+1}-2t)(t-t_k)/tau": lambda s, tau: (tau - 2 * s) * s / tau,
    "(t_k+t_{k+1}-2t)": lambda s, tau: tau - 2 * s,
    "(t_k+t_{k+1}-2t)^2": lambda s, tau: (tau - 2 * s) ** 2,
    "(t-t_k)^2/2": lambda s, tau: s ** 2 / 2,
}


@lru_cache(maxsize=None)
def gauss_legendre(n):
    """``n``-point Gauss-Legendre rule mapped to [0, 1]."""
    if n < 1:
        raise ValueError("quadrature order must be at least 1")
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def tensor_rule(n, dim):
    """Tensor Gauss rule on the unit cube, first axis fastest."""
    x, w = gauss_legendre(n)
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    wgrids = np.meshgrid(*([w] * dim), indexing="ij")
    pts = np.stack([g.ravel(order="F") for g in grids], axis=-1)
    wts = np.prod(np.stack([g.ravel(order="F") for g in wgrids], axis=-1), axis=-1)
    pts.setflags(write=False)
    wts.setflags(write=False)
    return pts, wts


def time_moments(tau, kind):
    """Closed-form integral over one slab of length ``tau``.

    ``kind`` is one of the keys of :data:`TIME_MOMENTS`.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    try:
        return TIME_MOMENTS[kind](float(tau))
    except KeyError:
        raise ValueError(f"unknown time moment {kind!r}") from None


def time_moment_quadrature(tau, kind, n=64):
    """Reference value of :func:`time_moments` by ``n``-point Gauss quadrature."""
    s, w = gauss_legendre(n)
    return float(tau * np.dot(w, TIME_INTEGRANDS[kind](tau * s, tau)))


def slab_integral(integrand, mesh, slab, space_order=3, time_order=3):
    """Integrate ``integrand(x, t)`` over ``Omega x slab`` by tensor Gauss rules.

    ``integrand`` is evaluated on arrays of shape ``(n_elements, n_qp, d)``
    at a scalar time and must return an array of shape ``(n_elements, n_qp)``.
    """
    if space_order < 1 or time_order < 1:
        raise ValueError("quadrature orders must be at least 1")
    t0, t1 = slab
    ref, wq = tensor_rule(space_order, mesh.dim)
    x = mesh.element_lower[:, None, :] + ref[None, :, :] * mesh.h
    wx = wq * mesh.element_volume
    s, ws = gauss_legendre(time_order)
    total = 0.0
    for sj, wj in zip(s, ws):
        t = t0 + sj * (t1 - t0)
        total += wj * (t1 - t0) * float(np.sum(np.asarray(integrand(x, t)) * wx))
    return total
