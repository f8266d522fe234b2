"""Element-wise error indication, bulk marking and indicator quality measures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .discretization.quadrature import gauss_legendre
from .majorant import flux_norm_sq


@dataclass(frozen=True)
class IndicatorField:
    """Nonnegative per-element values over one slab."""

    values: np.ndarray
    slab: int

    def __post_init__(self):
        if np.any(np.asarray(self.values) < 0):
            raise ValueError("indicator values must be nonnegative")

    @property
    def total(self):
        return float(np.sum(self.values))


@dataclass(frozen=True)
class MarkSet:
    mask: np.ndarray
    theta: float
    rule: str = "bulk"

    @property
    def count(self):
        return int(np.count_nonzero(self.mask))


def element_indicator(v, y, spec, k, space_order=3, time_order=3):
    """Slab integral of ``|y - A grad v|^2_{A^-1}`` on every element.

    For identity diffusion the residual is linear in time and the closed form
    ``tau/3 (R_0^2 + R_0 R_1 + R_1^2)`` is used.
    """
    space = v.space
    quad = space.quadrature(space_order)
    x, wq = quad.points, quad.weights
    tg = v.tgrid
    tau = tg.tau
    if spec.identity_diffusion:
        r = []
        for s in (0.0, 1.0):
            _, grad, _ = v.sample(space_order, k, s)
            yv, _ = y.sample(space_order, k, s)
            r.append(yv - grad)
        dens = np.sum(r[0] ** 2 + r[0] * r[1] + r[1] ** 2, axis=-1)
        return IndicatorField(tau / 3 * (dens @ wq), k)
    s_pts, s_wts = gauss_legendre(time_order)
    vals = np.zeros(space.mesh.n_elements)
    for s, ws in zip(s_pts, s_wts):
        t = tg.levels[k] + s * tau
        _, grad, _ = v.sample(space_order, k, s)
        yv, _ = y.sample(space_order, k, s)
        A = np.asarray(spec.diffusion(x, t), dtype=float)
        diff = yv - np.einsum("eqij,eqj->eqi", A, grad)
        vals += ws * tau * (flux_norm_sq(diff, np.linalg.inv(A)) @ wq)
    return IndicatorField(vals, k)


def bulk_mark(ind, theta):
    """Smallest greedy set whose values reach ``theta`` times the total.

    Elements are taken in decreasing order of value; ties go to the lower
    element index.  A zero total gives an empty set.
    """
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    values = np.asarray(getattr(ind, "values", ind), dtype=float)
    mask = np.zeros(values.size, dtype=bool)
    total = values.sum()
    if total <= 0:
        return MarkSet(mask, theta)
    order = np.argsort(-values, kind="stable")
    csum = np.cumsum(values[order])
    m = int(np.searchsorted(csum, theta * total, side="left")) + 1
    mask[order[:min(m, values.size)]] = True
    return MarkSet(mask, theta)


def weak_measure(marks_a, marks_b):
    """Fraction of elements marked by exactly one of the two sets."""
    a = np.asarray(getattr(marks_a, "mask", marks_a), dtype=bool)
    b = np.asarray(getattr(marks_b, "mask", marks_b), dtype=bool)
    if a.shape != b.shape:
        raise ValueError("mark sets have different sizes")
    if a.size == 0:
        return 0.0
    return float(np.mean(a != b))


def strong_measure(err_sq, ind_sq):
    """Relative discrepancy ``|err - ind| / err`` (scalar or element-wise)."""
    err = np.asarray(err_sq, dtype=float)
    ind = np.asarray(ind_sq, dtype=float)
    if err.shape != ind.shape:
        raise ValueError("size mismatch")
    if np.any(err <= 0):
        raise ValueError("error must be positive")
    out = np.abs(err - ind) / err
    return float(out) if out.ndim == 0 else out


def ranked_histogram(err_elems, ind_elems):
    """Order elements by decreasing true error.

    Returns the (0-based) permutation, the sorted errors and the indicator
    values in the same element order.
    """
    err = np.asarray(err_elems, dtype=float)
    ind = np.asarray(ind_elems, dtype=float)
    if err.shape != ind.shape:
        raise ValueError("size mismatch")
    perm = np.argsort(-err, kind="stable")
    return perm, err[perm], ind[perm]


def spearman(err_elems, ind_elems):
    """Spearman rank correlation between error and indicator."""
    return float(stats.spearmanr(err_elems, ind_elems).statistic)
