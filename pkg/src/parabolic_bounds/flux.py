"""Admissible flux fields and their reconstruction from a discrete solution.

Fluxes are continuous vector fields whose components live in the scalar Q1
space (optionally enriched by element bubbles).  On each slab a flux is
linear in time between a start and an end level; levels of neighbouring slabs
need not agree because the majorant only requires ``div y`` to be square
integrable in space.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .discretization.space import FEMSpace, _reference_q1
from .majorant import (
    MajorantParams,
    optimal_beta,
    residual_weight,
    sample_slab,
    slab_majorant,
    slab_residuals,
)

FLUX_MODES = ("average", "optimize", "optimize+enrich")

__all__ = [
    "FLUX_MODES",
    "AnalyticFlux",
    "FluxField",
    "enrich_flux",
    "minimize_flux_slab",
    "optimal_beta",
    "patch_average_flux",
    "reconstruct_flux",
]


class FluxField:
    """Per-slab start/end coefficients of a vector field.

    Parameters
    ----------
    space : FEMSpace
        Scalar space shared by all components.
    tgrid : TimeGrid
    start, end : ndarray, shape (K, n_dofs, d)
    """

    def __init__(self, space, tgrid, start, end):
        start = np.asarray(start, dtype=float)
        end = np.asarray(end, dtype=float)
        shape = (tgrid.K, space.n_dofs, space.mesh.dim)
        if start.shape != shape or end.shape != shape:
            raise ValueError(f"flux coefficients must have shape {shape}")
        self.space = space
        self.mesh = space.mesh
        self.tgrid = tgrid
        self.start = start
        self.end = end

    @classmethod
    def from_levels(cls, space, tgrid, levels):
        levels = np.asarray(levels, dtype=float)
        return cls(space, tgrid, levels[:-1].copy(), levels[1:].copy())

    @property
    def is_continuous_in_time(self):
        return np.array_equal(self.start[1:], self.end[:-1])

    def copy(self):
        return FluxField(self.space, self.tgrid, self.start.copy(), self.end.copy())

    def with_bubbles(self):
        """The same field expressed in the bubble-enriched space."""
        if self.space.bubbles:
            return self.copy()
        space = FEMSpace(self.mesh, bubbles=True)
        pad = ((0, 0), (0, self.mesh.n_elements), (0, 0))
        return FluxField(space, self.tgrid, np.pad(self.start, pad), np.pad(self.end, pad))

    def slab_coefficients(self, k, s):
        return (1 - s) * self.start[k] + s * self.end[k]

    def sample(self, order, k, s):
        """Values ``(n_elements, n_qp, d)`` and divergence ``(n_elements, n_qp)``."""
        coef = self.slab_coefficients(k, s)
        return self.space.evaluate(coef, order), self.space.divergence(coef, order)

    def normal_trace(self, face, order, k, s):
        axis, side = divmod(face, 2)
        sign = -1.0 if side == 0 else 1.0
        coef = self.slab_coefficients(k, s)
        B = self.space.face_value_operator(face, order)
        n_qp = self.space.face_quadrature(face, order).n_qp
        return (sign * (B @ coef[:, axis])).reshape(-1, n_qp)


class AnalyticFlux:
    """The exact flux ``A grad u`` with its analytic divergence."""

    def __init__(self, exact, spec, space, tgrid):
        self.exact = exact
        self.spec = spec
        self.space = space
        self.mesh = space.mesh
        self.tgrid = tgrid

    def _flux(self, x, t):
        A = np.asarray(self.spec.diffusion(x, t), dtype=float)
        return np.einsum("...ij,...j->...i", A, self.exact.grad(x, t))

    def sample(self, order, k, s):
        x = self.space.quadrature(order).points
        t = self.tgrid.levels[k] + s * self.tgrid.tau
        return self._flux(x, t), self.exact.div_flux(x, t)

    def normal_trace(self, face, order, k, s):
        fq = self.space.face_quadrature(face, order)
        t = self.tgrid.levels[k] + s * self.tgrid.tau
        return self._flux(fq.points, t) @ fq.normal


# ---------------------------------------------------------------------------
# averaging


def _vertex_gradients(space, coef):
    """Gradient of each element's restriction at each of its vertices."""
    mesh = space.mesh
    nl = mesh.n_local
    verts = np.array([[(l >> a) & 1 for a in range(mesh.dim)] for l in range(nl)], dtype=float)
    _, dphi = _reference_q1(verts, mesh.dim)
    local = coef[mesh.connectivity]  # (n_el, nl)
    return np.einsum("el,mla->ema", local, dphi) / mesh.h


def neumann_constraints(space, spec, t):
    """Indices into a flattened ``(n_dofs, d)`` array and their prescribed values.

    On each Neumann face the normal component at the face nodes is set so that
    ``y.n = g`` there, which makes the boundary residual vanish whenever ``g``
    is piecewise affine on the face.
    """
    mesh = space.mesh
    idx, vals = [], []
    for face in mesh.neumann_faces:
        axis, side = divmod(face, 2)
        sign = -1.0 if side == 0 else 1.0
        nodes = mesh.face_nodes(face)
        g = np.asarray(spec.neumann(mesh.nodes[nodes], t), dtype=float)
        idx.append(nodes * mesh.dim + axis)
        vals.append(sign * np.broadcast_to(g, nodes.shape))
    if not idx:
        return np.zeros(0, dtype=int), np.zeros(0)
    idx = np.concatenate(idx)
    vals = np.concatenate(vals)
    idx, first = np.unique(idx, return_index=True)
    return idx, vals[first]


def _average_level(space, spec, coef, t):
    mesh = space.mesh
    grads = _vertex_gradients(space, coef)  # (n_el, nl, d)
    conn = mesh.connectivity
    x = mesh.nodes[conn]  # (n_el, nl, d)
    A = np.asarray(spec.diffusion(x, t), dtype=float)
    flux = np.einsum("emij,emj->emi", A, grads)
    acc = np.zeros((mesh.n_nodes, mesh.dim))
    cnt = np.zeros(mesh.n_nodes)
    np.add.at(acc, conn.ravel(), flux.reshape(-1, mesh.dim) * mesh.element_volume)
    np.add.at(cnt, conn.ravel(), mesh.element_volume)
    y = acc / cnt[:, None]
    idx, vals = neumann_constraints(space, spec, t)
    y.reshape(-1)[idx] = vals
    return y


def patch_average_flux(v, spec):
    """Nodal average of ``A grad v`` over the elements sharing each node.

    Each element contributes its own gradient evaluated at the node, weighted
    by the element area.
    """
    space = v.space
    levels = np.stack([_average_level(space, spec, v.values[k], t) for k, t in enumerate(v.tgrid.levels)])
    return FluxField.from_levels(space, v.tgrid, levels)


# ---------------------------------------------------------------------------
# slab minimisation


class _SlabSystem:
    """Quadratic slab objective in the flux coefficients of one slab.

    Unknowns are ordered ``[start, end]``, each flattened from ``(n_dofs, d)``
    in row-major order (node-major, component-minor).
    """

    def __init__(self, v, spec, space, k, params):
        self.v = v
        self.spec = spec
        self.space = space
        self.k = k
        self.params = params
        order = params.space_order
        self.samples = sample_slab(v, spec, k, order, params.time_order, params.source_mode)
        self.n = space.n_dofs
        self.d = space.mesh.dim
        grads = space.gradient_operators(order)
        E = space.value_operator(order)
        # map from flattened (n_dofs, d) to divergence / component values
        self.div_op = sp.hstack(grads).tocsr()[:, self._component_major_perm()]
        self.comp_ops = [sp.kron(E, np.eye(self.d)[a:a + 1]).tocsr() for a in range(self.d)]
        self.wq = np.tile(space.quadrature(order).weights, space.mesh.n_elements)

    def _component_major_perm(self):
        # column j of hstack(grads) corresponds to (component a, dof i) = (j // n, j % n);
        # reorder so that column position i*d + a refers to it
        n, d = self.n, self.d
        perm = np.empty(n * d, dtype=int)
        i = np.arange(n)
        for a in range(d):
            perm[i * d + a] = a * n + i
        return perm

    def assemble(self, mu_list, a_f, a_d):
        """Hessian and right-hand side for fixed mu samples and weights."""
        gamma, floor = self.params.gamma, self.params.lam_floor
        nd = self.n * self.d
        blocks = [[None, None], [None, None]]
        rhs = np.zeros(2 * nd)
        for smp, mu in zip(self.samples.samples, mu_list):
            omega = residual_weight(mu, smp.lam, a_f, gamma, floor).ravel()
            w = smp.weight * self.wq
            S = self.div_op.T @ sp.diags(w * omega) @ self.div_op
            c = -self.div_op.T @ (w * omega * smp.r0.ravel())
            p = smp.p.reshape(-1, self.d)
            for a in range(self.d):
                for b in range(self.d):
                    if smp.A_inv is None:
                        if a != b:
                            continue
                        wab = w
                    else:
                        wab = w * smp.A_inv[..., a, b].ravel()
                    S = S + a_d * (self.comp_ops[a].T @ sp.diags(wab) @ self.comp_ops[b])
                    c = c + a_d * (self.comp_ops[a].T @ (wab * p[:, b]))
            s = smp.s
            for i, ci in enumerate((1 - s, s)):
                rhs[i * nd:(i + 1) * nd] += ci * c
                for j, cj in enumerate((1 - s, s)):
                    term = (ci * cj) * S
                    blocks[i][j] = term if blocks[i][j] is None else blocks[i][j] + term
        return sp.bmat(blocks).tocsr(), rhs

    def constraints(self):
        tg = self.v.tgrid
        nd = self.n * self.d
        i0, v0 = neumann_constraints(self.space, self.spec, tg.levels[self.k])
        i1, v1 = neumann_constraints(self.space, self.spec, tg.levels[self.k + 1])
        return np.concatenate([i0, i1 + nd]), np.concatenate([v0, v1])


def _solve_global(H, rhs, fixed, fixed_vals):
    n = H.shape[0]
    z = np.zeros(n)
    z[fixed] = fixed_vals
    free = np.setdiff1d(np.arange(n), fixed)
    Hff = H[free][:, free].tocsc()
    b = rhs[free] - H[free][:, fixed] @ fixed_vals
    z[free] = spla.spsolve(Hff, b)
    return z


def _patch_blocks(space, n_total_per_level):
    """Node-centred dof blocks (both time levels, all components)."""
    d = space.mesh.dim
    blocks = []
    for i in range(space.n_dofs):
        local = i * d + np.arange(d)
        blocks.append(np.concatenate([local, local + n_total_per_level]))
    return blocks


def _solve_patch(H, rhs, z0, fixed, sweeps, space):
    """Block Gauss-Seidel over node-centred patches, starting from ``z0``."""
    z = z0.copy()
    fixed_set = np.zeros(z.size, dtype=bool)
    fixed_set[fixed] = True
    nd = z.size // 2
    blocks = []
    for idx in _patch_blocks(space, nd):
        idx = idx[~fixed_set[idx]]
        if idx.size:
            rows = H[idx]
            blocks.append((idx, rows, np.linalg.inv(rows[:, idx].toarray())))
    for _ in range(sweeps):
        for idx, rows, inv in blocks:
            r = rhs[idx] - rows @ z
            z[idx] += inv @ r
    return z


def _objective_for(z, system, spec, constants, params, x):
    space, k = system.space, system.k
    tg = system.v.tgrid
    nd = system.n * system.d
    start = z[:nd].reshape(system.n, system.d)
    end = z[nd:].reshape(system.n, system.d)
    K = tg.K
    st = np.zeros((K, system.n, system.d))
    en = np.zeros((K, system.n, system.d))
    st[k], en[k] = start, end
    y = FluxField(space, tg, st, en)
    res = slab_residuals(system.samples, y, spec, params.space_order)
    slab_time = tg.levels[k] + 0.5 * tg.tau
    return slab_majorant(res, spec, constants, params, slab_time, x), start, end


def minimize_flux_slab(v, spec, constants, k, y=None, params=None, rounds=3, method="global",
                       sweeps=3, bubbles=False):
    """Minimise the slab majorant over the flux coefficients of slab ``k``.

    Alternates a quadratic solve for the flux (weights fixed) with the
    optimal update of ``beta`` (and ``mu`` in optimal mode).  The returned
    value never exceeds the value of the starting flux.

    Parameters
    ----------
    v : SpaceTimeField
    spec : ProblemSpec
    constants : EmbeddingConstants
    k : int
        Slab index.
    y : FluxField, optional
        Starting flux; defaults to the patch average.
    params : MajorantParams, optional
    rounds : int
        Number of flux/weight alternations.
    method : {"global", "patch"}
        Direct sparse solve or ``sweeps`` block Gauss-Seidel sweeps over
        node-centred patches.
    bubbles : bool
        Optimise in the bubble-enriched space.

    Returns
    -------
    start, end : ndarray
        Flux coefficients at the slab ends, shape ``(n_dofs, d)``.
    slab : SlabMajorant
        Terms of the majorant for the returned flux.
    """
    params = params or MajorantParams()
    if method not in ("global", "patch"):
        raise ValueError("method must be 'global' or 'patch'")
    if y is None:
        y = patch_average_flux(v, spec)
    if bubbles:
        y = y.with_bubbles()
    space = y.space if bubbles else FEMSpace(v.mesh)
    if not bubbles and y.space.bubbles:
        raise ValueError("starting flux has bubbles; pass bubbles=True")
    system = _SlabSystem(v, spec, space, k, params)
    fixed, fixed_vals = system.constraints()
    x = space.quadrature(params.space_order).points

    z = np.concatenate([y.start[k].ravel(), y.end[k].ravel()])
    best, b_start, b_end = _objective_for(z, system, spec, constants, params, x)
    c2 = constants.c_f ** 2 / spec.nu1
    for _ in range(rounds):
        a_f = best.alpha[0] * c2
        a_d = best.alpha[1]
        H, rhs = system.assemble(best.mu, a_f, a_d)
        if method == "global":
            z_new = _solve_global(H, rhs, fixed, fixed_vals)
        else:
            z_new = _solve_patch(H, rhs, z, fixed, sweeps, space)
        cand, c_start, c_end = _objective_for(z_new, system, spec, constants, params, x)
        if cand.total > best.total:
            break
        improvement = best.total - cand.total
        best, b_start, b_end, z = cand, c_start, c_end, z_new
        if improvement <= 1e-12 * max(best.total, 1e-300):
            break
    return b_start, b_end, best


def enrich_flux(y, v, spec, constants, k, params=None, rounds=3):
    """Add element bubbles to every component on slab ``k`` and re-minimise.

    Returns the enriched field; other slabs are copied unchanged.
    """
    out = y.with_bubbles()
    start, end, _ = minimize_flux_slab(v, spec, constants, k, y=out, params=params, rounds=rounds,
                                       bubbles=True)
    out.start[k], out.end[k] = start, end
    return out


def reconstruct_flux(v, spec, constants, mode="optimize", params=None, slabs=None, rounds=3,
                     method="global", sweeps=3, optimized=None):
    """Flux for the majorant: ``average``, ``optimize`` or ``optimize+enrich``.

    Optimisation starts from the patch average and acts on the listed slabs
    (all by default); the remaining slabs keep the average.  ``optimized``
    may hold the result of an earlier ``optimize`` call with the same
    parameters, in which case enrichment starts from it directly.
    """
    if mode not in FLUX_MODES:
        raise ValueError(f"unknown flux mode {mode!r}; choose from {FLUX_MODES}")
    y = patch_average_flux(v, spec)
    if mode == "average":
        return y
    params = params or MajorantParams()
    slabs = range(v.tgrid.K) if slabs is None else slabs
    enrich = mode == "optimize+enrich"
    out = y.with_bubbles() if enrich else y.copy()
    for k in slabs:
        if optimized is not None and enrich:
            start, end = optimized.start[k], optimized.end[k]
        else:
            start, end, _ = minimize_flux_slab(v, spec, constants, k, y=y, params=params,
                                               rounds=rounds, method=method, sweeps=sweeps)
        if enrich:
            n = v.mesh.n_nodes
            out.start[k, :n], out.end[k, :n] = start, end
            start, end, _ = minimize_flux_slab(v, spec, constants, k, y=out, params=params,
                                               rounds=rounds, bubbles=True)
        out.start[k], out.end[k] = start, end
    return out
