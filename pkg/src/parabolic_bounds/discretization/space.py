"""Continuous Q1 finite element space with optional element bubbles.

Evaluation is organised around sparse operators that map nodal (and bubble)
coefficients to values at all element quadrature points.  Every quadratic
form used by the solver and the estimators is then ``B.T @ W @ B`` for
suitable operators ``B`` and diagonal weights ``W``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp

from .quadrature import gauss_legendre, tensor_rule


def _reference_q1(ref, dim):
    """Q1 shape values ``(nq, 2^d)`` and reference gradients ``(nq, 2^d, d)``."""
    nq = ref.shape[0]
    nl = 2 ** dim
    phi = np.ones((nq, nl))
    dphi = np.ones((nq, nl, dim))
    for l in range(nl):
        for a in range(dim):
            bit = (l >> a) & 1
            f = ref[:, a] if bit else 1.0 - ref[:, a]
            df = 1.0 if bit else -1.0
            phi[:, l] *= f
            for b in range(dim):
                dphi[:, l, b] *= df if b == a else f
    return phi, dphi


def _reference_bubble(ref, dim):
    """Element bubble prod 4 xi (1 - xi), its values and reference gradient."""
    factors = 4.0 * ref * (1.0 - ref)
    dfactors = 4.0 * (1.0 - 2.0 * ref)
    b = np.prod(factors, axis=-1)
    db = np.empty_like(ref)
    for a in range(dim):
        others = np.prod(np.delete(factors, a, axis=-1), axis=-1) if dim > 1 else 1.0
        db[:, a] = dfactors[:, a] * others
    return b, db


@dataclass(frozen=True, eq=False)
class ElementQuadrature:
    """Quadrature points of every element for a tensor Gauss rule."""

    mesh: object
    order: int

    @cached_property
    def reference(self):
        return tensor_rule(self.order, self.mesh.dim)

    @property
    def n_qp(self):
        return self.reference[0].shape[0]

    @cached_property
    def points(self):
        """Physical points, shape ``(n_elements, n_qp, d)``."""
        ref = self.reference[0]
        return self.mesh.element_lower[:, None, :] + ref[None, :, :] * self.mesh.h

    @cached_property
    def weights(self):
        """Physical weights per point, shape ``(n_qp,)`` (uniform mesh)."""
        return self.reference[1] * self.mesh.element_volume


@dataclass(frozen=True, eq=False)
class FaceQuadrature:
    """Quadrature on one boundary face, element by element."""

    mesh: object
    face: int
    order: int

    @cached_property
    def elements(self):
        return self.mesh.face_elements(self.face)

    @cached_property
    def reference(self):
        """Reference points on the adjacent element and weights on the face."""
        dim = self.mesh.dim
        axis, side = divmod(self.face, 2)
        if dim == 1:
            return np.array([[float(side)]]), np.array([1.0])
        x, w = gauss_legendre(self.order)
        other = 1 - axis
        ref = np.empty((x.size, 2))
        ref[:, axis] = float(side)
        ref[:, other] = x
        return ref, w * self.mesh.h[other]

    @property
    def n_qp(self):
        return self.reference[0].shape[0]

    @cached_property
    def points(self):
        ref = self.reference[0]
        return self.mesh.element_lower[self.elements][:, None, :] + ref[None] * self.mesh.h

    @property
    def weights(self):
        return self.reference[1]

    @cached_property
    def normal(self):
        return self.mesh.face_normal(self.face, self.mesh.dim)


class FEMSpace:
    """Scalar continuous Q1 (P1 in 1D) space, optionally enriched by bubbles.

    Coefficient vectors hold the nodal values first and, when ``bubbles`` is
    set, one bubble coefficient per element after them.  Bubbles vanish on
    element boundaries so they never touch Dirichlet data.
    """

    def __init__(self, mesh, bubbles=False):
        self.mesh = mesh
        self.bubbles = bool(bubbles)

    def __repr__(self):
        return f"FEMSpace(cells={self.mesh.cells}, bubbles={self.bubbles})"

    @property
    def n_dofs(self):
        return self.mesh.n_nodes + (self.mesh.n_elements if self.bubbles else 0)

    @cached_property
    def dirichlet_dofs(self):
        return np.flatnonzero(self.dirichlet_mask)

    @cached_property
    def dirichlet_mask(self):
        mask = np.zeros(self.n_dofs, dtype=bool)
        mask[: self.mesh.n_nodes] = self.mesh.dirichlet_mask
        return mask

    @cached_property
    def free_dofs(self):
        return np.flatnonzero(~self.dirichlet_mask)

    def quadrature(self, order):
        return _element_quadrature(self.mesh, order)

    def face_quadrature(self, face, order):
        return _face_quadrature(self.mesh, face, order)

    # -- evaluation operators ------------------------------------------------

    def _operator(self, shape_vals, bubble_vals, elements=None):
        mesh = self.mesh
        conn = mesh.connectivity if elements is None else mesh.connectivity[elements]
        n_el = conn.shape[0]
        nq, nl = shape_vals.shape
        rows = np.repeat(np.arange(n_el * nq).reshape(n_el, nq), nl, axis=1).reshape(n_el, nq, nl)
        cols = np.broadcast_to(conn[:, None, :], (n_el, nq, nl))
        vals = np.broadcast_to(shape_vals[None], (n_el, nq, nl))
        rows, cols, vals = rows.ravel(), cols.ravel(), vals.ravel()
        if self.bubbles and bubble_vals is not None:
            el_ids = np.arange(mesh.n_elements) if elements is None else np.asarray(elements)
            brows = np.arange(n_el * nq)
            bcols = np.repeat(mesh.n_nodes + el_ids, nq)
            bvals = np.tile(bubble_vals, n_el)
            rows = np.concatenate([rows, brows])
            cols = np.concatenate([cols, bcols])
            vals = np.concatenate([vals, bvals])
        return sp.csr_matrix((vals, (rows, cols)), shape=(n_el * nq, self.n_dofs))

    @lru_cache(maxsize=None)
    def value_operator(self, order):
        """Sparse map from coefficients to values at all element points."""
        ref = self.quadrature(order).reference[0]
        phi, _ = _reference_q1(ref, self.mesh.dim)
        b, _ = _reference_bubble(ref, self.mesh.dim)
        return self._operator(phi, b)

    @lru_cache(maxsize=None)
    def gradient_operators(self, order):
        """Tuple of sparse maps, one per axis, to physical partial derivatives."""
        ref = self.quadrature(order).reference[0]
        _, dphi = _reference_q1(ref, self.mesh.dim)
        _, db = _reference_bubble(ref, self.mesh.dim)
        h = self.mesh.h
        return tuple(self._operator(dphi[:, :, a] / h[a], db[:, a] / h[a]) for a in range(self.mesh.dim))

    @lru_cache(maxsize=None)
    def face_value_operator(self, face, order):
        fq = self.face_quadrature(face, order)
        phi, _ = _reference_q1(fq.reference[0], self.mesh.dim)
        return self._operator(phi, None, elements=fq.elements)

    # -- convenience -----------------------------------------------------------

    def evaluate(self, coef, order):
        """Values at element points, shape ``(n_elements, n_qp)`` (plus trailing dims)."""
        coef = np.asarray(coef)
        nq = self.quadrature(order).n_qp
        out = self.value_operator(order) @ coef
        return out.reshape((self.mesh.n_elements, nq) + coef.shape[1:])

    def gradient(self, coef, order):
        """Gradients at element points, shape ``(n_elements, n_qp, d)``."""
        nq = self.quadrature(order).n_qp
        cols = [G @ coef for G in self.gradient_operators(order)]
        return np.stack(cols, axis=-1).reshape(self.mesh.n_elements, nq, self.mesh.dim)

    def divergence(self, coef, order):
        """Divergence of a vector field with coefficients ``(n_dofs, d)``."""
        nq = self.quadrature(order).n_qp
        ops = self.gradient_operators(order)
        div = sum(ops[a] @ coef[:, a] for a in range(self.mesh.dim))
        return div.reshape(self.mesh.n_elements, nq)

    def interpolate(self, func, t=None):
        """Nodal interpolant; bubble coefficients are left at zero."""
        x = self.mesh.nodes
        vals = func(x) if t is None else func(x, t)
        coef = np.zeros(self.n_dofs)
        coef[: self.mesh.n_nodes] = vals
        return coef

    def mass_matrix(self, order, weight=None):
        """Weighted mass matrix; ``weight`` has shape ``(n_elements, n_qp)``."""
        B = self.value_operator(order)
        w = self._point_weights(order, weight)
        return (B.T @ sp.diags(w) @ B).tocsr()

    def stiffness_matrix(self, order, tensor=None):
        """Stiffness matrix for ``tensor`` of shape ``(n_elements, n_qp, d, d)``."""
        ops = self.gradient_operators(order)
        wq = self._point_weights(order, None)
        dim = self.mesh.dim
        K = None
        for a in range(dim):
            for b in range(dim):
                if tensor is None:
                    if a != b:
                        continue
                    w = wq
                else:
                    w = wq * np.asarray(tensor)[..., a, b].ravel()
                    if not np.any(w):
                        continue
                term = ops[a].T @ sp.diags(w) @ ops[b]
                K = term if K is None else K + term
        return K.tocsr()

    def load_vector(self, values, order):
        """``int values * phi_i`` for point values of shape ``(n_elements, n_qp)``."""
        B = self.value_operator(order)
        return B.T @ self._point_weights(order, values)

    def _point_weights(self, order, weight):
        q = self.quadrature(order)
        w = np.tile(q.weights, self.mesh.n_elements)
        if weight is not None:
            w = w * np.asarray(weight, dtype=float).ravel()
        return w


@lru_cache(maxsize=64)
def _element_quadrature(mesh, order):
    return ElementQuadrature(mesh, order)


@lru_cache(maxsize=64)
def _face_quadrature(mesh, face, order):
    return FaceQuadrature(mesh, face, order)
