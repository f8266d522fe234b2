"""Uniform tensor-product meshes in space and time."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..problem import DIRICHLET, NEUMANN


@dataclass(frozen=True, eq=False)
class SpatialMesh:
    """Uniform mesh of intervals (1D) or axis-aligned rectangles (2D).

    Nodes and elements are numbered with the first axis running fastest.
    Local node ``l`` of an element sits at offset ``(l >> a) & 1`` along axis
    ``a``, so in 2D the local order is (0,0), (1,0), (0,1), (1,1).
    """

    lower: tuple
    lengths: tuple
    cells: tuple
    boundary: tuple

    def __post_init__(self):
        cells = tuple(int(n) for n in self.cells)
        if len(cells) != len(self.lengths):
            raise ValueError("need one cell count per axis")
        if any(n < 1 for n in cells):
            raise ValueError("cell counts must be at least 1")
        object.__setattr__(self, "cells", cells)

    @classmethod
    def from_spec(cls, spec, cells):
        cells = np.atleast_1d(cells).astype(int)
        if cells.size == 1 and spec.dim > 1:
            cells = np.repeat(cells, spec.dim)
        return cls(spec.lower, spec.lengths, tuple(cells), spec.boundary)

    @property
    def dim(self):
        return len(self.cells)

    @cached_property
    def h(self):
        return np.array(self.lengths) / np.array(self.cells)

    @property
    def element_volume(self):
        return float(np.prod(self.h))

    @cached_property
    def nodes_per_axis(self):
        return tuple(n + 1 for n in self.cells)

    @property
    def n_nodes(self):
        return int(np.prod(self.nodes_per_axis))

    @property
    def n_elements(self):
        return int(np.prod(self.cells))

    @property
    def n_local(self):
        return 2 ** self.dim

    @cached_property
    def axis_coordinates(self):
        return [a + L * np.linspace(0.0, 1.0, n + 1) for a, L, n in zip(self.lower, self.lengths, self.cells)]

    @cached_property
    def node_multi_index(self):
        grids = np.meshgrid(*[np.arange(n) for n in self.nodes_per_axis], indexing="ij")
        # first axis fastest
        return np.stack([g.ravel(order="F") for g in grids], axis=-1)

    @cached_property
    def nodes(self):
        idx = self.node_multi_index
        return np.stack([self.axis_coordinates[a][idx[:, a]] for a in range(self.dim)], axis=-1)

    @cached_property
    def element_multi_index(self):
        grids = np.meshgrid(*[np.arange(n) for n in self.cells], indexing="ij")
        return np.stack([g.ravel(order="F") for g in grids], axis=-1)

    def _node_id(self, multi):
        strides = np.cumprod((1,) + self.nodes_per_axis[:-1])
        return multi @ strides

    @cached_property
    def connectivity(self):
        base = self.element_multi_index
        cols = []
        for l in range(self.n_local):
            offset = np.array([(l >> a) & 1 for a in range(self.dim)])
            cols.append(self._node_id(base + offset))
        return np.stack(cols, axis=-1)

    @cached_property
    def element_lower(self):
        return np.array(self.lower) + self.element_multi_index * self.h

    @cached_property
    def element_centers(self):
        return self.element_lower + 0.5 * self.h

    def face_nodes(self, face):
        axis, side = divmod(face, 2)
        idx = self.node_multi_index[:, axis]
        target = 0 if side == 0 else self.cells[axis]
        return np.flatnonzero(idx == target)

    def face_elements(self, face):
        axis, side = divmod(face, 2)
        idx = self.element_multi_index[:, axis]
        target = 0 if side == 0 else self.cells[axis] - 1
        return np.flatnonzero(idx == target)

    @staticmethod
    def face_normal(face, dim):
        axis, side = divmod(face, 2)
        n = np.zeros(dim)
        n[axis] = -1.0 if side == 0 else 1.0
        return n

    @cached_property
    def dirichlet_mask(self):
        """True on nodes lying on any Dirichlet face (Dirichlet wins at corners)."""
        mask = np.zeros(self.n_nodes, dtype=bool)
        for face, tag in enumerate(self.boundary):
            if tag == DIRICHLET:
                mask[self.face_nodes(face)] = True
        return mask

    @cached_property
    def free_nodes(self):
        return np.flatnonzero(~self.dirichlet_mask)

    @property
    def neumann_faces(self):
        return [f for f, tag in enumerate(self.boundary) if tag == NEUMANN]

    @cached_property
    def node_tags(self):
        """Per-node tag: 'interior', 'dirichlet' or 'neumann'."""
        tags = np.full(self.n_nodes, "interior", dtype=object)
        for face in self.neumann_faces:
            tags[self.face_nodes(face)] = NEUMANN
        tags[self.dirichlet_mask] = DIRICHLET
        return tags


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Uniform partition of ``[0, T]`` into ``K`` slabs."""

    T: float
    K: int

    def __post_init__(self):
        if int(self.K) < 1:
            raise ValueError("need at least one time slab")
        if not self.T > 0:
            raise ValueError("final time must be positive")
        object.__setattr__(self, "K", int(self.K))

    @cached_property
    def levels(self):
        return self.T * np.arange(self.K + 1) / self.K

    @property
    def tau(self):
        return self.T / self.K

    def slab(self, k):
        if not 0 <= k < self.K:
            raise IndexError(f"slab {k} outside 0..{self.K - 1}")
        return self.levels[k], self.levels[k + 1]


def build_space_time_grid(spec, cells, K):
    """Uniform tensor mesh over the box of ``spec`` and uniform time grid."""
    return SpatialMesh.from_spec(spec, cells), TimeGrid(spec.T, K)
