"""Argument checks shared by the estimators, the harness and the CLI."""

from __future__ import annotations

import numbers

import numpy as np

from .flux import FLUX_MODES
from .majorant import MU_MODES
from .problem import ProblemSpec


def check_spec(spec):
    """Return ``spec`` if it is a :class:`ProblemSpec`, raise otherwise."""
    if not isinstance(spec, ProblemSpec):
        raise TypeError(f"expected a ProblemSpec, got {type(spec).__name__}")
    return spec


def check_field(v, spec=None):
    """A space-time approximation must expose ``sample`` and a time grid.

    When ``spec`` is given the grid must cover ``[0, T]``.
    """
    for attr in ("sample", "sample_level", "tgrid", "space"):
        if not hasattr(v, attr):
            raise TypeError(f"approximation lacks {attr!r}")
    if spec is not None and not np.isclose(v.tgrid.T, spec.T, rtol=1e-12, atol=0):
        raise ValueError(f"time grid ends at {v.tgrid.T}, problem at {spec.T}")
    return v


def check_cells(cells, dim):
    """Normalise a cell count (int or sequence) to a tuple of length ``dim``."""
    if isinstance(cells, numbers.Integral):
        cells = (int(cells),) * dim
    cells = tuple(int(c) for c in cells)
    if len(cells) == 1 and dim > 1:
        cells = cells * dim
    if len(cells) != dim:
        raise ValueError(f"need {dim} cell counts, got {len(cells)}")
    if min(cells) < 1:
        raise ValueError("cell counts must be positive")
    return cells


def check_positive_int(value, name):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_flux_mode(mode):
    if mode not in FLUX_MODES:
        raise ValueError(f"flux mode must be one of {FLUX_MODES}, got {mode!r}")
    return mode


def check_mu_mode(mode):
    if not callable(mode) and mode not in MU_MODES:
        raise ValueError(f"mu mode must be one of {MU_MODES} or a callable, got {mode!r}")
    return mode


def check_theta(theta):
    """Bulk parameters as a tuple of floats in ``(0, 1)``."""
    values = (theta,) if isinstance(theta, numbers.Real) else tuple(theta)
    out = tuple(float(t) for t in values)
    for t in out:
        if not 0 < t < 1:
            raise ValueError(f"theta must lie in (0, 1), got {t}")
    return out


def check_kappa(kappa, delta=1.0):
    """The two-sided weight must satisfy ``0 < kappa < 2 - delta``."""
    kappa = float(kappa)
    if not 0 < kappa < 2 - delta:
        raise ValueError(f"kappa must lie in (0, {2 - delta}), got {kappa}")
    return kappa


def check_slab(k, K):
    """Resolve a slab index, allowing negative values counted from the end."""
    k = int(k)
    if k < 0:
        k += K
    if not 0 <= k < K:
        raise ValueError(f"slab {k} outside 0..{K - 1}")
    return k
