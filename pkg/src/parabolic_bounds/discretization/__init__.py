"""Meshes, quadrature, the Q1 space, the time-stepping solver and true errors."""

from .error import ErrorComponents, exact_energy_components, true_error_components
from .mesh import SpatialMesh, TimeGrid, build_space_time_grid
from .quadrature import (
    TIME_MOMENTS,
    gauss_legendre,
    slab_integral,
    tensor_rule,
    time_moment_quadrature,
    time_moments,
)
from .solver import SCHEMES, AnalyticField, SpaceTimeField, interpolate_exact, solve_parabolic
from .space import FEMSpace

__all__ = [
    "AnalyticField",
    "ErrorComponents",
    "FEMSpace",
    "SCHEMES",
    "SpaceTimeField",
    "SpatialMesh",
    "TIME_MOMENTS",
    "TimeGrid",
    "build_space_time_grid",
    "exact_energy_components",
    "gauss_legendre",
    "interpolate_exact",
    "slab_integral",
    "solve_parabolic",
    "tensor_rule",
    "time_moment_quadrature",
    "time_moments",
    "true_error_components",
]
