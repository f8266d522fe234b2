"""Guaranteed two-sided error bounds for finite element approximations of
linear parabolic reaction-diffusion problems."""

from .estimators import ErrorIndicator, FunctionalMajorant, FunctionalMinorant, ParabolicSolver
from .flux import FluxField, reconstruct_flux
from .harness import ExperimentConfig, Report, emit_tables, load_config, run_experiment
from .indicators import bulk_mark, element_indicator, ranked_histogram, spearman, strong_measure, weak_measure
from .majorant import MajorantParams, majorant_general, majorant_incremental, two_sided_weights
from .minorant import MinorantParams, maximize_minorant, minorant_incremental, minorant_value
from .problem import (
    EmbeddingConstants,
    ExactSolution,
    NormWeights,
    ProblemSpec,
    efficiency_indexes,
    embedding_constants,
    preset_problem,
)

__all__ = [
    "EmbeddingConstants",
    "ErrorIndicator",
    "ExactSolution",
    "ExperimentConfig",
    "FluxField",
    "FunctionalMajorant",
    "FunctionalMinorant",
    "MajorantParams",
    "MinorantParams",
    "NormWeights",
    "ParabolicSolver",
    "ProblemSpec",
    "Report",
    "bulk_mark",
    "efficiency_indexes",
    "element_indicator",
    "embedding_constants",
    "emit_tables",
    "load_config",
    "majorant_general",
    "majorant_incremental",
    "maximize_minorant",
    "minorant_incremental",
    "minorant_value",
    "preset_problem",
    "ranked_histogram",
    "reconstruct_flux",
    "run_experiment",
    "spearman",
    "strong_measure",
    "two_sided_weights",
    "weak_measure",
]
