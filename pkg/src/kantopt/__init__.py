"""Kantian and Nash equilibrium solvers for symmetric two-player games."""

from .errors import KantoptError, SolverError, SpecError
from .expr import Expr, parse_expression
from .game import (
    DEFAULT_CONFIG,
    Game,
    Landmarks,
    SolverConfig,
    builtin_game,
    landmarks,
    nash_best_response,
    solve_nash,
    solve_pareto,
    validate_assumptions,
)
from .interaction import TypeGameMatrix, build_type_matrix, select_focal, solve_kantian_nasher
from .kantian import kantian_best_response, kantian_foc, kantian_objective, solve_symmetric_mke, verify_mke
from .population import check_spne, ess_check, replicator_simulate, stage_payoffs
from .rescale import Rescaling, efficient_rescaling, is_proportional

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_CONFIG",
    "Expr",
    "Game",
    "KantoptError",
    "Landmarks",
    "Rescaling",
    "SolverConfig",
    "SolverError",
    "SpecError",
    "TypeGameMatrix",
    "build_type_matrix",
    "builtin_game",
    "check_spne",
    "efficient_rescaling",
    "ess_check",
    "is_proportional",
    "kantian_best_response",
    "kantian_foc",
    "kantian_objective",
    "landmarks",
    "nash_best_response",
    "parse_expression",
    "replicator_simulate",
    "select_focal",
    "solve_kantian_nasher",
    "solve_nash",
    "solve_pareto",
    "solve_symmetric_mke",
    "stage_payoffs",
    "validate_assumptions",
    "verify_mke",
]
