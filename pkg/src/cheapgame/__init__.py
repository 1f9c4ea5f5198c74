"""Cheap-control zero-sum LQ differential games with slow and fast states.

Solves the finite-horizon game exactly through the full matrix Riccati
terminal-value problem, builds the zero-order outer/boundary-layer
approximation of that solution, and quantifies how well the approximate
feedback pair does against the exact saddle point.
"""

from cheapgame.model import GameSpec, BlockPartition, PolyMatrix, validate_spec, partition
from cheapgame.ode import IntegratorConfig, MatrixTrajectory, BlowupError, MaxStepsError
from cheapgame.exact import ExactSolution, solve_exact, extract_blocks, exact_feedback
from cheapgame.asymptotic import (
    AsymptoticSolution,
    BoundaryCorrections,
    build_asymptotic_solution,
    solve_reduced_game,
)
from cheapgame.evaluation import ValueReport, SweepReport, value_report, convergence_sweep
from cheapgame.simulate import FeedbackLaw, TrajectoryRecord, simulate, control_histories
from cheapgame.example import pursuit_evasion_spec

__all__ = [
    "GameSpec",
    "BlockPartition",
    "PolyMatrix",
    "validate_spec",
    "partition",
    "IntegratorConfig",
    "MatrixTrajectory",
    "BlowupError",
    "MaxStepsError",
    "ExactSolution",
    "solve_exact",
    "extract_blocks",
    "exact_feedback",
    "AsymptoticSolution",
    "BoundaryCorrections",
    "build_asymptotic_solution",
    "solve_reduced_game",
    "ValueReport",
    "SweepReport",
    "value_report",
    "convergence_sweep",
    "FeedbackLaw",
    "TrajectoryRecord",
    "simulate",
    "control_histories",
    "pursuit_evasion_spec",
]
