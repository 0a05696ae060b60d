"""Solvers for constrained two-player ARAT stochastic games on finite spaces."""

from .best_response import (
    BestResponseProblem,
    BestResponseResult,
    build_feasible_lp,
    constrained_best_response,
    slater_margin,
    slater_point,
)
from .equilibrium import (
    EquilibriumReport,
    IterationConfig,
    iterate,
    mix_restore_feasibility,
    perturbed_instance,
    perturbed_sequence,
    verify_epsilon_nash,
)
from .estimator import ConstrainedNashSolver
from .game import (
    GameInstance,
    InvalidInstance,
    ValidationReport,
    assemble_constraint,
    assemble_kernel,
    assemble_reward,
    generate_random,
    validate,
)
from .numerics import LpProblem, LpSolution, LpStatus, SingularMatrix, lp_solve, solve_linear
from .occupation import (
    MarginalMeasure,
    OccupationMeasure,
    constraint_value,
    disintegrate,
    kernel_under_profile,
    occupation_measure,
    occupation_x_marginal,
    payoff,
    truncated_series_oracle,
    uniform_policy,
)
from .simulate import SimulationConfig, SimulationEstimate, simulate
from .validation import StationaryPolicy

__version__ = "0.1.0"
