"""Fractional-order conflict-controlled systems guided by a copy of themselves.

The package offers fractional calculus on time grids, a fractional forward
Euler solver, grid checks of the fractional Lyapunov inequality, game
dynamics with extremal selectors and the mutual aiming simulation between a
system and its guide.
"""

from .aiming import (
    AimingConfig,
    Policy,
    SimulationResult,
    TheoremConstants,
    check_deviation_inequality,
    deviation_vs_diameter,
    run_aiming,
    theorem_constants,
)
from .errors import (
    FracGuideError,
    GridError,
    MittagLefflerRangeError,
    NumericAbort,
    ScenarioParseError,
    UnsupportedCombination,
)
from .fde_solver import (
    AprioriBounds,
    CauchyProblem,
    FractionalEulerStepper,
    RhsFunction,
    apriori_bounds,
    check_solution_residual,
    solve_euler,
)
from .frac_core import (
    FracOrder,
    GridFunction,
    TimeGrid,
    Trajectory,
    caputo_derivative_l1,
    gamma_fn,
    gronwall_bound,
    holder_modulus,
    mittag_leffler,
    rl_integral,
)
from .game_model import (
    ActionSet,
    ControlRealization,
    GameDynamics,
    check_saddle,
    estimate_lipschitz,
    extremal_u,
    extremal_v,
)
from .lyapunov_check import (
    C_L1,
    LyapunovFn,
    check_convex_inequality,
    check_quadratic_inequality,
)
from .scenarios import dump_scenario, load_scenario, parse_scenario, scenario_paper_example

__all__ = [
    "AimingConfig",
    "Policy",
    "SimulationResult",
    "TheoremConstants",
    "check_deviation_inequality",
    "deviation_vs_diameter",
    "run_aiming",
    "theorem_constants",
    "FracGuideError",
    "GridError",
    "MittagLefflerRangeError",
    "NumericAbort",
    "ScenarioParseError",
    "UnsupportedCombination",
    "AprioriBounds",
    "CauchyProblem",
    "FractionalEulerStepper",
    "RhsFunction",
    "apriori_bounds",
    "check_solution_residual",
    "solve_euler",
    "FracOrder",
    "GridFunction",
    "TimeGrid",
    "Trajectory",
    "caputo_derivative_l1",
    "gamma_fn",
    "gronwall_bound",
    "holder_modulus",
    "mittag_leffler",
    "rl_integral",
    "ActionSet",
    "ControlRealization",
    "GameDynamics",
    "check_saddle",
    "estimate_lipschitz",
    "extremal_u",
    "extremal_v",
    "C_L1",
    "LyapunovFn",
    "check_convex_inequality",
    "check_quadratic_inequality",
    "dump_scenario",
    "load_scenario",
    "parse_scenario",
    "scenario_paper_example",
]

__version__ = "0.1.0"
