"""Time-consistent mean-variance optimal execution: coefficient solvers, feedback rules and simulation."""

from .closedform import basic_L_closed, basic_rate_closed, basic_trajectory_closed
from .coeffs import (
    BasicCoefficientTable,
    CoefficientTable,
    ConvergenceReport,
    SignalCoefficientTable,
    SolverError,
    StochVolCoefficientTable,
    refine_convergence,
    solve,
    solve_basic,
    solve_signal,
    solve_stochvol,
)
from .oracle import (
    deterministic_objective,
    discrete_equilibrium_basic,
    hjb_residual_report,
    linear_trajectory,
    perturbation_optimality_check,
)
from .params import (
    BasicModelParams,
    ConfigError,
    ParamCurve,
    SignalModelParams,
    StochVolModelParams,
    TimeGrid,
    eval_curve,
    load_builtin,
    load_config,
    load_config_file,
)
from .sim import (
    PathRecord,
    SimSummary,
    deterministic_path,
    estimate_mean_variance,
    simulate_batch,
    simulate_path,
    total_variance_check,
)
from .strategy import StrategyRule, make_rule, rate_basic, rate_signal, rate_stochvol

__version__ = "0.1.0"
