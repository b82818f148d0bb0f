"""Martingale optimal transport on step paths: measures, lattices, LP duality."""

from .measures import (DiscreteMeasure, MeasureError, Peacock, check_convex_order,
                       coupling_lp, dirac, marginals_from_calls, measure,
                       w1_distance)
from .pathspace import (Payoff, PathError, ShiftVector, StepPath,
                        apply_time_change, asian_payoff, backward_shift,
                        basket_call_payoff, custom_payoff, eval_payoff,
                        forward_shift, lookback_max_payoff,
                        marginal_grid_payoff, rho_T, skorokhod_grid_distance,
                        step_path, truncate_payoff)
from .lp import LinearProgram, LpError, LpNumericalError, solve, strong_duality_check
from .lattice import (LatticeError, LatticeParams, LatticePath, LatticeTree,
                      check_membership, discretize_times, enumerate_tree,
                      grid_project, lift)
from .transport import (DualCertificate, PriceInterval, ScalarTailHedge,
                        TailHedge, TransportError, TransportPlan,
                        bhr_tail_hedge, construct_plan, extract_dual_d1,
                        freeze_pushforward, price_interval,
                        solve_primal_lattice, solve_primal_marginal,
                        stability_sweep, stochastic_integral,
                        tree_superhedge_dp, verify_superhedge)
from .penalized import (PenalizedSolution, SimpleTree, compensator,
                        dn_convergence_experiment, plan_drift, solve_penalized)

__version__ = "0.1.0"

__all__ = [
    "DiscreteMeasure", "MeasureError", "Peacock", "check_convex_order",
    "coupling_lp", "dirac", "marginals_from_calls", "measure", "w1_distance",
    "Payoff", "PathError", "ShiftVector", "StepPath", "apply_time_change",
    "asian_payoff", "backward_shift", "basket_call_payoff", "custom_payoff",
    "eval_payoff", "forward_shift", "lookback_max_payoff",
    "marginal_grid_payoff", "rho_T", "skorokhod_grid_distance", "step_path",
    "truncate_payoff",
    "LinearProgram", "LpError", "LpNumericalError", "solve",
    "strong_duality_check",
    "LatticeError", "LatticeParams", "LatticePath", "LatticeTree",
    "check_membership", "discretize_times", "enumerate_tree", "grid_project",
    "lift",
    "DualCertificate", "PriceInterval", "ScalarTailHedge", "TailHedge",
    "TransportError", "TransportPlan", "bhr_tail_hedge", "construct_plan",
    "extract_dual_d1", "freeze_pushforward", "price_interval",
    "solve_primal_lattice", "solve_primal_marginal", "stability_sweep",
    "stochastic_integral", "tree_superhedge_dp", "verify_superhedge",
    "PenalizedSolution", "SimpleTree", "compensator",
    "dn_convergence_experiment", "plan_drift", "solve_penalized",
    "__version__",
]
