"""Regression Monte Carlo solvers for backward stochastic differential
equations, with jumps and with one-sided reflection."""

from .basis import HypercubeBasis, MappedBasis
from .models import (
    BlackScholesSpec,
    black_scholes_put,
    build_forward,
    exchange_basis_10d,
    exchange_benchmark_10d,
    geometric_basket_equivalent,
    geometric_put_payoff,
    linear_pricing_driver,
    product_exchange_payoff,
)
from .reflected import (
    Obstacle,
    binomial_american_put,
    solve_max,
    solve_penalized,
    solve_regularized,
)
from .sde import (
    ForwardModel,
    PathCloud,
    SimulationError,
    TimeGrid,
    simulate_paths,
    simulate_shadow_steps,
)
from .solvers import (
    BackwardSolution,
    Driver,
    SolverError,
    TerminalCondition,
    ThresholdSet,
    clamp_increment,
    clamp_state,
    clamp_value,
    compute_value_bound,
    mollifier,
    solve_backward_initial,
    solve_backward_modified,
)

__all__ = [
    "HypercubeBasis", "MappedBasis",
    "BlackScholesSpec", "black_scholes_put", "build_forward",
    "exchange_basis_10d", "exchange_benchmark_10d",
    "geometric_basket_equivalent", "geometric_put_payoff",
    "linear_pricing_driver", "product_exchange_payoff",
    "Obstacle", "binomial_american_put", "solve_max", "solve_penalized",
    "solve_regularized",
    "ForwardModel", "PathCloud", "SimulationError", "TimeGrid",
    "simulate_paths", "simulate_shadow_steps",
    "BackwardSolution", "Driver", "SolverError", "TerminalCondition",
    "ThresholdSet", "clamp_increment", "clamp_state", "clamp_value",
    "compute_value_bound", "mollifier", "solve_backward_initial",
    "solve_backward_modified",
]

__version__ = "0.1.0"
