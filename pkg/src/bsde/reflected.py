"""Solvers for the obstacle-constrained (reflected) backward equation.

Three variants share the plain backward regression machinery:

* max method: each step takes the pointwise maximum of the obstacle and the
  fitted continuation value;
* penalization: an extra term ``n * h * (y - obstacle)_-`` pushes the
  solution up from below, no maximum applied;
* regularization: a mollified correction active near the contact set, built
  from an auxiliary regression of the obstacle's Brownian component; gives an
  upper approximation while the other two approximate from below.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .solvers import BackwardSolution, Driver, TerminalCondition, ThresholdSet, _solve

__all__ = [
    "Obstacle",
    "solve_max",
    "solve_penalized",
    "solve_regularized",
    "binomial_american_put",
]


@dataclass(frozen=True)
class Obstacle:
    """Time-dependent lower barrier phi(t, x), vectorized: (M, d) -> (M,).

    At the final time it doubles as the terminal condition.
    """

    phi: Callable[[float, np.ndarray], np.ndarray]
    sup_abs: float | None = None

    def terminal(self, T: float) -> TerminalCondition:
        return TerminalCondition(phi=lambda x: self.phi(T, x),
                                 sup_abs=self.sup_abs)


def solve_max(cloud, basis, driver: Driver, obstacle: Obstacle,
              thresholds: ThresholdSet, grid, basis_z=None) -> BackwardSolution:
    """Reflection by pointwise maximum with the obstacle at every step."""
    return _solve(cloud, basis, driver, obstacle.terminal(grid.T), thresholds,
                  grid, method="max", basis_z=basis_z, obstacle=obstacle.phi)


def solve_penalized(cloud, basis, driver: Driver, obstacle: Obstacle,
                    thresholds: ThresholdSet, grid, penalty: float,
                    basis_z=None) -> BackwardSolution:
    """Reflection replaced by the penalty term ``penalty * h * (y - phi)_-``."""
    if penalty < 0:
        raise ValueError("penalty must be >= 0")
    if penalty * grid.h >= 1.0:
        warnings.warn("penalty * h >= 1: explicit penalty step is stiff",
                      stacklevel=2)
    return _solve(cloud, basis, driver, obstacle.terminal(grid.T), thresholds,
                  grid, method="penalization", basis_z=basis_z,
                  obstacle=obstacle.phi, penalty=penalty)


def solve_regularized(cloud, basis, driver: Driver, obstacle: Obstacle,
                      thresholds: ThresholdSet, grid, level: float,
                      basis_z=None) -> BackwardSolution:
    """Reflection replaced by a mollified correction near the contact set.

    ``level`` controls the mollifier width (support |x| <= 2/level).
    """
    if level < 1:
        raise ValueError("level must be >= 1")
    return _solve(cloud, basis, driver, obstacle.terminal(grid.T), thresholds,
                  grid, method="regularization", basis_z=basis_z,
                  obstacle=obstacle.phi, penalty=level)


def binomial_american_put(r: float, sigma: float, strike: float, s0: float,
                          T: float, steps: int) -> float:
    """Cox-Ross-Rubinstein price of an American put, used as an oracle."""
    if steps < 100:
        raise ValueError("steps must be >= 100")
    dt = T / steps
    if sigma <= 0:
        # zero-volatility limit: deterministic forward, optimal stop by scan
        times = np.arange(steps + 1) * dt
        payoffs = np.exp(-r * times) * np.maximum(strike - s0 * np.exp(r * times), 0.0)
        return float(payoffs.max())
    u = math.exp(sigma * math.sqrt(dt))
    d = 1.0 / u
    disc = math.exp(-r * dt)
    p = (math.exp(r * dt) - d) / (u - d)
    j = np.arange(steps + 1)
    prices = s0 * u ** j * d ** (steps - j)
    values = np.maximum(strike - prices, 0.0)
    for k in range(steps - 1, -1, -1):
        j = np.arange(k + 1)
        prices = s0 * u ** j * d ** (k - j)
        continuation = disc * (p * values[1:k + 2] + (1.0 - p) * values[:k + 1])
        values = np.maximum(continuation, np.maximum(strike - prices, 0.0))
    return float(values[0])
