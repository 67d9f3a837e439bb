"""Backward regression solvers for the non-reflected equation.

The dynamic programming recursion is solved on a cloud of simulated paths by
iterated empirical least squares on a local basis.  All intermediate
functions are truncated: Brownian increments at ``brownian_threshold *
sqrt(h)``, driver/terminal state arguments componentwise at the state
thresholds, fitted value functions at ``value_bound`` and fitted control
functions at ``value_bound / sqrt(h)``.  These hard clamps keep every
numerical solution uniformly bounded.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .basis import HypercubeBasis

__all__ = [
    "Driver",
    "TerminalCondition",
    "ThresholdSet",
    "SolverError",
    "clamp_increment",
    "clamp_state",
    "clamp_value",
    "compute_value_bound",
    "mollifier",
    "BackwardSolution",
    "solve_backward_initial",
    "solve_backward_modified",
]


class SolverError(RuntimeError):
    """A regression target became non-finite during the backward pass."""


@dataclass(frozen=True)
class Driver:
    """Generator f(t, x, y, z) of the backward equation.

    ``f`` is vectorized over paths: x (M, d), y (M,), z (M, q) -> (M,).
    ``lipschitz`` is the declared Lipschitz constant; ``zero_sup`` optionally
    declares sup |f(t, x, 0, 0)| over the clamped state box (estimated on a
    coarse grid when absent).
    """

    f: Callable[[float, np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    lipschitz: float
    zero_sup: float | None = None


@dataclass(frozen=True)
class TerminalCondition:
    """Terminal function phi(x), vectorized over paths: (M, d) -> (M,)."""

    phi: Callable[[np.ndarray], np.ndarray]
    sup_abs: float | None = None


def clamp_increment(dw: np.ndarray, brownian_threshold: float, h: float) -> np.ndarray:
    """Truncate Brownian increments to [-R0*sqrt(h), R0*sqrt(h)]."""
    lim = brownian_threshold * math.sqrt(h)
    return np.clip(dw, -lim, lim)


def clamp_state(x: np.ndarray, state_thresholds: np.ndarray) -> np.ndarray:
    """Componentwise truncation of state arguments to [-R_i, R_i]."""
    r = np.asarray(state_thresholds, dtype=float)
    return np.clip(x, -r, r)


def clamp_value(v: np.ndarray, bound: float) -> np.ndarray:
    """Truncate fitted values to [-bound, bound]."""
    return np.clip(v, -bound, bound)


def compute_value_bound(state_thresholds: np.ndarray, driver: Driver,
                        terminal: TerminalCondition, grid, q: int,
                        override: float | None = None) -> float:
    """Uniform bound on the truncated backward solution.

    Evaluates exp((2*g + (1+g)/q) * T) * (sup|phi|^2 + 2T(1+g)/g * sup|f0|^2)
    with g = 4*q*lipschitz^2, and returns its square root so the result is in
    the units of the solution itself.  ``override`` bypasses the formula.
    """
    if override is not None:
        return float(override)
    if driver.lipschitz <= 0:
        raise ValueError("lipschitz must be positive (or pass an explicit override)")
    sup_phi = terminal.sup_abs
    sup_f0 = driver.zero_sup
    if sup_phi is None or sup_f0 is None:
        est_phi, est_f0 = _estimate_sups(state_thresholds, driver, terminal, grid)
        warnings.warn("sup-bounds estimated on a coarse grid; not rigorous",
                      stacklevel=2)
        sup_phi = est_phi if sup_phi is None else sup_phi
        sup_f0 = est_f0 if sup_f0 is None else sup_f0
    g = 4.0 * q * driver.lipschitz ** 2
    expr = math.exp((2.0 * g + (1.0 + g) / q) * grid.T) * (
        sup_phi ** 2 + 2.0 * grid.T * (1.0 + g) / g * sup_f0 ** 2)
    return math.sqrt(expr)


def _estimate_sups(state_thresholds, driver, terminal, grid):
    r = np.atleast_1d(np.asarray(state_thresholds, dtype=float))
    d = r.shape[0]
    rng = np.random.Generator(np.random.Philox(key=2718281828))
    pts = rng.uniform(-1.0, 1.0, size=(2048, d)) * r
    if d <= 12:  # include the corners, where sups of monotone payoffs live
        corners = np.array(np.meshgrid(*[[-1.0, 1.0]] * d)).reshape(d, -1).T * r
        pts = np.vstack([pts, corners, np.zeros((1, d))])
    sup_phi = float(np.max(np.abs(terminal.phi(pts))))
    zeros = np.zeros(pts.shape[0])
    zq = np.zeros((pts.shape[0], 1))
    sup_f0 = max(float(np.max(np.abs(driver.f(t, pts, zeros, zq))))
                 for t in grid.times)
    return sup_phi, sup_f0


@dataclass(frozen=True)
class ThresholdSet:
    """Truncation levels for increments, states and fitted functions."""

    brownian: float
    state: np.ndarray
    value_bound: float

    def __post_init__(self):
        state = np.atleast_1d(np.asarray(self.state, dtype=float))
        if self.brownian <= 0 or np.any(state <= 0) or self.value_bound <= 0 \
                or not math.isfinite(self.value_bound):
            raise ValueError("all thresholds must be positive and finite")
        object.__setattr__(self, "state", state)

    def control_bound(self, h: float) -> float:
        return self.value_bound / math.sqrt(h)


def mollifier(x: np.ndarray, n: float) -> np.ndarray:
    """Piecewise-linear bump: 1 on |x| <= 1/n, 0 on |x| >= 2/n."""
    return np.clip(2.0 - n * np.abs(x), 0.0, 1.0)


@dataclass
class BackwardSolution:
    """Per-step regression coefficients, evaluable as clamped functions."""

    grid: object
    basis: HypercubeBasis
    basis_z: HypercubeBasis
    thresholds: ThresholdSet
    method: str
    y_coeffs: list
    z_coeffs: list
    terminal_fn: Callable[[np.ndarray], np.ndarray]
    obstacle_fn: Callable[[float, np.ndarray], np.ndarray] | None = None
    v_coeffs: list | None = None
    y0: float = field(default=np.nan)
    z0: np.ndarray = field(default=None)

    def y(self, k: int, x: np.ndarray) -> np.ndarray:
        """Evaluate the fitted value function at step k (k = N is terminal)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if k == self.grid.N:
            return np.asarray(self.terminal_fn(x), dtype=float)
        vals = clamp_value(self.basis.evaluate(self.y_coeffs[k], x),
                           self.thresholds.value_bound)
        if self.method == "max":
            vals = np.maximum(self.obstacle_fn(k * self.grid.h, x), vals)
        return vals

    def z(self, k: int, x: np.ndarray) -> np.ndarray:
        """Evaluate the fitted control function at step k, shape (M, q)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        bound = self.thresholds.control_bound(self.grid.h)
        return clamp_value(self.basis_z.evaluate(self.z_coeffs[k], x), bound)


def _solve(cloud, basis, driver, terminal, thresholds, grid, *, method,
           basis_z=None, obstacle=None, penalty=0.0):
    """Shared backward pass for all solver variants."""
    if basis_z is None:
        basis_z = basis
    n_steps, h = grid.N, grid.h
    if cloud.n_steps != n_steps:
        raise ValueError("cloud does not cover the time grid")
    use_shadow = method == "plain_modified"
    if use_shadow and not cloud.has_shadow:
        raise ValueError("modified solver needs shadow arrays; "
                         "run simulate_shadow_steps first")
    q = cloud.increments.shape[2]
    bound = thresholds.value_bound
    zbound = thresholds.control_bound(h)

    def f_r(t, x, y, z):
        return np.asarray(driver.f(t, clamp_state(x, thresholds.state), y, z),
                          dtype=float)

    def terminal_r(x):
        return np.asarray(terminal.phi(clamp_state(x, thresholds.state)),
                          dtype=float)

    obstacle_r = None
    if obstacle is not None:
        def obstacle_r(t, x):
            return np.asarray(obstacle(t, clamp_state(x, thresholds.state)),
                              dtype=float)

    solution = BackwardSolution(
        grid=grid, basis=basis, basis_z=basis_z, thresholds=thresholds,
        method=method, y_coeffs=[None] * n_steps, z_coeffs=[None] * n_steps,
        terminal_fn=terminal_r, obstacle_fn=obstacle_r,
        v_coeffs=[None] * n_steps if method == "regularization" else None)

    warned_obstacle = False
    for k in range(n_steps - 1, -1, -1):
        t_k = k * h
        t_k1 = (k + 1) * h
        x_k = cloud.states[:, k]
        if use_shadow:
            x_next = cloud.shadow_states[:, k + 1]
            dw = cloud.shadow_increments[:, k]
        else:
            x_next = cloud.states[:, k + 1]
            dw = cloud.increments[:, k]
        y_next = solution.y(k + 1, x_next)
        if not np.all(np.isfinite(y_next)):
            bad = int(np.flatnonzero(~np.isfinite(y_next))[0])
            raise SolverError(
                f"non-finite value on path {bad} entering step {k}")
        cw = clamp_increment(dw, thresholds.brownian, h)

        design = basis.design(x_k)
        design_z = design if basis_z is basis else basis_z.design(x_k)
        z_coeffs = design_z.fit(y_next[:, None] * cw / h)
        z_vals = clamp_value(design_z.evaluate(z_coeffs), zbound)

        target = y_next + h * f_r(t_k, x_k, y_next, z_vals)
        if method == "penalization" and penalty > 0.0:
            gap = obstacle_r(t_k, x_k) - y_next
            target = target + penalty * h * np.maximum(gap, 0.0)
        elif method == "regularization":
            phi_next = obstacle_r(t_k1, cloud.states[:, k + 1])
            v_coeffs = design_z.fit(phi_next[:, None] * cw / h)
            v_vals = clamp_value(design_z.evaluate(v_coeffs), zbound)
            bump = mollifier(y_next - phi_next, penalty)
            bracket = f_r(t_k, x_k, phi_next, v_vals) \
                + (phi_next - obstacle_r(t_k, x_k)) / h
            target = target + h * bump * np.maximum(-bracket, 0.0)
            solution.v_coeffs[k] = v_coeffs
        if not np.all(np.isfinite(target)):
            bad = int(np.flatnonzero(~np.isfinite(target))[0])
            raise SolverError(
                f"non-finite regression target on path {bad} at step {k}")

        solution.y_coeffs[k] = design.fit(target)
        solution.z_coeffs[k] = z_coeffs
        if method == "max" and not warned_obstacle:
            obs = obstacle_r(t_k, x_k)
            if np.any(obs > bound):
                warnings.warn(
                    "obstacle exceeds the value bound; effective bound "
                    "extended to the obstacle sup", stacklevel=3)
                warned_obstacle = True

    x0 = cloud.states[:1, 0]
    solution.y0 = float(solution.y(0, x0)[0])
    solution.z0 = solution.z(0, x0)[0]
    return solution


def solve_backward_initial(cloud, basis, driver, terminal, thresholds, grid,
                           basis_z=None) -> BackwardSolution:
    """Backward solver regressing targets built from the primary paths."""
    return _solve(cloud, basis, driver, terminal, thresholds, grid,
                  method="plain", basis_z=basis_z)


def solve_backward_modified(cloud, basis, driver, terminal, thresholds, grid,
                            basis_z=None) -> BackwardSolution:
    """Variant whose regression targets use the conditionally independent
    one-step copies; regressors stay on the primary states."""
    return _solve(cloud, basis, driver, terminal, thresholds, grid,
                  method="plain_modified", basis_z=basis_z)
