"""Forward path simulation.

Simulates M independent discrete-time paths of a (possibly jump-) diffusion
with an explicit Euler scheme, together with the Brownian increments used at
each step.  Randomness is counter-based: every time step draws from a Philox
stream keyed by (seed, purpose, step), so regenerating a cloud with the same
seed reproduces the arrays bit-exactly no matter how the work is scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

__all__ = [
    "ForwardModel",
    "TimeGrid",
    "PathCloud",
    "SimulationError",
    "simulate_paths",
    "simulate_shadow_steps",
]


class SimulationError(RuntimeError):
    """A simulated state became non-finite."""


# stream tags, kept distinct so jump draws never perturb the Gaussian stream
_TAG_GAUSS = 0
_TAG_POISSON = 1
_TAG_MARKS = 2


def _step_rng(seed: int, tag: int, step: int) -> np.random.Generator:
    key = np.array([np.uint64(seed), np.uint64(tag) << np.uint64(32) | np.uint64(step)],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class ForwardModel:
    """Coefficients of the simulable forward chain.

    ``drift(t, x)`` and ``diffusion(t, x)`` receive ``x`` of shape (M, d) and
    must broadcast to (M, d) and (M, d, q) respectively (constant (d,) / (d, q)
    returns are accepted).  The optional jump part is a compound Poisson
    process: ``jump_intensity`` is the total event rate, ``jump_marks(rng, n)``
    draws n i.i.d. marks, and ``jump_coeff(t, x, e)`` maps stacked states and
    marks to state displacements.  If ``jump_compensator(t, x)`` is given, it
    must return the rate-weighted mean displacement and is subtracted per unit
    time; otherwise the drift is assumed to absorb the compensator.
    """

    dim: int
    brownian_dim: int
    drift: Callable[[float, np.ndarray], np.ndarray]
    diffusion: Callable[[float, np.ndarray], np.ndarray]
    x0: np.ndarray
    jump_intensity: float = 0.0
    jump_marks: Callable[[np.random.Generator, int], np.ndarray] | None = None
    jump_coeff: Callable[[float, np.ndarray, np.ndarray], np.ndarray] | None = None
    jump_compensator: Callable[[float, np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.dim < 1 or self.brownian_dim < 1:
            raise ValueError("dim and brownian_dim must be >= 1")
        if self.jump_intensity < 0:
            raise ValueError("jump_intensity must be >= 0")
        if self.jump_intensity > 0 and (self.jump_marks is None or self.jump_coeff is None):
            raise ValueError("jump_intensity > 0 requires jump_marks and jump_coeff")
        object.__setattr__(self, "x0", np.atleast_1d(np.asarray(self.x0, dtype=float)))
        if self.x0.shape != (self.dim,):
            raise ValueError(f"x0 must have shape ({self.dim},)")

    @property
    def has_jumps(self) -> bool:
        return self.jump_intensity > 0.0


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_k = k*h on [0, T] with h = T/N."""

    T: float
    N: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if not (self.T > 0):
            raise ValueError("T must be > 0")

    @property
    def h(self) -> float:
        return self.T / self.N

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.h


@dataclass(frozen=True)
class PathCloud:
    """M simulated paths plus the Brownian increments that drove them.

    ``states`` has shape (M, N+1, d) and ``increments`` (M, N, q), each
    increment component ~ Normal(0, h).  The shadow arrays, when present,
    hold one-step re-simulations: ``shadow_states[m, k+1]`` is an independent
    copy of the step from ``states[m, k]`` (``shadow_states[:, 0]`` mirrors
    the common initial state).
    """

    states: np.ndarray
    increments: np.ndarray
    seed: int
    shadow_states: np.ndarray | None = None
    shadow_increments: np.ndarray | None = None
    shadow_seed: int | None = None

    @property
    def n_paths(self) -> int:
        return self.states.shape[0]

    @property
    def n_steps(self) -> int:
        return self.increments.shape[1]

    @property
    def has_shadow(self) -> bool:
        return self.shadow_states is not None


def _euler_step(model: ForwardModel, t: float, x: np.ndarray, dw: np.ndarray,
                h: float, seed: int, step: int) -> np.ndarray:
    """One explicit Euler step from states x (M, d) with increments dw (M, q)."""
    b = np.asarray(model.drift(t, x), dtype=float)
    s = np.asarray(model.diffusion(t, x), dtype=float)
    if s.ndim == 2:  # constant (d, q) matrix
        diffusion_term = dw @ s.T
    else:
        diffusion_term = np.einsum("mdq,mq->md", s, dw)
    x_next = x + b * h + diffusion_term
    if model.has_jumps:
        x_next = x_next + _jump_term(model, t, x, h, seed, step)
    return x_next


def _jump_term(model: ForwardModel, t: float, x: np.ndarray, h: float,
               seed: int, step: int) -> np.ndarray:
    m = x.shape[0]
    counts = _step_rng(seed, _TAG_POISSON, step).poisson(model.jump_intensity * h, size=m)
    term = np.zeros_like(x)
    total = int(counts.sum())
    if total > 0:
        marks = np.asarray(model.jump_marks(_step_rng(seed, _TAG_MARKS, step), total))
        owners = np.repeat(np.arange(m), counts)
        disp = np.asarray(model.jump_coeff(t, x[owners], marks), dtype=float)
        np.add.at(term, owners, disp)
    if model.jump_compensator is not None:
        term = term - h * np.asarray(model.jump_compensator(t, x), dtype=float)
    return term


def _check_finite(x: np.ndarray, step: int, what: str) -> None:
    if not np.all(np.isfinite(x)):
        bad = np.argwhere(~np.isfinite(x))
        path = int(bad[0, 0])
        raise SimulationError(
            f"non-finite {what} on path {path} at step {step}")


def simulate_paths(model: ForwardModel, grid: TimeGrid, n_paths: int, seed: int) -> PathCloud:
    """Simulate ``n_paths`` independent Euler paths on ``grid``.

    Deterministic in (model, grid, n_paths, seed); identical inputs reproduce
    the arrays bit-exactly.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    d, q, h = model.dim, model.brownian_dim, grid.h
    sqrt_h = math.sqrt(h)
    states = np.empty((n_paths, grid.N + 1, d))
    increments = np.empty((n_paths, grid.N, q))
    states[:, 0] = model.x0
    for k in range(grid.N):
        t_k = k * h
        dw = _step_rng(seed, _TAG_GAUSS, k).standard_normal((n_paths, q)) * sqrt_h
        increments[:, k] = dw
        states[:, k + 1] = _euler_step(model, t_k, states[:, k], dw, h, seed, k)
        _check_finite(states[:, k + 1], k + 1, "state")
    return PathCloud(states=states, increments=increments, seed=seed)


def simulate_shadow_steps(cloud: PathCloud, model: ForwardModel, grid: TimeGrid,
                          seed2: int) -> PathCloud:
    """Attach conditionally independent one-step copies to ``cloud``.

    For every (path, step) a fresh increment and a fresh Euler step are drawn
    from the state ``cloud.states[m, k]`` using a stream disjoint from the
    primary one.  The primary arrays are untouched.
    """
    if cloud.has_shadow:
        raise ValueError("cloud already carries shadow arrays")
    if seed2 == cloud.seed:
        raise ValueError("seed2 must differ from the primary seed")
    m, q, h = cloud.n_paths, model.brownian_dim, grid.h
    sqrt_h = math.sqrt(h)
    shadow_states = np.empty_like(cloud.states)
    shadow_increments = np.empty_like(cloud.increments)
    shadow_states[:, 0] = cloud.states[:, 0]
    for k in range(grid.N):
        t_k = k * h
        dw = _step_rng(seed2, _TAG_GAUSS, k).standard_normal((m, q)) * sqrt_h
        shadow_increments[:, k] = dw
        shadow_states[:, k + 1] = _euler_step(model, t_k, cloud.states[:, k], dw, h, seed2, k)
        _check_finite(shadow_states[:, k + 1], k + 1, "shadow state")
    return replace(cloud, shadow_states=shadow_states,
                   shadow_increments=shadow_increments, shadow_seed=seed2)
