"""Configuration-driven experiment runner.

Reads a flat sectioned key-value config ([model] / [payoff] / [method] /
[grid] / [basis] / [thresholds] / [run]), executes the Cartesian sweep over
any of N, M, delta and level with the requested number of replications, and
appends one CSV row per replication.  A summary table (mean +/- standard
error per sweep point) goes to standard output.

Exit codes: 0 success, 1 numerical abort, 2 config validation failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import itertools
import math
import sys
import time
from dataclasses import dataclass, replace

import numpy as np

from . import models
from .basis import HypercubeBasis, MappedBasis
from .reflected import Obstacle, solve_max, solve_penalized, solve_regularized
from .sde import ForwardModel, SimulationError, TimeGrid, simulate_paths, \
    simulate_shadow_steps
from .solvers import Driver, SolverError, ThresholdSet, compute_value_bound, \
    solve_backward_initial, solve_backward_modified

__all__ = ["ExperimentConfig", "ConfigError", "load_config", "run", "dump_paths", "main"]

METHODS = ("plain", "plain_modified", "max", "penalization", "regularization")


class ConfigError(ValueError):
    """The config file failed validation; the message names the field."""


@dataclass(frozen=True)
class ExperimentConfig:
    model_kind: str
    dimension: int
    rate: float
    sigma: np.ndarray
    dividend: np.ndarray
    s0: np.ndarray          # prices for black_scholes, raw state for brownian
    drift: float            # brownian only
    payoff_kind: str
    strike: float
    split: int
    method: str
    level: float
    T: float
    N: int
    basis_center: np.ndarray | None   # None = auto (initial state)
    basis_half_width: np.ndarray | None  # None = auto (domain_sd terminal SDs)
    delta: float
    degree: int
    domain_sd: float
    transform: str
    brownian_threshold: float
    state_threshold: np.ndarray
    value_bound: float | None
    M: int
    seed: int
    replications: int
    sweep_N: tuple[int, ...] | None
    sweep_M: tuple[int, ...] | None
    sweep_delta: tuple[float, ...] | None
    sweep_level: tuple[float, ...] | None


def _get(cp, section, key, conv, default=None, required=False):
    try:
        raw = cp.get(section, key)
    except (configparser.NoSectionError, configparser.NoOptionError):
        if required:
            raise ConfigError(f"missing required field [{section}] {key}") from None
        return default
    try:
        return conv(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value for [{section}] {key}: {raw!r}") from None


def _floats(raw: str) -> np.ndarray:
    return np.array([float(v) for v in raw.split(",")])


def _ints(raw: str) -> tuple[int, ...]:
    return tuple(int(v) for v in raw.split(","))


def _float_list(raw: str) -> tuple[float, ...]:
    return tuple(float(v) for v in raw.split(","))


def load_config(path: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")

    model_kind = _get(cp, "model", "kind", str, default="black_scholes")
    if model_kind not in ("black_scholes", "brownian"):
        raise ConfigError(f"unknown [model] kind: {model_kind}")
    d = _get(cp, "model", "dimension", int, default=1)
    if d < 1:
        raise ConfigError("[model] dimension must be >= 1")
    rate = _get(cp, "model", "rate", float, default=0.0)
    sigma = np.broadcast_to(
        _get(cp, "model", "sigma", _floats, required=True), (d,)).copy()
    dividend = np.broadcast_to(
        _get(cp, "model", "dividend", _floats, default=np.zeros(1)), (d,)).copy()
    drift = _get(cp, "model", "drift", float, default=0.0)
    if model_kind == "black_scholes":
        s0 = np.broadcast_to(_get(cp, "model", "s0", _floats, required=True), (d,)).copy()
        if np.any(s0 <= 0):
            raise ConfigError("[model] s0 must be positive")
    else:
        s0 = np.broadcast_to(_get(cp, "model", "x0", _floats, default=np.zeros(1)), (d,)).copy()
    if np.any(sigma <= 0):
        raise ConfigError("[model] sigma must be positive")

    payoff_kind = _get(cp, "payoff", "kind", str, required=True)
    if payoff_kind not in ("geometric_put", "product_exchange", "identity", "constant"):
        raise ConfigError(f"unknown [payoff] kind: {payoff_kind}")
    strike = _get(cp, "payoff", "strike", float, default=0.0)
    if payoff_kind == "geometric_put" and strike <= 0:
        raise ConfigError("[payoff] strike must be positive for geometric_put")
    split = _get(cp, "payoff", "split", int, default=d // 2)

    method = _get(cp, "method", "name", str, required=True)
    if method not in METHODS:
        raise ConfigError(f"unknown [method] name: {method} (one of {METHODS})")
    level = _get(cp, "method", "level", float, default=0.0)
    if method == "regularization" and level < 1:
        raise ConfigError("[method] level must be >= 1 for regularization")
    if method == "penalization" and level < 0:
        raise ConfigError("[method] level must be >= 0 for penalization")

    T = _get(cp, "grid", "T", float, required=True)
    N = _get(cp, "grid", "N", int, required=True)
    if T <= 0:
        raise ConfigError("[grid] T must be positive")
    if N < 1:
        raise ConfigError("[grid] N must be >= 1")

    center_raw = _get(cp, "basis", "center", str, default="auto")
    basis_center = None if center_raw == "auto" else _floats(center_raw)
    hw_raw = _get(cp, "basis", "half_width", str, default="auto")
    basis_half_width = None if hw_raw == "auto" else _floats(hw_raw)
    delta = _get(cp, "basis", "delta", float, required=True)
    if delta <= 0:
        raise ConfigError("[basis] delta must be positive")
    degree = _get(cp, "basis", "degree", int, default=0)
    if degree not in (0, 1):
        raise ConfigError("[basis] degree must be 0 or 1")
    domain_sd = _get(cp, "basis", "domain_sd", float, default=4.0)
    transform = _get(cp, "basis", "transform", str, default="none")
    if transform not in ("none", "product_spread"):
        raise ConfigError(f"unknown [basis] transform: {transform}")
    if transform == "product_spread" and model_kind != "black_scholes":
        raise ConfigError("[basis] transform product_spread needs a "
                          "black_scholes model")

    brownian_threshold = _get(cp, "thresholds", "brownian", float, default=10.0)
    state_threshold = np.broadcast_to(
        _get(cp, "thresholds", "state", _floats, default=np.array([100.0])), (d,)).copy()
    value_bound = _get(cp, "thresholds", "value_bound", float, default=None)
    if brownian_threshold <= 0 or np.any(state_threshold <= 0):
        raise ConfigError("[thresholds] entries must be positive")

    M = _get(cp, "run", "M", int, required=True)
    if M < 1:
        raise ConfigError("[run] M must be a positive integer")
    seed = _get(cp, "run", "seed", int, default=0)
    replications = _get(cp, "run", "replications", int, default=1)
    if replications < 1:
        raise ConfigError("[run] replications must be >= 1")
    sweeps = {}
    for key, conv in (("sweep_n", _ints), ("sweep_m", _ints),
                      ("sweep_delta", _float_list), ("sweep_level", _float_list)):
        val = _get(cp, "run", key, conv, default=None)
        if val is not None and len(val) == 0:
            raise ConfigError(f"[run] {key} must be nonempty when present")
        sweeps[key] = val

    return ExperimentConfig(
        model_kind=model_kind, dimension=d, rate=rate, sigma=sigma,
        dividend=dividend, s0=s0, drift=drift, payoff_kind=payoff_kind,
        strike=strike, split=split, method=method, level=level, T=T, N=N,
        basis_center=basis_center, basis_half_width=basis_half_width,
        delta=delta, degree=degree, domain_sd=domain_sd, transform=transform,
        brownian_threshold=brownian_threshold, state_threshold=state_threshold,
        value_bound=value_bound, M=M, seed=seed, replications=replications,
        sweep_N=sweeps["sweep_n"], sweep_M=sweeps["sweep_m"],
        sweep_delta=sweeps["sweep_delta"], sweep_level=sweeps["sweep_level"])


def _build_model(cfg: ExperimentConfig) -> ForwardModel:
    if cfg.model_kind == "black_scholes":
        spec = models.BlackScholesSpec(dimension=cfg.dimension, rate=cfg.rate,
                                       sigma=cfg.sigma, s0=cfg.s0,
                                       dividend=cfg.dividend)
        return models.build_forward(spec)
    drift = np.full(cfg.dimension, cfg.drift)
    return ForwardModel(dim=cfg.dimension, brownian_dim=cfg.dimension,
                        drift=lambda t, x: drift,
                        diffusion=lambda t, x: np.diag(cfg.sigma),
                        x0=cfg.s0)


def _build_payoff(cfg: ExperimentConfig) -> Obstacle:
    if cfg.payoff_kind == "geometric_put":
        return models.geometric_put_payoff(cfg.strike, cfg.dimension)
    if cfg.payoff_kind == "product_exchange":
        return models.product_exchange_payoff(cfg.split)
    if cfg.payoff_kind == "identity":
        sup = float(np.max(cfg.state_threshold))
        return Obstacle(phi=lambda t, x: np.atleast_2d(x)[:, 0], sup_abs=sup)
    value = cfg.strike  # constant payoff reuses the strike field as the level
    return Obstacle(phi=lambda t, x: np.full(np.atleast_2d(x).shape[0], value),
                    sup_abs=abs(value))


def _build_driver(cfg: ExperimentConfig) -> Driver:
    if cfg.model_kind == "black_scholes" and cfg.rate != 0.0:
        return models.linear_pricing_driver(cfg.rate)
    return Driver(f=lambda t, x, y, z: np.zeros(np.atleast_2d(x).shape[0]),
                  lipschitz=1e-12, zero_sup=0.0)


def _build_basis(cfg: ExperimentConfig, model: ForwardModel, delta: float):
    if cfg.transform == "product_spread":
        return _build_spread_basis(cfg, delta)
    center = cfg.basis_center if cfg.basis_center is not None else model.x0
    if cfg.basis_half_width is not None:
        hw = cfg.basis_half_width
    else:
        sd = cfg.sigma * math.sqrt(cfg.T)
        hw = cfg.domain_sd * sd
    # snap so the initial state sits at a cell center
    hw = (np.floor(hw / delta) + 0.5) * delta
    return HypercubeBasis(center=center, half_width=hw, edge=delta,
                          degree=cfg.degree)


def _build_spread_basis(cfg: ExperimentConfig, delta: float) -> MappedBasis:
    """1-D cells on the price spread between the two product groups."""
    split = cfg.split

    def spread(x):
        return (np.exp(np.sum(x[:, :split], axis=1))
                - np.exp(np.sum(x[:, split:], axis=1)))[:, None]

    p1 = float(np.prod(cfg.s0[:split]))
    p2 = float(np.prod(cfg.s0[split:]))
    var = (p1 ** 2 * float(np.sum(cfg.sigma[:split] ** 2))
           + p2 ** 2 * float(np.sum(cfg.sigma[split:] ** 2))) * cfg.T
    if cfg.basis_center is not None:
        center = cfg.basis_center
    else:
        center = np.array([p1 - p2])
    if cfg.basis_half_width is not None:
        hw = cfg.basis_half_width
    else:
        hw = np.array([cfg.domain_sd * math.sqrt(var)])
    hw = (np.floor(hw / delta) + 0.5) * delta
    base = HypercubeBasis(center=center, half_width=hw, edge=delta,
                          degree=cfg.degree)
    return MappedBasis(base=base, transform=spread)


def _build_thresholds(cfg: ExperimentConfig, driver: Driver,
                      payoff: Obstacle, grid: TimeGrid) -> ThresholdSet:
    bound = compute_value_bound(cfg.state_threshold, driver,
                                payoff.terminal(grid.T), grid, cfg.dimension,
                                override=cfg.value_bound)
    return ThresholdSet(brownian=cfg.brownian_threshold,
                        state=cfg.state_threshold, value_bound=bound)


def _solve_point(cfg: ExperimentConfig, seed: int):
    grid = TimeGrid(T=cfg.T, N=cfg.N)
    model = _build_model(cfg)
    payoff = _build_payoff(cfg)
    driver = _build_driver(cfg)
    basis = _build_basis(cfg, model, cfg.delta)
    thresholds = _build_thresholds(cfg, driver, payoff, grid)
    cloud = simulate_paths(model, grid, cfg.M, seed)
    if cfg.method == "plain":
        sol = solve_backward_initial(cloud, basis, driver,
                                     payoff.terminal(grid.T), thresholds, grid)
    elif cfg.method == "plain_modified":
        cloud = simulate_shadow_steps(cloud, model, grid, seed + 10 ** 9)
        sol = solve_backward_modified(cloud, basis, driver,
                                      payoff.terminal(grid.T), thresholds, grid)
    elif cfg.method == "max":
        sol = solve_max(cloud, basis, driver, payoff, thresholds, grid)
    elif cfg.method == "penalization":
        sol = solve_penalized(cloud, basis, driver, payoff, thresholds, grid,
                              penalty=cfg.level)
    else:
        sol = solve_regularized(cloud, basis, driver, payoff, thresholds, grid,
                                level=cfg.level)
    return sol


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def run(config_path: str, out_path: str, seed_override: int | None = None) -> int:
    """Execute the sweep described by the config; append rows to the CSV."""
    cfg = load_config(config_path)
    if seed_override is not None:
        cfg = replace(cfg, seed=seed_override)
    points = list(itertools.product(
        cfg.sweep_N or (cfg.N,),
        cfg.sweep_M or (cfg.M,),
        cfg.sweep_delta or (cfg.delta,),
        cfg.sweep_level or (cfg.level,)))
    q = cfg.dimension
    header = ["method", "N", "M", "delta", "level", "replication", "seed",
              "y0"] + [f"z0_{l}" for l in range(q)] + ["stderr", "wall_seconds"]
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for n_steps, m_paths, delta, level in points:
            point_cfg = replace(cfg, N=n_steps, M=m_paths, delta=delta, level=level)
            y0s, rows = [], []
            for rep in range(cfg.replications):
                rep_seed = cfg.seed + rep
                start = time.perf_counter()
                sol = _solve_point(point_cfg, rep_seed)
                elapsed = time.perf_counter() - start
                y0s.append(sol.y0)
                rows.append([cfg.method, n_steps, m_paths, _fmt(delta),
                             _fmt(level), rep, rep_seed, _fmt(sol.y0)]
                            + [_fmt(v) for v in sol.z0]
                            + [None, _fmt(elapsed)])
            y0s = np.array(y0s)
            stderr = float(np.std(y0s, ddof=1) / math.sqrt(len(y0s))) \
                if len(y0s) > 1 else 0.0
            for row in rows:
                row[-2] = _fmt(stderr)
                writer.writerow(row)
            print(f"N={n_steps} M={m_paths} delta={delta:g} level={level:g}: "
                  f"y0 = {y0s.mean():.6f} +/- {stderr:.6f}")
    return 0


def dump_paths(config_path: str, out_path: str, seed_override: int | None = None) -> int:
    """Write terminal states and Brownian increments of the cloud as CSV."""
    cfg = load_config(config_path)
    if seed_override is not None:
        cfg = replace(cfg, seed=seed_override)
    grid = TimeGrid(T=cfg.T, N=cfg.N)
    model = _build_model(cfg)
    cloud = simulate_paths(model, grid, cfg.M, cfg.seed)
    d, q = model.dim, model.brownian_dim
    header = ["path"] + [f"x_final_{i}" for i in range(d)] \
        + [f"dw_{k}_{l}" for k in range(grid.N) for l in range(q)]
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for m in range(cfg.M):
            writer.writerow([m] + [_fmt(v) for v in cloud.states[m, -1]]
                            + [_fmt(v) for v in cloud.increments[m].ravel()])
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bsde", description="Regression Monte Carlo BSDE experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "dump-paths"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None,
                       help="affects speed only, never results")
    args = parser.parse_args(argv)
    command = run if args.command == "run" else dump_paths
    try:
        return command(args.config, args.out, seed_override=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (SimulationError, SolverError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
