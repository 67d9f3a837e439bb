"""Benchmark model zoo: Black-Scholes dynamics, payoffs and analytic oracles.

The forward chain works in log-price coordinates, so the Euler scheme is
exact for geometric Brownian motion and componentwise state clamps act on
log-prices.  Payoffs compose with exp internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .basis import HypercubeBasis, MappedBasis
from .reflected import Obstacle
from .sde import ForwardModel
from .solvers import Driver, TerminalCondition

__all__ = [
    "BlackScholesSpec",
    "build_forward",
    "linear_pricing_driver",
    "geometric_put_payoff",
    "product_exchange_payoff",
    "black_scholes_put",
    "geometric_basket_equivalent",
    "exchange_benchmark_10d",
    "exchange_basis_10d",
]


@dataclass(frozen=True)
class BlackScholesSpec:
    """Market with d independent lognormal assets (correlation optional)."""

    dimension: int
    rate: float
    sigma: np.ndarray          # per-asset volatility
    s0: np.ndarray             # initial prices
    dividend: np.ndarray = 0.0  # per-asset dividend yield
    correlation: np.ndarray | None = None

    def __post_init__(self):
        d = self.dimension
        for name in ("sigma", "s0", "dividend"):
            v = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (d,)).copy()
            object.__setattr__(self, name, v)
        if np.any(self.sigma <= 0) or np.any(self.s0 <= 0):
            raise ValueError("sigma and s0 must be positive")
        if self.correlation is not None:
            c = np.asarray(self.correlation, dtype=float)
            if c.shape != (d, d):
                raise ValueError("correlation must be d x d")
            object.__setattr__(self, "correlation", c)

    @property
    def log_s0(self) -> np.ndarray:
        return np.log(self.s0)


def build_forward(spec: BlackScholesSpec) -> ForwardModel:
    """Forward chain in log-prices: drift r - mu - sigma^2/2, diagonal
    diffusion (times the correlation Cholesky factor when given)."""
    drift_vec = spec.rate - spec.dividend - 0.5 * spec.sigma ** 2
    diff_mat = np.diag(spec.sigma)
    if spec.correlation is not None:
        diff_mat = diff_mat @ np.linalg.cholesky(spec.correlation)
    return ForwardModel(
        dim=spec.dimension,
        brownian_dim=spec.dimension,
        drift=lambda t, x: drift_vec,
        diffusion=lambda t, x: diff_mat,
        x0=spec.log_s0,
    )


def linear_pricing_driver(rate: float) -> Driver:
    """Risk-neutral pricing driver f(t, x, y, z) = -rate * y."""
    return Driver(f=lambda t, x, y, z: -rate * y,
                  lipschitz=max(abs(rate), 1e-12),
                  zero_sup=0.0)


def geometric_put_payoff(strike: float, dimension: int) -> Obstacle:
    """Put on the geometric mean of the assets, (K - (prod S_i)^(1/d))_+.

    In log coordinates the geometric mean is exp of the coordinate average.
    Time-independent, so it serves as obstacle and terminal condition alike.
    """
    def phi(t, x):
        x = np.atleast_2d(x)
        return np.maximum(strike - np.exp(np.mean(x, axis=1)), 0.0)
    return Obstacle(phi=phi, sup_abs=strike)


def product_exchange_payoff(split: int) -> Obstacle:
    """Exchange payoff max(prod_{i<=p} S_i - prod_{i>p} S_i, 0)."""
    def phi(t, x):
        x = np.atleast_2d(x)
        first = np.exp(np.sum(x[:, :split], axis=1))
        second = np.exp(np.sum(x[:, split:], axis=1))
        return np.maximum(first - second, 0.0)
    return Obstacle(phi=phi)


def black_scholes_put(s0: float, strike: float, rate: float, sigma: float,
                      T: float) -> float:
    """Closed-form European put under lognormal dynamics."""
    if strike <= 0:
        return 0.0
    if sigma * math.sqrt(T) <= 0:
        return max(strike * math.exp(-rate * T) - s0, 0.0)
    vol = sigma * math.sqrt(T)
    d1 = (math.log(s0 / strike) + (rate + 0.5 * sigma ** 2) * T) / vol
    d2 = d1 - vol
    return strike * math.exp(-rate * T) * norm.cdf(-d2) - s0 * norm.cdf(-d1)


def geometric_basket_equivalent(spec: BlackScholesSpec) -> tuple[float, float, float]:
    """(s0_eff, sigma_eff, dividend_eff) of the 1-D lognormal asset whose law
    matches the geometric mean of d i.i.d. assets with common parameters."""
    sigma = float(spec.sigma[0])
    mu = float(spec.dividend[0])
    d = spec.dimension
    sigma_eff = sigma / math.sqrt(d)
    dividend_eff = mu + 0.5 * sigma ** 2 - 0.5 * sigma_eff ** 2
    s0_eff = float(np.exp(np.mean(spec.log_s0)))
    return s0_eff, sigma_eff, dividend_eff


def exchange_benchmark_10d() -> tuple[BlackScholesSpec, Obstacle, float]:
    """The 10-asset exchange benchmark configuration and its reference price.

    A 2-asset American exchange option (S1 = 40, S2 = 36, sigma = 0.2 each,
    independent, r = 0, dividend 0.05 on the long asset, T = 0.5, PDE
    reference price 4.896) embedded in d = 10 by writing each side as the
    product of five i.i.d. lognormal factors.  Each factor then carries
    volatility 0.2/sqrt(5) and starts at 40^(1/5) resp. 36^(1/5); the
    dividend drag sits on the first factor.
    """
    d = 10
    dividend = np.zeros(d)
    dividend[0] = 0.05
    s0 = np.concatenate([np.full(5, 40.0 ** (2 / d)), np.full(5, 36.0 ** (2 / d))])
    spec = BlackScholesSpec(dimension=d, rate=0.0, sigma=0.2 / math.sqrt(d // 2),
                            s0=s0, dividend=dividend)
    return spec, product_exchange_payoff(split=5), 4.896


def exchange_basis_10d(edge: float = 0.6, degree: int = 1,
                       n_sd: float = 4.0) -> MappedBasis:
    """Regression basis for the 10-asset exchange benchmark.

    The exercise decision depends on the state only through the price spread
    between the two five-asset products, so the cells partition that spread.
    ``edge`` is the cell size in price units; the domain spans ``n_sd``
    terminal standard deviations around the initial spread.
    """
    def spread(x):
        return (np.exp(np.sum(x[:, :5], axis=1))
                - np.exp(np.sum(x[:, 5:], axis=1)))[:, None]
    sd = math.sqrt(2.0) * 40.0 * 0.2 * math.sqrt(0.5)
    half_width = (math.floor(n_sd * sd / edge) + 0.5) * edge
    base = HypercubeBasis(center=[4.0], half_width=[half_width], edge=edge,
                          degree=degree)
    return MappedBasis(base=base, transform=spread)
