"""Price a 1-D American put three ways and compare with the binomial oracle.

Market: r = 0.05, sigma = 0.15, K = 100, S0 = 100, T = 1.  The reflected
solvers run on the same simulated cloud, so differences between them are
method effects, not Monte Carlo noise.
"""

import math

import numpy as np

import bsde


def main():
    spec = bsde.BlackScholesSpec(dimension=1, rate=0.05, sigma=0.15, s0=100.0)
    model = bsde.build_forward(spec)
    payoff = bsde.geometric_put_payoff(100.0, 1)
    driver = bsde.linear_pricing_driver(0.05)

    grid = bsde.TimeGrid(T=1.0, N=50)
    edge = 0.005
    half_width = (math.floor(4 * 0.15 / edge) + 0.5) * edge
    basis = bsde.HypercubeBasis(center=model.x0, half_width=[half_width],
                                edge=edge)
    thresholds = bsde.ThresholdSet(brownian=10.0, state=np.array([20.0]),
                                   value_bound=150.0)

    print("simulating 2^17 paths ...")
    cloud = bsde.simulate_paths(model, grid, 2 ** 17, seed=0)

    american = bsde.solve_max(cloud, basis, driver, payoff, thresholds, grid)
    penalized = bsde.solve_penalized(cloud, basis, driver, payoff, thresholds,
                                     grid, penalty=2.0)
    regular = bsde.solve_regularized(cloud, basis, driver, payoff, thresholds,
                                     grid, level=2.0)
    european = bsde.solve_backward_initial(cloud, basis, driver,
                                           payoff.terminal(grid.T),
                                           thresholds, grid)

    oracle = bsde.binomial_american_put(0.05, 0.15, 100.0, 100.0, 1.0, 2000)
    closed = bsde.black_scholes_put(100.0, 100.0, 0.05, 0.15, 1.0)

    print(f"binomial oracle (2000 steps)   {oracle:8.4f}")
    print(f"max method                     {american.y0:8.4f}")
    print(f"penalization (n=2)             {penalized.y0:8.4f}")
    print(f"regularization (n=2)           {regular.y0:8.4f}")
    print(f"plain solver (European)        {european.y0:8.4f}")
    print(f"closed-form European put       {closed:8.4f}")
    print(f"early exercise premium         {american.y0 - european.y0:8.4f}")


if __name__ == "__main__":
    main()
