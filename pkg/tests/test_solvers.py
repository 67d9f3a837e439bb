"""Backward solvers: clamps, value bound, exact recursions, boundedness."""

import math

import numpy as np
import pytest

from bsde import (
    Driver,
    HypercubeBasis,
    SolverError,
    TerminalCondition,
    ThresholdSet,
    TimeGrid,
    clamp_increment,
    clamp_state,
    clamp_value,
    compute_value_bound,
    mollifier,
    simulate_paths,
    simulate_shadow_steps,
    solve_backward_initial,
    solve_backward_modified,
)
from tests.test_sde import brownian_model

ZERO_DRIVER = Driver(f=lambda t, x, y, z: np.zeros(len(y)),
                     lipschitz=1e-12, zero_sup=0.0)


def wide_basis(d=1):
    return HypercubeBasis(center=np.zeros(d), half_width=np.full(d, 100.0),
                          edge=200.0)


def test_clamp_ranges_and_idempotence():
    rng = np.random.default_rng(0)
    v = rng.standard_normal(1000) * 10
    h = 0.25
    cw = clamp_increment(v, 2.0, h)
    assert np.all(np.abs(cw) <= 2.0 * math.sqrt(h))
    assert np.array_equal(clamp_increment(cw, 2.0, h), cw)
    x = rng.standard_normal((1000, 3)) * 10
    cx = clamp_state(x, np.array([1.0, 2.0, 3.0]))
    assert np.all(np.abs(cx) <= np.array([1.0, 2.0, 3.0]))
    cy = clamp_value(v, 5.0)
    assert np.all(np.abs(cy) <= 5.0)
    assert np.array_equal(clamp_value(cy, 5.0), cy)


def test_clamps_are_1_lipschitz():
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal(1000) * 5, rng.standard_normal(1000) * 5
    assert np.all(np.abs(clamp_value(a, 2.0) - clamp_value(b, 2.0)) <= np.abs(a - b) + 1e-15)
    assert np.all(np.abs(clamp_increment(a, 1.0, 0.1) - clamp_increment(b, 1.0, 0.1))
                  <= np.abs(a - b) + 1e-15)


def test_value_bound_closed_form():
    # q=1, lipschitz=1, T=1, sup|phi|=1, sup|f0|=0 gives exp(13)^(1/2)
    driver = Driver(f=lambda t, x, y, z: np.zeros(len(y)), lipschitz=1.0,
                    zero_sup=0.0)
    terminal = TerminalCondition(phi=lambda x: np.ones(x.shape[0]), sup_abs=1.0)
    bound = compute_value_bound(np.array([1.0]), driver, terminal,
                                TimeGrid(T=1.0, N=1), q=1)
    assert bound == pytest.approx(math.exp(6.5), rel=1e-12)


def test_value_bound_override_and_validation():
    driver = Driver(f=lambda t, x, y, z: np.zeros(len(y)), lipschitz=0.0,
                    zero_sup=0.0)
    terminal = TerminalCondition(phi=lambda x: np.ones(x.shape[0]), sup_abs=1.0)
    grid = TimeGrid(T=1.0, N=1)
    assert compute_value_bound(np.array([1.0]), driver, terminal, grid, q=1,
                               override=42.0) == 42.0
    with pytest.raises(ValueError):
        compute_value_bound(np.array([1.0]), driver, terminal, grid, q=1)


def test_value_bound_estimates_missing_sups():
    driver = Driver(f=lambda t, x, y, z: np.zeros(len(y)), lipschitz=1.0)
    terminal = TerminalCondition(phi=lambda x: np.abs(x[:, 0]))
    with pytest.warns(UserWarning, match="not rigorous"):
        bound = compute_value_bound(np.array([2.0]), driver, terminal,
                                    TimeGrid(T=1.0, N=1), q=1)
    # sup over the clamped box [-2, 2] is 2, so the bound is 2 exp(6.5)
    assert bound == pytest.approx(2.0 * math.exp(6.5), rel=1e-6)


def test_threshold_validation():
    with pytest.raises(ValueError):
        ThresholdSet(brownian=-1.0, state=np.array([1.0]), value_bound=1.0)
    with pytest.raises(ValueError):
        ThresholdSet(brownian=1.0, state=np.array([0.0]), value_bound=1.0)
    with pytest.raises(ValueError):
        ThresholdSet(brownian=1.0, state=np.array([1.0]), value_bound=math.inf)
    ts = ThresholdSet(brownian=1.0, state=np.array([1.0]), value_bound=2.0)
    assert ts.control_bound(0.25) == pytest.approx(4.0)


def test_mollifier_profile():
    x = np.array([0.0, 0.4, 0.5, 0.75, 1.0, 1.5, -0.75])
    assert np.allclose(mollifier(x, 2.0),
                       [1.0, 1.0, 1.0, 0.5, 0.0, 0.0, 0.5])


def test_zero_driver_collapses_to_terminal_mean():
    grid = TimeGrid(T=1.0, N=8)
    cloud = simulate_paths(brownian_model(), grid, 4096, seed=0)
    thresholds = ThresholdSet(brownian=10.0, state=np.array([50.0]),
                              value_bound=60.0)
    terminal = TerminalCondition(phi=lambda x: x[:, 0], sup_abs=50.0)
    sol = solve_backward_initial(cloud, wide_basis(), ZERO_DRIVER, terminal,
                                 thresholds, grid)
    exact = np.clip(cloud.states[:, -1, 0], -50.0, 50.0).mean()
    assert sol.y0 == pytest.approx(exact, rel=1e-13)


def test_linear_driver_discounts_each_step():
    # f = -r y evaluated at the next-step value gives (1 - r h)^N exactly
    r = 0.3
    driver = Driver(f=lambda t, x, y, z: -r * y, lipschitz=r, zero_sup=0.0)
    grid = TimeGrid(T=1.0, N=5)
    cloud = simulate_paths(brownian_model(), grid, 2048, seed=1)
    thresholds = ThresholdSet(brownian=10.0, state=np.array([50.0]),
                              value_bound=60.0)
    terminal = TerminalCondition(phi=lambda x: x[:, 0], sup_abs=50.0)
    sol = solve_backward_initial(cloud, wide_basis(), driver, terminal,
                                 thresholds, grid)
    exact = (1.0 - r * grid.h) ** grid.N \
        * np.clip(cloud.states[:, -1, 0], -50.0, 50.0).mean()
    assert sol.y0 == pytest.approx(exact, rel=1e-12)


def test_control_recovers_unit_gradient():
    # Y_t = X_t for b=0, sigma=1, f=0, so Z = 1
    grid = TimeGrid(T=1.0, N=4)
    cloud = simulate_paths(brownian_model(), grid, 200_000, seed=2)
    basis = HypercubeBasis(center=[0.0], half_width=[5.0], edge=0.05)
    thresholds = ThresholdSet(brownian=10.0, state=np.array([50.0]),
                              value_bound=60.0)
    terminal = TerminalCondition(phi=lambda x: x[:, 0], sup_abs=50.0)
    sol = solve_backward_initial(cloud, basis, ZERO_DRIVER, terminal,
                                 thresholds, grid)
    assert sol.z0[0] == pytest.approx(1.0, abs=0.05)


def test_solution_respects_bounds_everywhere():
    grid = TimeGrid(T=1.0, N=6)
    cloud = simulate_paths(brownian_model(), grid, 5000, seed=3)
    basis = HypercubeBasis(center=[0.0], half_width=[2.0], edge=0.2)
    bound = 0.05  # deliberately tiny so the clamps are active
    thresholds = ThresholdSet(brownian=0.5, state=np.array([3.0]),
                              value_bound=bound)
    terminal = TerminalCondition(phi=lambda x: x[:, 0], sup_abs=3.0)
    sol = solve_backward_initial(cloud, basis, ZERO_DRIVER, terminal,
                                 thresholds, grid)
    rng = np.random.default_rng(0)
    x = rng.uniform(-3.0, 3.0, size=(2000, 1))
    for k in range(grid.N):
        assert np.all(np.abs(sol.y(k, x)) <= bound)
        assert np.all(np.abs(sol.z(k, x)) <= thresholds.control_bound(grid.h))


def test_modified_requires_shadow():
    grid = TimeGrid(T=1.0, N=3)
    cloud = simulate_paths(brownian_model(), grid, 100, seed=4)
    thresholds = ThresholdSet(brownian=10.0, state=np.array([50.0]),
                              value_bound=60.0)
    terminal = TerminalCondition(phi=lambda x: x[:, 0], sup_abs=50.0)
    with pytest.raises(ValueError, match="shadow"):
        solve_backward_modified(cloud, wide_basis(), ZERO_DRIVER, terminal,
                                thresholds, grid)


def test_modified_collapses_to_shadow_terminal_mean():
    grid = TimeGrid(T=1.0, N=6)
    model = brownian_model()
    cloud = simulate_paths(model, grid, 4096, seed=5)
    cloud = simulate_shadow_steps(cloud, model, grid, seed2=6)
    thresholds = ThresholdSet(brownian=10.0, state=np.array([50.0]),
                              value_bound=60.0)
    terminal = TerminalCondition(phi=lambda x: x[:, 0], sup_abs=50.0)
    sol = solve_backward_modified(cloud, wide_basis(), ZERO_DRIVER, terminal,
                                  thresholds, grid)
    assert math.isfinite(sol.y0)
    assert abs(sol.y0) < 0.2


def test_nonfinite_target_raises():
    grid = TimeGrid(T=1.0, N=2)
    cloud = simulate_paths(brownian_model(), grid, 100, seed=7)
    thresholds = ThresholdSet(brownian=10.0, state=np.array([50.0]),
                              value_bound=60.0)
    terminal = TerminalCondition(phi=lambda x: np.full(x.shape[0], np.nan),
                                 sup_abs=1.0)
    with pytest.raises(SolverError, match="step"):
        solve_backward_initial(cloud, wide_basis(), ZERO_DRIVER, terminal,
                               thresholds, grid)


def test_grid_mismatch_rejected():
    cloud = simulate_paths(brownian_model(), TimeGrid(T=1.0, N=4), 100, seed=8)
    thresholds = ThresholdSet(brownian=10.0, state=np.array([50.0]),
                              value_bound=60.0)
    terminal = TerminalCondition(phi=lambda x: x[:, 0], sup_abs=50.0)
    with pytest.raises(ValueError, match="grid"):
        solve_backward_initial(cloud, wide_basis(), ZERO_DRIVER, terminal,
                               thresholds, TimeGrid(T=1.0, N=5))
