"""Hypercube basis: cell location, per-cell fits, evaluation, edge cases."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bsde import HypercubeBasis, MappedBasis
from bsde.basis import OUTSIDE


def test_cell_counts():
    basis = HypercubeBasis(center=[0.0], half_width=[1.0], edge=0.25)
    assert basis.n_cells == 8
    assert basis.size == 8
    deg1 = HypercubeBasis(center=[0.0, 0.0], half_width=[1.0, 1.0],
                          edge=0.5, degree=1)
    assert deg1.n_cells == 16
    assert deg1.size == 48  # (1 + dim) functions per cell


def test_locate_half_open_cells():
    basis = HypercubeBasis(center=[0.0], half_width=[1.0], edge=0.5)
    x = np.array([[-1.0], [-0.75], [-0.5], [0.0], [0.5], [1.0], [1.1]])
    cells = basis.locate(x)
    # cells are right-closed: -0.5 and 0.0 belong to the lower cell
    assert list(cells) == [OUTSIDE, 0, 0, 1, 2, 3, OUTSIDE]


def test_locate_2d_row_major():
    basis = HypercubeBasis(center=[0.0, 0.0], half_width=[1.0, 1.0], edge=1.0)
    pts = np.array([[-0.5, -0.5], [-0.5, 0.5], [0.5, -0.5], [0.5, 0.5]])
    assert list(basis.locate(pts)) == [0, 1, 2, 3]


def test_degree0_fit_is_cell_mean():
    basis = HypercubeBasis(center=[0.0], half_width=[1.0], edge=1.0)
    x = np.array([[-0.5], [-0.4], [0.5], [0.6]])
    t = np.array([1.0, 3.0, 10.0, 20.0])
    coeffs = basis.fit(x, t)
    assert coeffs[0, 0] == pytest.approx(2.0)
    assert coeffs[1, 0] == pytest.approx(15.0)
    vals = basis.evaluate(coeffs, x)
    assert np.allclose(vals, [2.0, 2.0, 15.0, 15.0])


def test_degree1_recovers_affine_exactly():
    rng = np.random.default_rng(0)
    basis = HypercubeBasis(center=[0.0, 0.0], half_width=[2.0, 2.0],
                           edge=1.0, degree=1)
    x = rng.uniform(-2.0, 2.0, size=(500, 2))
    t = 1.5 + 2.0 * x[:, 0] - 0.5 * x[:, 1]
    coeffs = basis.fit(x, t)
    assert np.allclose(basis.evaluate(coeffs, x), t)


def test_outside_evaluates_to_zero():
    basis = HypercubeBasis(center=[0.0], half_width=[1.0], edge=0.5, degree=1)
    coeffs = basis.fit(np.array([[0.2], [0.3]]), np.array([5.0, 7.0]))
    vals = basis.evaluate(coeffs, np.array([[3.0], [-2.0]]))
    assert np.all(vals == 0.0)


def test_empty_cells_get_zero():
    basis = HypercubeBasis(center=[0.0], half_width=[1.0], edge=0.5)
    coeffs = basis.fit(np.array([[0.9]]), np.array([4.0]))
    assert coeffs[3, 0] == 4.0
    assert np.all(coeffs[:3] == 0.0)


def test_single_point_degree1_minimum_norm():
    # an underdetermined cell takes the minimum-norm interpolant
    basis = HypercubeBasis(center=[0.0], half_width=[1.0], edge=2.0, degree=1)
    coeffs = basis.fit(np.array([[0.3]]), np.array([5.0]))
    assert basis.evaluate(coeffs, np.array([[0.3]]))[0] == pytest.approx(5.0)
    expected = 5.0 * np.array([1.0, 0.3]) / (1.0 + 0.3 ** 2)
    assert np.allclose(coeffs[0], expected)


def test_multi_target_fit():
    basis = HypercubeBasis(center=[0.0], half_width=[1.0], edge=1.0)
    x = np.array([[-0.5], [0.5]])
    t = np.array([[1.0, 2.0], [3.0, 4.0]])
    coeffs = basis.fit(x, t)
    assert coeffs.shape == (2, 1, 2)
    vals = basis.evaluate(coeffs, x)
    assert np.allclose(vals, t)


def test_design_reuse_matches_direct_fit():
    rng = np.random.default_rng(1)
    basis = HypercubeBasis(center=[0.0], half_width=[1.0], edge=0.25, degree=1)
    x = rng.uniform(-1.0, 1.0, size=(200, 1))
    design = basis.design(x)
    t1, t2 = rng.standard_normal(200), rng.standard_normal(200)
    assert np.array_equal(design.fit(t1), basis.fit(x, t1))
    assert np.array_equal(design.evaluate(design.fit(t2)),
                          basis.evaluate(basis.fit(x, t2), x))


def test_mapped_basis_matches_manual_transform():
    rng = np.random.default_rng(2)
    base = HypercubeBasis(center=[0.0], half_width=[3.0], edge=0.5, degree=1)
    mapped = MappedBasis(base=base, transform=lambda x: x.sum(axis=1)[:, None])
    x = rng.uniform(-1.0, 1.0, size=(300, 3))
    t = rng.standard_normal(300)
    u = x.sum(axis=1)[:, None]
    assert np.array_equal(mapped.fit(x, t), base.fit(u, t))
    assert np.array_equal(mapped.evaluate(mapped.fit(x, t), x),
                          base.evaluate(base.fit(u, t), u))


def test_invalid_parameters_rejected():
    with pytest.raises(ValueError):
        HypercubeBasis(center=[0.0], half_width=[-1.0], edge=0.5)
    with pytest.raises(ValueError):
        HypercubeBasis(center=[0.0], half_width=[1.0], edge=0.0)
    with pytest.raises(ValueError):
        HypercubeBasis(center=[0.0], half_width=[1.0], edge=0.5, degree=2)


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=1, max_value=200), st.integers(min_value=0, max_value=2 ** 31 - 1))
def test_degree0_fit_property(n_points, seed):
    rng = np.random.default_rng(seed)
    basis = HypercubeBasis(center=[0.0], half_width=[1.0],
                           edge=float(rng.uniform(0.1, 1.0)))
    x = rng.uniform(-1.2, 1.2, size=(n_points, 1))
    t = rng.standard_normal(n_points)
    coeffs = basis.fit(x, t)
    cells = basis.locate(x)
    for c in range(basis.n_cells):
        members = cells == c
        if members.any():
            assert coeffs[c, 0] == pytest.approx(t[members].mean(), rel=1e-12)
        else:
            assert coeffs[c, 0] == 0.0
