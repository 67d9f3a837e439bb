"""Local regression bases on a hypercube partition.

A box D = prod (c_i - a_i, c_i + a_i] is cut into half-open cells of edge
delta_i per axis.  Each cell carries either an indicator function (degree 0)
or an indicator times (1, x - cell_center) (degree 1).  Because the cells are
disjoint, a global least-squares fit decouples into per-cell problems: sample
means for degree 0, small ordinary least squares for degree 1.  Points outside
D belong to no cell and every basis function vanishes there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["HypercubeBasis", "MappedBasis", "BasisDesign", "OUTSIDE"]

OUTSIDE = -1  # sentinel cell index for points outside the domain


@dataclass(frozen=True)
class HypercubeBasis:
    """Hypercube partition of an axis-aligned box, with per-cell polynomials.

    ``center``, ``half_width`` and ``edge`` are per-axis (anisotropic grids
    allowed; scalars broadcast).  ``degree`` is 0 (piecewise constant) or 1
    (piecewise affine, features centered at the cell center).
    """

    center: np.ndarray
    half_width: np.ndarray
    edge: np.ndarray
    degree: int = 0

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        d = center.shape[0]
        half_width = np.broadcast_to(np.asarray(self.half_width, dtype=float), (d,)).copy()
        edge = np.broadcast_to(np.asarray(self.edge, dtype=float), (d,)).copy()
        if np.any(half_width <= 0) or np.any(edge <= 0):
            raise ValueError("half_width and edge must be positive")
        if self.degree not in (0, 1):
            raise ValueError("degree must be 0 or 1")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "half_width", half_width)
        object.__setattr__(self, "edge", edge)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def low(self) -> np.ndarray:
        return self.center - self.half_width

    @property
    def cells_per_axis(self) -> np.ndarray:
        return np.ceil(2.0 * self.half_width / self.edge).astype(int)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.cells_per_axis))

    @property
    def functions_per_cell(self) -> int:
        return 1 if self.degree == 0 else 1 + self.dim

    @property
    def size(self) -> int:
        return self.n_cells * self.functions_per_cell

    def locate(self, x: np.ndarray) -> np.ndarray:
        """Flat cell index for each point, OUTSIDE for points not in D.

        Cells are right-closed: a point exactly on a left edge belongs to the
        lower-adjacent cell; the left face of D itself is excluded.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        low = self.low
        rel = (x - low) / self.edge
        idx = np.ceil(rel).astype(int) - 1
        inside = (x > low) & (x <= self.center + self.half_width)
        n = self.cells_per_axis
        idx = np.clip(idx, 0, n - 1)
        flat = np.zeros(x.shape[0], dtype=int)
        for j in range(self.dim):
            flat = flat * n[j] + idx[:, j]
        flat[~inside.all(axis=1)] = OUTSIDE
        return flat

    def cell_centers(self, cells: np.ndarray) -> np.ndarray:
        """Nominal centers of the given flat cell indices, shape (len, d)."""
        cells = np.asarray(cells)
        n = self.cells_per_axis
        idx = np.empty(cells.shape + (self.dim,), dtype=int)
        rest = cells.copy()
        for j in range(self.dim - 1, -1, -1):
            idx[..., j] = rest % n[j]
            rest = rest // n[j]
        return self.low + (idx + 0.5) * self.edge

    def design(self, x: np.ndarray) -> "BasisDesign":
        """Precompute cell membership for a sample, reusable across fits."""
        return BasisDesign(self, x)

    def fit(self, x: np.ndarray, targets: np.ndarray) -> np.ndarray:
        """Least-squares coefficients for ``targets`` sampled at ``x``.

        Returns an array of shape (n_cells, functions_per_cell) for 1-D
        targets, with an extra trailing axis for stacked target columns.
        Cells with no samples (or rank-deficient directions) get zero
        coefficients, the minimum-norm solution.
        """
        return self.design(x).fit(targets)

    def evaluate(self, coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Evaluate the fitted function at ``x``; zero outside D."""
        return self.design(x).evaluate(coeffs)


@dataclass(frozen=True)
class MappedBasis:
    """Hypercube basis applied to a derived coordinate of the state.

    ``transform`` maps states (M, d) to regression coordinates (M, d'); the
    wrapped basis partitions the transformed space.  Useful when the value
    function depends on the state only through a few statistics, which keeps
    the cells well populated in high dimension.
    """

    base: HypercubeBasis
    transform: "np.ufunc | object"

    @property
    def degree(self) -> int:
        return self.base.degree

    @property
    def size(self) -> int:
        return self.base.size

    def _map(self, x: np.ndarray) -> np.ndarray:
        u = np.asarray(self.transform(np.atleast_2d(np.asarray(x, dtype=float))))
        return np.atleast_2d(u)

    def design(self, x: np.ndarray) -> "BasisDesign":
        return self.base.design(self._map(x))

    def fit(self, x: np.ndarray, targets: np.ndarray) -> np.ndarray:
        return self.base.fit(self._map(x), targets)

    def evaluate(self, coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
        return self.base.evaluate(coeffs, self._map(x))


class BasisDesign:
    """Cell membership of one sample, shared by repeated fits/evaluations."""

    def __init__(self, basis: HypercubeBasis, x: np.ndarray):
        self.basis = basis
        self.x = np.atleast_2d(np.asarray(x, dtype=float))
        self.cells = basis.locate(self.x)
        self.inside = self.cells != OUTSIDE

    def fit(self, targets: np.ndarray) -> np.ndarray:
        targets = np.asarray(targets, dtype=float)
        squeeze = targets.ndim == 1
        t = targets[:, None] if squeeze else targets
        if t.shape[0] != self.x.shape[0]:
            raise ValueError("targets length must match sample length")
        if not np.all(np.isfinite(t)):
            raise ValueError("targets must be finite")
        basis = self.basis
        r = t.shape[1]
        coeffs = np.zeros((basis.n_cells, basis.functions_per_cell, r))
        cells_in = self.cells[self.inside]
        t_in = t[self.inside]
        if basis.degree == 0:
            counts = np.bincount(cells_in, minlength=basis.n_cells).astype(float)
            sums = np.zeros((basis.n_cells, r))
            np.add.at(sums, cells_in, t_in)
            occupied = counts > 0
            coeffs[occupied, 0, :] = sums[occupied] / counts[occupied, None]
        else:
            x_in = self.x[self.inside]
            order = np.argsort(cells_in, kind="stable")
            cells_sorted = cells_in[order]
            bounds = np.flatnonzero(np.diff(cells_sorted)) + 1
            starts = np.concatenate(([0], bounds))
            stops = np.concatenate((bounds, [cells_sorted.size]))
            for lo, hi in zip(starts, stops):
                cell = cells_sorted[lo]
                rows = order[lo:hi]
                center = basis.cell_centers(np.array([cell]))[0]
                a = np.empty((hi - lo, 1 + basis.dim))
                a[:, 0] = 1.0
                a[:, 1:] = x_in[rows] - center
                sol, *_ = np.linalg.lstsq(a, t_in[rows], rcond=None)
                coeffs[cell] = sol
        return coeffs[:, :, 0] if squeeze else coeffs

    def evaluate(self, coeffs: np.ndarray) -> np.ndarray:
        basis = self.basis
        coeffs = np.asarray(coeffs, dtype=float)
        squeeze = coeffs.ndim == 2
        c = coeffs[:, :, None] if squeeze else coeffs
        out = np.zeros((self.x.shape[0], c.shape[2]))
        cells_in = self.cells[self.inside]
        vals = c[cells_in, 0, :]
        if basis.degree == 1:
            centered = self.x[self.inside] - basis.cell_centers(cells_in)
            vals = vals + np.einsum("mj,mjr->mr", centered, c[cells_in, 1:, :])
        out[self.inside] = vals
        return out[:, 0] if squeeze else out
