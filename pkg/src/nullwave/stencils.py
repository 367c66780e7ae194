"""Finite-difference kernels and quadrature weights shared across the package.

Everything here is grid-generic plumbing: Fornberg weight generation for
arbitrary nodes, first-derivative operators with the boundary closures used by
the evolution scheme, higher-order derivative tables for diagnostics, and
composite Simpson rules (including running prefix integrals of time series).
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "fd_weights",
    "Derivative1D",
    "StencilTable",
    "simpson_weights",
    "prefix_integral",
    "time_derivative_weights",
]


def fd_weights(z: float, nodes: np.ndarray, order: int) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative at ``z``.

    Fornberg's recursive algorithm on the given ``nodes``; returns one weight
    per node. Exact for polynomials of degree ``len(nodes) - 1``.
    """
    x = np.asarray(nodes, dtype=float)
    npts = x.size
    if order >= npts:
        raise ValueError("need more nodes than the derivative order")
    c = np.zeros((npts, order + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = x[0] - z
    for i in range(1, npts):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order].copy()


def time_derivative_weights(m: int, offsets: np.ndarray, dt: float) -> np.ndarray:
    """Weights for the m-th time derivative at offset 0 from integer offsets."""
    return fd_weights(0.0, np.asarray(offsets, dtype=float) * dt, m)


class Derivative1D:
    """First x-derivative on a uniform grid, 4th order.

    Interior points use the centered 5-point kernel. At the x=0 end the two
    boundary-adjacent rows close the kernel with parity ghosts (odd fields
    reflect with a sign flip, even fields without), which is the stable
    closure for the homogeneous Dirichlet evolution. At the x=L end the rows
    are genuine one-sided 5-point formulas; that end is causally inert under
    the support-margin rule.
    """

    def __init__(self, npts: int, h: float):
        if npts < 7:
            raise ValueError("grid too small for 4th-order closures")
        self.npts = npts
        self.h = h
        self.kernel = fd_weights(0.0, np.arange(-2.0, 3.0), 1) / h
        self.right_rows = np.stack(
            [fd_weights(float(z), np.arange(-4.0, 1.0), 1) / h for z in (-1.0, 0.0)]
        )

    def __call__(self, f: np.ndarray, odd: bool) -> np.ndarray:
        k = self.kernel
        out = np.empty_like(f)
        out[2:-2] = (
            k[0] * f[:-4] + k[1] * f[1:-3] + k[2] * f[2:-2] + k[3] * f[3:-1] + k[4] * f[4:]
        )
        s = -1.0 if odd else 1.0
        out[0] = k[0] * s * f[2] + k[1] * s * f[1] + k[2] * f[0] + k[3] * f[1] + k[4] * f[2]
        out[1] = k[0] * s * f[1] + k[1] * f[0] + k[2] * f[1] + k[3] * f[2] + k[4] * f[3]
        out[-2] = np.tensordot(self.right_rows[0], f[-5:], axes=(0, 0))
        out[-1] = np.tensordot(self.right_rows[1], f[-5:], axes=(0, 0))
        return out

    def boundary_row_odd(self, f: np.ndarray) -> np.ndarray:
        """Value of the odd-ghost closure at row 0 (used to re-pin w(t, 0))."""
        k = self.kernel
        return k[0] * (-f[2]) + k[1] * (-f[1]) + k[2] * f[0] + k[3] * f[1] + k[4] * f[2]


class StencilTable:
    """x-derivative of a fixed order on a uniform grid, 4th-order accurate.

    Diagnostic-only operator (it never feeds back into the evolution):
    interior rows use the shortest symmetric kernel of at least 4th order,
    boundary-adjacent rows use one-sided windows of width ``order + 4``.
    """

    _INTERIOR_HALF = {1: 2, 2: 2, 3: 3, 4: 3}

    def __init__(self, npts: int, h: float, order: int):
        if order not in self._INTERIOR_HALF:
            raise ValueError("supported derivative orders are 1..4")
        m = self._INTERIOR_HALF[order]
        wb = order + 4
        if npts < 2 * wb:
            raise ValueError("grid too small for the one-sided windows")
        self.npts = npts
        self.order = order
        self.half = m
        self.kernel = fd_weights(0.0, np.arange(-m, m + 1, dtype=float), order) / h**order
        nodes = np.arange(0.0, wb)
        self.left_rows = np.stack(
            [fd_weights(float(i), nodes, order) for i in range(m)]
        ) / h**order
        self.right_rows = np.stack(
            [fd_weights(float(wb - 1 - i), nodes, order) for i in range(m)]
        ) / h**order
        self.width = wb

    def __call__(self, f: np.ndarray) -> np.ndarray:
        m, wb, k = self.half, self.width, self.kernel
        out = np.empty_like(f)
        acc = k[0] * f[: f.shape[0] - 2 * m]
        for j in range(1, 2 * m + 1):
            acc = acc + k[j] * f[j : f.shape[0] - 2 * m + j]
        out[m:-m] = acc
        out[:m] = np.tensordot(self.left_rows, f[:wb], axes=(1, 0))
        out[-m:] = np.tensordot(self.right_rows, f[-wb:], axes=(1, 0))[::-1]
        return out


def simpson_weights(npts: int, h: float) -> np.ndarray:
    """Composite Simpson quadrature weights on a uniform grid.

    For an odd number of intervals the last three are handled by the 3/8
    rule, keeping the full rule 4th order with strictly positive weights.
    """
    if npts < 2:
        return np.zeros(npts)
    n_int = npts - 1
    w = np.zeros(npts)
    if n_int == 1:
        return np.array([0.5, 0.5]) * h
    if n_int % 2 == 0:
        w[0] = w[-1] = 1.0
        w[1:-1:2] = 4.0
        w[2:-2:2] = 2.0
        return w * (h / 3.0)
    if n_int == 3:
        return np.array([1.0, 3.0, 3.0, 1.0]) * (3.0 * h / 8.0)
    w[: npts - 3] = simpson_weights(npts - 3, h)
    w[-4:] += np.array([1.0, 3.0, 3.0, 1.0]) * (3.0 * h / 8.0)
    return w


def _integral_to(series: np.ndarray, dt: float, k: int) -> float:
    if k <= 0:
        return 0.0
    if k == 1:
        if series.size >= 4:
            f0, f1, f2, f3 = series[0], series[1], series[2], series[3]
            return dt * (9.0 * f0 + 19.0 * f1 - 5.0 * f2 + f3) / 24.0
        return 0.5 * dt * (series[0] + series[1])
    if k % 2 == 0:
        return float(simpson_weights(k + 1, dt) @ series[: k + 1])
    head = float(simpson_weights(k - 2, dt) @ series[: k - 2]) if k > 3 else 0.0
    tail = (3.0 * dt / 8.0) * (
        series[k - 3] + 3.0 * series[k - 2] + 3.0 * series[k - 1] + series[k]
    )
    return head + tail


def prefix_integral(series: np.ndarray, dt: float, indices=None) -> np.ndarray:
    """4th-order running integral of an evenly sampled time series.

    Returns the integral from sample 0 up to each requested index (all
    indices by default). Even prefixes use composite Simpson, odd prefixes a
    Simpson head plus a 3/8 tail, and the very first interval a cubic
    four-point formula.
    """
    f = np.asarray(series, dtype=float)
    if indices is None:
        indices = range(f.size)
    return np.array([_integral_to(f, dt, int(k)) for k in indices])
