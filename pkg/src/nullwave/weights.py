"""Weight functions used by the energy and multiplier diagnostics.

The bracket ``<x> = sqrt(1 + x^2)`` is the base. Three derived families:

* ``phi(x) = <x>^(2+2*delta)`` and ``theta(x) = <x>^(6+6*delta) = phi^3`` —
  polynomial growth weights attached to the outgoing characteristic variable;
* ``psi(x) = exp(-integral_{-inf}^x <r>^(-(1+delta)) dr)`` — a bounded,
  strictly decreasing damping weight whose derivative obeys the exact identity
  ``psi'(x) = -psi(x) * <x>^(-(1+delta))``.

``psi`` has no closed form, so it is served from a cached table: cumulative
adaptive-Simpson integrals on an asinh-graded grid with exact derivative
values at the nodes (cubic Hermite interpolation between them) and power-law
tail extensions outside the tabulated range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError

__all__ = [
    "WeightParams",
    "PsiTable",
    "eval_bracket",
    "eval_phi_theta",
    "eval_psi",
    "get_psi_table",
]


@dataclass(frozen=True)
class WeightParams:
    """Weight exponent parameter; valid strictly inside (0, 1)."""

    delta: float

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0):
            raise DomainError(f"delta must satisfy 0 < delta < 1, got {self.delta}")


def _require_finite(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("weight evaluation requires finite input")
    return arr


def eval_bracket(x):
    """Smooth bracket ``<x> = (1 + x^2)^(1/2)``; even, >= 1."""
    arr = _require_finite(x)
    out = np.hypot(1.0, arr)
    return float(out) if np.isscalar(x) or out.ndim == 0 else out


def eval_phi_theta(x, params: WeightParams):
    """Growth weights ``(phi, theta) = (<x>^(2+2d), <x>^(6+6d))``, theta = phi^3."""
    arr = _require_finite(x)
    phi = (1.0 + arr * arr) ** (1.0 + params.delta)
    theta = phi * phi * phi
    if np.isscalar(x) or phi.ndim == 0:
        return float(phi), float(theta)
    return phi, theta


def _integrand(r: np.ndarray, delta: float) -> np.ndarray:
    return (1.0 + r * r) ** (-0.5 * (1.0 + delta))


def _adaptive_simpson(f, a: float, b: float, tol: float, fa: float, fb: float,
                      fm: float, whole: float, depth: int) -> float:
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
        return left + right + (left + right - whole) / 15.0
    return _adaptive_simpson(f, a, m, 0.5 * tol, fa, fm, flm, left, depth - 1) + \
        _adaptive_simpson(f, m, b, 0.5 * tol, fm, fb, frm, right, depth - 1)


def adaptive_simpson(f, a: float, b: float, tol: float) -> float:
    """Adaptive Simpson quadrature of ``f`` on [a, b] to absolute tolerance."""
    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _adaptive_simpson(f, a, b, tol, fa, fb, fm, whole, 48)


class PsiTable:
    """Cached cumulative integral of ``<r>^(-(1+delta))`` and its exponential.

    Nodes are asinh-graded over ``[-x_max, x_max]`` (dense near 0 where the
    integrand curves most, geometric far out). Between nodes the cumulative
    integral is interpolated by a cubic Hermite using the *exact* integrand as
    the derivative, so interpolation error is O(spacing^4) and monotonicity is
    preserved. Outside the range the known power-law tails take over.
    """

    X_MAX = 1.0e4
    N_NODES = 20001
    QUAD_TOL = 1.0e-10

    def __init__(self, params: WeightParams):
        self.params = params
        d = params.delta
        s = np.linspace(-math.asinh(self.X_MAX), math.asinh(self.X_MAX), self.N_NODES)
        x = np.sinh(s)
        x[0], x[-1] = -self.X_MAX, self.X_MAX
        f = lambda r: float(_integrand(np.asarray(r), d))
        seg_tol = self.QUAD_TOL / (self.N_NODES + 1)
        segs = np.empty(self.N_NODES - 1)
        for i in range(self.N_NODES - 1):
            segs[i] = adaptive_simpson(f, x[i], x[i + 1], seg_tol)
        left_tail = self._tail_integral(self.X_MAX)  # integral over (-inf, -x_max]
        cum = np.concatenate([[left_tail], left_tail + np.cumsum(segs)])
        self.nodes = x
        self.cumulative = cum
        self.node_slope = _integrand(x, d)
        self.i_total = float(cum[-1] + self._tail_integral(self.X_MAX))
        if not np.all(np.diff(cum) > 0.0):
            raise AssertionError("cumulative integral must be strictly increasing")

    def _tail_integral(self, x):
        """Power-law expansion of the integral over [x, +inf), x >= X_MAX.

        (1+r^2)^(-(1+d)/2) = r^(-(1+d)) (1 - (1+d)/(2 r^2) + O(r^-4)); the
        second term keeps the tail error below the quadrature tolerance.
        """
        d = self.params.delta
        return x ** (-d) / d - 0.5 * (1.0 + d) / (2.0 + d) * x ** (-(2.0 + d))

    def cumulative_at(self, x) -> np.ndarray:
        """Cumulative integral from -inf to x (vectorized, tail-extended)."""
        arr = np.asarray(x, dtype=float)
        scalar = arr.ndim == 0
        arr = np.atleast_1d(arr)
        d = self.params.delta
        out = np.empty_like(arr)
        lo = arr < -self.X_MAX
        hi = arr > self.X_MAX
        mid = ~(lo | hi)
        out[lo] = self._tail_integral(-arr[lo])
        out[hi] = self.i_total - self._tail_integral(arr[hi])
        if np.any(mid):
            xm = arr[mid]
            idx = np.clip(np.searchsorted(self.nodes, xm) - 1, 0, self.N_NODES - 2)
            x0, x1 = self.nodes[idx], self.nodes[idx + 1]
            y0, y1 = self.cumulative[idx], self.cumulative[idx + 1]
            m0, m1 = self.node_slope[idx], self.node_slope[idx + 1]
            hseg = x1 - x0
            t = (xm - x0) / hseg
            h00 = (1.0 + 2.0 * t) * (1.0 - t) ** 2
            h10 = t * (1.0 - t) ** 2
            h01 = t * t * (3.0 - 2.0 * t)
            h11 = t * t * (t - 1.0)
            out[mid] = h00 * y0 + h10 * hseg * m0 + h01 * y1 + h11 * hseg * m1
        return out[0] if scalar else out

    def eval(self, x):
        """Return ``(psi(x), psi'(x))`` with the exact derivative identity."""
        arr = _require_finite(x)
        psi = np.exp(-self.cumulative_at(arr))
        dpsi = -psi * _integrand(arr, self.params.delta)
        if np.isscalar(x) or arr.ndim == 0:
            return float(psi), float(dpsi)
        return psi, dpsi


_TABLE_CACHE: dict[float, PsiTable] = {}


def get_psi_table(params: WeightParams) -> PsiTable:
    """Table cache keyed by delta (tables are immutable once built)."""
    key = params.delta
    if key not in _TABLE_CACHE:
        _TABLE_CACHE[key] = PsiTable(params)
    return _TABLE_CACHE[key]


def eval_psi(x, table: PsiTable, params: WeightParams | None = None):
    """Evaluate ``(psi, psi')`` from a table, checking the delta binding."""
    if params is not None and params.delta != table.params.delta:
        raise ConfigError("psi table was built for a different delta")
    return table.eval(x)
