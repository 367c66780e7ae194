"""System definitions and structural checks.

A :class:`SystemSpec` packages the coefficient evaluators of a quasilinear
system

    u_tt - u_xx = A1(u,p,q) (u_tt - u_xx) + A2(u,p,q) (u_tt + 2 u_tx + u_xx)
                  + A3(u,p,q) (u_tt - 2 u_tx + u_xx) + F(u,p,q)

written against the characteristic derivatives ``p = u_t + u_x`` and
``q = u_t - u_x``. The structural hypotheses being checked are

* condition 3 — A1 vanishes (at least) to first order at the origin,
* condition 4 — A2 vanishes on the slice q = 0,
* condition 5 — A3 vanishes on the slice p = 0,
* condition 6 — F vanishes on both slices q = 0 and p = 0,
* symmetry   — each Ai is a symmetric matrix wherever evaluated.

Evaluators are batched: arguments of shape ``(..., n)`` produce matrices of
shape ``(..., n, n)`` (or vectors ``(..., n)`` for F).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import CatalogLookupError, DegeneracyError, EvaluationError

__all__ = [
    "SystemSpec",
    "ConditionReport",
    "NullVerdict",
    "catalog_get",
    "catalog_names",
    "check_null_conditions",
    "quasilinear_matrices",
    "smallest_singular_value",
    "DEGENERACY_MARGIN",
]

DEGENERACY_MARGIN = 1.0e-6

MatrixEvaluator = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SystemSpec:
    """Coefficient evaluators for one system, plus its declared classification."""

    n: int
    A1: MatrixEvaluator
    A2: MatrixEvaluator
    A3: MatrixEvaluator
    F: MatrixEvaluator
    name: str
    declared_null: bool


@dataclass
class ConditionReport:
    """Outcome of one structural condition."""

    passed: bool
    max_residual: float
    witness: dict | None = None

    def to_json(self) -> dict:
        return {"pass": self.passed, "max_residual": self.max_residual,
                "witness": self.witness}


@dataclass
class NullVerdict:
    """Per-condition outcomes of :func:`check_null_conditions`."""

    conditions: dict[str, ConditionReport] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.conditions.values())

    def to_json(self) -> dict:
        return {name: rep.to_json() for name, rep in self.conditions.items()}


# ---------------------------------------------------------------------------
# Built-in catalog
# ---------------------------------------------------------------------------

def _zeros_matrix(n: int) -> MatrixEvaluator:
    def ev(u, p, q):
        return np.zeros(np.shape(u) + (n,))
    return ev


def _zeros_vector(n: int) -> MatrixEvaluator:
    def ev(u, p, q):
        return np.zeros(np.shape(u))
    return ev


def _eye_times(component_of, index: int, n: int) -> MatrixEvaluator:
    eye = np.eye(n)

    def ev(u, p, q):
        arg = {"u": u, "p": p, "q": q}[component_of]
        return arg[..., index, None, None] * eye
    return ev


def _matrix_times(component_of, index: int, mat: np.ndarray) -> MatrixEvaluator:
    mat = np.asarray(mat, dtype=float)

    def ev(u, p, q):
        arg = {"u": u, "p": p, "q": q}[component_of]
        return arg[..., index, None, None] * mat
    return ev


# Fixed symmetric matrices of spectral norm exactly 1/2 (eigenvalues are
# +/- sqrt(0.3^2 + 0.4^2) = +/- 0.5).
_B_MATRIX = np.array([[0.3, 0.4], [0.4, -0.3]])
_C_MATRIX = np.array([[0.4, 0.3], [0.3, -0.4]])

# Constant quadratic-form coefficients for the wavemap-like interaction.
_GAMMA = np.array([
    [[0.0, 1.0], [1.0, 0.0]],
    [[1.0, 0.0], [0.0, -1.0]],
])


def _semilinear_F(u, p, q):
    return p * q


def _wavemap_F(u, p, q):
    # F_i = sum_{j,k} Gamma[i, j, k] p_j q_k
    return np.einsum("ijk,...j,...k->...i", _GAMMA, p, q)


def _riccati_F(u, p, q):
    return p * p


def _build_catalog() -> dict[str, SystemSpec]:
    cat = {}
    cat["linear"] = SystemSpec(
        n=2, A1=_zeros_matrix(2), A2=_zeros_matrix(2), A3=_zeros_matrix(2),
        F=_zeros_vector(2), name="linear", declared_null=True)
    cat["semilinear-null"] = SystemSpec(
        n=2, A1=_zeros_matrix(2), A2=_zeros_matrix(2), A3=_zeros_matrix(2),
        F=_semilinear_F, name="semilinear-null", declared_null=True)
    cat["quasilinear-null"] = SystemSpec(
        n=2,
        A1=_eye_times("u", 0, 2),
        A2=_matrix_times("q", 0, _B_MATRIX),
        A3=_matrix_times("p", 0, _C_MATRIX),
        F=_zeros_vector(2), name="quasilinear-null", declared_null=True)
    cat["wavemap-like"] = SystemSpec(
        n=2, A1=_zeros_matrix(2), A2=_zeros_matrix(2), A3=_zeros_matrix(2),
        F=_wavemap_F, name="wavemap-like", declared_null=True)
    cat["nonnull-riccati"] = SystemSpec(
        n=1, A1=_zeros_matrix(1), A2=_zeros_matrix(1), A3=_zeros_matrix(1),
        F=_riccati_F, name="nonnull-riccati", declared_null=False)
    cat["nonnull-a2"] = SystemSpec(
        n=2,
        A1=_zeros_matrix(2),
        A2=_eye_times("p", 0, 2),
        A3=_zeros_matrix(2),
        F=_zeros_vector(2), name="nonnull-a2", declared_null=False)
    return cat


_CATALOG = _build_catalog()


def catalog_names() -> tuple[str, ...]:
    return tuple(_CATALOG)


def catalog_get(name: str) -> SystemSpec:
    """Look up a built-in system by name."""
    try:
        return _CATALOG[name]
    except KeyError:
        raise CatalogLookupError(
            f"unknown system {name!r}; available: {', '.join(_CATALOG)}") from None


# ---------------------------------------------------------------------------
# Structural checks
# ---------------------------------------------------------------------------

def _ball_samples(rng: np.random.Generator, count: int, n: int,
                  radius: float) -> np.ndarray:
    """Uniform samples from the n-ball of the given radius, shape (count, n)."""
    g = rng.standard_normal((count, n))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    radii = radius * rng.random((count, 1)) ** (1.0 / n)
    return g / norms * radii


def _checked_eval(fn, u, p, q, label: str) -> np.ndarray:
    out = np.asarray(fn(u, p, q), dtype=float)
    if not np.all(np.isfinite(out)):
        bad = np.argwhere(~np.isfinite(out.reshape(out.shape[0], -1)).all(axis=1))
        i = int(bad[0, 0]) if bad.size else 0
        raise EvaluationError(
            f"{label} produced a non-finite value",
            sample={"u": u[i].tolist(), "p": p[i].tolist(), "q": q[i].tolist()})
    return out


def _matrix_norms(mats: np.ndarray) -> np.ndarray:
    """Frobenius norms over the trailing matrix axes."""
    return np.sqrt(np.sum(mats * mats, axis=(-2, -1)))


def _vector_norms(vecs: np.ndarray) -> np.ndarray:
    return np.linalg.norm(vecs, axis=-1)


def _slice_report(res: np.ndarray, tol: float, u, p, q) -> ConditionReport:
    i = int(np.argmax(res))
    worst = float(res[i])
    passed = bool(worst <= tol)
    witness = None
    if not passed:
        witness = {"u": u[i].tolist(), "p": p[i].tolist(), "q": q[i].tolist(),
                   "residual": worst}
    return ConditionReport(passed=passed, max_residual=worst, witness=witness)


_SCALING_RADII = (1.0e-2, 1.0e-4, 1.0e-6)
_SLOPE_SLACK = 1.0e-3


def _condition3_report(spec: SystemSpec, tol: float, u, p, q) -> ConditionReport:
    """First-order vanishing of A1 at the origin, via log-log slope fitting."""
    norms = []
    for r in _SCALING_RADII:
        a1 = _checked_eval(spec.A1, r * u, r * p, r * q, "A1")
        norms.append(_matrix_norms(a1))
    norms = np.stack(norms, axis=1)  # (samples, radii)

    zero_rows = np.all(norms <= tol, axis=1)
    if np.all(zero_rows):
        return ConditionReport(passed=True, max_residual=0.0)

    logs_r = np.log(np.asarray(_SCALING_RADII))
    worst_residual = 0.0
    witness = None
    for i in np.nonzero(~zero_rows)[0]:
        row = norms[i]
        if np.any(row <= 0.0):
            # Vanishing at some radii but not others: no consistent scaling.
            residual = float("inf")
        else:
            slope = np.polyfit(logs_r, np.log(row), 1)[0]
            residual = max(0.0, float(1.0 - slope))
        if residual > worst_residual:
            worst_residual = residual
            witness = {"u": u[i].tolist(), "p": p[i].tolist(), "q": q[i].tolist(),
                       "residual": residual}
    passed = worst_residual <= _SLOPE_SLACK
    return ConditionReport(passed=passed, max_residual=worst_residual,
                           witness=None if passed else witness)


def check_null_conditions(spec: SystemSpec, tol: float = 1.0e-12,
                          n_samples: int = 1000, seed: int = 0) -> NullVerdict:
    """Sample-based verification of the structural conditions 3-6 + symmetry.

    Samples (u, p, q) are drawn independently and uniformly from the n-ball
    of radius 0.1. Conditions 4-6 are tested as exact vanishing on the q = 0
    and p = 0 slices; condition 3 as first-order scaling over radii
    {1e-2, 1e-4, 1e-6} with fitted log-log slope >= 1 - 1e-3.
    """
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    if n_samples < 100:
        raise ValueError(f"n_samples must be at least 100, got {n_samples}")
    rng = np.random.default_rng(seed)
    n = spec.n
    u = _ball_samples(rng, n_samples, n, 0.1)
    p = _ball_samples(rng, n_samples, n, 0.1)
    q = _ball_samples(rng, n_samples, n, 0.1)
    zero = np.zeros_like(p)

    verdict = NullVerdict()

    a2 = _checked_eval(spec.A2, u, p, zero, "A2")
    verdict.conditions["condition4"] = _slice_report(_matrix_norms(a2), tol, u, p, zero)

    a3 = _checked_eval(spec.A3, u, zero, q, "A3")
    verdict.conditions["condition5"] = _slice_report(_matrix_norms(a3), tol, u, zero, q)

    f_q0 = _checked_eval(spec.F, u, p, zero, "F")
    f_p0 = _checked_eval(spec.F, u, zero, q, "F")
    res6 = np.maximum(_vector_norms(f_q0), _vector_norms(f_p0))
    rep_q0 = _slice_report(_vector_norms(f_q0), tol, u, p, zero)
    rep_p0 = _slice_report(_vector_norms(f_p0), tol, u, zero, q)
    worse = rep_q0 if rep_q0.max_residual >= rep_p0.max_residual else rep_p0
    verdict.conditions["condition6"] = ConditionReport(
        passed=bool(np.max(res6) <= tol), max_residual=float(np.max(res6)),
        witness=worse.witness)

    verdict.conditions["condition3"] = _condition3_report(spec, tol, u, p, q)

    sym_res = np.zeros(n_samples)
    for label, fn in (("A1", spec.A1), ("A2", spec.A2), ("A3", spec.A3)):
        mats = _checked_eval(fn, u, p, q, label)
        sym_res = np.maximum(sym_res,
                             _matrix_norms(mats - np.swapaxes(mats, -1, -2)))
    verdict.conditions["symmetry"] = _slice_report(sym_res, tol, u, p, q)

    return verdict


# ---------------------------------------------------------------------------
# Principal-part assembly
# ---------------------------------------------------------------------------

def smallest_singular_value(m: np.ndarray) -> np.ndarray:
    """Smallest singular value over the trailing (n, n) axes, batched.

    Closed forms for n = 1, 2 (the catalog sizes); general SVD otherwise.
    """
    n = m.shape[-1]
    if n == 1:
        return np.abs(m[..., 0, 0])
    if n == 2:
        g = np.swapaxes(m, -1, -2) @ m
        alpha, beta = g[..., 0, 0], g[..., 1, 1]
        gamma = g[..., 0, 1]
        half = 0.5 * (alpha + beta)
        root = np.sqrt((0.5 * (alpha - beta)) ** 2 + gamma * gamma)
        return np.sqrt(np.maximum(half - root, 0.0))
    return np.linalg.svd(m, compute_uv=False)[..., -1]


def quasilinear_matrices(spec: SystemSpec, u: np.ndarray, p: np.ndarray,
                         q: np.ndarray):
    """Assemble M = I - A1 - A2 - A3 and N = I - A1 + A2 + A3, batched.

    Returns ``(M, N, margin)`` with ``margin`` the smallest singular value of
    M over the whole batch. A margin below ``DEGENERACY_MARGIN`` raises
    :class:`DegeneracyError` — the hyperbolic evolution is no longer well
    posed in this normalization and the caller must stop.
    """
    u = np.asarray(u, dtype=float)
    a1 = np.asarray(spec.A1(u, p, q), dtype=float)
    a2 = np.asarray(spec.A2(u, p, q), dtype=float)
    a3 = np.asarray(spec.A3(u, p, q), dtype=float)
    eye = np.eye(spec.n)
    m = eye - (a1 + a2 + a3)
    n_mat = eye - a1 + a2 + a3
    margin = float(np.min(smallest_singular_value(m)))
    if margin < DEGENERACY_MARGIN:
        raise DegeneracyError(
            f"principal matrix M is degenerate: margin {margin:.3e} < "
            f"{DEGENERACY_MARGIN:.1e}", margin=margin)
    return m, n_mat, margin
