"""Numerical verdicts built on the solver and the energy machinery.

Four kinds of checks live here:

* :func:`multiplier_identity_residual` — evaluates every term of the exact
  integration-by-parts balance obtained by multiplying the characteristic
  form ``(I - A1) u_xieta = A2 u_xixi + A3 u_etaeta + F`` with the weighted
  derivative components ``2 psi(eta) g(xi) u_xi`` and (a multiple of)
  ``psi(xi) g(eta) u_eta``, with ``g = phi`` for the high-order variant and
  ``g = theta`` for the low-order one, and reports the normalized residual
  series |LHS - RHS| / max(|LHS|, |RHS|).
* :func:`boundary_flux_check` — the boundary terms of that balance at the
  pinned row x = 0, where the high-order flux cancels algebraically and the
  low-order flux sum is sign-definite.
* :func:`pointwise_bound_check` — the sup-norm bound with the explicit
  constant ``(||<xi>^-(1+d)||_L2 + ||<eta>^-(1+d)||_L2) E1^(1/2)``.
* :func:`bootstrap_sweep` / :func:`blowup_sweep` — epsilon-ladder scaling of
  the bounded-energy functional Q and of the blow-up time.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .domain import GridConfig, make_initial_data, sample_family
from .energetics import EnergyObserver
from .errors import (ConfigError, CounterexampleError, EvaluationError,
                     ResolutionError, StagingError)
from .models import SystemSpec, catalog_get, catalog_names, \
    check_null_conditions
from .solver import FieldState, compute_rhs, run
from .stencils import Derivative1D, StencilTable, prefix_integral, \
    simpson_weights
from .weights import WeightParams, eval_bracket, eval_phi_theta, eval_psi, \
    get_psi_table

__all__ = [
    "IdentityTerms",
    "IdentityReport",
    "FluxReport",
    "PointwiseReport",
    "SweepResult",
    "TrajectoryRecorder",
    "multiplier_identity_residual",
    "boundary_flux_check",
    "pointwise_bound_check",
    "bootstrap_sweep",
    "blowup_sweep",
    "fit_loglog",
    "worker_count",
]

MAX_SAMPLE_SPACING = 0.1
BOOTSTRAP_EPS_MAX = 0.02
BOOTSTRAP_SUP_FACTOR = 10.0
SLOPE_TOL = 0.15


class TrajectoryRecorder:
    """Observer that keeps (copies of) the evolved states, every ``stride`` steps."""

    def __init__(self, stride: int = 1):
        if stride < 1:
            raise ValueError("stride must be a positive integer")
        self.stride = stride
        self.states: list[FieldState] = []
        self._last_step = -1

    def on_start(self, state: FieldState) -> None:
        self.states.append(state.copy())
        self._last_step = 0

    def on_step(self, state: FieldState, k: int) -> None:
        if k % self.stride == 0:
            self.states.append(state.copy())
            self._last_step = k

    def on_finish(self, state: FieldState, k: int, blowup) -> None:
        if not blowup.detected and k != self._last_step:
            self.states.append(state.copy())
            self._last_step = k


@dataclass(frozen=True)
class IdentityTerms:
    """Spatial integrals and boundary samples of the balance at one time."""

    t: float
    e: float            # int (W1|P|^2 + c W2|Q|^2)
    etilde: float       # int of the A-quadratic interior corrections
    q: float            # int of the sign-definite psi'-weighted density
    qtilde: float       # int of the weight/coefficient-derivative density
    g: float            # int of the semilinear multiplier density
    extra: float        # int of the second-order cross terms kept on the RHS
    p0: float           # boundary flux sample p(t, 0)
    ptilde0: float      # boundary flux correction sample ptilde(t, 0)

    def __post_init__(self):
        for name in ("t", "e", "etilde", "q", "qtilde", "g", "extra",
                     "p0", "ptilde0"):
            if not math.isfinite(getattr(self, name)):
                raise EvaluationError(f"identity term {name} is non-finite")


@dataclass
class IdentityReport:
    """Residual series of the integrated balance over one trajectory."""

    order: str
    times: np.ndarray
    residuals: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    terms: list[IdentityTerms]

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if self.residuals.size else 0.0

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "max_residual": self.max_residual,
            "final_residual": float(self.residuals[-1]),
            "samples": int(self.times.size),
            "t_final": float(self.times[-1]),
        }


def _bil(mat: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise bilinear form a^T M b, shape (npts,)."""
    return np.einsum("...ij,...i,...j->...", mat, a, b)


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a * b, axis=-1)


def _phi_weight(z: np.ndarray, params: WeightParams):
    """(phi, dphi/dz) with the closed-form derivative."""
    phi, _ = eval_phi_theta(z, params)
    dphi = 2.0 * z * (1.0 + params.delta) * phi / (1.0 + z * z)
    return phi, dphi


def _theta_weight(z: np.ndarray, params: WeightParams):
    """(theta, dtheta/dz) with the closed-form derivative."""
    _, theta = eval_phi_theta(z, params)
    dtheta = 6.0 * z * (1.0 + params.delta) * theta / (1.0 + z * z)
    return theta, dtheta


def _coefficients(spec: SystemSpec, u, p, q, npts):
    """A1, A2, A3, F broadcast to full per-point arrays."""
    n = spec.n
    mats = []
    for a_fn in (spec.A1, spec.A2, spec.A3):
        mats.append(np.ascontiguousarray(np.broadcast_to(
            np.asarray(a_fn(u, p, q), dtype=float), (npts, n, n))))
    f = np.ascontiguousarray(np.broadcast_to(
        np.asarray(spec.F(u, p, q), dtype=float), (npts, n)))
    return mats[0], mats[1], mats[2], f


def _validate_trajectory(trajectory):
    if len(trajectory) < 5:
        raise ResolutionError(
            "trajectory too short: need at least 5 uniformly spaced samples")
    times = np.array([s.t for s in trajectory])
    gaps = np.diff(times)
    dt = float(gaps[0])
    if dt <= 0.0 or np.max(np.abs(gaps - dt)) > 1e-9 * max(times[-1], 1.0):
        raise ResolutionError("trajectory samples must be uniformly spaced")
    if dt > MAX_SAMPLE_SPACING * (1.0 + 1e-12):
        raise ResolutionError(
            f"sample spacing {dt:.6g} exceeds {MAX_SAMPLE_SPACING} "
            "(dump the trajectory with a finer stride)")
    return times, dt


def multiplier_identity_residual(trajectory, spec: SystemSpec,
                                 weights: WeightParams,
                                 order: str = "high") -> IdentityReport:
    """Residual series of the integrated multiplier balance along a run.

    LHS(t) = int (e+etilde)(t) + int_0^t (p+ptilde)(s,0) ds + iint q,
    RHS(t) = int (e+etilde)(0) + iint qtilde + iint (G-terms + cross extras);
    the coefficient derivatives along xi and eta are obtained from a rolling
    3-level time window (2nd-order differences) plus a spatial stencil.
    """
    if order not in ("high", "low"):
        raise ConfigError(f"order must be 'high' or 'low', got {order!r}")
    times, dt = _validate_trajectory(trajectory)
    params = weights
    first = trajectory[0]
    npts, n = first.u.shape
    dx = first.dx
    x = np.arange(npts) * dx
    quad = simpson_weights(npts, dx)
    table = get_psi_table(params)
    d1 = StencilTable(npts, dx, 1)
    deriv = Derivative1D(npts, dx)
    gfun = _phi_weight if order == "high" else _theta_weight
    c_q = 1.0 if order == "high" else 0.5  # Q-multiplier carries 1/2 for low
    nsteps = len(trajectory)

    coeff_cache: dict[int, tuple] = {}

    def coeff(k: int):
        if k not in coeff_cache:
            s = trajectory[k]
            p_k = s.v + s.w
            q_k = s.v - s.w
            coeff_cache[k] = _coefficients(spec, s.u, p_k, q_k, npts)
        return coeff_cache[k]

    def time_derivs(k: int):
        """d/dt of A1, A2, A3 at sample k (2nd order)."""
        if 0 < k < nsteps - 1:
            lo, hi = coeff(k - 1), coeff(k + 1)
            return tuple((hi[i] - lo[i]) / (2.0 * dt) for i in range(3))
        if k == 0:
            f0, f1, f2 = coeff(0), coeff(1), coeff(2)
            return tuple((-3.0 * f0[i] + 4.0 * f1[i] - f2[i]) / (2.0 * dt)
                         for i in range(3))
        f0, f1, f2 = coeff(k - 2), coeff(k - 1), coeff(k)
        return tuple((f0[i] - 4.0 * f1[i] + 3.0 * f2[i]) / (2.0 * dt)
                     for i in range(3))

    terms: list[IdentityTerms] = []
    for k, state in enumerate(trajectory):
        t = state.t
        u, v, w = state.u, state.v, state.w
        pf = v + w
        qf = v - w
        xi = 0.5 * (t + x)
        eta = 0.5 * (t - x)
        psi_xi, dpsi_xi = eval_psi(xi, table, params)
        psi_eta, dpsi_eta = eval_psi(eta, table, params)
        g_xi, dg_xi = gfun(xi, params)
        g_eta, dg_eta = gfun(eta, params)
        w1 = psi_eta * g_xi
        w2 = psi_xi * g_eta

        a1, a2, a3, f = coeff(k)
        da1_t, da2_t, da3_t = time_derivs(k)
        da1_x, da2_x, da3_x = d1(a1), d1(a2), d1(a3)
        a1_xi, a1_eta = da1_t + da1_x, da1_t - da1_x
        a2_xi, a2_eta = da2_t + da2_x, da2_t - da2_x
        a3_xi, a3_eta = da3_t + da3_x, da3_t - da3_x

        n2p = _dot(pf, pf)
        n2q = _dot(qf, qf)
        pa1p = _bil(a1, pf, pf)
        pa2p = _bil(a2, pf, pf)
        pa3q = _bil(a3, pf, qf)
        qa3q = _bil(a3, qf, qf)
        qa1q = _bil(a1, qf, qf)
        qa2p = _bil(a2, qf, pf)

        e_dens = w1 * n2p + c_q * (w2 * n2q)
        q_dens = -dpsi_eta * g_xi * n2p - c_q * (dpsi_xi * g_eta * n2q)
        g_dens = 2.0 * w1 * _dot(pf, f) + 2.0 * c_q * (w2 * _dot(qf, f))

        if order == "high":
            et_dens = (-w1 * (pa1p + pa2p + 2.0 * pa3q - qa3q)
                       - w2 * (qa1q + 2.0 * qa2p - pa2p + qa3q))
            pt_dens = (-w1 * pa1p + w1 * pa2p - 2.0 * w1 * pa3q - w1 * qa3q
                       + w2 * qa1q + 2.0 * w2 * qa2p + w2 * pa2p - w2 * qa3q)
            qt_dens = (
                - dpsi_eta * g_xi * pa1p
                - 2.0 * dpsi_eta * g_xi * pa3q
                - psi_eta * dg_xi * pa2p
                + psi_eta * dg_xi * qa3q
                - w1 * (_bil(a1_eta, pf, pf) + _bil(a2_xi, pf, pf)
                        + 2.0 * _bil(a3_eta, pf, qf) - _bil(a3_xi, qf, qf))
                - dpsi_xi * g_eta * qa1q
                - 2.0 * dpsi_xi * g_eta * qa2p
                + psi_xi * dg_eta * pa2p
                - psi_xi * dg_eta * qa3q
                - w2 * (_bil(a1_xi, qf, qf) + 2.0 * _bil(a2_xi, qf, pf)
                        - _bil(a2_eta, pf, pf) + _bil(a3_eta, qf, qf)))
            x_dens = np.zeros(npts)
        else:
            et_dens = (-w1 * (pa1p + pa2p)
                       - 0.5 * (w2 * (qa1q + qa3q)))
            pt_dens = (-w1 * pa1p + w1 * pa2p
                       + 0.5 * (w2 * qa1q) - 0.5 * (w2 * qa3q))
            qt_dens = (
                - dpsi_eta * g_xi * pa1p
                - psi_eta * dg_xi * pa2p
                - w1 * (_bil(a1_eta, pf, pf) + _bil(a2_xi, pf, pf))
                - 0.5 * (dpsi_xi * g_eta * qa1q)
                - 0.5 * (psi_xi * dg_eta * qa3q)
                - 0.5 * (w2 * (_bil(a1_xi, qf, qf) + _bil(a3_eta, qf, qf))))
            _, dv, vx = compute_rhs(state, spec)
            wx = deriv(w, odd=False)
            u_xixi = dv + 2.0 * vx + wx
            u_etaeta = dv - 2.0 * vx + wx
            x_dens = (2.0 * w1 * _dot(
                pf, np.einsum("...ij,...j->...i", a3, u_etaeta))
                + w2 * _dot(
                    qf, np.einsum("...ij,...j->...i", a2, u_xixi)))

        p_dens = w1 * n2p - c_q * (w2 * n2q)
        terms.append(IdentityTerms(
            t=t,
            e=float(np.dot(quad, e_dens)),
            etilde=float(np.dot(quad, et_dens)),
            q=float(np.dot(quad, q_dens)),
            qtilde=float(np.dot(quad, qt_dens)),
            g=float(np.dot(quad, g_dens)),
            extra=float(np.dot(quad, x_dens)),
            p0=float(p_dens[0]),
            ptilde0=float(pt_dens[0]),
        ))
        # keep the rolling window at three levels
        coeff_cache.pop(k - 2, None)

    interior = np.array([tm.e + tm.etilde for tm in terms])
    boundary = prefix_integral(
        np.array([tm.p0 + tm.ptilde0 for tm in terms]), dt)
    q_int = prefix_integral(np.array([tm.q for tm in terms]), dt)
    qt_int = prefix_integral(np.array([tm.qtilde for tm in terms]), dt)
    g_int = prefix_integral(np.array([tm.g for tm in terms]), dt)
    x_int = prefix_integral(np.array([tm.extra for tm in terms]), dt)

    lhs = interior + boundary + q_int
    rhs = interior[0] + qt_int + g_int + x_int
    denom = np.maximum(np.abs(lhs), np.abs(rhs))
    residuals = np.where(denom > 0.0, np.abs(lhs - rhs) / np.where(
        denom > 0.0, denom, 1.0), 0.0)
    return IdentityReport(order=order, times=times, residuals=residuals,
                          lhs=lhs, rhs=rhs, terms=terms)


@dataclass
class FluxReport:
    """Boundary flux samples and their cancellation/positivity verdicts."""

    times: np.ndarray
    p_high: np.ndarray        # high-order flux p(s, 0); cancels exactly
    low_sum: np.ndarray       # low-order p + ptilde at x = 0
    low_floor: np.ndarray     # (1/4) psi(t/2) theta(t/2) |w(s,0)|^2
    w0_sq: np.ndarray         # |w(s,0)|^2
    passed_high: bool
    passed_low: bool

    @property
    def margin(self) -> np.ndarray:
        """Slack of the low-order sum over its sign-definite floor."""
        return self.low_sum - self.low_floor

    def to_json(self) -> dict:
        return {
            "samples": int(self.times.size),
            "max_abs_p_high": float(np.max(np.abs(self.p_high))),
            "min_low_sum": float(np.min(self.low_sum)),
            "min_margin": float(np.min(self.margin)),
            "pass_high": self.passed_high,
            "pass_low": self.passed_low,
        }


def boundary_flux_check(trajectory, weights: WeightParams,
                        spec: SystemSpec = None) -> FluxReport:
    """Evaluate both boundary flux pairs at the pinned row of every sample.

    With the Dirichlet row pinned, u_xi(s,0) = w(s,0) and
    u_eta(s,0) = -w(s,0) hold bitwise, so the high-order flux
    ``psi(t/2) phi(t/2) (|u_xi|^2 - |u_eta|^2)`` cancels to exactly 0.0; the
    low-order sum is checked against -1e-10 and reported against its floor
    ``(1/4) psi theta |w|^2``. When ``spec`` is omitted the coefficient terms
    of ptilde are taken as zero (the linear balance).
    """
    if not trajectory:
        raise ResolutionError("empty trajectory")
    params = weights
    table = get_psi_table(params)
    times = np.array([s.t for s in trajectory])
    half_t = 0.5 * times
    psi_b, _ = eval_psi(half_t, table, params)
    phi_b, theta_b = eval_phi_theta(half_t, params)

    p_high = np.empty(times.size)
    low_sum = np.empty(times.size)
    w0_sq = np.empty(times.size)
    for k, state in enumerate(trajectory):
        u0 = state.u[0]
        v0 = state.v[0]
        w0 = state.w[0]
        p0 = v0 + w0
        q0 = v0 - w0
        n2p = float(np.dot(p0, p0))
        n2q = float(np.dot(q0, q0))
        sig_h = psi_b[k] * phi_b[k]
        p_high[k] = sig_h * n2p - sig_h * n2q
        sig = psi_b[k] * theta_b[k]
        val = sig * n2p - 0.5 * (sig * n2q)
        if spec is not None:
            a1 = np.asarray(spec.A1(u0, p0, q0), dtype=float)
            a2 = np.asarray(spec.A2(u0, p0, q0), dtype=float)
            a3 = np.asarray(spec.A3(u0, p0, q0), dtype=float)
            val += (-sig * float(p0 @ a1 @ p0) + sig * float(p0 @ a2 @ p0)
                    + 0.5 * (sig * float(q0 @ a1 @ q0))
                    - 0.5 * (sig * float(q0 @ a3 @ q0)))
        low_sum[k] = val
        w0_sq[k] = float(np.dot(w0, w0))

    low_floor = 0.25 * psi_b * theta_b * w0_sq
    passed_high = bool(np.all(np.abs(p_high) <= 1e-12 * np.maximum(1.0, w0_sq)))
    passed_low = bool(np.all(low_sum >= -1e-10))
    return FluxReport(times=times, p_high=p_high, low_sum=low_sum,
                      low_floor=low_floor, w0_sq=w0_sq,
                      passed_high=passed_high, passed_low=passed_low)


@dataclass
class PointwiseReport:
    """Sup-norm bound with the explicit bracket-norm constant, per snapshot."""

    times: np.ndarray
    sup_u: np.ndarray
    bound: np.ndarray         # (||<xi>^-(1+d)||_2 + ||<eta>^-(1+d)||_2) sqrt(E1)
    ratio_high: np.ndarray    # weighted sup of the high stack over sqrt(E4)
    ratio_low: np.ndarray     # weighted sup of the low stack over sqrt(EE3)
    violations: int

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_json(self) -> dict:
        slack = self.bound - self.sup_u
        return {
            "samples": int(self.times.size),
            "violations": self.violations,
            "min_slack": float(np.min(slack)) if slack.size else 0.0,
            "max_ratio_high": float(np.max(self.ratio_high))
            if self.ratio_high.size else 0.0,
            "max_ratio_low": float(np.max(self.ratio_low))
            if self.ratio_low.size else 0.0,
        }


def pointwise_bound_check(snapshots, stacks, weights: WeightParams,
                          grid: GridConfig = None) -> PointwiseReport:
    """Check ||u||_inf <= (||<xi>^-(1+d)||_2 + ||<eta>^-(1+d)||_2) E1^(1/2).

    The norm factors are computed by quadrature at each snapshot time; the
    weighted sup-bounds of the derivative stacks are reported as measured
    ratios only, never asserted.
    """
    if len(snapshots) != len(stacks):
        raise StagingError("snapshots and stacks must be aligned")
    params = weights
    times = np.empty(len(snapshots))
    sup_u = np.empty(len(snapshots))
    bound = np.empty(len(snapshots))
    r_high = np.empty(len(snapshots))
    r_low = np.empty(len(snapshots))
    violations = 0
    for i, (snap, stack) in enumerate(zip(snapshots, stacks)):
        if abs(snap.t - stack.t) > 1e-9 * max(1.0, abs(snap.t)):
            raise StagingError(
                f"snapshot at t={snap.t} paired with stack at t={stack.t}")
        u = stack.txd[(0, 0)]
        npts = u.shape[0]
        if grid is not None:
            x = grid.nodes()
            quad = simpson_weights(grid.npts, grid.dx)
        else:
            x = np.arange(npts) * stack.dx
            quad = simpson_weights(npts, stack.dx)
        xi = 0.5 * (snap.t + x)
        eta = 0.5 * (snap.t - x)
        expo = -2.0 * (1.0 + params.delta)
        k_xi = math.sqrt(float(np.dot(quad, eval_bracket(xi) ** expo)))
        k_eta = math.sqrt(float(np.dot(quad, eval_bracket(eta) ** expo)))
        times[i] = snap.t
        sup_u[i] = float(np.max(np.abs(u)))
        bound[i] = (k_xi + k_eta) * math.sqrt(snap["E1"])
        r_high[i] = snap["ratio_high"]
        r_low[i] = snap["ratio_low"]
        if sup_u[i] > bound[i]:
            violations += 1
    return PointwiseReport(times=times, sup_u=sup_u, bound=bound,
                           ratio_high=r_high, ratio_low=r_low,
                           violations=violations)


@dataclass
class SweepResult:
    """Epsilon-ladder outcome: Q(eps) or blow-up times plus the log-log fit."""

    epsilons: tuple
    Q: tuple
    t_blowup: tuple
    slope: float
    intercept: float
    verdict: str
    runs: tuple = field(default=(), repr=False)

    def __post_init__(self):
        eps = self.epsilons
        if any(eps[i + 1] >= eps[i] for i in range(len(eps) - 1)):
            raise ConfigError("epsilon ladder must be strictly decreasing")

    def to_json(self) -> dict:
        return {
            "epsilons": list(self.epsilons),
            "Q": list(self.Q),
            "t_blowup": list(self.t_blowup),
            "slope": self.slope,
            "intercept": self.intercept,
            "verdict": self.verdict,
        }


def fit_loglog(epsilons, values):
    """Least-squares slope and intercept of log(values) against log(eps)."""
    eps = np.asarray(epsilons, dtype=float)
    val = np.asarray(values, dtype=float)
    if eps.size < 2:
        raise ConfigError("log-log fit needs at least two points")
    slope, intercept = np.polyfit(np.log(eps), np.log(val), 1)
    return float(slope), float(intercept)


def worker_count(n_jobs: int) -> int:
    """Sweep parallelism: min(jobs, cores, 4), capped by NULLWAVE_THREADS."""
    cap = os.environ.get("NULLWAVE_THREADS")
    limit = min(n_jobs, os.cpu_count() or 1, 4)
    if cap is not None:
        try:
            limit = min(limit, max(1, int(cap)))
        except ValueError:
            raise ConfigError(
                f"NULLWAVE_THREADS must be an integer, got {cap!r}")
    return max(1, limit)


def _sweep_worker(payload: dict) -> dict:
    """One ladder rung: build data, run, return rows plus run aggregates."""
    spec = catalog_get(payload["model"])
    params = WeightParams(delta=payload["delta"])
    grid = GridConfig(L=payload["L"], Nx=payload["Nx"], cfl=payload["cfl"],
                      T_final=payload["T_final"])
    eps = payload["epsilon"]
    if payload["mode"] == "bootstrap":
        data = make_initial_data(payload["family"], eps, grid, params=params,
                                 n=spec.n)
    else:
        data = sample_family(payload["family"], eps, grid, n=spec.n)
    observer = EnergyObserver(grid, params, stride=payload["stride"])
    summary, blowup = run(spec, data, grid, observers=(observer,))
    rows = observer.rows
    out = {
        "epsilon": eps,
        "rows": rows,
        "blowup": blowup.to_json(),
        "detected": blowup.detected,
        "t_blowup": blowup.t_blowup,
        "steps": summary.steps,
        "t_end": summary.t_end,
        "min_margin": summary.min_margin,
    }
    if rows:
        last = rows[-1]
        out["Q"] = (last["supE4"] + last["calE4"]
                    + last["supEE3"] + last["scrE3"])
        out["sup_E4"] = last["supE4"]
        out["E4_first"] = rows[0]["E4"]
    else:
        out["Q"] = None
        out["sup_E4"] = None
        out["E4_first"] = None
    return out


def _run_ladder(payloads):
    """Execute the rungs, in a process pool when more than one worker helps."""
    workers = worker_count(len(payloads))
    if workers == 1 or len(payloads) == 1:
        return [_sweep_worker(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_worker, payloads))


def _ladder_payloads(spec, family, epsilons, grid, params, stride, mode):
    if spec.name not in catalog_names():
        raise ConfigError(
            f"sweeps need a catalog system (got {spec.name!r}); "
            "parallel rungs are reconstructed by name")
    return [{
        "model": spec.name,
        "family": family,
        "epsilon": float(e),
        "delta": params.delta,
        "L": grid.L,
        "Nx": grid.Nx,
        "cfl": grid.cfl,
        "T_final": grid.T_final,
        "stride": stride,
        "mode": mode,
    } for e in epsilons]


def bootstrap_sweep(spec: SystemSpec, family: str, epsilons, grid: GridConfig,
                    params: WeightParams = None,
                    stride: int = 10) -> SweepResult:
    """Epsilon-squared scaling of Q = sup E4 + calE4(T) + sup EE3 + scrS3(T).

    Preconditions: the system passes the null checker; the ladder is
    geometric with ratio 2, at least 4 rungs, largest at most 0.02. Any
    blow-up in a null-certified run raises CounterexampleError.
    """
    params = params or WeightParams(delta=0.5)
    verdict = check_null_conditions(spec)
    if not verdict.passed:
        raise ConfigError(
            f"bootstrap_sweep requires a system passing the null checker; "
            f"{spec.name!r} fails")
    eps = [float(e) for e in epsilons]
    if len(eps) < 4:
        raise ConfigError("bootstrap ladder needs at least 4 rungs")
    if any(e2 >= e1 for e1, e2 in zip(eps, eps[1:])):
        raise ConfigError("epsilon ladder must be strictly decreasing")
    if max(eps) > BOOTSTRAP_EPS_MAX * (1.0 + 1e-12):
        raise ConfigError(
            f"bootstrap ladder must start at or below {BOOTSTRAP_EPS_MAX}")
    ratios = [e1 / e2 for e1, e2 in zip(eps, eps[1:])]
    if any(abs(r - 2.0) > 1e-9 for r in ratios):
        raise ConfigError("bootstrap ladder must be geometric with ratio 2")

    payloads = _ladder_payloads(spec, family, eps, grid, params, stride,
                                "bootstrap")
    results = _run_ladder(payloads)
    for res in results:
        if res["detected"]:
            raise CounterexampleError(
                f"null-certified system {spec.name!r} blew up at "
                f"t={res['t_blowup']:.6g} for epsilon={res['epsilon']:.6g} "
                f"({res['blowup']['trigger']})")
    q_vals = [res["Q"] for res in results]
    slope, intercept = fit_loglog(eps, q_vals)
    bounded = all(res["sup_E4"] <= BOOTSTRAP_SUP_FACTOR * res["E4_first"]
                  for res in results)
    ok = bounded and abs(slope - 2.0) <= SLOPE_TOL
    return SweepResult(
        epsilons=tuple(eps), Q=tuple(q_vals),
        t_blowup=(None,) * len(eps), slope=slope, intercept=intercept,
        verdict="pass" if ok else "anomalous", runs=tuple(results))


def blowup_sweep(spec: SystemSpec, epsilons, grid: GridConfig,
                 params: WeightParams = None, stride: int = 10,
                 family: str = "gaussian-bump") -> SweepResult:
    """Blow-up time scaling t_blowup ~ 1/eps for a null-violating system.

    Rungs that reach T_final without blow-up are reported with
    ``t_blowup = None`` (not fatal).  The log-log fit runs over the
    conclusive rungs; with fewer than two of those no slope can be fitted
    and the verdict is "inconclusive" instead of "blowup".
    """
    params = params or WeightParams(delta=0.5)
    verdict = check_null_conditions(spec)
    if verdict.passed:
        raise ConfigError(
            f"blowup_sweep requires a system failing the null checker; "
            f"{spec.name!r} passes (use bootstrap_sweep)")
    eps = [float(e) for e in epsilons]
    if len(eps) < 3:
        raise ConfigError("blow-up ladder needs at least 3 rungs")
    if any(e2 >= e1 for e1, e2 in zip(eps, eps[1:])):
        raise ConfigError("epsilon ladder must be strictly decreasing")

    payloads = _ladder_payloads(spec, family, eps, grid, params, stride,
                                "blowup")
    results = _run_ladder(payloads)
    t_blow = [res["t_blowup"] if res["detected"] else None for res in results]
    concl = [(e, t) for e, t in zip(eps, t_blow) if t is not None]
    slope = intercept = None
    if len(concl) >= 2:
        slope, intercept = fit_loglog([c[0] for c in concl],
                                      [c[1] for c in concl])
    verdict_str = "blowup" if len(concl) >= 2 else "inconclusive"
    return SweepResult(
        epsilons=tuple(eps), Q=(None,) * len(eps), t_blowup=tuple(t_blow),
        slope=slope, intercept=intercept, verdict=verdict_str,
        runs=tuple(results))
