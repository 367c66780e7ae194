"""Half-line evolution of the quasilinear first-order system.

State variables are ``u`` (solution), ``v = u_t`` and ``w = u_x`` on a
uniform grid over [0, L]; the second-order equation is advanced as

    u_t = v
    v_t = M^{-1} [ N w_x + 2 (A2 - A3) v_x + F ]
    w_t = v_x

with M = I - A1 - A2 - A3 and N = I - A1 + A2 + A3 evaluated pointwise from
the system's coefficient evaluators at (u, p, q), p = v + w, q = v - w.

Boundary treatment: u and v are pinned to zero at x = 0 after every stage of
the time integrator, and w(t, 0) is recomputed from u by the boundary
closure.  The far end x = L is causally inert under the support-margin rule;
the last ``FAR_CLAMP`` rows are held at zero so that every active node sees a
centered stencil (the uncentered closure rows are not self-stable over long
runs), and the inertness monitor watches the nodes just inside the clamp.

Observers are invoked every step with read-only snapshots; they own their
emission cadence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import GridConfig, InitialData
from .errors import DegeneracyError, EvaluationError
from .models import DEGENERACY_MARGIN, SystemSpec, smallest_singular_value
from .stencils import Derivative1D

__all__ = [
    "FieldState",
    "BlowupInfo",
    "RunSummary",
    "to_null_derivatives",
    "compute_rhs",
    "step",
    "HalfLineSolver",
    "run",
    "AMPLITUDE_THRESHOLD",
    "FAR_CLAMP",
]

AMPLITUDE_THRESHOLD = 1.0e6
FAR_CLAMP = 3  # rows held at zero at x = L (covers the uncentered stencil rows)


@dataclass
class FieldState:
    """Grid snapshot at one time: u and its first derivatives, (npts, n)."""

    t: float
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    dx: float

    def copy(self) -> "FieldState":
        return FieldState(self.t, self.u.copy(), self.v.copy(), self.w.copy(),
                          self.dx)


@dataclass(frozen=True)
class BlowupInfo:
    """Outcome of blow-up monitoring for one run."""

    detected: bool
    t_blowup: float | None = None
    trigger: str | None = None  # amplitude-threshold | non-finite | degeneracy

    def to_json(self) -> dict:
        return {"detected": self.detected, "t_blowup": self.t_blowup,
                "trigger": self.trigger}


@dataclass
class RunSummary:
    """Aggregates returned by :func:`run` alongside the blow-up verdict."""

    final_state: FieldState
    steps: int
    t_end: float
    min_margin: float
    max_amplitude: float
    far_field_max: float  # max |u|,|v|,|w| just inside the far clamp, whole run


def to_null_derivatives(state: FieldState):
    """Characteristic derivatives p = u_t + u_x, q = u_t - u_x."""
    return state.v + state.w, state.v - state.w


def _solve_principal(m: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve M y = b over the batch; closed forms for n = 1, 2."""
    n = m.shape[-1]
    if n == 1:
        return b / m[..., 0]
    if n == 2:
        det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
        y0 = (m[..., 1, 1] * b[..., 0] - m[..., 0, 1] * b[..., 1]) / det
        y1 = (m[..., 0, 0] * b[..., 1] - m[..., 1, 0] * b[..., 0]) / det
        return np.stack([y0, y1], axis=-1)
    return np.linalg.solve(m, b)


class HalfLineSolver:
    """Evolution engine binding one system, one grid, and one data set."""

    def __init__(self, spec: SystemSpec, data: InitialData, grid: GridConfig):
        if data.n != spec.n:
            raise EvaluationError(
                f"data has {data.n} components but system {spec.name!r} "
                f"expects {spec.n}")
        self.spec = spec
        self.grid = grid
        self.deriv = Derivative1D(grid.npts, grid.dx)
        self.x = grid.nodes()
        self.dt = grid.dt
        self.min_margin = np.inf
        u0 = np.array(data.u0, dtype=float)
        v0 = np.array(data.u1, dtype=float)
        w0 = self.deriv(u0, odd=True)
        self.state = FieldState(0.0, u0, v0, w0, grid.dx)
        self._pin(self.state.u, self.state.v, self.state.w)

    @classmethod
    def from_state(cls, spec: SystemSpec, state: FieldState, dt: float,
                   pin: bool = True) -> "HalfLineSolver":
        """Bind an engine to an existing snapshot (grid inferred from it)."""
        self = cls.__new__(cls)
        npts = state.u.shape[0]
        self.spec = spec
        self.grid = None
        self.deriv = Derivative1D(npts, state.dx)
        self.x = np.arange(npts) * state.dx
        self.dt = dt
        self.min_margin = np.inf
        self.state = state.copy()
        if pin:
            self._pin(self.state.u, self.state.v, self.state.w)
        return self

    def _pin(self, u: np.ndarray, v: np.ndarray, w: np.ndarray) -> None:
        """Enforce the boundary rows.

        At x = 0: u, v vanish and w follows u through the odd closure.  At
        x = L the trailing ``FAR_CLAMP`` rows are held at zero (causally inert
        by the support-margin rule; clamping keeps the uncentered closure rows
        out of the active dynamics).
        """
        u[0] = 0.0
        v[0] = 0.0
        w[0] = self.deriv.boundary_row_odd(u)
        far0 = max(1, u.shape[0] - FAR_CLAMP)
        u[far0:] = 0.0
        v[far0:] = 0.0
        w[far0:] = 0.0

    def rhs(self, t: float, u: np.ndarray, v: np.ndarray, w: np.ndarray):
        """Time derivatives (u_t, v_t, w_t) of the pinned state."""
        spec = self.spec
        vx = self.deriv(v, odd=True)
        wx = self.deriv(w, odd=False)
        p = v + w
        q = v - w
        a1 = np.asarray(spec.A1(u, p, q), dtype=float)
        a2 = np.asarray(spec.A2(u, p, q), dtype=float)
        a3 = np.asarray(spec.A3(u, p, q), dtype=float)
        f = np.asarray(spec.F(u, p, q), dtype=float)
        eye = np.eye(spec.n)
        m = eye - (a1 + a2 + a3)
        margins = smallest_singular_value(m)
        margin = float(np.min(margins))
        if margin < self.min_margin:
            self.min_margin = margin
        if margin < DEGENERACY_MARGIN:
            i = int(np.argmin(margins))
            raise DegeneracyError(
                f"principal matrix degenerate at t={t:.6g}, x={self.x[i]:.6g}: "
                f"margin {margin:.3e} < {DEGENERACY_MARGIN:.1e}", margin=margin)
        n_mat = eye - a1 + a2 + a3
        rhs_b = np.einsum("...ij,...j->...i", n_mat, wx) \
            + 2.0 * np.einsum("...ij,...j->...i", a2 - a3, vx) + f
        dv = _solve_principal(m, rhs_b)
        if not np.all(np.isfinite(dv)):
            i = int(np.argwhere(~np.isfinite(dv).all(axis=-1))[0, 0])
            raise EvaluationError(
                f"non-finite acceleration at t={t:.6g}, x={self.x[i]:.6g}",
                sample={"t": t, "x": float(self.x[i])})
        return v, dv, vx

    def step_once(self) -> FieldState:
        """One classical four-stage (RK4) step with per-stage boundary pinning."""
        st = self.state
        dt = self.dt
        t, u, v, w = st.t, st.u, st.v, st.w

        ku1, kv1, kw1 = self.rhs(t, u, v, w)
        u2 = u + 0.5 * dt * ku1
        v2 = v + 0.5 * dt * kv1
        w2 = w + 0.5 * dt * kw1
        self._pin(u2, v2, w2)
        ku2, kv2, kw2 = self.rhs(t + 0.5 * dt, u2, v2, w2)
        u3 = u + 0.5 * dt * ku2
        v3 = v + 0.5 * dt * kv2
        w3 = w + 0.5 * dt * kw2
        self._pin(u3, v3, w3)
        ku3, kv3, kw3 = self.rhs(t + 0.5 * dt, u3, v3, w3)
        u4 = u + dt * ku3
        v4 = v + dt * kv3
        w4 = w + dt * kw3
        self._pin(u4, v4, w4)
        ku4, kv4, kw4 = self.rhs(t + dt, u4, v4, w4)

        c = dt / 6.0
        un = u + c * (ku1 + 2.0 * (ku2 + ku3) + ku4)
        vn = v + c * (kv1 + 2.0 * (kv2 + kv3) + kv4)
        wn = w + c * (kw1 + 2.0 * (kw2 + kw3) + kw4)
        self._pin(un, vn, wn)
        self.state = FieldState(t + dt, un, vn, wn, st.dx)
        return self.state


def compute_rhs(state: FieldState, spec: SystemSpec):
    """Free-standing right-hand side for one snapshot, evaluated as given."""
    engine = HalfLineSolver.from_state(spec, state, dt=0.0, pin=False)
    return engine.rhs(state.t, engine.state.u, engine.state.v, engine.state.w)


def step(state: FieldState, spec: SystemSpec, dt: float) -> FieldState:
    """Free-standing single step (convenience wrapper over the solver)."""
    return HalfLineSolver.from_state(spec, state, dt).step_once()


def run(spec: SystemSpec, data: InitialData, grid: GridConfig,
        observers=()):
    """Advance to T_final or blow-up, invoking observers every step.

    Returns ``(RunSummary, BlowupInfo)``. Blow-up is declared when
    ``max(|p| + |q|)`` crosses the amplitude threshold, any field goes
    non-finite, or the principal matrix loses its invertibility margin.
    """
    solver = HalfLineSolver(spec, data, grid)
    dt = grid.dt
    n_steps = int(np.floor(grid.T_final / dt + 1.0e-9))
    far_hi = max(1, grid.npts - FAR_CLAMP)
    far = slice(max(0, far_hi - 3), far_hi)

    state = solver.state
    max_amp = 0.0
    far_max = 0.0
    for obs in observers:
        obs.on_start(state)

    blowup = BlowupInfo(detected=False)
    k = 0
    for k in range(1, n_steps + 1):
        try:
            state = solver.step_once()
        except DegeneracyError:
            blowup = BlowupInfo(True, t_blowup=solver.state.t,
                                trigger="degeneracy")
            break
        p, q = to_null_derivatives(state)
        finite = np.isfinite(state.u).all() and np.isfinite(p).all() \
            and np.isfinite(q).all()
        if not finite:
            blowup = BlowupInfo(True, t_blowup=state.t, trigger="non-finite")
            break
        amp = float(np.max(np.abs(p) + np.abs(q)))
        if amp > max_amp:
            max_amp = amp
        far_max = max(far_max, float(np.max(np.abs(state.u[far]))),
                      float(np.max(np.abs(state.v[far]))),
                      float(np.max(np.abs(state.w[far]))))
        if amp > AMPLITUDE_THRESHOLD:
            blowup = BlowupInfo(True, t_blowup=state.t,
                                trigger="amplitude-threshold")
            break
        for obs in observers:
            obs.on_step(state, k)

    for obs in observers:
        obs.on_finish(solver.state, k, blowup)

    summary = RunSummary(final_state=solver.state, steps=k,
                         t_end=solver.state.t, min_margin=solver.min_margin,
                         max_amplitude=max_amp, far_field_max=far_max)
    return summary, blowup
