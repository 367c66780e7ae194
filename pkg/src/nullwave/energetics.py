"""Derivative stacks and the weighted energy families.

Notation used throughout: ``xi = (t + x)/2`` and ``eta = (t - x)/2`` are the
characteristic coordinates; ``Z = (d_xi, d_eta)`` with ``d_xi = d_t + d_x``
and ``d_eta = d_t - d_x``; multi-indices a = (a1, a2) act as
``Z^a = d_xi^a1 d_eta^a2``.

Energy families computed at a snapshot time t (all integrals over the grid,
composite Simpson; phi/theta are the growth weights of :mod:`.weights`):

* ``E(f)    = int phi(xi)  |f_xi|^2 + int phi(eta)  |f_eta|^2``
* ``EE(f)   = int theta(xi)|f_xi|^2 + int theta(eta)|f_eta|^2``
* ``E_k     = sum_{|a| <= k-1} E(Z^a u)``        (k <= 4), same for EE (k <= 3)
* ``barE_k  = sum_{l <= k-1} [int phi(xi)|d_xi^l u_xi|^2 + int phi(eta)|d_eta^l u_eta|^2]``
* ``dbarE_k = sum_{|b| <= k-2} [int phi(xi)|Z^b u_xieta|^2 + int phi(eta)|Z^b u_xieta|^2]``
* ``tildeE_k= sum_{l <= k-1} E(d_t^l u)``
* cross-section densities for the space-time families:
  ``calE`` uses ``<eta>^-(1+delta) phi(xi)|.|^2 + <xi>^-(1+delta) phi(eta)|.|^2``
  and ``scrS`` the same with theta; both are accumulated over snapshot times
  by the trapezoid rule in :class:`SpaceTimeAccumulator`.

The split families satisfy ``E_k = barE_k + dbarE_k`` because the underlying
multi-index sets partition exactly; the implementation evaluates each
elementary integral once and regroups, so the identity holds to rounding.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .domain import GridConfig
from .errors import SequencingError, StagingError
from .solver import BlowupInfo, FieldState
from .stencils import StencilTable, fd_weights, simpson_weights
from .weights import WeightParams, eval_bracket, eval_phi_theta

__all__ = [
    "TimeWindow",
    "DerivativeStack",
    "EnergySnapshot",
    "SpaceTimeAccumulator",
    "build_stack",
    "energy_snapshot",
    "accumulate",
    "EnergyObserver",
    "CSV_COLUMNS",
]

K_MAX = 4          # E-family depth
K_MAX_LOW = 3      # EE-family depth
RING = 7           # window length; evaluation lags the newest state by 3 dt


@dataclass(frozen=True)
class TimeWindow:
    """Ring of consecutive snapshots; the center one is the evaluation time."""

    states: tuple
    center: int

    def __post_init__(self):
        times = [s.t for s in self.states]
        if len(times) >= 2:
            gaps = np.diff(times)
            if np.any(gaps <= 0.0) or np.max(np.abs(gaps - gaps[0])) > 1e-9 * max(
                    abs(times[-1]), 1.0):
                raise StagingError("window times must increase uniformly")

    @property
    def dt(self) -> float:
        return self.states[1].t - self.states[0].t


@dataclass
class DerivativeStack:
    """Mixed (t, x) derivatives and assembled Z-derivatives at one time.

    ``txd[(a, b)]`` holds d_t^a d_x^b u for a + b <= 4; ``z_xi[(a1, a2)]``
    and ``z_eta[(a1, a2)]`` hold Z^a u_xi and Z^a u_eta for |a| <= 3,
    assembled binomially from ``txd``.
    """

    t: float
    txd: dict
    z_xi: dict
    z_eta: dict
    dx: float

    def time_derivative(self, level: int) -> np.ndarray:
        """d_t^l u for l <= 3."""
        return self.txd[(level, 0)]


# Temporal stencil windows (offsets in steps) for the m-th time derivative;
# all centered, second-order on the 7-ring.
_TIME_OFFSETS = {0: (0,), 1: (-1, 0, 1), 2: (-1, 0, 1), 3: (-2, -1, 0, 1, 2)}

_TABLE_CACHE: dict = {}


def _table(npts: int, dx: float, order: int) -> StencilTable:
    key = (npts, dx, order)
    if key not in _TABLE_CACHE:
        _TABLE_CACHE[key] = StencilTable(npts, dx, order)
    return _TABLE_CACHE[key]


def _mixed_to_null(txd: dict) -> tuple[dict, dict]:
    """Assemble Z^a u_xi / Z^a u_eta from mixed derivatives, binomially.

    d_xi^i d_eta^j = sum_{r<=i, s<=j} C(i,r) C(j,s) (-1)^(j-s)
                     d_t^(r+s) d_x^((i-r)+(j-s)).
    """
    null = {}
    for i in range(0, 5):
        for j in range(0, 5 - i):
            if i + j == 0:
                continue
            acc = None
            for r in range(i + 1):
                for s in range(j + 1):
                    coef = math.comb(i, r) * math.comb(j, s) * (-1.0) ** (j - s)
                    term = coef * txd[(r + s, (i - r) + (j - s))]
                    acc = term if acc is None else acc + term
            null[(i, j)] = acc
    z_xi = {(a1, a2): null[(a1 + 1, a2)]
            for a1 in range(4) for a2 in range(4 - a1)}
    z_eta = {(a1, a2): null[(a1, a2 + 1)]
             for a1 in range(4) for a2 in range(4 - a1)}
    return z_xi, z_eta


def build_stack(window: TimeWindow, _vstacks=None) -> DerivativeStack:
    """Assemble the derivative stack at the window center.

    Spatial derivatives use the fourth-order stencil tables; temporal
    derivatives use second-order centered differences on the window, applied
    to v = u_t (which is exact to the evolution, saving one difference
    order): d_t^a d_x^b u = d_t^(a-1) [d_x^b v] for a >= 1.
    """
    if len(window.states) < RING:
        raise StagingError(
            f"stack needs a full {RING}-level window, got {len(window.states)}")
    center = window.center
    states = window.states
    sc = states[center]
    npts, n = sc.u.shape
    dx = sc.dx
    dt = window.dt

    if _vstacks is None:
        _vstacks = [dict() for _ in states]

    def v_stack(level: int, b: int) -> np.ndarray:
        cache = _vstacks[level]
        if b not in cache:
            cache[b] = states[level].v if b == 0 else \
                _table(npts, dx, b)(states[level].v)
        return cache[b]

    txd = {(0, 0): sc.u}
    for b in range(1, 5):
        txd[(0, b)] = _table(npts, dx, b)(sc.u)
    for a in range(1, 5):
        m = a - 1
        offsets = _TIME_OFFSETS[m]
        w = fd_weights(0.0, np.asarray(offsets, dtype=float) * dt, m) \
            if m > 0 else np.array([1.0])
        for b in range(0, 5 - a):
            acc = None
            for wk, off in zip(w, offsets):
                term = wk * v_stack(center + off, b)
                acc = term if acc is None else acc + term
            txd[(a, b)] = acc
    z_xi, z_eta = _mixed_to_null(txd)
    return DerivativeStack(t=sc.t, txd=txd, z_xi=z_xi, z_eta=z_eta, dx=dx)


@dataclass
class EnergySnapshot:
    """All energy families and diagnostics at one time, keyed by column name."""

    t: float
    values: dict[str, float] = field(default_factory=dict)

    def __getitem__(self, key: str) -> float:
        return self.values[key]


def _sq(arr: np.ndarray) -> np.ndarray:
    """Squared Euclidean norm over components, shape (npts,)."""
    return np.sum(arr * arr, axis=-1)


def energy_snapshot(stack: DerivativeStack, params: WeightParams,
                    grid: GridConfig) -> EnergySnapshot:
    """Evaluate every energy family of the stack by composite Simpson."""
    x = grid.nodes()
    quad = simpson_weights(grid.npts, grid.dx)
    t = stack.t
    xi = 0.5 * (t + x)
    eta = 0.5 * (t - x)
    phi_xi, theta_xi = eval_phi_theta(xi, params)
    phi_eta, theta_eta = eval_phi_theta(eta, params)
    inv_xi = eval_bracket(xi) ** (-(1.0 + params.delta))
    inv_eta = eval_bracket(eta) ** (-(1.0 + params.delta))
    dens = {
        "phi_xi": quad * phi_xi, "phi_eta": quad * phi_eta,
        "theta_xi": quad * theta_xi, "theta_eta": quad * theta_eta,
        "cross_xi": quad * (inv_eta * phi_xi),
        "cross_eta": quad * (inv_xi * phi_eta),
        "crosslow_xi": quad * (inv_eta * theta_xi),
        "crosslow_eta": quad * (inv_xi * theta_eta),
    }

    sq_xi = {a: _sq(stack.z_xi[a]) for a in stack.z_xi}
    sq_eta = {a: _sq(stack.z_eta[a]) for a in stack.z_eta}

    def pair(a, wx, we) -> float:
        return float(np.dot(dens[wx], sq_xi[a]) + np.dot(dens[we], sq_eta[a]))

    vals: dict[str, float] = {}

    # E_k / EE_k and the cross-section densities of calE_k / scrS_k.
    for k in range(1, K_MAX + 1):
        idx = [(a1, a2) for a1 in range(k) for a2 in range(k - a1)]
        vals[f"E{k}"] = sum(pair(a, "phi_xi", "phi_eta") for a in idx)
        vals[f"crossE{k}"] = sum(pair(a, "cross_xi", "cross_eta") for a in idx)
        if k <= K_MAX_LOW:
            vals[f"EE{k}"] = sum(pair(a, "theta_xi", "theta_eta") for a in idx)
            vals[f"crossS{k}"] = sum(
                pair(a, "crosslow_xi", "crosslow_eta") for a in idx)

    # Splits: barE_k (pure xi / pure eta strings) and dbarE_k (mixed).
    for k in range(1, K_MAX + 1):
        vals[f"barE{k}"] = sum(
            float(np.dot(dens["phi_xi"], sq_xi[(l, 0)])
                  + np.dot(dens["phi_eta"], sq_eta[(0, l)]))
            for l in range(k))
        mixed = [(b1, b2) for b1 in range(k - 1) for b2 in range(k - 1 - b1)]
        vals[f"dbarE{k}"] = sum(
            float(np.dot(dens["phi_xi"], sq_eta[(b1 + 1, b2)])
                  + np.dot(dens["phi_eta"], sq_eta[(b1 + 1, b2)]))
            for b1, b2 in mixed)
        if k <= K_MAX_LOW:
            vals[f"barEE{k}"] = sum(
                float(np.dot(dens["theta_xi"], sq_xi[(l, 0)])
                      + np.dot(dens["theta_eta"], sq_eta[(0, l)]))
                for l in range(k))
            vals[f"dbarEE{k}"] = sum(
                float(np.dot(dens["theta_xi"], sq_eta[(b1 + 1, b2)])
                      + np.dot(dens["theta_eta"], sq_eta[(b1 + 1, b2)]))
                for b1, b2 in mixed)

    # Tilde families from pure time derivatives:
    # d_t^l u_xi = txd[(l+1, 0)] + txd[(l, 1)], d_t^l u_eta = difference.
    for k in range(1, K_MAX + 1):
        te = 0.0
        tee = 0.0
        tce = 0.0
        tcs = 0.0
        for l in range(k):
            f_xi = stack.txd[(l + 1, 0)] + stack.txd[(l, 1)]
            f_eta = stack.txd[(l + 1, 0)] - stack.txd[(l, 1)]
            s_xi, s_eta = _sq(f_xi), _sq(f_eta)
            te += float(np.dot(dens["phi_xi"], s_xi)
                        + np.dot(dens["phi_eta"], s_eta))
            tce += float(np.dot(dens["cross_xi"], s_xi)
                         + np.dot(dens["cross_eta"], s_eta))
            if k <= K_MAX_LOW:
                tee += float(np.dot(dens["theta_xi"], s_xi)
                             + np.dot(dens["theta_eta"], s_eta))
                tcs += float(np.dot(dens["crosslow_xi"], s_xi)
                             + np.dot(dens["crosslow_eta"], s_eta))
        vals[f"tildeE{k}"] = te
        vals[f"crossEt{k}"] = tce
        if k <= K_MAX_LOW:
            vals[f"tildeEE{k}"] = tee
            vals[f"crossSt{k}"] = tcs

    # Pointwise diagnostics.
    u = stack.txd[(0, 0)]
    vals["umax"] = float(np.max(np.abs(u))) if u.size else 0.0
    sphi_xi = np.sqrt(phi_xi)
    sphi_eta = np.sqrt(phi_eta)
    sth_xi = np.sqrt(theta_xi)
    sth_eta = np.sqrt(theta_eta)
    ptw_high = 0.0
    for a1 in range(3):
        for a2 in range(3 - a1):
            ptw_high += float(np.max(sphi_xi * np.sqrt(sq_xi[(a1, a2)])))
            ptw_high += float(np.max(sphi_eta * np.sqrt(sq_eta[(a1, a2)])))
    ptw_low = 0.0
    for a1 in range(2):
        for a2 in range(2 - a1):
            ptw_low += float(np.max(sth_xi * np.sqrt(sq_xi[(a1, a2)])))
            ptw_low += float(np.max(sth_eta * np.sqrt(sq_eta[(a1, a2)])))
    vals["ptw_high"] = ptw_high
    vals["ptw_low"] = ptw_low
    vals["ratio_high"] = ptw_high / math.sqrt(vals["E4"]) if vals["E4"] > 0 else 0.0
    vals["ratio_low"] = ptw_low / math.sqrt(vals["EE3"]) if vals["EE3"] > 0 else 0.0
    vals["dbar4_over_E4sq"] = vals["dbarE4"] / vals["E4"] ** 2 if vals["E4"] > 0 else 0.0

    return EnergySnapshot(t=t, values=vals)


class SpaceTimeAccumulator:
    """Trapezoidal space-time energies and running sup-trackers."""

    CAL_KEYS = tuple(f"crossE{k}" for k in range(1, K_MAX + 1)) + \
        tuple(f"crossS{k}" for k in range(1, K_MAX_LOW + 1)) + \
        tuple(f"crossEt{k}" for k in range(1, K_MAX + 1)) + \
        tuple(f"crossSt{k}" for k in range(1, K_MAX_LOW + 1))
    SUP_KEYS = tuple(f"E{k}" for k in range(1, K_MAX + 1)) + \
        tuple(f"EE{k}" for k in range(1, K_MAX_LOW + 1))

    def __init__(self):
        self.totals = {k: 0.0 for k in self.CAL_KEYS}
        self.sups = {k: 0.0 for k in self.SUP_KEYS}
        self.last_t: float | None = None
        self._last_cross: dict[str, float] = {}

    def update(self, snap: EnergySnapshot, dt: float) -> None:
        if self.last_t is not None and snap.t < self.last_t:
            raise SequencingError(
                f"snapshot at t={snap.t} arrived after t={self.last_t}")
        if self.last_t is not None:
            for key in self.CAL_KEYS:
                self.totals[key] += 0.5 * dt * (self._last_cross[key]
                                                + snap.values[key])
        for key in self.SUP_KEYS:
            val = snap.values[key]
            if val > self.sups[key]:
                self.sups[key] = val
        self._last_cross = {k: snap.values[k] for k in self.CAL_KEYS}
        self.last_t = snap.t

    def columns(self) -> dict[str, float]:
        out = {}
        for k in range(1, K_MAX + 1):
            out[f"calE{k}"] = self.totals[f"crossE{k}"]
            out[f"calEt{k}"] = self.totals[f"crossEt{k}"]
        for k in range(1, K_MAX_LOW + 1):
            out[f"scrE{k}"] = self.totals[f"crossS{k}"]
            out[f"scrEt{k}"] = self.totals[f"crossSt{k}"]
        for k in range(1, K_MAX + 1):
            out[f"supE{k}"] = self.sups[f"E{k}"]
        for k in range(1, K_MAX_LOW + 1):
            out[f"supEE{k}"] = self.sups[f"EE{k}"]
        return out


def accumulate(acc: SpaceTimeAccumulator, snap: EnergySnapshot,
               stack: DerivativeStack, dt: float) -> SpaceTimeAccumulator:
    """Fold one snapshot into the running space-time totals (trapezoid)."""
    del stack  # cross-section integrals are already on the snapshot
    acc.update(snap, dt)
    return acc


# Column order of the emitted time series. The leading block is fixed; the
# remainder documents every reported family.
CSV_COLUMNS = (
    ["t", "E1", "E2", "E3", "E4", "EE1", "EE2", "EE3",
     "calE4", "scrE3", "supE4", "supEE3"]
    + [f"calE{k}" for k in (1, 2, 3)] + [f"scrE{k}" for k in (1, 2)]
    + [f"calEt{k}" for k in (1, 2, 3, 4)] + [f"scrEt{k}" for k in (1, 2, 3)]
    + [f"barE{k}" for k in (1, 2, 3, 4)] + [f"dbarE{k}" for k in (1, 2, 3, 4)]
    + [f"tildeE{k}" for k in (1, 2, 3, 4)]
    + [f"barEE{k}" for k in (1, 2, 3)] + [f"dbarEE{k}" for k in (1, 2, 3)]
    + [f"tildeEE{k}" for k in (1, 2, 3)]
    + [f"supE{k}" for k in (1, 2, 3)] + [f"supEE{k}" for k in (1, 2)]
    + ["umax", "ptw_high", "ptw_low", "ratio_high", "ratio_low",
       "dbar4_over_E4sq"]
)


class EnergyObserver:
    """Solver observer maintaining the ring window and emitting snapshots.

    Emits at ring centers c with ``c == 3`` (the first full window) or
    ``c % stride == 0``, plus the last available center at the end of the
    run. Snapshot scalars land in ``rows`` (one dict per emission, in
    ``CSV_COLUMNS`` order) and ``snapshots``.
    """

    def __init__(self, grid: GridConfig, params: WeightParams,
                 stride: int = 1, keep_stacks: bool = False):
        if stride < 1:
            raise ValueError("stride must be a positive integer")
        self.grid = grid
        self.params = params
        self.stride = stride
        self.keep_stacks = keep_stacks
        self.acc = SpaceTimeAccumulator()
        self.snapshots: list[EnergySnapshot] = []
        self.stacks: list[DerivativeStack] = []
        self.rows: list[dict[str, float]] = []
        self._ring = deque(maxlen=RING)
        self._vstacks = deque(maxlen=RING)
        self._last_emitted = -1

    def on_start(self, state: FieldState) -> None:
        self._push(state, 0)

    def on_step(self, state: FieldState, k: int) -> None:
        self._push(state, k)

    def on_finish(self, state: FieldState, k: int,
                  blowup: BlowupInfo) -> None:
        if len(self._ring) == RING:
            center = k - 3
            if center > self._last_emitted:
                self._emit(center)

    def _push(self, state: FieldState, k: int) -> None:
        self._ring.append(state.copy())
        self._vstacks.append({})
        if len(self._ring) == RING:
            center = k - 3
            if center == 3 or center % self.stride == 0:
                if center > self._last_emitted:
                    self._emit(center)

    def _emit(self, center: int) -> None:
        window = TimeWindow(states=tuple(self._ring), center=3)
        stack = build_stack(window, _vstacks=list(self._vstacks))
        snap = energy_snapshot(stack, self.params, self.grid)
        dt = snap.t - self.acc.last_t if self.acc.last_t is not None else 0.0
        accumulate(self.acc, snap, stack, dt)
        row = {"t": snap.t}
        row.update(snap.values)
        row.update(self.acc.columns())
        self.rows.append({c: row[c] for c in CSV_COLUMNS})
        self.snapshots.append(snap)
        if self.keep_stacks:
            self.stacks.append(stack)
        self._last_emitted = center
