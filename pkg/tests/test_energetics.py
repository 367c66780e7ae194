"""Derivative stacks, weighted energies, accumulators, and the observer."""

import numpy as np
import pytest

from nullwave.domain import GridConfig, make_initial_data
from nullwave.energetics import (
    CSV_COLUMNS,
    DerivativeStack,
    EnergyObserver,
    SpaceTimeAccumulator,
    TimeWindow,
    build_stack,
    energy_snapshot,
)
from nullwave.errors import SequencingError, StagingError
from nullwave.models import catalog_get
from nullwave.solver import FieldState, run
from nullwave.weights import WeightParams

import oracles


def _standing_states(x, dt, t_center, n_states=7):
    """Synthetic window sampling u = sin(t) sin(x) componentwise."""
    states = []
    for k in range(n_states):
        t = t_center + (k - n_states // 2) * dt
        f = oracles.standing_wave(x, t)
        shape = (x.size, 1)
        states.append(FieldState(t=t, u=f["u"].reshape(shape),
                                 v=f["v"].reshape(shape),
                                 w=f["w"].reshape(shape),
                                 dx=float(x[1] - x[0])))
    return tuple(states)


@pytest.fixture(scope="module")
def standing_stack():
    grid = GridConfig(L=4.0 * np.pi, Nx=512, cfl=0.4, T_final=1.0)
    x = grid.nodes()
    states = _standing_states(x, dt=0.002, t_center=0.7)
    window = TimeWindow(states=states, center=3)
    return grid, x, build_stack(window)


@pytest.fixture(scope="module")
def observed_run():
    spec = catalog_get("linear")
    grid = GridConfig(L=30.0, Nx=256, cfl=0.4, T_final=6.0)
    params = WeightParams(delta=0.5)
    data = make_initial_data("gaussian-bump", 0.05, grid, params=params,
                             n=spec.n)
    obs = EnergyObserver(grid, params, stride=3, keep_stacks=True)
    summary, blowup = run(spec, data, grid, observers=(obs,))
    assert not blowup.detected
    return grid, params, obs, summary


def test_mixed_derivatives_match_analytic(standing_stack):
    _, x, stack = standing_stack
    for (a, b), arr in stack.txd.items():
        exact = oracles.standing_wave_mixed(x, stack.t, a, b)
        assert np.allclose(arr[:, 0], exact, atol=3e-5), (a, b)


def test_null_frame_assembly(standing_stack):
    _, x, stack = standing_stack
    t = stack.t
    mixed = {(a, b): oracles.standing_wave_mixed(x, t, a, b)
             for a in range(5) for b in range(5 - a)}
    assert np.allclose(stack.z_xi[(0, 0)][:, 0],
                       mixed[(1, 0)] + mixed[(0, 1)], atol=3e-5)
    assert np.allclose(stack.z_eta[(0, 0)][:, 0],
                       mixed[(1, 0)] - mixed[(0, 1)], atol=3e-5)
    # (d_t + d_x)^2 u and (d_t^2 - d_x^2) u
    assert np.allclose(stack.z_xi[(1, 0)][:, 0],
                       mixed[(2, 0)] + 2.0 * mixed[(1, 1)] + mixed[(0, 2)],
                       atol=5e-5)
    assert np.allclose(stack.z_xi[(0, 1)][:, 0],
                       mixed[(2, 0)] - mixed[(0, 2)], atol=5e-5)


def test_commuting_derivatives_share_storage(standing_stack):
    _, _, stack = standing_stack
    for (a1, a2) in stack.z_xi:
        if a2 >= 1:
            assert stack.z_xi[(a1, a2)] is stack.z_eta[(a1 + 1, a2 - 1)]


def test_window_rejects_nonuniform_times():
    x = np.linspace(0.0, 4.0, 129)
    states = list(_standing_states(x, dt=0.002, t_center=0.7))
    bad = states[4]
    states[4] = FieldState(t=bad.t + 5e-4, u=bad.u, v=bad.v, w=bad.w,
                           dx=bad.dx)
    with pytest.raises(StagingError):
        TimeWindow(states=tuple(states), center=3)


def test_stack_requires_full_window():
    x = np.linspace(0.0, 4.0, 129)
    states = _standing_states(x, dt=0.002, t_center=0.7, n_states=5)
    window = TimeWindow(states=states, center=2)
    with pytest.raises(StagingError):
        build_stack(window)


def test_snapshot_values_are_finite_and_positive(observed_run):
    _, _, obs, _ = observed_run
    assert obs.snapshots
    for snap in obs.snapshots:
        for key in ("E1", "E2", "E3", "E4", "EE1", "EE2", "EE3"):
            val = snap.values[key]
            assert np.isfinite(val) and val > 0.0


def test_split_families_recompose_exactly(observed_run):
    _, _, obs, _ = observed_run
    for snap in obs.snapshots:
        v = snap.values
        for k in range(1, 5):
            total = v[f"barE{k}"] + v[f"dbarE{k}"]
            assert total == pytest.approx(v[f"E{k}"], rel=1e-10)
        for k in range(1, 4):
            total = v[f"barEE{k}"] + v[f"dbarEE{k}"]
            assert total == pytest.approx(v[f"EE{k}"], rel=1e-10)


def test_pure_string_ladder(observed_run):
    _, _, obs, _ = observed_run
    for snap in obs.snapshots:
        v = snap.values
        for k in range(1, 5):
            bound = 4.0 ** k * (v[f"dbarE{k}"] + v[f"tildeE{k}"])
            assert v[f"barE{k}"] <= bound * (1.0 + 1e-12)
        for k in range(1, 4):
            bound = 4.0 ** k * (v[f"dbarEE{k}"] + v[f"tildeEE{k}"])
            assert v[f"barEE{k}"] <= bound * (1.0 + 1e-12)


def test_quadratic_homogeneity_is_bitwise(observed_run):
    grid, params, obs, _ = observed_run
    stack = obs.stacks[len(obs.stacks) // 2]
    scaled = DerivativeStack(
        t=stack.t,
        txd={k: 2.0 * a for k, a in stack.txd.items()},
        z_xi={k: 2.0 * a for k, a in stack.z_xi.items()},
        z_eta={k: 2.0 * a for k, a in stack.z_eta.items()},
        dx=stack.dx)
    base = energy_snapshot(stack, params, grid).values
    quad = energy_snapshot(scaled, params, grid).values
    for fam in ("E", "EE", "barE", "dbarE", "tildeE", "barEE", "dbarEE",
                "tildeEE"):
        kmax = 4 if not fam.endswith("EE") and "EE" not in fam else 3
        for k in range(1, kmax + 1):
            key = f"{fam}{k}"
            if key in base:
                assert quad[key] == 4.0 * base[key]
    assert quad["umax"] == 2.0 * base["umax"]
    assert quad["ratio_high"] == base["ratio_high"]


def test_accumulator_rejects_backwards_time(observed_run):
    _, _, obs, _ = observed_run
    acc = SpaceTimeAccumulator()
    acc.update(obs.snapshots[1], 0.0)
    with pytest.raises(SequencingError):
        acc.update(obs.snapshots[0], 0.1)


def test_sup_trackers_are_running_maxima(observed_run):
    _, _, obs, _ = observed_run
    running = 0.0
    for row in obs.rows:
        running = max(running, row["E4"])
        assert row["supE4"] == running


def test_observer_rows_match_schema(observed_run):
    _, _, obs, _ = observed_run
    assert len(CSV_COLUMNS) == 56
    assert CSV_COLUMNS[:12] == ["t", "E1", "E2", "E3", "E4", "EE1", "EE2",
                                "EE3", "calE4", "scrE3", "supE4", "supEE3"]
    for row in obs.rows:
        assert list(row.keys()) == list(CSV_COLUMNS)


def test_observer_cadence(observed_run):
    grid, _, obs, summary = observed_run
    dt = grid.dt
    last_center = summary.steps - 3
    expected = [3]
    expected += [c for c in range(4, last_center + 1)
                 if c % obs.stride == 0]
    if expected[-1] != last_center:
        expected.append(last_center)
    got = [snap.t / dt for snap in obs.snapshots]
    assert np.allclose(got, expected, atol=1e-6)


def test_observer_rejects_bad_stride():
    grid = GridConfig(L=30.0, Nx=256, cfl=0.4, T_final=6.0)
    with pytest.raises(ValueError):
        EnergyObserver(grid, WeightParams(delta=0.5), stride=0)
