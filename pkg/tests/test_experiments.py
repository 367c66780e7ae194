"""Identity residuals, flux checks, pointwise bounds, sweeps, and fits."""

import math

import numpy as np
import pytest

from nullwave.domain import GridConfig, make_initial_data
from nullwave.energetics import EnergyObserver
from nullwave.errors import ConfigError, ResolutionError, StagingError
from nullwave.experiments import (
    SweepResult,
    TrajectoryRecorder,
    boundary_flux_check,
    bootstrap_sweep,
    blowup_sweep,
    fit_loglog,
    multiplier_identity_residual,
    pointwise_bound_check,
    worker_count,
)
from nullwave.models import catalog_get
from nullwave.solver import FieldState, run
from nullwave.weights import WeightParams


PARAMS = WeightParams(delta=0.5)


@pytest.fixture(scope="module")
def small_linear_run():
    spec = catalog_get("linear")
    grid = GridConfig(L=30.0, Nx=256, cfl=0.4, T_final=6.0)
    data = make_initial_data("gaussian-bump", 0.05, grid, params=PARAMS,
                             n=spec.n)
    rec = TrajectoryRecorder(stride=1)
    obs = EnergyObserver(grid, PARAMS, stride=4, keep_stacks=True)
    summary, blowup = run(spec, data, grid, observers=(rec, obs))
    assert not blowup.detected
    return grid, rec, obs, summary


def _synthetic_trajectory(n_states, dt, npts=96):
    dx = 0.1
    x = np.arange(npts) * dx
    states = []
    for k in range(n_states):
        t = k * dt
        u = (np.sin(x) * math.cos(t)).reshape(npts, 1)
        v = (-np.sin(x) * math.sin(t)).reshape(npts, 1)
        w = (np.cos(x) * math.cos(t)).reshape(npts, 1)
        u[0] = v[0] = 0.0
        states.append(FieldState(t=t, u=u, v=v, w=w, dx=dx))
    return states


# ---------------------------------------------------------------- fits


def test_fit_loglog_recovers_power_law():
    eps = (0.02, 0.01, 0.005, 0.0025)
    vals = [3.0 * e ** 2 for e in eps]
    slope, intercept = fit_loglog(eps, vals)
    assert slope == pytest.approx(2.0, abs=1e-12)
    assert intercept == pytest.approx(math.log(3.0), abs=1e-12)


def test_fit_loglog_needs_two_points():
    with pytest.raises(ConfigError):
        fit_loglog([0.1], [1.0])


# ------------------------------------------------- identity residual


def test_identity_rejects_unknown_order(small_linear_run):
    _, rec, _, _ = small_linear_run
    with pytest.raises(ConfigError, match="order"):
        multiplier_identity_residual(rec.states, catalog_get("linear"),
                                     PARAMS, order="mid")


def test_identity_rejects_short_trajectory():
    states = _synthetic_trajectory(3, 0.01)
    with pytest.raises(ResolutionError):
        multiplier_identity_residual(states, catalog_get("linear"), PARAMS)


def test_identity_rejects_nonuniform_sampling():
    states = _synthetic_trajectory(6, 0.01)
    bad = states[3]
    states[3] = FieldState(t=bad.t + 0.004, u=bad.u, v=bad.v, w=bad.w,
                           dx=bad.dx)
    with pytest.raises(ResolutionError):
        multiplier_identity_residual(states, catalog_get("linear"), PARAMS)


def test_identity_rejects_coarse_sampling():
    states = _synthetic_trajectory(6, 0.2)
    with pytest.raises(ResolutionError, match="spacing"):
        multiplier_identity_residual(states, catalog_get("linear"), PARAMS)


def test_identity_residual_small_for_linear(identity_linear):
    rep = identity_linear["reports"]["high"]
    assert rep.order == "high"
    assert len(rep.times) == len(rep.residuals)
    assert float(np.max(np.abs(rep.residuals))) <= 1e-6
    rep_low = identity_linear["reports"]["low"]
    assert float(np.max(np.abs(rep_low.residuals))) <= 1e-5


def test_identity_lhs_tracks_rhs(identity_linear):
    rep = identity_linear["reports"]["high"]
    # residuals are reported relative to the balance scale
    assert np.allclose(rep.lhs, rep.rhs, rtol=2e-6, atol=0.0)
    assert rep.residuals[0] == 0.0


# ------------------------------------------------------ boundary flux


def test_flux_empty_trajectory_rejected():
    with pytest.raises(ResolutionError):
        boundary_flux_check([], PARAMS)


def test_flux_high_order_cancels_exactly(flux_trajectory):
    rep = flux_trajectory["report"]
    assert np.all(rep.p_high == 0.0)
    assert rep.passed_high


def test_flux_low_sum_nonnegative(flux_trajectory):
    rep = flux_trajectory["report"]
    assert rep.passed_low
    assert float(rep.low_sum.min()) >= -1e-10
    assert float(rep.margin.min()) >= -1e-10


def test_flux_linear_sum_is_twice_floor(small_linear_run):
    _, rec, _, _ = small_linear_run
    rep = boundary_flux_check(rec.states, PARAMS)
    assert np.array_equal(rep.low_sum, 2.0 * rep.low_floor)
    assert np.all(rep.p_high == 0.0)


def test_flux_report_json_fields(flux_trajectory):
    digest = flux_trajectory["report"].to_json()
    assert digest["samples"] == len(flux_trajectory["report"].times)
    assert digest["pass_high"] and digest["pass_low"]
    assert digest["max_abs_p_high"] == 0.0


# --------------------------------------------------- pointwise bound


def test_pointwise_bound_holds(small_linear_run):
    grid, _, obs, _ = small_linear_run
    rep = pointwise_bound_check(obs.snapshots, obs.stacks, PARAMS, grid=grid)
    assert rep.violations == 0
    assert np.all(rep.sup_u <= rep.bound)


def test_pointwise_rejects_misaligned_inputs(small_linear_run):
    grid, _, obs, _ = small_linear_run
    with pytest.raises(StagingError):
        pointwise_bound_check(obs.snapshots[:-1], obs.stacks, PARAMS,
                              grid=grid)
    with pytest.raises(StagingError):
        pointwise_bound_check(obs.snapshots[1:], obs.stacks[:-1], PARAMS,
                              grid=grid)


# ------------------------------------------------------------ sweeps


def test_bootstrap_rejects_nonnull_system():
    grid = GridConfig(L=40.0, Nx=256, cfl=0.4, T_final=4.0)
    with pytest.raises(ConfigError):
        bootstrap_sweep(catalog_get("nonnull-riccati"), "gaussian-bump",
                        (0.02, 0.01, 0.005, 0.0025), grid)


def test_bootstrap_rejects_short_ladder():
    grid = GridConfig(L=40.0, Nx=256, cfl=0.4, T_final=4.0)
    with pytest.raises(ConfigError):
        bootstrap_sweep(catalog_get("semilinear-null"), "gaussian-bump",
                        (0.02, 0.01, 0.005), grid)


def test_bootstrap_rejects_large_epsilon():
    grid = GridConfig(L=40.0, Nx=256, cfl=0.4, T_final=4.0)
    with pytest.raises(ConfigError):
        bootstrap_sweep(catalog_get("semilinear-null"), "gaussian-bump",
                        (0.08, 0.04, 0.02, 0.01), grid)


def test_bootstrap_rejects_non_geometric_ladder():
    grid = GridConfig(L=40.0, Nx=256, cfl=0.4, T_final=4.0)
    with pytest.raises(ConfigError, match="ratio 2"):
        bootstrap_sweep(catalog_get("semilinear-null"), "gaussian-bump",
                        (0.02, 0.01, 0.004, 0.002), grid)


def test_blowup_rejects_null_system():
    grid = GridConfig(L=32.0, Nx=256, cfl=0.4, T_final=4.0)
    with pytest.raises(ConfigError):
        blowup_sweep(catalog_get("semilinear-null"), (0.4, 0.2, 0.1), grid)


def test_blowup_rejects_short_ladder():
    grid = GridConfig(L=32.0, Nx=256, cfl=0.4, T_final=4.0)
    with pytest.raises(ConfigError):
        blowup_sweep(catalog_get("nonnull-riccati"), (0.4, 0.2), grid)


def test_blowup_rejects_increasing_ladder():
    grid = GridConfig(L=32.0, Nx=256, cfl=0.4, T_final=4.0)
    with pytest.raises(ConfigError, match="decreasing"):
        blowup_sweep(catalog_get("nonnull-riccati"), (0.1, 0.2, 0.4), grid)


def test_sweep_result_validates_ladder():
    with pytest.raises(ConfigError):
        SweepResult(epsilons=(0.1, 0.1), Q=(1.0, 1.0),
                    t_blowup=(None, None), slope=0.0, intercept=0.0,
                    verdict="pass")


def test_sweep_result_json_round_trip():
    res = SweepResult(epsilons=(0.02, 0.01), Q=(4.0, 1.0),
                      t_blowup=(None, None), slope=2.0, intercept=0.5,
                      verdict="pass")
    digest = res.to_json()
    assert digest["epsilons"] == [0.02, 0.01]
    assert digest["verdict"] == "pass"
    assert "runs" not in digest


# --------------------------------------------------------- recorders


def test_trajectory_recorder_cadence():
    spec = catalog_get("linear")
    grid = GridConfig(L=30.0, Nx=256, cfl=0.4, T_final=3.0)
    data = make_initial_data("gaussian-bump", 0.05, grid, params=PARAMS,
                             n=spec.n)
    rec = TrajectoryRecorder(stride=7)
    summary, _ = run(spec, data, grid, observers=(rec,))
    steps = [round(s.t / grid.dt) for s in rec.states]
    expected = list(range(0, summary.steps + 1, 7))
    if expected[-1] != summary.steps:
        expected.append(summary.steps)
    assert steps == expected


def test_trajectory_recorder_rejects_bad_stride():
    with pytest.raises(ValueError):
        TrajectoryRecorder(stride=0)


def test_recorder_copies_states():
    spec = catalog_get("linear")
    grid = GridConfig(L=30.0, Nx=256, cfl=0.4, T_final=1.0)
    data = make_initial_data("gaussian-bump", 0.05, grid, params=PARAMS,
                             n=spec.n)
    rec = TrajectoryRecorder(stride=1)
    summary, _ = run(spec, data, grid, observers=(rec,))
    assert rec.states[-1].u is not summary.final_state.u


# ----------------------------------------------------------- workers


def test_worker_count_env_cap(monkeypatch):
    monkeypatch.setenv("NULLWAVE_THREADS", "2")
    assert worker_count(4) <= 2
    monkeypatch.setenv("NULLWAVE_THREADS", "1")
    assert worker_count(4) == 1


def test_worker_count_rejects_garbage(monkeypatch):
    monkeypatch.setenv("NULLWAVE_THREADS", "fast")
    with pytest.raises(ConfigError):
        worker_count(4)


def test_worker_count_floor(monkeypatch):
    monkeypatch.delenv("NULLWAVE_THREADS", raising=False)
    assert worker_count(1) == 1
