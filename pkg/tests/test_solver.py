"""Evolution engine: boundary rows, accuracy, blow-up detection, guards."""

import numpy as np
import pytest

from nullwave.domain import GridConfig, make_initial_data, sample_family
from nullwave.errors import EvaluationError
from nullwave.experiments import TrajectoryRecorder
from nullwave.models import SystemSpec, catalog_get
from nullwave.solver import (
    FAR_CLAMP,
    FieldState,
    HalfLineSolver,
    compute_rhs,
    run,
    step,
    to_null_derivatives,
)
from nullwave.weights import WeightParams

import oracles


@pytest.fixture(scope="module")
def short_linear_run(params=WeightParams(delta=0.5)):
    spec = catalog_get("linear")
    grid = GridConfig(L=40.0, Nx=512, cfl=0.4, T_final=8.0)
    data = make_initial_data("gaussian-bump", 0.02, grid, params=params,
                             n=spec.n)
    rec = TrajectoryRecorder(stride=1)
    summary, blowup = run(spec, data, grid, observers=(rec,))
    return grid, rec.states, summary, blowup


def test_boundary_rows_pinned_bitwise(short_linear_run):
    _, states, _, _ = short_linear_run
    for state in states:
        assert np.all(state.u[0] == 0.0)
        assert np.all(state.v[0] == 0.0)


def test_far_clamp_rows_are_exact_zero(short_linear_run):
    _, states, _, _ = short_linear_run
    for state in states:
        assert np.all(state.u[-FAR_CLAMP:] == 0.0)
        assert np.all(state.v[-FAR_CLAMP:] == 0.0)
        assert np.all(state.w[-FAR_CLAMP:] == 0.0)


def test_null_derivatives_definition(short_linear_run):
    _, states, _, _ = short_linear_run
    state = states[-1]
    p, q = to_null_derivatives(state)
    assert np.array_equal(p, state.v + state.w)
    assert np.array_equal(q, state.v - state.w)


def test_far_field_stays_inert(short_linear_run):
    _, _, summary, _ = short_linear_run
    assert summary.far_field_max < 1e-13


def test_linear_solution_matches_dalembert(linear_ladder_runs):
    grid, data, summary = linear_ladder_runs["runs"][1024]
    x = grid.nodes()
    exact = oracles.dalembert_reflected(x, summary.t_end,
                                        amplitude=data.amplitude)
    err = np.abs(summary.final_state.u[:, 0] - exact).max()
    assert err <= 5e-4 * data.amplitude


def test_reflection_flips_sign(linear_ladder_runs):
    grid, data, summary = linear_ladder_runs["runs"][1024]
    x = grid.nodes()
    u = summary.final_state.u[:, 0]
    # at t=30 the reflected pulse sits near x = 20 with inverted sign
    window = (x > 16.0) & (x < 24.0)
    peak = u[window][np.abs(u[window]).argmax()]
    assert peak < 0.0


def test_compute_rhs_linear_is_wave_operator():
    grid = GridConfig(L=40.0, Nx=256, cfl=0.4, T_final=1.0)
    spec = catalog_get("linear")
    data = sample_family("gaussian-bump", 0.1, grid, n=spec.n)
    solver = HalfLineSolver(spec, data, grid)
    st = solver.state
    du, dv, vx = compute_rhs(st, spec)
    assert np.array_equal(du, st.v)
    # with A = 0 and F = 0 the acceleration is exactly w_x
    wx = solver.deriv(st.w, odd=False)
    assert np.allclose(dv, wx, rtol=0.0, atol=1e-18)


def test_free_step_matches_engine_step():
    grid = GridConfig(L=40.0, Nx=256, cfl=0.4, T_final=1.0)
    spec = catalog_get("semilinear-null")
    data = sample_family("gaussian-bump", 0.05, grid, n=spec.n)
    engine = HalfLineSolver(spec, data, grid)
    before = engine.state.copy()
    after_engine = engine.step_once()
    after_free = step(before, spec, grid.dt)
    assert after_free.t == after_engine.t
    assert np.array_equal(after_free.u, after_engine.u)
    assert np.array_equal(after_free.v, after_engine.v)
    assert np.array_equal(after_free.w, after_engine.w)


def test_component_mismatch_rejected():
    grid = GridConfig(L=40.0, Nx=256, cfl=0.4, T_final=1.0)
    spec = catalog_get("semilinear-null")  # n = 2
    data = sample_family("gaussian-bump", 0.1, grid, n=1)
    with pytest.raises(EvaluationError):
        HalfLineSolver(spec, data, grid)


def test_blowup_detected_near_riccati_oracle():
    grid = GridConfig(L=32.0, Nx=1024, cfl=0.4, T_final=12.0)
    spec = catalog_get("nonnull-riccati")
    data = sample_family("gaussian-bump", 0.4, grid, n=spec.n)
    summary, blowup = run(spec, data, grid)
    assert blowup.detected
    t_star = oracles.riccati_blowup_time(0.4, grid.nodes())
    assert blowup.t_blowup == pytest.approx(t_star, rel=0.10)
    assert blowup.trigger in ("amplitude-threshold", "non-finite",
                              "degeneracy")


def test_degenerate_principal_matrix_stops_run():
    n = 1

    def big_a1(u, p, q):
        shape = np.shape(u)[:-1] + (n, n)
        return np.ones(shape)

    zero_mat = lambda u, p, q: np.zeros(np.shape(u)[:-1] + (n, n))
    zero_vec = lambda u, p, q: np.zeros(np.shape(u))
    spec = SystemSpec(n=n, A1=big_a1, A2=zero_mat, A3=zero_mat, F=zero_vec,
                      name="degenerate-test", declared_null=False)
    grid = GridConfig(L=40.0, Nx=128, cfl=0.4, T_final=1.0)
    data = sample_family("gaussian-bump", 0.1, grid, n=1)
    summary, blowup = run(spec, data, grid)
    assert blowup.detected and blowup.trigger == "degeneracy"


def test_min_margin_reported(short_linear_run):
    _, _, summary, _ = short_linear_run
    assert summary.min_margin == pytest.approx(1.0, abs=1e-12)


def test_observer_sees_every_step(short_linear_run):
    grid, states, summary, _ = short_linear_run
    assert len(states) == summary.steps + 1
    ts = np.array([s.t for s in states])
    assert np.allclose(np.diff(ts), grid.dt, rtol=1e-9)
