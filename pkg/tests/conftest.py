"""Shared fixtures: the expensive solver runs, computed once per session."""

from __future__ import annotations

import time

import pytest

from nullwave.domain import GridConfig, make_initial_data, sample_family
from nullwave.energetics import EnergyObserver
from nullwave.experiments import (
    TrajectoryRecorder,
    blowup_sweep,
    bootstrap_sweep,
    boundary_flux_check,
    multiplier_identity_residual,
)
from nullwave.models import catalog_get
from nullwave.solver import run
from nullwave.weights import WeightParams

NULL_SYSTEMS = ("linear", "semilinear-null", "quasilinear-null",
                "wavemap-like")


@pytest.fixture(scope="session")
def params():
    return WeightParams(delta=0.5)


@pytest.fixture(scope="session")
def linear_ladder_runs(params):
    """Reflected-pulse runs for the convergence study: Nx in {256,512,1024}.

    Raw (uncalibrated) amplitude: the evolution is linear, so the relative
    error against the closed-form reflected pulse is amplitude-independent,
    and the coarsest rung sits below the calibration resolution gate.
    """
    spec = catalog_get("linear")
    out = {}
    t0 = time.perf_counter()
    for nx in (256, 512, 1024):
        grid = GridConfig(L=60.0, Nx=nx, cfl=0.4, T_final=30.0)
        data = sample_family("gaussian-bump", 0.02, grid, n=spec.n)
        summary, blowup = run(spec, data, grid)
        assert not blowup.detected
        out[nx] = (grid, data, summary)
    return {"runs": out, "elapsed": time.perf_counter() - t0,
            "epsilon": 0.02}


@pytest.fixture(scope="session")
def identity_linear(params):
    """Per-step linear trajectory plus both integrated-identity reports."""
    spec = catalog_get("linear")
    grid = GridConfig(L=22.0, Nx=1024, cfl=0.4, T_final=4.8)
    data = make_initial_data("gaussian-bump", 0.01, grid, params=params,
                             n=spec.n)
    rec = TrajectoryRecorder(stride=1)
    t0 = time.perf_counter()
    run(spec, data, grid, observers=(rec,))
    reports = {
        order: multiplier_identity_residual(rec.states, spec, params,
                                            order=order)
        for order in ("high", "low")
    }
    return {"spec": spec, "grid": grid, "states": rec.states,
            "reports": reports, "elapsed": time.perf_counter() - t0}


@pytest.fixture(scope="session")
def semilinear_identity_ladder(params):
    """Semilinear identity residuals at three resolutions (self-convergence)."""
    spec = catalog_get("semilinear-null")
    out = {}
    t0 = time.perf_counter()
    for nx in (256, 512, 1024):
        grid = GridConfig(L=22.0, Nx=nx, cfl=0.4, T_final=4.8)
        data = make_initial_data("gaussian-bump", 0.01, grid, params=params,
                                 n=spec.n)
        rec = TrajectoryRecorder(stride=1)
        run(spec, data, grid, observers=(rec,))
        out[nx] = {
            order: multiplier_identity_residual(rec.states, spec, params,
                                                order=order)
            for order in ("high", "low")
        }
    return {"reports": out, "elapsed": time.perf_counter() - t0}


@pytest.fixture(scope="session")
def flux_trajectory(params):
    """Quasilinear run sampled every step, with its boundary-flux report."""
    spec = catalog_get("quasilinear-null")
    grid = GridConfig(L=36.0, Nx=1024, cfl=0.4, T_final=16.5)
    data = make_initial_data("gaussian-bump", 0.01, grid, params=params,
                             n=spec.n)
    rec = TrajectoryRecorder(stride=1)
    run(spec, data, grid, observers=(rec,))
    report = boundary_flux_check(rec.states, params, spec=spec)
    return {"spec": spec, "grid": grid, "states": rec.states,
            "report": report}


@pytest.fixture(scope="session")
def null_energy_runs(params):
    """Energy-monitored runs of all four null systems (stacks retained)."""
    out = {}
    for name in NULL_SYSTEMS:
        spec = catalog_get(name)
        grid = GridConfig(L=36.0, Nx=512, cfl=0.4, T_final=16.0)
        data = make_initial_data("gaussian-bump", 0.01, grid, params=params,
                                 n=spec.n)
        obs = EnergyObserver(grid, params, stride=5, keep_stacks=True)
        summary, blowup = run(spec, data, grid, observers=(obs,))
        assert not blowup.detected, f"unexpected blow-up in {name}"
        out[name] = {"spec": spec, "grid": grid, "observer": obs,
                     "summary": summary}
    return out


@pytest.fixture(scope="session")
def bootstrap_results(params):
    """Full-scale eps-ladder sweeps for both nonlinear null systems."""
    grid = GridConfig(L=140.0, Nx=2048, cfl=0.4, T_final=100.0)
    ladder = (0.02, 0.01, 0.005, 0.0025)
    out = {}
    t0 = time.perf_counter()
    for name in ("semilinear-null", "quasilinear-null"):
        out[name] = bootstrap_sweep(catalog_get(name), "gaussian-bump",
                                    ladder, grid, params=params, stride=10)
    return {"results": out, "elapsed": time.perf_counter() - t0,
            "ladder": ladder}


@pytest.fixture(scope="session")
def blowup_result(params):
    grid = GridConfig(L=32.0, Nx=2048, cfl=0.4, T_final=12.0)
    t0 = time.perf_counter()
    result = blowup_sweep(catalog_get("nonnull-riccati"), (0.4, 0.2, 0.1),
                          grid, params=params, stride=10)
    return {"result": result, "grid": grid,
            "elapsed": time.perf_counter() - t0}
