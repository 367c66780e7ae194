"""Configuration parsing, subcommand dispatch, and report emission.

The command line is ``nullwave <subcommand> --config <path> [--out <dir>]``.
Configuration files are line-oriented ``key = value`` text (every parameter
is scalar); ``#`` starts a comment.  Unknown keys, malformed numbers, and
range violations are rejected with the offending line number.

Exit codes are the only machine contract: 0 on pass, 1 on assertion
failure, 2 on configuration error.  All artifacts are byte-deterministic
for a given configuration; wall-clock metadata goes to ``run_meta.json``
and nowhere else.

Each subcommand overlays its own operational defaults onto keys the user
did not set explicitly (the global defaults target short interactive runs
and do not satisfy the support-margin rule at T_final = 100).  Solver-backed
subcommands enforce that rule — the data support must stay clear of the far
end for the whole run: L >= support_edge + 1.2 * T_final.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from .domain import FAMILIES, GridConfig, make_initial_data, sample_family
from .energetics import EnergyObserver
from .errors import ConfigError, NullwaveError
from .experiments import (
    TrajectoryRecorder,
    blowup_sweep,
    bootstrap_sweep,
    boundary_flux_check,
    multiplier_identity_residual,
)
from .models import catalog_get, catalog_names, check_null_conditions
from .solver import run
from .weights import WeightParams
from . import report

__all__ = ["RunConfig", "parse_config", "dispatch", "main", "SUBCOMMANDS"]

__version__ = "1.0.0"

SUBCOMMANDS = (
    "check-null",
    "solve",
    "energies",
    "verify-identity",
    "flux-check",
    "sweep-bootstrap",
    "sweep-blowup",
)

SUPPORT_MARGIN_FACTOR = 1.2

_INT_KEYS = ("Nx", "stride", "seed")
_FLOAT_KEYS = ("delta", "epsilon", "L", "cfl", "T_final")
_STR_KEYS = ("model", "family", "out")
_LIST_KEYS = ("epsilons",)
_ALL_KEYS = _INT_KEYS + _FLOAT_KEYS + _STR_KEYS + _LIST_KEYS

_SUBCOMMAND_DEFAULTS: dict[str, dict] = {
    "check-null": {},
    "solve": {},
    "energies": {},
    "verify-identity": {
        "model": "linear", "Nx": 1024, "L": 22.0, "T_final": 4.8,
        "stride": 1,
    },
    "flux-check": {
        "model": "quasilinear-null", "Nx": 1024, "L": 36.0, "T_final": 16.5,
        "stride": 1, "epsilon": 0.01,
    },
    "sweep-bootstrap": {
        "Nx": 2048, "L": 140.0, "T_final": 100.0,
        "epsilons": (0.02, 0.01, 0.005, 0.0025),
    },
    "sweep-blowup": {
        "model": "nonnull-riccati", "Nx": 2048, "L": 32.0, "T_final": 12.0,
        "epsilons": (0.4, 0.2, 0.1),
    },
}


@dataclass(frozen=True)
class RunConfig:
    """One experiment's scalar parameters plus which keys were explicit."""

    model: str = "semilinear-null"
    family: str = "gaussian-bump"
    delta: float = 0.5
    epsilon: float = 0.01
    epsilons: tuple | None = None
    L: float = 60.0
    Nx: int = 1024
    cfl: float = 0.4
    T_final: float = 100.0
    stride: int = 10
    seed: int = 42
    out: str | None = None
    explicit: frozenset = frozenset()

    def grid(self) -> GridConfig:
        return GridConfig(L=self.L, Nx=self.Nx, cfl=self.cfl,
                          T_final=self.T_final)

    def weights(self) -> WeightParams:
        return WeightParams(delta=self.delta)

    def to_json(self) -> dict:
        return {
            "model": self.model, "family": self.family, "delta": self.delta,
            "epsilon": self.epsilon,
            "epsilons": list(self.epsilons) if self.epsilons else None,
            "L": self.L, "Nx": self.Nx, "cfl": self.cfl,
            "T_final": self.T_final, "stride": self.stride, "seed": self.seed,
        }


def _parse_scalar(key: str, raw: str, lineno: int):
    """Convert one raw value; raise with the line number on any defect."""
    if key in _INT_KEYS:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(
                f"line {lineno}: malformed integer for {key!r}: {raw!r}")
    if key in _FLOAT_KEYS:
        try:
            val = float(raw)
        except ValueError:
            raise ConfigError(
                f"line {lineno}: malformed number for {key!r}: {raw!r}")
        if val != val or val in (float("inf"), float("-inf")):
            raise ConfigError(
                f"line {lineno}: non-finite value for {key!r}: {raw!r}")
        return val
    if key in _LIST_KEYS:
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        if not parts:
            raise ConfigError(f"line {lineno}: empty ladder for {key!r}")
        vals = []
        for p in parts:
            try:
                vals.append(float(p))
            except ValueError:
                raise ConfigError(
                    f"line {lineno}: malformed number in {key!r}: {p!r}")
        return tuple(vals)
    return raw


def _check_range(key: str, val, lineno: int) -> None:
    msg = None
    if key == "delta" and not (0.0 < val < 1.0):
        msg = f"delta out of range: 0<δ<1 required, got {val:g}"
    elif key == "cfl" and not (0.0 < val <= 0.5):
        msg = f"cfl out of range: 0 < cfl <= 0.5 required, got {val:g}"
    elif key == "L" and not (val > 0.0):
        msg = f"L must be positive, got {val:g}"
    elif key == "T_final" and not (val > 0.0):
        msg = f"T_final must be positive, got {val:g}"
    elif key == "Nx" and val < 64:
        msg = f"Nx must be at least 64, got {val}"
    elif key == "stride" and val < 1:
        msg = f"stride must be a positive integer, got {val}"
    elif key == "seed" and val < 0:
        msg = f"seed must be non-negative, got {val}"
    elif key == "epsilon" and not (val > 0.0):
        msg = f"epsilon must be positive, got {val:g}"
    elif key == "epsilons" and any(not (e > 0.0) for e in val):
        msg = "epsilons must all be positive"
    elif key == "model" and val not in catalog_names():
        names = ", ".join(catalog_names())
        msg = f"unknown model {val!r}; catalog: {names}"
    elif key == "family" and val not in FAMILIES:
        msg = f"unknown family {val!r}; available: {', '.join(FAMILIES)}"
    if msg is not None:
        raise ConfigError(f"line {lineno}: {msg}")


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines into a :class:`RunConfig`.

    Missing keys take the documented defaults; the set of explicitly
    assigned keys is recorded so subcommand overlays know what to respect.
    """
    values: dict = {}
    lines: dict[str, int] = {}
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(
                f"line {lineno}: expected 'key = value', got {rawline!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _ALL_KEYS:
            raise ConfigError(
                f"line {lineno}: unknown key {key!r}; "
                f"known keys: {', '.join(_ALL_KEYS)}")
        if key in values:
            raise ConfigError(
                f"line {lineno}: duplicate key {key!r} "
                f"(first set on line {lines[key]})")
        if not raw:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        val = _parse_scalar(key, raw, lineno)
        _check_range(key, val, lineno)
        values[key] = val
        lines[key] = lineno
    return RunConfig(explicit=frozenset(values), **values)


def _overlay(config: RunConfig, subcommand: str) -> RunConfig:
    """Apply the subcommand's operational defaults to unset keys."""
    updates = {k: v for k, v in _SUBCOMMAND_DEFAULTS[subcommand].items()
               if k not in config.explicit}
    return replace(config, **updates) if updates else config


def _enforce_support_margin(cfg: RunConfig, grid: GridConfig) -> float:
    """Far end must stay causally inert: L >= support edge + 1.2 T_final."""
    edge = sample_family(cfg.family, 1.0, grid, n=1).support[1]
    need = edge + SUPPORT_MARGIN_FACTOR * grid.T_final
    if grid.L < need:
        raise ConfigError(
            f"support-margin rule violated: family {cfg.family!r} has data "
            f"support up to x = {edge:.6g} and T_final = {grid.T_final:g}, "
            f"so L >= {need:.6g} is required (rule: L >= support edge + "
            f"{SUPPORT_MARGIN_FACTOR:g}*T_final); got L = {grid.L:g}")
    return edge


# ---------------------------------------------------------------------------
# Subcommand handlers (return process exit status)
# ---------------------------------------------------------------------------


def _cmd_check_null(cfg: RunConfig, out: Path) -> int:
    spec = catalog_get(cfg.model)
    verdict = check_null_conditions(spec, seed=cfg.seed)
    payload = {
        "model": spec.name,
        "declared_null": spec.declared_null,
        "passed": verdict.passed,
        "matches_declaration": verdict.passed == spec.declared_null,
        "conditions": verdict.to_json(),
    }
    report.write_json(out / "null_verdict.json", payload)
    status = "pass" if payload["matches_declaration"] else "MISMATCH"
    print(f"check-null {spec.name}: checker={verdict.passed} "
          f"declared={spec.declared_null} -> {status}")
    return 0 if payload["matches_declaration"] else 1


def _cmd_solve(cfg: RunConfig, out: Path) -> int:
    spec = catalog_get(cfg.model)
    grid = cfg.grid()
    _enforce_support_margin(cfg, grid)
    data = make_initial_data(cfg.family, cfg.epsilon, grid,
                             params=cfg.weights(), n=spec.n)
    rec = TrajectoryRecorder(stride=cfg.stride)
    summary, blowup = run(spec, data, grid, observers=(rec,))
    report.write_trajectory_csv(out / "trajectory.csv", rec.states)
    report.save_state_figure(summary.final_state, out / "state.png")
    report.write_json(out / "summary.json", {
        "config": cfg.to_json(),
        "amplitude": data.amplitude,
        "steps": summary.steps,
        "t_end": summary.t_end,
        "min_margin": summary.min_margin,
        "max_amplitude": summary.max_amplitude,
        "far_field_max": summary.far_field_max,
        "blowup": blowup.to_json(),
    })
    tag = f"blow-up at t={blowup.t_blowup:.6g}" if blowup.detected \
        else f"reached t={summary.t_end:.6g}"
    print(f"solve {spec.name} eps={cfg.epsilon:g}: {tag} "
          f"({summary.steps} steps, min margin {summary.min_margin:.3g})")
    return 0


_SPLIT_TOL = 1.0e-10


def _energy_checks(rows) -> dict:
    """Split identities and the constructive ladder inequality, per row."""
    split_worst = 0.0
    ladder_bad = 0
    for row in rows:
        for k in range(1, 5):
            e, bar, dbar = row[f"E{k}"], row[f"barE{k}"], row[f"dbarE{k}"]
            denom = max(abs(e), abs(bar) + abs(dbar), 1.0e-300)
            split_worst = max(split_worst, abs(e - bar - dbar) / denom)
            if bar > 4.0 ** k * (dbar + row[f"tildeE{k}"]) * (1.0 + 1e-12):
                ladder_bad += 1
        for k in range(1, 4):
            e, bar, dbar = row[f"EE{k}"], row[f"barEE{k}"], row[f"dbarEE{k}"]
            denom = max(abs(e), abs(bar) + abs(dbar), 1.0e-300)
            split_worst = max(split_worst, abs(e - bar - dbar) / denom)
    return {
        "split_max_relative": split_worst,
        "split_tol": _SPLIT_TOL,
        "split_ok": split_worst <= _SPLIT_TOL,
        "ladder_violations": ladder_bad,
        "dbar4_over_E4sq_max": max(r["dbar4_over_E4sq"] for r in rows),
    }


def _cmd_energies(cfg: RunConfig, out: Path) -> int:
    spec = catalog_get(cfg.model)
    grid = cfg.grid()
    _enforce_support_margin(cfg, grid)
    data = make_initial_data(cfg.family, cfg.epsilon, grid,
                             params=cfg.weights(), n=spec.n)
    obs = EnergyObserver(grid, cfg.weights(), stride=cfg.stride)
    summary, blowup = run(spec, data, grid, observers=(obs,))
    report.write_energies_csv(out / "energies.csv", obs.rows)
    report.save_energies_figure(obs.rows, out / "energies.png")
    checks = _energy_checks(obs.rows)
    report.write_json(out / "summary.json", {
        "config": cfg.to_json(),
        "snapshots": len(obs.rows),
        "blowup": blowup.to_json(),
        "checks": checks,
    })
    ok = checks["split_ok"] and checks["ladder_violations"] == 0
    print(f"energies {spec.name} eps={cfg.epsilon:g}: {len(obs.rows)} "
          f"snapshots, split residual {checks['split_max_relative']:.3e}, "
          f"ladder violations {checks['ladder_violations']} -> "
          f"{'pass' if ok else 'FAIL'}")
    return 0 if ok else 1


def _identity_tol(model: str, order: str) -> float:
    if order == "high" and model == "linear":
        return 1.0e-6
    return 1.0e-5


def _cmd_verify_identity(cfg: RunConfig, out: Path) -> int:
    spec = catalog_get(cfg.model)
    grid = cfg.grid()
    _enforce_support_margin(cfg, grid)
    data = make_initial_data(cfg.family, cfg.epsilon, grid,
                             params=cfg.weights(), n=spec.n)
    rec = TrajectoryRecorder(stride=cfg.stride)
    run(spec, data, grid, observers=(rec,))
    ok = True
    summary = {"config": cfg.to_json()}
    for order in ("high", "low"):
        rep = multiplier_identity_residual(rec.states, spec, cfg.weights(),
                                           order=order)
        tol = _identity_tol(cfg.model, order)
        passed = rep.max_residual <= tol
        ok = ok and passed
        report.write_identity_csv(out / f"identity_{order}.csv", rep)
        report.save_identity_figure(rep, out / f"identity_{order}.png")
        summary[order] = {"max_residual": rep.max_residual, "tol": tol,
                          "passed": passed}
        print(f"verify-identity {spec.name} [{order}]: max residual "
              f"{rep.max_residual:.3e} (tol {tol:g}) -> "
              f"{'pass' if passed else 'FAIL'}")
    report.write_json(out / "identity.json", summary)
    return 0 if ok else 1


def _cmd_flux_check(cfg: RunConfig, out: Path) -> int:
    spec = catalog_get(cfg.model)
    grid = cfg.grid()
    _enforce_support_margin(cfg, grid)
    data = make_initial_data(cfg.family, cfg.epsilon, grid,
                             params=cfg.weights(), n=spec.n)
    rec = TrajectoryRecorder(stride=cfg.stride)
    run(spec, data, grid, observers=(rec,))
    rep = boundary_flux_check(rec.states, cfg.weights(), spec=spec)
    report.write_flux_csv(out / "flux.csv", rep)
    report.save_flux_figure(rep, out / "flux.png")
    report.write_json(out / "flux.json", {
        "config": cfg.to_json(), **rep.to_json(),
    })
    ok = rep.passed_high and rep.passed_low
    print(f"flux-check {spec.name}: high={rep.passed_high} "
          f"low={rep.passed_low} min margin={float(rep.margin.min()):.3e} "
          f"-> {'pass' if ok else 'FAIL'}")
    return 0 if ok else 1


def _write_sweep_artifacts(result, out: Path, figure) -> None:
    report.write_json(out / "sweep.json", result.to_json())
    figure(result, out / "sweep.png")
    for k, worker in enumerate(result.runs):
        rows = worker.get("rows") or ()
        if rows:
            report.write_energies_csv(out / f"energies_rung{k}.csv", rows)


def _cmd_sweep_bootstrap(cfg: RunConfig, out: Path) -> int:
    spec = catalog_get(cfg.model)
    grid = cfg.grid()
    _enforce_support_margin(cfg, grid)
    ladder = cfg.epsilons or _SUBCOMMAND_DEFAULTS["sweep-bootstrap"]["epsilons"]
    result = bootstrap_sweep(spec, cfg.family, ladder, grid,
                             params=cfg.weights(), stride=cfg.stride)
    _write_sweep_artifacts(result, out, report.save_bootstrap_figure)
    print(f"sweep-bootstrap {spec.name}: verdict={result.verdict} "
          f"slope={result.slope:.5f}")
    return 0 if result.verdict == "pass" else 1


def _cmd_sweep_blowup(cfg: RunConfig, out: Path) -> int:
    spec = catalog_get(cfg.model)
    grid = cfg.grid()
    _enforce_support_margin(cfg, grid)
    ladder = cfg.epsilons or _SUBCOMMAND_DEFAULTS["sweep-blowup"]["epsilons"]
    result = blowup_sweep(spec, ladder, grid, params=cfg.weights(),
                          stride=cfg.stride, family=cfg.family)
    _write_sweep_artifacts(result, out, report.save_blowup_figure)
    times = ", ".join("none" if t is None else f"{t:.4g}"
                      for t in result.t_blowup)
    slope_txt = "n/a" if result.slope is None else f"{result.slope:.5f}"
    print(f"sweep-blowup {spec.name}: verdict={result.verdict} "
          f"t_blowup=[{times}] slope={slope_txt}")
    return 0 if result.verdict == "blowup" else 1


_HANDLERS = {
    "check-null": _cmd_check_null,
    "solve": _cmd_solve,
    "energies": _cmd_energies,
    "verify-identity": _cmd_verify_identity,
    "flux-check": _cmd_flux_check,
    "sweep-bootstrap": _cmd_sweep_bootstrap,
    "sweep-blowup": _cmd_sweep_blowup,
}


def dispatch(subcommand: str, config: RunConfig) -> int:
    """Run one subcommand; returns the process exit status (0/1/2)."""
    if subcommand not in _HANDLERS:
        print(f"config error: unknown subcommand {subcommand!r}; "
              f"expected one of {', '.join(SUBCOMMANDS)}", file=sys.stderr)
        return 2
    cfg = _overlay(config, subcommand)
    out = Path(cfg.out) if cfg.out else Path(f"out-{subcommand}")
    try:
        out.mkdir(parents=True, exist_ok=True)
        report.write_run_meta(out / "run_meta.json", subcommand, __version__)
        return _HANDLERS[subcommand](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NullwaveError as exc:
        print(f"assertion failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nullwave",
        description="Weighted-energy laboratory for half-line quasilinear "
                    "wave systems with null structure.")
    parser.add_argument("subcommand", choices=SUBCOMMANDS,
                        help="experiment to run")
    parser.add_argument("--config", default=None, metavar="PATH",
                        help="key = value configuration file "
                             "(defaults apply when omitted)")
    parser.add_argument("--out", default=None, metavar="DIR",
                        help="output directory (default: out-<subcommand>)")
    args = parser.parse_args(argv)
    if args.config is None:
        text = ""
    else:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            print(f"config error: cannot read {args.config}: {exc}",
                  file=sys.stderr)
            return 2
    try:
        config = parse_config(text)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.out is not None:
        config = replace(config, out=args.out,
                         explicit=config.explicit | {"out"})
    return dispatch(args.subcommand, config)


if __name__ == "__main__":
    sys.exit(main())
