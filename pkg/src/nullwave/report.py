"""Artifact writers: delimited output, JSON reports, and figures.

Every floating-point value is printed with 17 significant digits so the
artifacts round-trip to the exact binary double.  No artifact written here
contains a timestamp; wall-clock metadata is confined to ``run_meta.json``
(:func:`write_run_meta`) so that identical configurations produce
byte-identical reports.

Figures are rendered with the Agg backend and carry a fixed ``Software``
metadata tag instead of the backend's version string, again for
reproducibility of the emitted bytes.
"""

from __future__ import annotations

import datetime as _dt
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .energetics import CSV_COLUMNS  # noqa: E402

__all__ = [
    "fmt_float",
    "json_text",
    "write_json",
    "write_csv",
    "write_energies_csv",
    "write_trajectory_csv",
    "write_identity_csv",
    "write_flux_csv",
    "write_run_meta",
    "save_energies_figure",
    "save_identity_figure",
    "save_flux_figure",
    "save_bootstrap_figure",
    "save_blowup_figure",
    "save_state_figure",
    "PNG_METADATA",
]

PNG_METADATA = {"Software": "nullwave"}
_DPI = 130


def fmt_float(x) -> str:
    """Render one scalar with 17 significant digits (round-trip exact)."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def json_text(obj, indent: int = 0) -> str:
    """Serialize ``obj`` to JSON with %.17g floats and sorted keys.

    Non-finite floats become ``null`` (JSON has no literal for them);
    numpy scalars and arrays are converted to their Python counterparts.
    """
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "null"
        return "%.17g" % x
    if isinstance(obj, str):
        out = obj.replace("\\", "\\\\").replace('"', '\\"')
        out = out.replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t")
        return f'"{out}"'
    if isinstance(obj, np.ndarray):
        return json_text(obj.tolist(), indent)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for key in sorted(obj, key=str):
            items.append(f"{inner}{json_text(str(key))}: "
                         f"{json_text(obj[key], indent + 1)}")
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{inner}{json_text(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    raise TypeError(f"cannot serialize {type(obj).__name__} to JSON")


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json_text(obj) + "\n", encoding="utf-8")
    return path


def write_run_meta(path, subcommand: str, version: str) -> Path:
    """The single artifact allowed to carry wall-clock information."""
    meta = {
        "subcommand": subcommand,
        "version": version,
        "timestamp_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    return write_json(path, meta)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def write_csv(path, columns, rows) -> Path:
    """Write dict-rows under a fixed column order, floats at %.17g."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(fmt_float(row[c]) for c in columns))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_energies_csv(path, rows) -> Path:
    """Energy-observer rows in the pinned column schema."""
    return write_csv(path, CSV_COLUMNS, rows)


def write_trajectory_csv(path, states) -> Path:
    """Long-format field dump: one row per (time, node, component)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    chunks = ["t,x,component,u,v,w"]
    for state in states:
        npts, n = state.u.shape
        x = np.arange(npts) * state.dx
        t_txt = fmt_float(state.t)
        for j in range(n):
            u, v, w = state.u[:, j], state.v[:, j], state.w[:, j]
            for i in range(npts):
                chunks.append(f"{t_txt},{fmt_float(x[i])},{j},"
                              f"{fmt_float(u[i])},{fmt_float(v[i])},"
                              f"{fmt_float(w[i])}")
    path.write_text("\n".join(chunks) + "\n", encoding="utf-8")
    return path


def write_identity_csv(path, report) -> Path:
    rows = [
        {"t": t, "lhs": lhs, "rhs": rhs, "residual": res}
        for t, lhs, rhs, res in zip(report.times, report.lhs, report.rhs,
                                    report.residuals)
    ]
    return write_csv(path, ("t", "lhs", "rhs", "residual"), rows)


def write_flux_csv(path, report) -> Path:
    rows = [
        {"t": t, "p_high": p, "low_sum": s, "low_floor": f, "w0_sq": w}
        for t, p, s, f, w in zip(report.times, report.p_high, report.low_sum,
                                 report.low_floor, report.w0_sq)
    ]
    return write_csv(path, ("t", "p_high", "low_sum", "low_floor", "w0_sq"),
                     rows)


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=_DPI, metadata=PNG_METADATA)
    plt.close(fig)
    return path


def save_energies_figure(rows, path) -> Path:
    """Instantaneous families on top, space-time accumulations below."""
    t = [r["t"] for r in rows]
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(7.0, 6.4), sharex=True,
                                   constrained_layout=True)
    for key, style in (("E1", "-"), ("E2", "--"), ("E3", "-."), ("E4", ":")):
        ax0.semilogy(t, [max(r[key], 1e-300) for r in rows], style, label=key)
    for key in ("EE1", "EE2", "EE3"):
        ax0.semilogy(t, [max(r[key], 1e-300) for r in rows], label=key)
    ax0.set_ylabel("instantaneous energy")
    ax0.legend(ncol=4, fontsize=8)
    for key in ("calE4", "scrE3", "supE4", "supEE3"):
        ax1.semilogy(t, [max(r[key], 1e-300) for r in rows], label=key)
    ax1.set_xlabel("t")
    ax1.set_ylabel("accumulated / sup")
    ax1.legend(ncol=2, fontsize=8)
    return _save(fig, path)


def save_identity_figure(report, path) -> Path:
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(7.0, 6.0), sharex=True,
                                   constrained_layout=True)
    ax0.plot(report.times, report.lhs, label="LHS")
    ax0.plot(report.times, report.rhs, "--", label="RHS")
    ax0.set_ylabel(f"{report.order}-order balance")
    ax0.legend()
    ax1.semilogy(report.times, [max(r, 1e-300) for r in report.residuals])
    ax1.set_xlabel("t")
    ax1.set_ylabel("relative residual")
    return _save(fig, path)


def save_flux_figure(report, path) -> Path:
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(7.0, 6.0), sharex=True,
                                   constrained_layout=True)
    ax0.plot(report.times, report.p_high)
    ax0.set_ylabel("p(s, 0)")
    ax1.plot(report.times, report.low_sum, label="p + p~ (low)")
    ax1.plot(report.times, [0.25 * f for f in report.low_floor], "--",
             label="quarter floor")
    ax1.set_xlabel("s")
    ax1.set_ylabel("low-order boundary flux")
    ax1.legend()
    return _save(fig, path)


def _loglog_points(ax, xs, ys, slope, intercept, label):
    ax.loglog(xs, ys, "o", label=label)
    if slope is not None:
        grid = np.geomspace(min(xs), max(xs), 32)
        fit = np.exp(intercept) * grid ** slope
        ax.loglog(grid, fit, "-", alpha=0.7,
                  label=f"fit slope {slope:.3f}")
    ax.legend()


def save_bootstrap_figure(result, path) -> Path:
    fig, ax = plt.subplots(figsize=(6.0, 4.6), constrained_layout=True)
    _loglog_points(ax, result.epsilons, result.Q, result.slope,
                   result.intercept, "Q(eps)")
    ax.set_xlabel("eps")
    ax.set_ylabel("Q")
    ax.set_title(f"verdict: {result.verdict}")
    return _save(fig, path)


def save_blowup_figure(result, path) -> Path:
    fig, ax = plt.subplots(figsize=(6.0, 4.6), constrained_layout=True)
    concl = [(e, t) for e, t in zip(result.epsilons, result.t_blowup)
             if t is not None]
    if concl:
        _loglog_points(ax, [c[0] for c in concl], [c[1] for c in concl],
                       result.slope, result.intercept, "t_blowup(eps)")
    escapes = [e for e, t in zip(result.epsilons, result.t_blowup)
               if t is None]
    for e in escapes:
        ax.axvline(e, color="gray", linestyle=":",
                   label=f"no blow-up at eps={e:g}")
    if escapes:
        ax.legend()
    ax.set_xlabel("eps")
    ax.set_ylabel("t_blowup")
    ax.set_title(f"verdict: {result.verdict}")
    return _save(fig, path)


def save_state_figure(state, path) -> Path:
    fig, axes = plt.subplots(3, 1, figsize=(7.0, 7.2), sharex=True,
                             constrained_layout=True)
    x = np.arange(state.u.shape[0]) * state.dx
    for ax, field, name in zip(axes, (state.u, state.v, state.w),
                               ("u", "v", "w")):
        for j in range(field.shape[1]):
            ax.plot(x, field[:, j], label=f"{name}[{j}]")
        ax.set_ylabel(name)
        ax.legend(fontsize=8)
    axes[-1].set_xlabel("x")
    axes[0].set_title(f"t = {state.t:g}")
    return _save(fig, path)
