"""Run orchestration: configured simulation and decay-fit pipelines.

Shared by the command-line entry points and the built-in verification
criteria so both exercise exactly the same code path.  A simulation run
produces, inside the output directory:

  manifest.json    config echo + hash, gamma resolution, grid summary,
                   verdict (COMPLETED / HALT-GRACEFUL / FAILED), wall time
  snapshots.csv    modal field snapshots at the configured cadence
  monitor.csv      per-step continuation monitor K and the tracked norm
  norms.csv        optional extra norms evaluated at snapshot times

A fit run consumes snapshots.csv plus the same config and produces
decay_report.json and shells.csv.
"""

from __future__ import annotations

import time
from pathlib import Path

import numpy as np

from . import artifacts
from .config import (
    ConfigError,
    RunConfig,
    build_fit_window,
    build_initial_field,
    build_nonlinearity,
    build_prediction,
    build_run_grid,
    build_solver_config,
    build_surface,
    config_hash,
    resolve_gamma,
)
from .decayfit import (
    TipTrace,
    compare_with_prediction,
    extract_tip_constant,
    fit_deviation_exponent,
    shell_deviation,
)
from .evolve import HALT_GRACEFUL, run_evolution
from .fields import ModalField
from .norms import MellinNormConfig, mellin_norm

__all__ = [
    "PipelineError",
    "snapshot_schedule",
    "simulate_run",
    "fit_run",
]

COMPLETED = "COMPLETED"
FAILED = "FAILED"


class PipelineError(RuntimeError):
    """Simulation failed; partial artifacts were written."""


def snapshot_schedule(horizon: float, every: float | None) -> tuple:
    """Snapshot times: 0, every, 2*every, ..., horizon (always included)."""
    if every is None:
        return (0.0, horizon)
    count = int(np.floor(horizon / every + 1e-9))
    times = [i * every for i in range(count + 1)]
    if horizon - times[-1] > 1e-12 * max(horizon, 1.0):
        times.append(horizon)
    else:
        times[-1] = horizon
    return tuple(times)


def _grid_summary(cfg: RunConfig, surface, grid) -> dict:
    return {
        "N": grid.N,
        "n_theta": cfg.discretization.n_theta,
        "x_min": float(grid.x[0]),
        "x_max": float(grid.x[-1]),
        "topology": surface.topology,
        "outer_bc": surface.outer_bc,
        "length": surface.length,
    }


def _norm_label(norm: dict) -> str:
    return f"norm_s{norm['s']}_g{norm['gamma']:g}_p{norm['p']:g}"


def simulate_run(cfg: RunConfig, outdir) -> dict:
    """Run the configured evolution and write all artifacts; returns manifest.

    Solver exceptions are caught: partial artifacts and a FAILED manifest are
    written before PipelineError is raised, so a crash still leaves an
    inspectable output directory.
    """
    if cfg.dynamics is None:
        raise ConfigError("dynamics: block is required for simulation")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    chash = config_hash(cfg)
    surface = build_surface(cfg)
    grid = build_run_grid(cfg, surface)
    gamma, window, how = resolve_gamma(cfg, surface)

    manifest = {
        "config": cfg.as_dict(),
        "config_hash": chash,
        "gamma": gamma,
        "gamma_resolution": how,
        "weight_window": {
            "gamma_min": window.gamma_min,
            "gamma_max": window.gamma_max,
            "nonempty": window.nonempty,
        },
        "grid": _grid_summary(cfg, surface, grid),
        "status": None,
        "halted": None,
        "steps": 0,
        "wall_time": None,
        "artifacts": [],
    }

    nl = build_nonlinearity(cfg)
    u0 = build_initial_field(cfg, grid)
    solver_cfg = build_solver_config(cfg)
    schedule = snapshot_schedule(cfg.dynamics.horizon, cfg.output.snapshot_every)
    manifest["snapshot_times"] = list(schedule)

    t0 = time.perf_counter()
    try:
        result = run_evolution(grid, u0, nl, solver_cfg, snapshot_times=schedule)
    except Exception as e:  # solver failure: keep partial outputs, then raise
        manifest["status"] = FAILED
        manifest["error"] = f"{type(e).__name__}: {e}"
        manifest["wall_time"] = time.perf_counter() - t0
        artifacts.write_json(outdir / "manifest.json", manifest)
        raise PipelineError(manifest["error"]) from e

    snaps = [(t, f.coeffs) for t, f in result.snapshots]
    artifacts.write_snapshots(outdir / "snapshots.csv", grid, snaps,
                              cfg.discretization.n_theta, chash)
    artifacts.write_monitor(outdir / "monitor.csv", result.monitor,
                            [_norm_label(cfg.dynamics.monitor_norm)], chash)
    manifest["artifacts"] = ["snapshots.csv", "monitor.csv"]

    if cfg.output.norms:
        labels = [_norm_label(n) for n in cfg.output.norms]
        configs = [
            MellinNormConfig(s=n["s"], gamma=n["gamma"], p=n["p"], n=cfg.analysis.n)
            for n in cfg.output.norms
        ]
        rows = [
            tuple([t] + [mellin_norm(f, nc) for nc in configs])
            for t, f in result.snapshots
        ]
        artifacts.write_csv(outdir / "norms.csv", ["t"] + labels, rows,
                            (f"manifest_hash: {chash}",))
        manifest["artifacts"].append("norms.csv")

    manifest["status"] = (
        HALT_GRACEFUL if result.verdict == HALT_GRACEFUL else COMPLETED
    )
    manifest["halted"] = result.halted
    if result.verdict == HALT_GRACEFUL:
        manifest["halt_reason"] = result.halted or "monitor threshold exceeded"
    manifest["steps"] = result.steps
    manifest["final_time"] = float(result.times[-1])
    manifest["final_K"] = float(result.monitor[-1, 1])
    manifest["wall_time"] = time.perf_counter() - t0
    artifacts.write_json(outdir / "manifest.json", manifest)
    return manifest


def fit_run(cfg: RunConfig, snapshots_path, outdir) -> dict:
    """Decay fit against the configured prediction; writes report + shells."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    surface = build_surface(cfg)
    grid = build_run_grid(cfg, surface)
    snaps, n_theta, source_hash = artifacts.read_snapshots(snapshots_path, grid)
    fields = [(t, ModalField(grid, coeffs, n_theta)) for t, coeffs in snaps]

    trace = TipTrace.from_snapshots(fields)
    est = extract_tip_constant(fields[-1][1])
    window = build_fit_window(cfg)
    report = fit_deviation_exponent(fields[-1][1], est, window=window)
    prediction = build_prediction(cfg, surface)
    compare_with_prediction(report, prediction,
                            tol_pred=cfg.fit.tol_pred, tol_mode=cfg.fit.tol_mode)

    gamma, _, how = resolve_gamma(cfg, surface)
    doc = report.as_dict()
    doc.update({
        "gamma": gamma,
        "gamma_resolution": how,
        "q": cfg.analysis.q,
        "tip_rho0": surface.tip_rho0("north"),
        "tip_trace": [[t, c] for t, c in trace.samples],
        "fit_time": fields[-1][0],
        "source_manifest_hash": source_hash,
    })
    artifacts.write_json(outdir / "decay_report.json", doc,
                         manifest_hash=source_hash or config_hash(cfg))

    profile, amps = shell_deviation(fields[-1][1], est)
    mask, _, _ = window.mask(grid)
    artifacts.write_shells(
        outdir / "shells.csv", grid, profile,
        {k: amps[k] for k in range(amps.shape[0])},
        source_hash or config_hash(cfg), window_mask=mask,
    )
    return doc
