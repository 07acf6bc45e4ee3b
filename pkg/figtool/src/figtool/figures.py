"""Figure rendering.

Three kinds are supported, all reading artifact files only:

  decay-loglog   log-log scatter of shell deviations with the fitted slope
                 and the predicted-slope guide line, annotated with both
                 exponents and the verdict
  sweep          fitted mode exponent versus cone angle across several
                 decay reports, with the indicial oracle curve overlaid
  heatmap        physical (x, theta) field reconstructed from one modal
                 snapshot

Output is deterministic: a fixed spec and fixed inputs give byte-identical
SVG across runs (fixed hash salt, text kept as text, no timestamp
metadata).  Figures are drawn on standalone Figure objects so no global
pyplot state leaks between renders.
"""

import math
from pathlib import Path

import matplotlib as mpl
import numpy as np
from matplotlib.figure import Figure

from .artifacts import read_json, read_shells, read_snapshots

__all__ = ["FigureError", "plot_decay", "plot_heatmap", "plot_sweep", "render_figure"]

INCONCLUSIVE = "INCONCLUSIVE"

_RC = {
    "svg.hashsalt": "figtool",
    "svg.fonttype": "none",
    "font.family": "DejaVu Sans",
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
}


class FigureError(ValueError):
    """Inputs that cannot be rendered into the requested figure."""


def _fmt(value):
    return "n/a" if value is None else f"{value:.4g}"


def _save(fig, output, dpi):
    output = Path(output)
    output.parent.mkdir(parents=True, exist_ok=True)
    if output.suffix.lower() == ".svg":
        fig.savefig(output, format="svg", metadata={"Date": None})
    else:
        fig.savefig(output, format="png", dpi=dpi, metadata={"Software": None})
    return output


def _require_fields(report, path, fields):
    for name in fields:
        if name not in report:
            raise FigureError(f"report {path} is missing field {name!r}")


def _banner(fig, message):
    fig.text(
        0.5,
        0.975,
        message,
        ha="center",
        va="top",
        color="white",
        fontsize=9,
        bbox={"facecolor": "#b22222", "edgecolor": "none", "boxstyle": "round,pad=0.35"},
    )


def plot_decay(report_path, shells_path, output, style):
    """Log-log deviation scatter with fitted and predicted slope lines."""
    report = read_json(report_path)
    _require_fields(report, report_path, ("alpha_dev", "dev_r_squared"))
    shells = read_shells(shells_path)

    x = shells["x"]
    dev = shells["deviation"]
    positive = dev > 0
    if not positive.any():
        raise FigureError(f"shells file {shells_path} has no positive deviations to plot")
    in_window = shells["in_window"] if shells["in_window"] is not None else positive
    fit_pts = positive & in_window

    alpha_dev = report["alpha_dev"]
    alpha_pred = report.get("alpha_pred")
    verdict = report.get("verdict") or ""
    r_squared = report["dev_r_squared"]
    slope_diff = None
    if alpha_dev is not None and alpha_pred is not None:
        slope_diff = abs(alpha_dev - alpha_pred)

    with mpl.rc_context(_RC):
        fig = Figure(figsize=style["figsize"])
        ax = fig.add_subplot(111)
        ax.loglog(
            x[positive & ~in_window],
            dev[positive & ~in_window],
            ".",
            color="0.75",
            markersize=3,
            label="outside fit window",
        )
        ax.loglog(
            x[fit_pts],
            dev[fit_pts],
            "o",
            color="C0",
            markersize=4,
            label="shell deviations",
        )

        # Slope lines are anchored through the fitted points; the slopes
        # themselves come from the report, never from a refit here.
        anchor = fit_pts if fit_pts.any() else positive
        window = report.get("window") or [x[anchor].min(), x[anchor].max()]
        xs = np.geomspace(window[0], window[1], 50)
        if alpha_dev is not None:
            b = np.mean(np.log(dev[anchor]) - alpha_dev * np.log(x[anchor]))
            ax.loglog(
                xs,
                np.exp(b) * xs**alpha_dev,
                "-",
                color="C1",
                linewidth=1.6,
                label=f"fit slope {_fmt(alpha_dev)}",
            )
        if alpha_pred is not None:
            b = np.mean(np.log(dev[anchor]) - alpha_pred * np.log(x[anchor]))
            ax.loglog(
                xs,
                1.8 * np.exp(b) * xs**alpha_pred,
                "--",
                color="0.3",
                linewidth=1.3,
                label=f"predicted slope {_fmt(alpha_pred)}",
            )

        lines = [
            f"alpha_fit = {_fmt(alpha_dev)}",
            f"alpha_pred = {_fmt(alpha_pred)}",
            f"slope diff = {_fmt(slope_diff)}",
            f"r^2 = {_fmt(r_squared)}",
            f"verdict: {verdict or 'n/a'}",
        ]
        ax.text(
            0.03,
            0.97,
            "\n".join(lines),
            transform=ax.transAxes,
            va="top",
            ha="left",
            fontsize=9,
            bbox={"facecolor": "white", "edgecolor": "0.5", "boxstyle": "round,pad=0.4"},
        )
        ax.set_xlabel("distance to tip x")
        ax.set_ylabel("deviation from tip constant")
        ax.set_title(style["title"] or "near-tip decay")
        ax.legend(loc="lower right", fontsize=8)

        banner = verdict == INCONCLUSIVE
        if banner:
            reasons = "; ".join(report.get("inconclusive_reasons") or [])
            msg = "WARNING: inconclusive fit"
            if reasons:
                msg = f"{msg}: {reasons}"
            fig.subplots_adjust(top=0.86)
            _banner(fig, msg)
        out = _save(fig, output, style["dpi"])

    return {
        "output": str(out),
        "kind": "decay-loglog",
        "alpha_dev": alpha_dev,
        "alpha_pred": alpha_pred,
        "slope_diff": slope_diff,
        "verdict": verdict,
        "n_points": int(positive.sum()),
        "banner": banner,
    }


def plot_sweep(report_paths, output, style):
    """Fitted mode exponent versus cone angle 2*pi*rho0 with the oracle curve."""
    report_paths = [Path(p) for p in report_paths]
    if len(report_paths) < 2:
        raise FigureError(f"sweep needs at least 2 reports, got {len(report_paths)}")
    mode = style["mode"]

    loaded = []
    for path in report_paths:
        report = read_json(path)
        _require_fields(report, path, ("tip_rho0", "mode_fits"))
        fit = (report.get("mode_fits") or {}).get(str(mode))
        if not fit or fit.get("exponent") is None:
            raise FigureError(f"report {path} has no mode-{mode} fit")
        loaded.append((float(report["tip_rho0"]), float(fit["exponent"]),
                       report.get("verdict") == INCONCLUSIVE))

    groups = {}
    for rho0, exponent, hollow in loaded:
        groups.setdefault(round(rho0, 12), []).append((exponent, hollow))
    notes = []
    points = []
    for rho0 in sorted(groups):
        members = groups[rho0]
        exponent = float(np.mean([m[0] for m in members]))
        hollow = any(m[1] for m in members)
        if len(members) > 1:
            notes.append(f"{len(members)} reports share rho0 = {rho0:g}; collapsed to one point")
        points.append({
            "rho0": rho0,
            "angle": 2.0 * math.pi * rho0,
            "alpha": exponent,
            "hollow": hollow,
            "n_reports": len(members),
        })
    if len(points) < 2:
        raise FigureError(
            f"sweep needs at least 2 distinct cone slopes, got {len(points)}"
        )

    with mpl.rc_context(_RC):
        fig = Figure(figsize=style["figsize"])
        ax = fig.add_subplot(111)
        rho_dense = np.linspace(0.9 * points[0]["rho0"], 1.1 * points[-1]["rho0"], 200)
        ax.plot(
            2.0 * math.pi * rho_dense,
            mode / rho_dense,
            "--",
            color="0.4",
            linewidth=1.3,
            label=f"indicial oracle {mode}/rho0",
        )
        solid = [p for p in points if not p["hollow"]]
        hollow = [p for p in points if p["hollow"]]
        ax.plot(
            [p["angle"] for p in solid],
            [p["alpha"] for p in solid],
            "o",
            color="C0",
            markersize=7,
            label="fitted exponent",
        )
        if hollow:
            ax.plot(
                [p["angle"] for p in hollow],
                [p["alpha"] for p in hollow],
                "o",
                markerfacecolor="none",
                markeredgecolor="C0",
                markersize=7,
                label="inconclusive fit",
            )
        ax.plot(
            [p["angle"] for p in points],
            [p["alpha"] for p in points],
            "-",
            color="C0",
            linewidth=0.8,
            alpha=0.5,
        )
        ax.set_xlabel("cone angle 2*pi*rho0")
        ax.set_ylabel(f"mode-{mode} decay exponent")
        ax.set_title(style["title"] or "decay exponent versus cone angle")
        ax.legend(loc="upper right", fontsize=8)
        for i, note in enumerate(notes):
            fig.text(0.02, 0.02 + 0.035 * i, f"note: {note}", fontsize=8, color="0.3")
        out = _save(fig, output, style["dpi"])

    return {
        "output": str(out),
        "kind": "sweep",
        "mode": mode,
        "points": points,
        "notes": notes,
    }


def plot_heatmap(snapshots_path, output, style):
    """Physical (x, theta) field from one stored modal snapshot."""
    snapshots, x, n_theta = read_snapshots(snapshots_path)
    times = np.array([t for t, _ in snapshots])
    requested = style["time"]
    idx = len(snapshots) - 1 if requested is None else int(np.argmin(np.abs(times - requested)))
    t, coeffs = snapshots[idx]
    field = np.fft.irfft(coeffs, n=n_theta, axis=0)
    theta = 2.0 * math.pi * np.arange(n_theta) / n_theta

    with mpl.rc_context(_RC):
        fig = Figure(figsize=style["figsize"])
        ax = fig.add_subplot(111)
        mesh = ax.pcolormesh(x, theta, field, shading="nearest", cmap=style["cmap"])
        fig.colorbar(mesh, ax=ax, label="u")
        ax.set_xlabel("distance to tip x")
        ax.set_ylabel("angle theta")
        ax.set_title(style["title"] or f"field at t = {t:g}")
        out = _save(fig, output, style["dpi"])

    return {
        "output": str(out),
        "kind": "heatmap",
        "time": t,
        "requested_time": requested,
        "shape": [int(n_theta), int(x.size)],
        "min": float(field.min()),
        "max": float(field.max()),
    }


def render_figure(spec):
    """Render a parsed FigureSpec; returns a summary of what was drawn."""
    if spec.kind == "decay-loglog":
        return plot_decay(spec.inputs["report"], spec.inputs["shells"], spec.output, spec.style)
    if spec.kind == "sweep":
        return plot_sweep(spec.inputs["reports"], spec.output, spec.style)
    return plot_heatmap(spec.inputs["snapshots"], spec.output, spec.style)
