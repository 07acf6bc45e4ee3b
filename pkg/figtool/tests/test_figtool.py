"""Figure tool tests.

Synthetic fixtures are written in the artifact dialect by hand; the exact
power law x^2.5 makes its log-log slope 2.5 by construction, so the
report accompanying it carries that value.  Real-artifact tests consume
files produced by the simulation CLI via the session fixtures.
"""

import hashlib
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from figtool import (
    ArtifactError,
    FigureError,
    SpecError,
    load_spec,
    parse_spec,
    plot_decay,
    plot_sweep,
    read_shells,
    read_snapshots,
    render_figure,
)
from figtool.spec import _STYLE_DEFAULTS


def default_style(**overrides):
    style = dict(_STYLE_DEFAULTS)
    style.update(overrides)
    return style


def write_power_law_shells(path, alpha=2.5, coeff=0.7, n=60):
    x = np.geomspace(1e-4, 0.45, n)
    dev = coeff * x**alpha
    rows = ["# manifest_hash: fixture", "x,deviation,mode_0,in_window"]
    for xi, di in zip(x, dev):
        rows.append(f"{float(xi)!r},{float(di)!r},{float(di)!r},1")
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")
    return x, dev


def write_decay_report(path, **overrides):
    doc = {
        "c0": 0.07,
        "tip_spread": 0.0,
        "tip_diverged": False,
        "window": [1e-4, 0.45],
        "n_shells": 60,
        "alpha_dev": 2.5,
        "dev_stderr": 0.0,
        "dev_r_squared": 1.0,
        "mode_fits": {"0": {"exponent": 2.5, "stderr": 0.0, "r_squared": 1.0, "n_shells": 60}},
        "active_modes": [0],
        "inconclusive_reasons": [],
        "alpha_pred": 2.5,
        "oracle_exponents": {},
        "verdict": "PASS",
        "tip_rho0": 0.4,
        "manifest_hash": "fixture",
    }
    doc.update(overrides)
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2), encoding="utf-8")
    return doc


def write_sweep_report(path, rho0, exponent, verdict="PASS"):
    return write_decay_report(
        path,
        tip_rho0=rho0,
        alpha_dev=None,
        mode_fits={
            "0": {"exponent": 2.0, "stderr": 0.0, "r_squared": 1.0, "n_shells": 30},
            "1": {"exponent": exponent, "stderr": 0.0, "r_squared": 1.0, "n_shells": 30},
        },
        verdict=verdict,
        inconclusive_reasons=[] if verdict == "PASS" else ["synthetic reason"],
    )


def write_snapshots_fixture(path, n_theta=8, times=(0.0, 1.0)):
    """u(x, theta) = s(t) x^2 (1 + cos theta) with s = 1, 2 at the two times."""
    xs = [0.1, 0.2, 0.3, 0.4, 0.5]
    lines = ["# manifest_hash: fixture", f"# n_theta: {n_theta}", f"# N: {len(xs)}", "t,x,k,re,im"]
    for i, t in enumerate(times):
        scale = float(i + 1)
        for k in range(3):
            for x in xs:
                re = {0: n_theta * x * x, 1: n_theta / 2 * x * x, 2: 0.0}[k] * scale
                lines.append(f"{float(t)!r},{float(x)!r},{k},{float(re)!r},0.0")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return xs, times


def run_figtool(spec_path):
    return subprocess.run(
        [sys.executable, "-m", "figtool.cli", "--spec", str(spec_path)],
        capture_output=True,
        text=True,
    )


def sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ---------------------------------------------------------------- spec files


def test_spec_resolves_paths_relative_to_spec_file(tmp_path):
    write_power_law_shells(tmp_path / "shells.csv")
    write_decay_report(tmp_path / "report.json")
    spec_path = tmp_path / "fig.json"
    spec_path.write_text(json.dumps({
        "kind": "decay-loglog",
        "inputs": {"report": "report.json", "shells": "shells.csv"},
        "output": "out/decay.svg",
    }))
    spec = load_spec(spec_path)
    assert spec.kind == "decay-loglog"
    assert spec.inputs["report"] == (tmp_path / "report.json").resolve()
    assert spec.output == (tmp_path / "out" / "decay.svg").resolve()
    assert spec.style["dpi"] == 150 and spec.style["mode"] == 1


def test_spec_rejects_unknown_keys_with_dotted_paths(tmp_path):
    write_power_law_shells(tmp_path / "shells.csv")
    write_decay_report(tmp_path / "report.json")
    base = {
        "kind": "decay-loglog",
        "inputs": {"report": "report.json", "shells": "shells.csv"},
        "output": "a.svg",
    }
    with pytest.raises(SpecError, match="kinds: unknown key"):
        parse_spec({**base, "kinds": "x"}, base_dir=tmp_path)
    with pytest.raises(SpecError, match="inputs.shellz: unknown key"):
        parse_spec({**base, "inputs": {"report": "report.json", "shellz": "s"}},
                   base_dir=tmp_path)
    with pytest.raises(SpecError, match="style.color: unknown key"):
        parse_spec({**base, "style": {"color": "red"}}, base_dir=tmp_path)


def test_spec_validates_kind_output_and_inputs(tmp_path):
    write_decay_report(tmp_path / "report.json")
    write_power_law_shells(tmp_path / "shells.csv")
    good = {
        "kind": "decay-loglog",
        "inputs": {"report": "report.json", "shells": "shells.csv"},
        "output": "a.svg",
    }
    with pytest.raises(SpecError, match="kind: 'scatter' is not one of"):
        parse_spec({**good, "kind": "scatter"}, base_dir=tmp_path)
    with pytest.raises(SpecError, match="cannot infer format"):
        parse_spec({**good, "output": "a.pdf"}, base_dir=tmp_path)
    with pytest.raises(SpecError, match="inputs.shells: missing key"):
        parse_spec({**good, "inputs": {"report": "report.json"}}, base_dir=tmp_path)
    with pytest.raises(SpecError, match="does not exist"):
        parse_spec({**good, "inputs": {"report": "report.json", "shells": "nope.csv"}},
                   base_dir=tmp_path)
    with pytest.raises(SpecError, match="inputs.reports: expected a list"):
        parse_spec({"kind": "sweep", "inputs": {"reports": "report.json"},
                    "output": "a.svg"}, base_dir=tmp_path)


# ------------------------------------------------------------ artifact reads


def test_read_shells_roundtrip(tmp_path):
    x, dev = write_power_law_shells(tmp_path / "shells.csv")
    shells = read_shells(tmp_path / "shells.csv")
    np.testing.assert_array_equal(shells["x"], x)
    np.testing.assert_array_equal(shells["deviation"], dev)
    assert set(shells["modes"]) == {0}
    assert shells["in_window"].all()
    assert shells["manifest_hash"] == "fixture"


def test_read_shells_empty_names_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("# manifest_hash: x\nx,deviation,in_window\n")
    with pytest.raises(ArtifactError, match="empty.csv"):
        read_shells(path)
    with pytest.raises(ArtifactError, match="no data rows"):
        read_shells(path)


def test_read_snapshots_reconstruction(tmp_path):
    xs, times = write_snapshots_fixture(tmp_path / "snaps.csv")
    snapshots, x, n_theta = read_snapshots(tmp_path / "snaps.csv")
    assert n_theta == 8
    assert [t for t, _ in snapshots] == list(times)
    np.testing.assert_array_equal(x, xs)
    t1, coeffs = snapshots[1]
    field = np.fft.irfft(coeffs, n=n_theta, axis=0)
    # u = 2 x^2 (1 + cos theta): max over theta at theta = 0
    np.testing.assert_allclose(field[0], 2 * np.array(xs) ** 2 * 2, rtol=1e-12)
    assert field.min() >= -1e-12


def test_read_csv_malformed(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2,3\n")
    with pytest.raises(ArtifactError, match="row has 3 cells"):
        read_shells(path)
    path.write_text("# only: comments\n")
    with pytest.raises(ArtifactError, match="no header row"):
        read_shells(path)


# ------------------------------------------------------------- decay figures


def test_decay_synthetic_power_law_annotation(tmp_path):
    write_power_law_shells(tmp_path / "shells.csv", alpha=2.5)
    write_decay_report(tmp_path / "report.json", alpha_dev=2.5, alpha_pred=2.5)
    info = plot_decay(tmp_path / "report.json", tmp_path / "shells.csv",
                      tmp_path / "decay.svg", default_style())
    assert info["slope_diff"] < 0.05
    assert info["verdict"] == "PASS" and not info["banner"]
    svg = (tmp_path / "decay.svg").read_text(encoding="utf-8")
    for needle in ("alpha_fit = 2.5", "alpha_pred = 2.5", "slope diff = 0",
                   "verdict: PASS", "predicted slope 2.5"):
        assert needle in svg, needle


def test_decay_svg_byte_identical_across_cli_invocations(tmp_path):
    write_power_law_shells(tmp_path / "shells.csv")
    write_decay_report(tmp_path / "report.json")
    spec_path = tmp_path / "fig.json"
    spec_path.write_text(json.dumps({
        "kind": "decay-loglog",
        "inputs": {"report": "report.json", "shells": "shells.csv"},
        "output": "decay.svg",
    }))
    first = run_figtool(spec_path)
    assert first.returncode == 0, first.stderr
    digest_first = sha256(tmp_path / "decay.svg")
    second = run_figtool(spec_path)
    assert second.returncode == 0, second.stderr
    assert sha256(tmp_path / "decay.svg") == digest_first


def test_decay_inconclusive_renders_warning_banner(tmp_path):
    write_power_law_shells(tmp_path / "shells.csv")
    write_decay_report(tmp_path / "report.json", verdict="INCONCLUSIVE",
                       inconclusive_reasons=["too few shells (3 < 8)"])
    info = plot_decay(tmp_path / "report.json", tmp_path / "shells.csv",
                      tmp_path / "decay.svg", default_style())
    assert info["banner"]
    svg = (tmp_path / "decay.svg").read_text(encoding="utf-8")
    assert "WARNING: inconclusive fit: too few shells (3 &lt; 8)" in svg


def test_decay_report_missing_fields(tmp_path):
    write_power_law_shells(tmp_path / "shells.csv")
    doc = write_decay_report(tmp_path / "report.json")
    doc.pop("alpha_dev")
    (tmp_path / "report.json").write_text(json.dumps(doc))
    with pytest.raises(FigureError, match="missing field 'alpha_dev'"):
        plot_decay(tmp_path / "report.json", tmp_path / "shells.csv",
                   tmp_path / "decay.svg", default_style())


def test_decay_empty_shells_cli_error_names_file(tmp_path):
    write_decay_report(tmp_path / "report.json")
    (tmp_path / "shells.csv").write_text("# manifest_hash: x\nx,deviation\n")
    spec_path = tmp_path / "fig.json"
    spec_path.write_text(json.dumps({
        "kind": "decay-loglog",
        "inputs": {"report": "report.json", "shells": "shells.csv"},
        "output": "decay.svg",
    }))
    result = run_figtool(spec_path)
    assert result.returncode == 2
    assert "shells.csv" in result.stderr and "no data rows" in result.stderr


def test_decay_png_output(tmp_path):
    write_power_law_shells(tmp_path / "shells.csv")
    write_decay_report(tmp_path / "report.json")
    info = plot_decay(tmp_path / "report.json", tmp_path / "shells.csv",
                      tmp_path / "decay.png", default_style(dpi=72))
    out = Path(info["output"])
    assert out.suffix == ".png" and out.stat().st_size > 0


# ------------------------------------------------------------- sweep figures


def test_sweep_collapses_duplicates_and_marks_inconclusive(tmp_path):
    paths = [tmp_path / name for name in ("a.json", "b.json", "c.json", "d.json")]
    write_sweep_report(paths[0], 0.4, 2.50)
    write_sweep_report(paths[1], 0.4, 2.52)
    write_sweep_report(paths[2], 0.6, 1.67, verdict="INCONCLUSIVE")
    write_sweep_report(paths[3], 0.8, 1.25)
    info = plot_sweep(paths, tmp_path / "sweep.svg", default_style())
    assert [p["rho0"] for p in info["points"]] == [0.4, 0.6, 0.8]
    assert info["points"][0]["n_reports"] == 2
    assert info["points"][0]["alpha"] == pytest.approx(2.51)
    assert [p["hollow"] for p in info["points"]] == [False, True, False]
    assert info["notes"] and "collapsed to one point" in info["notes"][0]
    svg = (tmp_path / "sweep.svg").read_text(encoding="utf-8")
    assert "2 reports share rho0 = 0.4" in svg
    assert "indicial oracle 1/rho0" in svg
    assert "inconclusive fit" in svg


def test_sweep_requires_two_distinct_reports(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    write_sweep_report(a, 0.4, 2.50)
    write_sweep_report(b, 0.4, 2.52)
    with pytest.raises(FigureError, match="at least 2 reports, got 1"):
        plot_sweep([a], tmp_path / "s.svg", default_style())
    with pytest.raises(FigureError, match="at least 2 distinct cone slopes"):
        plot_sweep([a, b], tmp_path / "s.svg", default_style())


def test_sweep_report_without_requested_mode(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    write_sweep_report(a, 0.4, 2.50)
    write_decay_report(b, tip_rho0=0.8)  # only a mode-0 fit
    with pytest.raises(FigureError, match="has no mode-1 fit"):
        plot_sweep([a, b], tmp_path / "s.svg", default_style())


# ------------------------------------------------------------------ heatmaps


def test_heatmap_time_selection_and_range(tmp_path):
    write_snapshots_fixture(tmp_path / "snaps.csv")
    spec = parse_spec({
        "kind": "heatmap",
        "inputs": {"snapshots": "snaps.csv"},
        "output": "heat.svg",
    }, base_dir=tmp_path)
    info = render_figure(spec)
    assert info["time"] == 1.0 and info["shape"] == [8, 5]
    assert info["max"] == pytest.approx(2 * 0.5**2 * 2, rel=1e-12)
    early = parse_spec({
        "kind": "heatmap",
        "inputs": {"snapshots": "snaps.csv"},
        "output": "heat0.png",
        "style": {"time": 0.0},
    }, base_dir=tmp_path)
    info = render_figure(early)
    assert info["time"] == 0.0
    assert info["max"] == pytest.approx(0.5**2 * 2, rel=1e-12)


# ------------------------------------------------- isolation from the solver


def test_figtool_never_imports_the_solver_package():
    import figtool.artifacts  # noqa: F401
    import figtool.cli  # noqa: F401
    import figtool.figures  # noqa: F401
    import figtool.spec  # noqa: F401

    assert not any(m == "conelab" or m.startswith("conelab.") for m in sys.modules)


# ------------------------------------------- acceptance: figure determinism


def test_acceptance_decay_figure_from_solver_artifacts(decay_artifacts, tmp_path):
    report = decay_artifacts / "decay_report.json"
    shells = decay_artifacts / "shells.csv"
    spec_path = tmp_path / "fig.json"
    spec_path.write_text(json.dumps({
        "kind": "decay-loglog",
        "inputs": {"report": str(report), "shells": str(shells)},
        "output": "decay.svg",
    }))
    first = run_figtool(spec_path)
    assert first.returncode == 0, first.stderr
    digest = sha256(tmp_path / "decay.svg")
    second = run_figtool(spec_path)
    assert second.returncode == 0, second.stderr
    assert sha256(tmp_path / "decay.svg") == digest

    svg = (tmp_path / "decay.svg").read_text(encoding="utf-8")
    assert "predicted slope 2" in svg
    assert "verdict: PASS" in svg
    print(f"[PASS] decay-loglog SVG byte-identical across two invocations ({digest[:12]})")


def test_acceptance_sweep_three_point_monotone_curve(sweep_artifacts, tmp_path):
    reports = [out / "decay_report.json" for out in sweep_artifacts]
    info = plot_sweep(reports, tmp_path / "sweep.svg", default_style())
    points = info["points"]
    assert len(points) == 3
    alphas = [p["alpha"] for p in points]
    assert all(a > b for a, b in zip(alphas, alphas[1:])), alphas
    assert not any(p["hollow"] for p in points)
    for p in points:
        assert p["alpha"] == pytest.approx(1.0 / p["rho0"], abs=0.05)
    assert (tmp_path / "sweep.svg").stat().st_size > 0
    print(f"[PASS] sweep renders 3-point monotone curve: {[round(a, 4) for a in alphas]}")
