"""Command-line interface.

Subcommands:

  analyze    structural analysis of a configured geometry: symbol poles,
             admissible weight window, curvature condition, asymptotics
             template, and the predicted decay exponents (analysis.json)
  simulate   run the configured evolution; writes snapshots.csv,
             monitor.csv, optional norms.csv, and manifest.json
  fit        decay fit on a snapshot file against the configured
             prediction; writes decay_report.json and shells.csv
  mms        manufactured-solution convergence ladders on a closed
             surface; writes mms.json
  verify     run a verification suite; prints a machine-readable table
             and exits nonzero iff any criterion fails

Every subcommand takes --config PATH, --out DIR, and repeatable
--override KEY=VALUE (dotted keys into the config document).  Exit codes:
0 success (including EMPTY_WINDOW analyses and graceful halts), 1 failed
verification, 2 invalid config/suite/artifacts, 3 solver failure with
partial outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import artifacts
from .artifacts import ArtifactError
from .config import (
    ConfigError,
    analysis_report,
    apply_overrides,
    config_hash,
    parse_config,
)
from .evolve import Nonlinearity, SolverConfig, manufactured_zonal_sphere_case, mms_run
from .pipeline import PipelineError, fit_run, simulate_run
from .verification import SuiteError, load_suite, run_suite, scenario_path

__all__ = ["main"]


def _load(args):
    path = Path(args.config)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such config file")
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})")
    if args.override:
        doc = apply_overrides(doc, args.override)
    return parse_config(doc)


def _outdir(args, cfg) -> Path:
    out = Path(args.out) if args.out else Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_analyze(args) -> int:
    cfg = _load(args)
    report = analysis_report(cfg)
    out = _outdir(args, cfg)
    artifacts.write_json(out / "analysis.json", report,
                         manifest_hash=config_hash(cfg))
    line = f"status={report['status']} lambda1={report['lambda1']:.6g}"
    if "gamma" in report:
        line += (f" gamma={report['gamma']:.6g} ({report['gamma_resolution']})"
                 f" alpha_pred={report['prediction']['alpha_pred']:.6g}")
    print(line)
    print(f"wrote {out / 'analysis.json'}")
    return 0


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = _outdir(args, cfg)
    try:
        manifest = simulate_run(cfg, out)
    except PipelineError as e:
        print(f"solver failure: {e}; partial outputs in {out}", file=sys.stderr)
        return 3
    line = f"status={manifest['status']} steps={manifest['steps']}"
    if manifest.get("halt_reason"):
        line += f" reason={manifest['halt_reason']!r}"
    line += f" K={manifest['final_K']:.6g} wall={manifest['wall_time']:.2f}s"
    print(line)
    print(f"wrote {out / 'manifest.json'}")
    return 0


def cmd_fit(args) -> int:
    cfg = _load(args)
    out = _outdir(args, cfg)
    snapshots = Path(args.snapshots) if args.snapshots else out / "snapshots.csv"
    if not snapshots.exists():
        raise ArtifactError(f"{snapshots}: no such snapshot file")
    report = fit_run(cfg, snapshots, out)
    alpha = report["alpha_dev"]
    alpha_txt = "n/a" if alpha is None else f"{alpha:.4f}"
    print(f"verdict={report['verdict']} alpha_dev={alpha_txt}"
          f" alpha_pred={report['alpha_pred']:.4f} c0={report['c0']:.6g}")
    for k, fit in sorted(report["mode_fits"].items()):
        oracle = report["oracle_exponents"].get(k)
        oracle_txt = "" if oracle is None else f" (oracle {oracle:.4f})"
        print(f"  mode {k}: exponent {fit['exponent']:.4f}{oracle_txt}")
    for reason in report["inconclusive_reasons"]:
        print(f"  inconclusive: {reason}")
    print(f"wrote {out / 'decay_report.json'}")
    return 0


def cmd_mms(args) -> int:
    cfg = _load(args)
    if cfg.dynamics is None:
        raise ConfigError("mms needs a dynamics block for the time ladder")
    surface_cfg = cfg.geometry
    if surface_cfg.topology != "closed":
        raise ConfigError("mms runs on a closed surface; set geometry.topology")
    from .config import build_surface

    surface = build_surface(cfg)
    case = manufactured_zonal_sphere_case()
    nl = Nonlinearity.cubic_swift_hohenberg()
    solver = SolverConfig(scheme=cfg.dynamics.scheme, dt=cfg.dynamics.dt,
                          horizon=cfg.dynamics.horizon,
                          monitor_q=cfg.dynamics.monitor_q)
    Ns = tuple(int(v) for v in args.ns.split(","))
    dts = tuple(float(v) for v in args.dts.split(","))
    out_data = mms_run(surface, case, nl, solver, Ns=Ns, dts=dts,
                       x_min_policy=cfg.discretization.x_min,
                       spatial_dt=args.spatial_dt)
    out = _outdir(args, cfg)
    doc = {
        "Ns": list(Ns),
        "dts": list(dts),
        "spatial_rows": [list(r) for r in out_data["spatial_rows"]],
        "spatial_order": out_data["spatial_order"],
        "temporal_diffs": list(out_data["temporal_diffs"]),
        "temporal_order": out_data["temporal_order"],
        "mode_leakage": out_data["mode_leakage"],
    }
    artifacts.write_json(out / "mms.json", doc, manifest_hash=config_hash(cfg))
    print(f"spatial_order={doc['spatial_order']:.3f}"
          f" temporal_order={doc['temporal_order']:.3f}"
          f" mode_leakage={doc['mode_leakage']:.3e}")
    print(f"wrote {out / 'mms.json'}")
    return 0


def cmd_verify(args) -> int:
    suite = Path(args.config) if args.config else scenario_path("acceptance_suite.json")
    entries = load_suite(suite)
    base_dir = suite.parent

    columns = ("criterion", "label", "status", "runtime_s", "detail")
    print(",".join(columns))

    def progress(result):
        print(",".join(artifacts.format_value(v).replace(",", ";")
                       for v in result.as_row()), flush=True)

    results = run_suite(entries, base_dir=base_dir, progress=progress)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        rows = [tuple(artifacts.format_value(v).replace(",", ";")
                      for v in r.as_row()) for r in results]
        artifacts.write_csv(out / "verify.csv", columns, rows,
                            (f"suite: {suite.name}",))
        artifacts.write_json(out / "verify.json", {
            "suite": suite.name,
            "results": [
                {"criterion": r.cid, "label": r.label, "status": r.status,
                 "runtime_s": r.runtime, "detail": r.detail}
                for r in results
            ],
            "all_passed": all(r.passed for r in results),
        })
    failed = [r.cid for r in results if not r.passed]
    if failed:
        print(f"FAILED criteria: {failed}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conelab",
        description="Swift-Hohenberg dynamics and tip-asymptotics laboratory"
                    " on surfaces of revolution",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="path to the run configuration JSON")
        p.add_argument("--out", help="output directory (default: from config)")
        p.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE",
                       help="dotted-path config override, repeatable")

    p = sub.add_parser("analyze", help="pole/window/template analysis")
    common(p)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("simulate", help="run the configured evolution")
    common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("fit", help="decay fit on simulation snapshots")
    common(p)
    p.add_argument("--snapshots", help="snapshot CSV (default: OUT/snapshots.csv)")
    p.set_defaults(fn=cmd_fit)

    p = sub.add_parser("mms", help="manufactured-solution convergence ladders")
    common(p)
    p.add_argument("--ns", default="64,128,256",
                   help="comma-separated grid sizes for the spatial ladder")
    p.add_argument("--dts", default="0.004,0.002,0.001",
                   help="comma-separated steps for the temporal ladder")
    p.add_argument("--spatial-dt", type=float, default=None,
                   help="fixed step for the spatial ladder (default: min dts)")
    p.set_defaults(fn=cmd_mms)

    p = sub.add_parser("verify", help="run a verification suite")
    common(p, config_required=False)
    p.set_defaults(fn=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, SuiteError, ArtifactError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
