"""Built-in verification criteria for the structural predictions.

Each criterion is a self-contained check with an independent oracle:

  1  symbol poles vs a polynomial root-finder (random draws)
  2  weight-window worked cases vs high-precision interval evaluation,
     plus randomized emptiness cross-checks
  3  curvature-condition boundary at rho0 = 1/2
  4  manufactured-solution convergence orders on the round sphere
  5  axisymmetric decay exponent on the rho0 = 0.4 cone (x^2 family)
  6  mode-1 decay sweep: fitted exponent vs k/rho0 across three cones,
     strictly decreasing; any inconclusive fit fails the criterion
  7  weighted pointwise bound: fitted constant finite and refinement-stable
  8  mode-operator spectral positivity and the (a/e)^a smoothing supremum
  9  continuation monitor: zero / constant / focusing forcing behaviors

run_criterion dispatches by id; run_suite drives a suite description as
used by the command-line `verify` subcommand and the acceptance tests.
Scenario names resolve against the packaged scenarios directory or the
suite file's own directory.
"""

from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import mpmath
import numpy as np

from .config import RunConfig, load_config
from .decayfit import INCONCLUSIVE, PASS, sweep_ordering
from .discretization import (
    assemble_mode_laplacian,
    build_grid,
    spectrum_diagnostics,
    tip_closure,
)
from .evolve import (
    HALT_GRACEFUL,
    Nonlinearity,
    SolverConfig,
    manufactured_zonal_sphere_case,
    mms_run,
    run_evolution,
)
from .fields import ModalField
from .geometry import (
    CrossSectionSpectrum,
    build_profile,
    collar_surface,
    cross_section_spectrum,
    sphere_surface,
)
from .mellin import admissible_weights, curvature_condition, laplacian_poles
from .norms import MellinNormConfig, mellin_norm, pointwise_bound_check
from .pipeline import fit_run, simulate_run

__all__ = [
    "CriterionResult",
    "SuiteError",
    "CRITERION_LABELS",
    "CRITERION_BUDGETS",
    "run_criterion",
    "load_suite",
    "run_suite",
    "scenario_path",
]

SEED = 20260814


class SuiteError(ValueError):
    """Malformed verification suite description."""


@dataclass
class CriterionResult:
    cid: int
    label: str
    passed: bool
    runtime: float
    detail: str
    budget: float | None = None

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def as_row(self):
        return (self.cid, self.label, self.status,
                round(self.runtime, 3), self.detail)


CRITERION_LABELS = {
    1: "symbol poles vs root-finder",
    2: "weight-window worked cases + randomized emptiness",
    3: "curvature-condition boundary",
    4: "manufactured-solution convergence orders",
    5: "axisymmetric cone decay exponent",
    6: "mode-1 decay sweep vs indicial oracle",
    7: "weighted pointwise bound stability",
    8: "spectral positivity and smoothing supremum",
    9: "continuation monitor behaviors",
}

# wall-clock budgets in seconds where the acceptance contract sets one
CRITERION_BUDGETS = {1: 1.0, 4: 120.0, 5: 180.0, 6: 600.0}


def scenario_path(name: str, base_dir=None) -> Path:
    """Resolve a scenario file name: explicit dir first, then packaged."""
    if base_dir is not None:
        candidate = Path(base_dir) / name
        if candidate.exists():
            return candidate
    packaged = resources.files("conelab") / "scenarios" / name
    with resources.as_file(packaged) as p:
        if p.exists():
            return Path(p)
    raise SuiteError(f"scenario file {name!r} not found")


def _scenario_config(entry_value, base_dir) -> RunConfig:
    return load_config(scenario_path(entry_value, base_dir))


# criterion 1


def check_symbol_poles(trials=50, tol=1e-10, seed=SEED):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 5))
        lam = float(rng.uniform(-50.0, -1e-6))
        spec = CrossSectionSpectrum.from_table(n, (0.0, lam))
        report = laplacian_poles(spec)
        for group in report.groups:
            # oracle: numpy root-finder on z^2 - (n-1) z + eigenvalue
            roots = np.sort_complex(np.roots([1.0, -(n - 1.0), group.eigenvalue]))
            got = np.sort_complex(np.array(
                [p for p, m in zip(group.poles, group.multiplicities)
                 for _ in range(m)], dtype=complex))
            if len(got) != len(roots):
                return False, f"pole count {len(got)} != root count {len(roots)}"
            worst = max(worst, float(np.abs(got - roots).max()))
    return worst <= tol, f"max |pole - root| = {worst:.3e} over {trials} draws"


# criterion 2


def _mp_window(n, q, lam1):
    gm = mpmath.mpf(n - 3) / 2 + mpmath.mpf(2) / mpmath.mpf(q)
    gx = min(-1 + mpmath.sqrt((mpmath.mpf(n - 1) / 2) ** 2 - mpmath.mpf(lam1)),
             mpmath.mpf(n + 1) / 2)
    return gm, gx


def check_weight_windows(trials=200, seed=SEED):
    mpmath.mp.dps = 50
    # worked case: n=1, q=4, lambda1=-9 -> exactly (-0.5, 1)
    win = admissible_weights(1, 8.0, 4.0, -9.0, path="evolution")
    if not (win.gamma_min == -0.5 and win.gamma_max == 1.0 and win.nonempty):
        return False, f"worked window ({win.gamma_min}, {win.gamma_max}) != (-0.5, 1)"
    # worked case: same inputs satisfy both exponent constraints
    if not (win.q_ok and win.p_ok):
        return False, f"constraint flags q_ok={win.q_ok} p_ok={win.p_ok}, expected true"
    # worked case: lambda1=-0.01 -> empty (gamma_max=-0.9 < gamma_min=-0.5)
    empty = admissible_weights(1, 8.0, 4.0, -0.01, path="evolution")
    gm, gx = _mp_window(1, 4, -0.01)
    if empty.nonempty or abs(empty.gamma_max - float(gx)) > 1e-12:
        return False, (f"empty-window case got ({empty.gamma_min}, {empty.gamma_max}),"
                       f" oracle gamma_max {float(gx)}")
    rng = np.random.default_rng(seed)
    for i in range(trials):
        n = int(rng.integers(1, 5))
        lam1 = float(rng.uniform(-50.0, -1e-3))
        q = float(rng.uniform(1.0 + 1e-6, 20.0))
        win = admissible_weights(n, 8.0, q, lam1, path="evolution")
        gm, gx = _mp_window(n, q, lam1)
        if win.nonempty != (gm < gx):
            return False, (f"draw {i}: emptiness mismatch for n={n}, q={q:.4f},"
                           f" lambda1={lam1:.4f}")
        if abs(win.gamma_min - float(gm)) > 1e-12 or abs(win.gamma_max - float(gx)) > 1e-12:
            return False, f"draw {i}: endpoint drift beyond 1e-12"
    return True, f"3 worked cases exact; {trials} randomized emptiness checks agree"


# criterion 3


def check_curvature_boundary():
    results = []
    for rho0, expected in ((0.5, True), (0.5 + 1e-6, False)):
        prof = build_profile("constant-cone", rho0=rho0)
        lam1 = cross_section_spectrum(prof, n=1, k_max=1).lambda1
        got = curvature_condition(1, lam1)
        results.append(got)
        if got != expected:
            return False, (f"rho0={rho0!r}: curvature condition {got},"
                           f" expected {expected} (lambda1={lam1})")
    return True, "rho0=0.5 -> true, rho0=0.5+1e-6 -> false"


# criterion 4


def check_mms_orders(scenario=None, base_dir=None):
    horizon = 0.24
    if scenario is not None:
        cfg = _scenario_config(scenario, base_dir)
        horizon = cfg.dynamics.horizon
    surface = sphere_surface(1.0)
    case = manufactured_zonal_sphere_case()
    nl = Nonlinearity.cubic_swift_hohenberg()
    solver = SolverConfig(scheme="imex-bdf2", dt=1e-3, horizon=horizon,
                          monitor_q=4.0)
    out = mms_run(surface, case, nl, solver,
                  Ns=(64, 128, 256, 512), dts=(4e-3, 2e-3, 1e-3),
                  x_min_policy=1e-5 * surface.length, spatial_dt=2e-4)
    sp, tp = out["spatial_order"], out["temporal_order"]
    ok = sp >= 3.7 and abs(tp - 2.0) <= 0.2
    return ok, f"spatial order {sp:.3f} (>= 3.7), temporal order {tp:.3f} (2 +- 0.2)"


# criteria 5 and 6


def _run_and_fit(cfg: RunConfig, workdir) -> dict:
    simulate_run(cfg, workdir)
    return fit_run(cfg, Path(workdir) / "snapshots.csv", workdir)


def check_axisymmetric_decay(scenario="example63_decay.json", base_dir=None,
                             workdir=None):
    cfg = _scenario_config(scenario, base_dir)
    with tempfile.TemporaryDirectory() as tmp:
        report = _run_and_fit(cfg, workdir or tmp)
    alpha = report["alpha_dev"]
    if alpha is None:
        return False, f"fit inconclusive: {report['inconclusive_reasons']}"
    ok = abs(alpha - 2.0) <= 0.15 and report["verdict"] == PASS
    return ok, (f"alpha_dev = {alpha:.4f} (2.0 +- 0.15), r^2 = "
                f"{report['dev_r_squared']:.5f}, verdict {report['verdict']}")


SWEEP_SCENARIOS = ("sweep_rho04.json", "sweep_rho06.json", "sweep_rho08.json")
SWEEP_BOUNDS = {0.4: (2.50, 0.20), 0.6: (5.0 / 3.0, 0.20), 0.8: (1.25, 0.15)}


def check_mode_sweep(scenarios=SWEEP_SCENARIOS, base_dir=None, workdir=None):
    entries = []
    details = []
    for name in scenarios:
        cfg = _scenario_config(name, base_dir)
        rho0 = cfg.geometry.parameters["rho0"]
        with tempfile.TemporaryDirectory() as tmp:
            target = Path(workdir) / Path(name).stem if workdir else tmp
            report = _run_and_fit(cfg, target)
        if report["verdict"] == INCONCLUSIVE:
            return False, (f"rho0={rho0}: INCONCLUSIVE"
                           f" ({report['inconclusive_reasons']})")
        fit1 = report["mode_fits"].get("1")
        if fit1 is None:
            return False, f"rho0={rho0}: no mode-1 fit"
        center, tol = SWEEP_BOUNDS[round(rho0, 2)]
        alpha1 = fit1["exponent"]
        if abs(alpha1 - center) > tol:
            return False, (f"rho0={rho0}: alpha_1 = {alpha1:.4f} outside"
                           f" {center:.3f} +- {tol}")
        entries.append((rho0, report))
        details.append(f"rho0={rho0}: alpha_1={alpha1:.4f} (oracle {1.0 / rho0:.4f})")
    verdict = sweep_ordering([(r, rep["mode_fits"]["1"]["exponent"])
                              for r, rep in entries])
    if verdict != PASS:
        return False, f"ordering verdict {verdict}; " + "; ".join(details)
    return True, "; ".join(details) + "; strictly decreasing"


# criterion 7


def check_pointwise_bound(trials=10, seed=SEED):
    surface = collar_surface(build_profile("constant-cone", rho0=0.5),
                             outer_bc="dirichlet")
    grid = build_grid(surface, 128, x_min_policy=1e-4)
    cfg = MellinNormConfig(s=1, gamma=0.3, p=4.0, n=1)
    rng = np.random.default_rng(seed)
    worst_drift = 0.0
    for i in range(trials):
        k = int(rng.integers(0, 3))
        center = float(rng.uniform(0.02, 0.3))
        width = float(rng.uniform(0.3, 0.8))
        amp = float(rng.uniform(0.5, 2.0))

        def field_fn(g, k=k, center=center, width=width, amp=amp):
            # smooth bump in log x, localized around the tip region
            vals = amp * np.exp(-((np.log(g.x / center)) / width) ** 2)
            return ModalField.single_mode(g, k, vals, n_theta=8)

        report = pointwise_bound_check(field_fn, grid, cfg)
        if not report.passed:
            return False, (f"draw {i}: L_fit={report.L_fit:.4g},"
                           f" refined {report.L_fit_refined:.4g},"
                           f" drift {report.drift_factor:.3f}")
        worst_drift = max(worst_drift, report.drift_factor)
    return True, (f"{trials} localized fields: L_fit finite,"
                  f" worst refinement drift {worst_drift:.3f} (< 2)")


# criterion 8


def check_spectral_diagnostics():
    surface = collar_surface(build_profile("constant-cone", rho0=0.5),
                             outer_bc="dirichlet")
    grid = build_grid(surface, 128)
    worst = math.inf
    for k in range(9):
        op = tip_closure(assemble_mode_laplacian(grid, k), extension="chosen")
        report = spectrum_diagnostics(op)
        worst = min(worst, report.composite_min)
        if report.composite_min < -1e-8:
            return False, (f"mode {k}: min (lambda+1)^2 ="
                           f" {report.composite_min:.3e} < -1e-8")
    op0 = tip_closure(assemble_mode_laplacian(grid, 0), extension="chosen")
    sup_err = 0.0
    for a in (0.25, 0.5, 0.75):
        report = spectrum_diagnostics(op0, a=a)
        expected = (a / math.e) ** a
        sup_err = max(sup_err, abs(report.smoothing_sup - expected))
        if abs(report.smoothing_sup - expected) > 1e-10:
            return False, (f"a={a}: smoothing sup {report.smoothing_sup!r}"
                           f" vs (a/e)^a = {expected!r}")
    return True, (f"modes 0..8: min composite eigenvalue {worst:.3e} >= -1e-8;"
                  f" smoothing sup error {sup_err:.2e} <= 1e-10")


# criterion 9


def check_monitor_behaviors(scenario="focusing_halt.json", base_dir=None):
    surface = collar_surface(build_profile("constant-cone", rho0=0.4),
                             outer_bc="dirichlet")
    grid = build_grid(surface, 128, x_min_policy=1e-4)
    u0 = ModalField.single_mode(grid, 0, np.full(grid.N, 0.4), n_theta=2)

    # zero forcing: K identically zero
    zero = run_evolution(grid, u0, Nonlinearity.from_coefficients((0.0,)),
                         SolverConfig(scheme="imex-bdf2", dt=1e-3, horizon=0.05,
                                      monitor_q=4.0))
    if not np.all(zero.monitor[:, 1] == 0.0):
        return False, f"zero forcing: max K = {zero.monitor[:, 1].max():.3e} != 0"

    # constant-norm forcing: K = beta T^{1/q} up to quadrature error
    q = 4.0
    beta_cfg = SolverConfig(scheme="imex-euler", dt=5e-4, horizon=0.5, monitor_q=q)
    const = run_evolution(
        grid,
        ModalField.single_mode(grid, 0, np.zeros(grid.N), n_theta=2),
        Nonlinearity.from_coefficients((0.7,)),
        beta_cfg,
    )
    beta = mellin_norm(ModalField.single_mode(grid, 0, np.full(grid.N, 0.7),
                                              n_theta=2), beta_cfg.monitor_norm)
    expected = beta * beta_cfg.horizon ** (1.0 / q)
    got = const.monitor[-1, 1]
    if abs(got - expected) > 1e-6 * expected:
        return False, (f"constant forcing: K = {got:.10g},"
                       f" closed form {expected:.10g}")

    # focusing nonlinearity: graceful halt before any non-finite value
    cfg = _scenario_config(scenario, base_dir)
    with tempfile.TemporaryDirectory() as tmp:
        manifest = simulate_run(cfg, tmp)
    if manifest["status"] != HALT_GRACEFUL:
        return False, f"focusing run status {manifest['status']} != {HALT_GRACEFUL}"
    if not math.isfinite(manifest["final_K"]):
        return False, "focusing run recorded a non-finite monitor value"
    return True, (f"zero forcing K == 0; constant forcing K matches beta T^(1/q)"
                  f" to {abs(got - expected) / expected:.2e};"
                  f" focusing run halted {manifest['halt_reason']!r} with"
                  f" finite K = {manifest['final_K']:.4g}")


_DISPATCH = {
    1: lambda entry, base: check_symbol_poles(),
    2: lambda entry, base: check_weight_windows(),
    3: lambda entry, base: check_curvature_boundary(),
    4: lambda entry, base: check_mms_orders(entry.get("scenario"), base),
    5: lambda entry, base: check_axisymmetric_decay(
        entry.get("scenario", "example63_decay.json"), base),
    6: lambda entry, base: check_mode_sweep(
        tuple(entry.get("scenarios", SWEEP_SCENARIOS)), base),
    7: lambda entry, base: check_pointwise_bound(),
    8: lambda entry, base: check_spectral_diagnostics(),
    9: lambda entry, base: check_monitor_behaviors(
        entry.get("scenario", "focusing_halt.json"), base),
}


def run_criterion(cid: int, entry=None, base_dir=None) -> CriterionResult:
    if cid not in _DISPATCH:
        raise SuiteError(f"unknown criterion id {cid!r}")
    entry = entry or {}
    t0 = time.perf_counter()
    try:
        passed, detail = _DISPATCH[cid](entry, base_dir)
    except SuiteError:
        raise  # malformed suite / missing scenario: surface as a diagnostic
    except Exception as e:  # a crashed check is a failed check, not a dead table
        passed, detail = False, f"criterion crashed: {type(e).__name__}: {e}"
    runtime = time.perf_counter() - t0
    budget = CRITERION_BUDGETS.get(cid)
    if budget is not None and runtime > budget:
        passed = False
        detail += f"; runtime {runtime:.1f}s exceeded budget {budget:.0f}s"
    return CriterionResult(cid=cid, label=CRITERION_LABELS[cid], passed=passed,
                           runtime=runtime, detail=detail, budget=budget)


def load_suite(path) -> list:
    """Validated suite entries from a suite JSON file."""
    import json

    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise SuiteError(f"{path}: invalid JSON ({e})") from e
    if not isinstance(doc, dict) or "criteria" not in doc:
        raise SuiteError(f"{path}: expected an object with a 'criteria' list")
    entries = doc["criteria"]
    if not isinstance(entries, list) or not entries:
        raise SuiteError(f"{path}: 'criteria' must be a nonempty list")
    out = []
    for i, entry in enumerate(entries):
        where = f"{path}: criteria[{i}]"
        if isinstance(entry, int):
            entry = {"id": entry}
        if not isinstance(entry, dict) or "id" not in entry:
            raise SuiteError(f"{where}: expected an id or an object with 'id'")
        cid = entry["id"]
        if not isinstance(cid, int) or cid not in _DISPATCH:
            raise SuiteError(f"{where}: unknown criterion id {cid!r}")
        for key in entry:
            if key not in {"id", "scenario", "scenarios"}:
                raise SuiteError(f"{where}: unknown key {key!r}")
        out.append(entry)
    return out


def run_suite(entries, base_dir=None, progress=None) -> list:
    results = []
    for entry in entries:
        result = run_criterion(entry["id"], entry, base_dir)
        results.append(result)
        if progress is not None:
            progress(result)
    return results
