"""Near-tip decay-rate extraction and verdicts.

Post-processing over field snapshots: extrapolate the tip value c0(t) of the
axisymmetric mode, fit log-log slopes of the deviation |u - c0| and of each
circumferential-mode amplitude over a radial shell window, and compare the
fitted exponents against the tip-symbol predictions (the aggregate lower
bound alpha_pred and the per-mode template exponents).

The fit window excludes the innermost nodes (weak-closure pollution) and
stays well inside the collar so the cutoff transition never enters.  A fit
with fewer than ``min_shells`` usable shells, R^2 below 0.98, a divergent
tip extrapolation, or a deviation at round-off level yields INCONCLUSIVE
rather than a pass/fail claim.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy.stats import linregress

from .fields import ModalField
from .mellin import DecayPrediction

__all__ = [
    "PASS",
    "FAIL",
    "INCONCLUSIVE",
    "TipEstimate",
    "TipTrace",
    "FitWindow",
    "ModeFit",
    "DecayFitReport",
    "extract_tip_constant",
    "shell_deviation",
    "fit_deviation_exponent",
    "compare_with_prediction",
    "sweep_ordering",
]

PASS = "PASS"
FAIL = "FAIL"
INCONCLUSIVE = "INCONCLUSIVE"

MIN_R_SQUARED = 0.98
DEVIATION_FLOOR = 1e-13


@dataclass(frozen=True)
class TipEstimate:
    """Extrapolated tip value of the axisymmetric mode."""

    c0: float
    spread: float  # disagreement between the two pair extrapolants
    diverged: bool


def extract_tip_constant(field: ModalField) -> TipEstimate:
    """Tip value by x^2-Richardson over the three innermost shells.

    Two pair extrapolants (shells 1-2 and 2-3) are formed; their spread
    flags a divergent extrapolation when it is large against the local
    field scale.  Constant fields are reproduced exactly.
    """
    x = field.grid.x
    u0 = field.coeffs[0].real / field.n_theta
    ext = []
    for i in (0, 1):
        a2, b2 = x[i] ** 2, x[i + 1] ** 2
        ext.append(u0[i] + (u0[i] - u0[i + 1]) * a2 / (b2 - a2))
    spread = abs(ext[0] - ext[1])
    scale = max(abs(u0[0]), abs(u0[1]), abs(u0[2]), 1e-300)
    # for a convergent x^2 model the pair extrapolants agree far better than
    # the samples vary shell to shell; comparable spread means no limit
    variation = max(abs(u0[0] - u0[1]), abs(u0[1] - u0[2]), 1e-300)
    bad = not (np.isfinite(ext[0]) and np.isfinite(ext[1])) or (
        spread > 0.5 * variation and spread > 1e-10 * scale
    )
    return TipEstimate(c0=float(ext[0]), spread=float(spread), diverged=bool(bad))


@dataclass(frozen=True)
class TipTrace:
    """c0(t) samples along a run, with the extrapolation health flags."""

    samples: tuple  # rows (t, c0)
    spreads: tuple
    diverged: bool

    @classmethod
    def from_snapshots(cls, snapshots) -> "TipTrace":
        rows, spreads, bad = [], [], False
        for t, f in snapshots:
            est = extract_tip_constant(f)
            rows.append((float(t), est.c0))
            spreads.append(est.spread)
            bad = bad or est.diverged
        return cls(samples=tuple(rows), spreads=tuple(spreads), diverged=bad)

    def drift_ok(self, f_max: float, factor: float = 10.0) -> bool:
        """Step-to-step continuity: |dc0| <= factor * dt * f_max."""
        for (t0, c0), (t1, c1) in zip(self.samples, self.samples[1:]):
            if abs(c1 - c0) > factor * (t1 - t0) * f_max:
                return False
        return True


@dataclass(frozen=True)
class FitWindow:
    """Radial shell window for the log-log fits.

    Explicit bounds win; otherwise the window runs from lo_mult * x_min up
    to hi_frac * (radial extent), always dropping skip_nodes innermost
    shells and staying below 0.45 * extent.
    """

    x_lo: float | None = None
    x_hi: float | None = None
    skip_nodes: int = 2
    lo_mult: float = 10.0
    hi_frac: float = 2e-3
    min_shells: int = 8

    def resolve(self, grid):
        lo = self.lo_mult * grid.x_min if self.x_lo is None else self.x_lo
        hi = self.hi_frac * grid.x_max if self.x_hi is None else self.x_hi
        hi = min(hi, 0.45 * grid.x_max)
        if not hi > lo:
            raise ValueError(f"empty fit window [{lo}, {hi}]")
        return lo, hi

    def mask(self, grid):
        lo, hi = self.resolve(grid)
        m = (grid.x >= lo) & (grid.x <= hi)
        m[: self.skip_nodes] = False
        return m, lo, hi


@dataclass(frozen=True)
class ModeFit:
    k: int
    exponent: float
    stderr: float
    r_squared: float
    n_shells: int


@dataclass
class DecayFitReport:
    c0: float
    tip_spread: float
    tip_diverged: bool
    window: tuple  # (x_lo, x_hi) actually used
    n_shells: int
    alpha_dev: float | None
    dev_stderr: float | None
    dev_r_squared: float | None
    mode_fits: dict  # k -> ModeFit, active modes only
    active_modes: tuple
    inconclusive_reasons: list
    alpha_pred: float | None = None
    oracle_exponents: dict = dataclass_field(default_factory=dict)
    verdict: str | None = None

    def as_dict(self) -> dict:
        return {
            "c0": self.c0,
            "tip_spread": self.tip_spread,
            "tip_diverged": self.tip_diverged,
            "window": list(self.window),
            "n_shells": self.n_shells,
            "alpha_dev": self.alpha_dev,
            "dev_stderr": self.dev_stderr,
            "dev_r_squared": self.dev_r_squared,
            "mode_fits": {
                str(k): {
                    "exponent": f.exponent,
                    "stderr": f.stderr,
                    "r_squared": f.r_squared,
                    "n_shells": f.n_shells,
                }
                for k, f in self.mode_fits.items()
            },
            "active_modes": list(self.active_modes),
            "inconclusive_reasons": list(self.inconclusive_reasons),
            "alpha_pred": self.alpha_pred,
            "oracle_exponents": {str(k): v for k, v in self.oracle_exponents.items()},
            "verdict": self.verdict,
        }


def _loglog_fit(x, y):
    res = linregress(np.log(x), np.log(y))
    return float(res.slope), float(res.stderr), float(res.rvalue**2)


def shell_deviation(field: ModalField, c0):
    """Per-node deviation data for export: (profile, amps).

    profile[j] = max over angle of |u - c0| at node j; amps[k, j] = modal
    amplitude with row 0 measured against c0, matching the fit's convention.
    """
    if isinstance(c0, TipEstimate):
        c0 = c0.c0
    c0 = float(c0)
    amps = np.abs(field.coeffs) / field.n_theta
    amps[0] = np.abs(field.coeffs[0] / field.n_theta - c0)
    co = field.coeffs.copy()
    co[0] = co[0] - c0 * field.n_theta
    dev = ModalField(field.grid, co, field.n_theta)
    profile = np.abs(dev.physical()).max(axis=0)
    return profile, amps


def fit_deviation_exponent(field: ModalField, c0, window: FitWindow | None = None) -> DecayFitReport:
    """Log-log slopes of |u - c0| and of the mode amplitudes over the window.

    c0 may be a TipEstimate (its divergence flag is carried over) or a bare
    number.  Modes count as active when their window amplitude clears 1e-9
    of the overall field scale; only those are fitted per mode.
    """
    window = window or FitWindow()
    g = field.grid
    tip_spread, tip_diverged = 0.0, False
    if isinstance(c0, TipEstimate):
        tip_spread, tip_diverged = c0.spread, c0.diverged
        c0 = c0.c0
    c0 = float(c0)

    mask, lo, hi = window.mask(g)
    xs = g.x[mask]
    reasons = []
    if tip_diverged:
        reasons.append("divergent tip extrapolation")
    if xs.size < window.min_shells:
        reasons.append(
            f"fit window [{lo:g}, {hi:g}] holds {xs.size} shells,"
            f" fewer than {window.min_shells}"
        )
        return DecayFitReport(
            c0=c0, tip_spread=tip_spread, tip_diverged=tip_diverged,
            window=(lo, hi), n_shells=int(xs.size),
            alpha_dev=None, dev_stderr=None, dev_r_squared=None,
            mode_fits={}, active_modes=(), inconclusive_reasons=reasons,
        )

    # mode amplitudes; row 0 measured as deviation from c0
    amps = np.abs(field.coeffs) / field.n_theta
    amps[0] = np.abs(field.coeffs[0] / field.n_theta - c0)
    win_amps = amps[:, mask]
    scale = max(float(win_amps.max()), abs(c0), 1e-300)

    co = field.coeffs.copy()
    co[0] = co[0] - c0 * field.n_theta
    dev = ModalField(g, co, field.n_theta)
    dev_profile = np.abs(dev.physical()).max(axis=0)[mask]

    alpha_dev = dev_stderr = dev_r2 = None
    if dev_profile.max() < DEVIATION_FLOOR * max(1.0, abs(c0)):
        reasons.append("deviation at round-off level (constant state)")
    else:
        pos = dev_profile > 0.0
        if pos.sum() < window.min_shells:
            reasons.append("fewer than min_shells nonzero deviation shells")
        else:
            alpha_dev, dev_stderr, dev_r2 = _loglog_fit(xs[pos], dev_profile[pos])

    active = [
        k for k in range(amps.shape[0]) if win_amps[k].max() >= 1e-9 * scale
    ]
    mode_fits = {}
    for k in active:
        pos = win_amps[k] > 0.0
        if pos.sum() < window.min_shells:
            continue
        exp_k, err_k, r2_k = _loglog_fit(xs[pos], win_amps[k][pos])
        mode_fits[k] = ModeFit(
            k=k, exponent=exp_k, stderr=err_k, r_squared=r2_k,
            n_shells=int(pos.sum()),
        )

    return DecayFitReport(
        c0=c0, tip_spread=tip_spread, tip_diverged=tip_diverged,
        window=(lo, hi), n_shells=int(xs.size),
        alpha_dev=alpha_dev, dev_stderr=dev_stderr, dev_r_squared=dev_r2,
        mode_fits=mode_fits, active_modes=tuple(active),
        inconclusive_reasons=reasons,
    )


def compare_with_prediction(
    report: DecayFitReport,
    prediction: DecayPrediction,
    tol_pred: float = 0.2,
    tol_mode: float = 0.2,
) -> str:
    """PASS / FAIL / INCONCLUSIVE against the tip-symbol prediction.

    The aggregate bound is one-sided (fitted decay must be at least
    alpha_pred - tol_pred); the per-mode template exponents are compared
    two-sided for every active mode the template covers.  Any health flag
    or an R^2 below 0.98 on a consulted fit makes the verdict INCONCLUSIVE.
    """
    report.alpha_pred = prediction.alpha_pred
    report.oracle_exponents = dict(prediction.mode_exponents)

    checked = [
        report.mode_fits[k]
        for k in report.active_modes
        if k in prediction.mode_exponents and k in report.mode_fits
    ]
    missing = [
        k for k in report.active_modes
        if k in prediction.mode_exponents and k not in report.mode_fits
    ]

    if report.inconclusive_reasons or report.alpha_dev is None or missing:
        report.verdict = INCONCLUSIVE
    elif report.dev_r_squared < MIN_R_SQUARED or any(
        f.r_squared < MIN_R_SQUARED for f in checked
    ):
        report.verdict = INCONCLUSIVE
    else:
        ok = report.alpha_dev >= prediction.alpha_pred - tol_pred
        for f in checked:
            ok = ok and abs(f.exponent - prediction.mode_exponents[f.k]) <= tol_mode
        report.verdict = PASS if ok else FAIL
    return report.verdict


def sweep_ordering(entries) -> str:
    """Geometry-effect check: mode-1 exponent strictly decreasing in rho0.

    entries: iterable of (rho0, alpha_1 or DecayFitReport).  INCONCLUSIVE
    when any exponent is unavailable, else PASS iff strictly decreasing.
    """
    rows = []
    for rho0, item in entries:
        if isinstance(item, DecayFitReport):
            f = item.mode_fits.get(1)
            if item.verdict == INCONCLUSIVE or f is None:
                return INCONCLUSIVE
            rows.append((float(rho0), f.exponent))
        else:
            if item is None:
                return INCONCLUSIVE
            rows.append((float(rho0), float(item)))
    rows.sort(key=lambda r: r[0])
    alphas = [a for _, a in rows]
    return PASS if all(a > b for a, b in zip(alphas, alphas[1:])) else FAIL
