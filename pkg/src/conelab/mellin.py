"""Tip-symbol analysis for the cone Laplacian and bi-Laplacian.

Freezing the one-parameter family of warped metrics at the tip turns the
Laplacian into a Fuchs-type operator whose Mellin conormal symbol on the mode
with cross-section eigenvalue lam_i is the quadratic

    sigma(z) = z^2 - (n-1) z + lam_i,

with roots (n-1)/2 +- sqrt(((n-1)/2)^2 - lam_i).  These roots are the poles
of the inverted symbol family: they decide which radial powers x^{-rho} can
appear near the tip and which Mellin weights gamma give invertible
realizations.  The bi-Laplacian's symbol factors as sigma(z) * sigma(z+2), so
its asymptotics template is the zero set of that product intersected with the
weight strip

    Re(rho) in [ (n+1)/2 - gamma - 4, (n+1)/2 - gamma - 2 ),

together with the constant functions that the chosen extension adjoins.
Zeros of order two contribute an extra log factor; higher order cannot occur
for this operator and is rejected loudly.

Admissible weight windows come in two flavors:

  * "elliptic"  - gamma in ((n-3)/2, gamma_max): the window in which the
                  shifted realization admits the bounded-inverse calculus.
  * "evolution" - gamma in ((n-3)/2 + 2/q, gamma_max): the tighter window
                  needed when driving the flow with L^q-in-time data.

where gamma_max = min{-1 + sqrt(((n-1)/2)^2 - lambda_1), (n+1)/2} and
lambda_1 is the greatest non-zero cross-section eigenvalue.  The predicted
near-tip deviation bound is |u - c0(t)| <= C x^{alpha_pred} with

    alpha_pred = gamma - (n-3)/2 - delta,   delta = 2/q + eps if q <= 2 else 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import CrossSectionSpectrum, SpectrumError

__all__ = [
    "MellinError",
    "WindowError",
    "TemplateError",
    "PoleGroup",
    "PoleReport",
    "WeightWindow",
    "TemplateTerm",
    "AsymptoticsTemplate",
    "DecayPrediction",
    "laplacian_poles",
    "admissible_weights",
    "curvature_condition",
    "bilaplacian_asymptotics",
    "predicted_deviation_exponent",
    "circle_indicial_exponent",
]

MERGE_TOL = 1e-9  # roots closer than this are treated as coincident


class MellinError(ValueError):
    """Invalid input to the symbol analysis."""


class WindowError(MellinError):
    """Weight gamma violates a window precondition."""


class TemplateError(MellinError):
    """Asymptotics template outside the supported log-power range."""


def _symbol_roots(n: int, lam: float):
    """Roots of z^2 - (n-1) z + lam as complex numbers."""
    half = (n - 1) / 2.0
    disc = half * half - lam
    if disc >= 0.0:
        s = math.sqrt(disc)
        return complex(half + s), complex(half - s)
    s = math.sqrt(-disc)
    return complex(half, s), complex(half, -s)


def _merge_roots(roots, tol=MERGE_TOL):
    """Collapse near-coincident roots into (value, order) pairs."""
    merged: list[list] = []
    for r in roots:
        for slot in merged:
            if abs(r - slot[0]) <= tol:
                slot[1] += 1
                break
        else:
            merged.append([r, 1])
    return [(v, m) for v, m in merged]


@dataclass(frozen=True)
class PoleGroup:
    index: int  # position in the distinct-eigenvalue list
    eigenvalue: float
    labels: tuple
    poles: tuple  # complex positions
    multiplicities: tuple


@dataclass(frozen=True)
class PoleReport:
    n: int
    groups: tuple

    def all_poles(self):
        return [
            (p, m, g.eigenvalue)
            for g in self.groups
            for p, m in zip(g.poles, g.multiplicities)
        ]


def laplacian_poles(spec: CrossSectionSpectrum) -> PoleReport:
    """Conormal-symbol pole set (n-1)/2 +- sqrt(((n-1)/2)^2 - lam_i) per mode."""
    groups = []
    for i, (lam, _mult, labels) in enumerate(spec.distinct()):
        merged = _merge_roots(_symbol_roots(spec.n, lam))
        merged.sort(key=lambda vm: (-vm[0].real, vm[0].imag))
        groups.append(
            PoleGroup(
                index=i,
                eigenvalue=lam,
                labels=labels,
                poles=tuple(v for v, _ in merged),
                multiplicities=tuple(m for _, m in merged),
            )
        )
    return PoleReport(n=spec.n, groups=tuple(groups))


@dataclass(frozen=True)
class WeightWindow:
    gamma_min: float
    gamma_max: float
    q_ok: bool
    p_ok: bool | None
    n: int
    p: float | None
    q: float | None
    lambda1: float
    path: str

    @property
    def nonempty(self) -> bool:
        return self.gamma_min < self.gamma_max

    def contains(self, gamma: float) -> bool:
        return self.gamma_min < gamma < self.gamma_max


def _gamma_max(n: int, lambda1: float) -> float:
    half = (n - 1) / 2.0
    if lambda1 == 0.0:
        # no non-zero cross-section mode constrains the strip
        return (n + 1) / 2.0
    return min(-1.0 + math.sqrt(half * half - lambda1), (n + 1) / 2.0)


def admissible_weights(
    n: int,
    p: float | None,
    q: float | None,
    lambda1: float,
    path: str = "evolution",
) -> WeightWindow:
    """Admissible Mellin weight window; emptiness is reported, not raised."""
    if lambda1 >= 0.0:
        raise SpectrumError("lambda_1 must be negative (non-positive convention)")
    if path not in ("elliptic", "evolution"):
        raise MellinError(f"unknown window path {path!r}")
    if path == "evolution":
        if q is None or not (1.0 < q < math.inf):
            raise MellinError("evolution path needs q in (1, inf)")
        gamma_min = (n - 3) / 2.0 + 2.0 / q
    else:
        gamma_min = (n - 3) / 2.0
    gamma_max = _gamma_max(n, lambda1)
    q_ok = bool(q is not None and 2.0 / q < gamma_max - (n - 3) / 2.0)
    p_ok = None
    if p is not None and q is not None:
        if not (1.0 < p < math.inf):
            raise MellinError("p must lie in (1, inf)")
        p_ok = bool(2.0 / q + (n + 1) / p < 2.0)
    return WeightWindow(
        gamma_min=gamma_min,
        gamma_max=gamma_max,
        q_ok=q_ok,
        p_ok=p_ok,
        n=n,
        p=p,
        q=q,
        lambda1=lambda1,
        path=path,
    )


def curvature_condition(n: int, lambda1: float) -> bool:
    """Large-curvature hypothesis -lambda_1 >= 2(n+1) for the decay bound.

    For n = 1 circle cross sections this is rho_0 <= 1/2 (equality included).
    """
    if lambda1 >= 0.0:
        raise SpectrumError("lambda_1 must be negative")
    return -lambda1 >= 2.0 * (n + 1)


@dataclass(frozen=True)
class TemplateTerm:
    rho: float  # strip position; the radial factor is x^{-rho} log^k x
    log_power: int
    eigenvalue: float  # originating cross-section mode
    labels: tuple
    zero_order: int

    @property
    def power(self) -> float:
        """Exponent of x in the asymptotics term."""
        return -self.rho


@dataclass(frozen=True)
class AsymptoticsTemplate:
    n: int
    gamma: float
    strip: tuple  # [lo, hi)
    terms: tuple
    includes_constant: bool = True

    def terms_for_label(self, label):
        return [t for t in self.terms if label in t.labels]


def _log_flag(order: int) -> int:
    if order >= 3:
        raise TemplateError(
            f"factored symbol has a zero of order {order}; only log powers"
            " 0 and 1 are representable in the asymptotics template"
        )
    return 1 if order >= 2 else 0


def bilaplacian_asymptotics(
    spec: CrossSectionSpectrum, gamma: float
) -> AsymptoticsTemplate:
    """Near-tip asymptotics template of the bi-Laplacian's chosen extension.

    Enumerates zeros of sigma(z) * sigma(z+2) mode by mode, keeps those whose
    real part lies in the weight strip, and assigns log flags by zero order.
    The constant-function marker is always present.
    """
    n = spec.n
    lo = (n + 1) / 2.0 - gamma - 4.0
    hi = (n + 1) / 2.0 - gamma - 2.0
    gmin = (n - 3) / 2.0
    gmax = _gamma_max(n, spec.lambda1)
    if not (gmin < gamma < gmax):
        raise WindowError(
            f"gamma = {gamma} outside the elliptic window ({gmin}, {gmax})"
        )
    terms = []
    for lam, _mult, labels in spec.distinct():
        r1 = _symbol_roots(n, lam)
        r2 = tuple(r - 2.0 for r in _symbol_roots(n, lam))
        for root, order in _merge_roots(list(r1) + list(r2)):
            if lo <= root.real < hi:
                terms.append(
                    TemplateTerm(
                        rho=root.real if abs(root.imag) <= MERGE_TOL else root,
                        log_power=_log_flag(order),
                        eigenvalue=lam,
                        labels=labels,
                        zero_order=order,
                    )
                )
    terms.sort(key=lambda t: -t.rho.real if isinstance(t.rho, complex) else -t.rho)
    return AsymptoticsTemplate(
        n=n, gamma=gamma, strip=(lo, hi), terms=tuple(terms), includes_constant=True
    )


@dataclass(frozen=True)
class DecayPrediction:
    alpha_pred: float
    delta: float
    gamma: float
    q: float
    eps: float
    n: int
    active_modes: tuple
    mode_exponents: dict = field(default_factory=dict)
    sharper_alpha: float | None = None
    curvature_ok: bool | None = None


def predicted_deviation_exponent(
    template: AsymptoticsTemplate,
    gamma: float,
    q: float,
    eps: float = 0.05,
    active_modes=None,
    curvature_ok: bool | None = None,
) -> DecayPrediction:
    """Predicted lower bound alpha_pred on the near-tip deviation exponent.

    Also reports, per active mode, the smallest positive template exponent --
    the sharper oracle the measured decay fit is compared against.  eps only
    enters for q <= 2 and should be small against the window slack.
    """
    if eps <= 0.0:
        raise MellinError("eps must be positive")
    n = template.n
    delta = (2.0 / q + eps) if q <= 2.0 else 0.0
    alpha_pred = gamma - (n - 3) / 2.0 - delta
    all_labels = sorted({lab for t in template.terms for lab in t.labels})
    if active_modes is None:
        active_modes = all_labels
    mode_exponents = {}
    for label in active_modes:
        powers = [
            t.power
            for t in template.terms_for_label(label)
            if not isinstance(t.rho, complex) and t.power > 0.0
        ]
        if powers:
            mode_exponents[label] = min(powers)
    sharper = min(mode_exponents.values()) if mode_exponents else None
    return DecayPrediction(
        alpha_pred=alpha_pred,
        delta=delta,
        gamma=gamma,
        q=q,
        eps=eps,
        n=n,
        active_modes=tuple(active_modes),
        mode_exponents=mode_exponents,
        sharper_alpha=sharper,
        curvature_ok=curvature_ok,
    )


def circle_indicial_exponent(rho0: float, k: int) -> float:
    """Indicial exponent k/rho_0 of mode k at a circle tip of warp rho_0."""
    if rho0 <= 0.0:
        raise MellinError("rho0 must be positive")
    return abs(k) / rho0
