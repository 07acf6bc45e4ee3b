"""Warped-cone collars and closed surfaces of revolution in geodesic polar coordinates.

A surface is described near a pole/tip by the metric

    g = dx^2 + x^2 rho(x)^2 dtheta^2,      x in [0, r),  theta in [0, 2pi),

where x is geodesic distance from the tip and rho is the warp factor.  The
cross section at radius x is a circle of circumference 2*pi*x*rho(x); the tip
is a genuine cone point of opening angle 2*pi*rho(0) whenever rho(0) < 1 and a
smooth pole when rho(0) = 1 with rho'(0) = 0.

Two metric-derived quantities feed the radial mode operators downstream:

    H(x) = x * rho'(x) / rho(x)        (from x d/dx det h / (2 det h), det h = rho^2)
    R(x) = x * rho(x)                  (circumferential radius)

Closed surfaces of revolution carry one warp profile per pole; the meridian
coordinate runs over [0, L] with R(x) = x*rho_N(x) near the north cap and
R(x) = (L-x)*rho_S(L-x) near the south cap.

The circle cross section at the tip has Laplacian eigenvalues -k^2/rho(0)^2
(k in Z, each k != 0 twice); higher-dimensional cross sections are supported
only through externally supplied spectra.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline

__all__ = [
    "GeometryError",
    "DomainError",
    "DegenerateMetricError",
    "SpectrumError",
    "UnsupportedDimensionError",
    "WarpProfile",
    "build_profile",
    "constant_cone",
    "round_sphere",
    "spheroid",
    "teardrop",
    "tabulated",
    "eval_metric_coeffs",
    "cone_angle",
    "SurfaceOfRevolution",
    "collar_surface",
    "closed_surface",
    "sphere_surface",
    "spheroid_surface",
    "CrossSectionSpectrum",
    "cross_section_spectrum",
]


class GeometryError(ValueError):
    """Invalid geometric data."""


class DomainError(GeometryError):
    """Coordinate outside the profile's collar."""


class DegenerateMetricError(GeometryError):
    """Warp factor vanishes or goes negative inside the collar."""


class SpectrumError(GeometryError):
    """Cross-section spectrum violates the sign/ordering convention."""


class UnsupportedDimensionError(SpectrumError):
    """Analytic spectra exist only for n = 1; higher n needs a table."""


def _onesided_derivative(xs, ys):
    """Derivative at xs[0] of the cubic through the first four samples."""
    xs = np.asarray(xs, dtype=float)[:4]
    ys = np.asarray(ys, dtype=float)[:4]
    t = xs - xs[0]
    # rows of the Vandermonde system d/dt sum c_j t^j at t=0 -> c_1
    V = np.vander(t, 4, increasing=True)
    c = np.linalg.solve(V, ys)
    return float(c[1])


def _smoothstep5(u):
    """C^2 monotone blend: s(0)=0, s(1)=1, s'(0)=s'(1)=0, s''(0)=s''(1)=0."""
    u = np.clip(u, 0.0, 1.0)
    return u**3 * (10.0 - 15.0 * u + 6.0 * u**2)


def _smoothstep5_d(u):
    inside = (u > 0.0) & (u < 1.0)
    u = np.clip(u, 0.0, 1.0)
    return np.where(inside, 30.0 * u**2 * (1.0 - u) ** 2, 0.0)


@dataclass(frozen=True)
class WarpProfile:
    """Radial warp factor rho(x) of the metric dx^2 + x^2 rho(x)^2 dtheta^2.

    `fn` and `dfn` evaluate rho and drho/dx on [0, collar_length]; both must
    be vectorized over numpy arrays and finite at x = 0.
    """

    kind: str
    collar_length: float
    params: dict = field(default_factory=dict)
    fn: object = None
    dfn: object = None

    def __post_init__(self):
        if not (self.collar_length > 0.0):
            raise GeometryError("collar_length must be positive")
        rho0 = float(self.fn(np.asarray(0.0)))
        if not np.isfinite(rho0) or rho0 <= 0.0:
            raise DegenerateMetricError(f"rho(0) = {rho0} is not positive")
        # metric non-degeneracy across the collar
        xs = np.linspace(0.0, self.collar_length, 257)
        vals = self.rho(xs)
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0.0):
            raise DegenerateMetricError("rho(x) <= 0 somewhere on the collar")

    def _check_domain(self, x):
        x = np.asarray(x, dtype=float)
        tol = 1e-12 * self.collar_length
        if np.any(x < -tol) or np.any(x > self.collar_length + tol):
            raise DomainError(
                f"x outside [0, {self.collar_length}] for kind={self.kind}"
            )
        return np.clip(x, 0.0, self.collar_length)

    def rho(self, x):
        x = self._check_domain(x)
        return np.asarray(self.fn(x), dtype=float)

    def drho(self, x):
        x = self._check_domain(x)
        return np.asarray(self.dfn(x), dtype=float)

    @property
    def rho0(self) -> float:
        return float(self.fn(np.asarray(0.0)))

    @property
    def outer_radius(self) -> float:
        """Circumferential radius r*rho(r) at the collar's outer rim."""
        r = self.collar_length
        return r * float(self.fn(np.asarray(r)))


def constant_cone(rho0: float, collar_length: float = 1.0) -> WarpProfile:
    if not (rho0 > 0.0):
        raise GeometryError("constant-cone needs rho0 > 0")
    r0 = float(rho0)
    return WarpProfile(
        kind="constant-cone",
        collar_length=collar_length,
        params={"rho0": r0},
        fn=lambda x: np.full_like(np.asarray(x, dtype=float), r0),
        dfn=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
    )


def round_sphere(R: float, collar_length: float | None = None) -> WarpProfile:
    """rho(x) = R sin(x/R) / x, extended by rho(0) = 1 (smooth pole)."""
    if not (R > 0.0):
        raise GeometryError("round-sphere needs R > 0")
    R = float(R)
    if collar_length is None:
        collar_length = np.pi * R / 2.0

    def fn(x):
        u = np.asarray(x, dtype=float) / R
        return np.sinc(u / np.pi)

    def dfn(x):
        x = np.asarray(x, dtype=float)
        u = x / R
        small = np.abs(u) < 1e-4
        u_safe = np.where(small, 1.0, u)
        direct = (u_safe * np.cos(u_safe) - np.sin(u_safe)) / u_safe**2
        series = -u / 3.0 + u**3 / 30.0
        return np.where(small, series, direct) / R

    return WarpProfile(
        kind="round-sphere",
        collar_length=float(collar_length),
        params={"R": R},
        fn=fn,
        dfn=dfn,
    )


def teardrop(beta: float, collar_length: float = 1.0) -> WarpProfile:
    """Cone tip of angle 2*pi*beta blended smoothly into rho = 1 at the rim."""
    if not (0.0 < beta < 1.0):
        raise GeometryError("teardrop needs 0 < beta < 1")
    beta = float(beta)
    r = float(collar_length)
    return WarpProfile(
        kind="teardrop",
        collar_length=r,
        params={"beta": beta},
        fn=lambda x: beta + (1.0 - beta) * _smoothstep5(np.asarray(x, dtype=float) / r),
        dfn=lambda x: (1.0 - beta) / r * _smoothstep5_d(np.asarray(x, dtype=float) / r),
    )


def tabulated(xs, rhos, collar_length: float | None = None) -> WarpProfile:
    """Cubic-spline profile through (xs, rhos) with clamped end derivatives.

    End slopes come from one-sided 4-point estimates so that rho'(0) is
    preserved to discretization order rather than the natural-spline zero.
    """
    xs = np.asarray(xs, dtype=float)
    rhos = np.asarray(rhos, dtype=float)
    if xs.ndim != 1 or xs.size < 4 or xs.shape != rhos.shape:
        raise GeometryError("tabulated profile needs >= 4 matching samples")
    if xs[0] != 0.0 or np.any(np.diff(xs) <= 0.0):
        raise GeometryError("sample abscissae must strictly increase from 0")
    if np.any(rhos <= 0.0):
        raise DegenerateMetricError("tabulated rho samples must be positive")
    d0 = _onesided_derivative(xs, rhos)
    d1 = _onesided_derivative(xs[::-1], rhos[::-1])
    spline = CubicSpline(xs, rhos, bc_type=((1, d0), (1, d1)))
    dspline = spline.derivative()
    if collar_length is None:
        collar_length = float(xs[-1])
    return WarpProfile(
        kind="tabulated",
        collar_length=float(collar_length),
        params={"n_samples": int(xs.size)},
        fn=lambda x: spline(np.clip(x, xs[0], xs[-1])),
        dfn=lambda x: dspline(np.clip(x, xs[0], xs[-1])),
    )


def spheroid(a: float, c: float) -> WarpProfile:
    """Pole profile of the spheroid x^2/a^2 + y^2/a^2 + z^2/c^2 = 1.

    The meridian is parameterized by colatitude, converted to arc length by
    quadrature, and the resulting rho(s) = a sin(phi(s))/s is splined.  The
    collar reaches the equator.
    """
    if not (a > 0.0 and c > 0.0):
        raise GeometryError("spheroid needs positive semi-axes")
    a, c = float(a), float(c)
    phi = np.linspace(0.0, np.pi / 2.0, 4001)
    ds = np.sqrt((a * np.cos(phi)) ** 2 + (c * np.sin(phi)) ** 2)
    s = cumulative_trapezoid(ds, phi, initial=0.0)
    rho_vals = np.empty_like(s)
    rho_vals[0] = 1.0
    rho_vals[1:] = a * np.sin(phi[1:]) / s[1:]
    prof = tabulated(s, rho_vals)
    return WarpProfile(
        kind="spheroid",
        collar_length=prof.collar_length,
        params={"a": a, "c": c, "quarter_meridian": float(s[-1])},
        fn=prof.fn,
        dfn=prof.dfn,
    )


_BUILDERS = {
    "constant-cone": lambda p: constant_cone(
        p["rho0"], p.get("collar_length", 1.0)
    ),
    "round-sphere": lambda p: round_sphere(p["R"], p.get("collar_length")),
    "teardrop": lambda p: teardrop(p["beta"], p.get("collar_length", 1.0)),
    "tabulated": lambda p: tabulated(
        p["xs"], p["rhos"], p.get("collar_length")
    ),
    "spheroid": lambda p: spheroid(p["a"], p["c"]),
}


def build_profile(kind: str, **parameters) -> WarpProfile:
    if kind not in _BUILDERS:
        raise GeometryError(
            f"unknown profile kind {kind!r}; expected one of {sorted(_BUILDERS)}"
        )
    try:
        return _BUILDERS[kind](parameters)
    except KeyError as e:
        raise GeometryError(f"missing parameter {e} for kind {kind!r}") from e


def eval_metric_coeffs(profile: WarpProfile, x):
    """Return (rho(x), H(x)) with H = x rho'(x)/rho(x).

    H is the n = 1 specialization of x d/dx det(h) / (2 det h) entering the
    cone Laplacian's first-order term; H(0) = 0 by the limit.
    """
    x = np.asarray(x, dtype=float)
    rho = profile.rho(x)
    if np.any(rho <= 0.0):
        raise DegenerateMetricError("rho(x) <= 0 at evaluation point")
    H = x * profile.drho(x) / rho
    return rho, H


def cone_angle(profile: WarpProfile) -> float:
    """Opening angle 2*pi*rho(0) of the tip (2*pi at a smooth pole)."""
    return 2.0 * np.pi * profile.rho0


@dataclass(frozen=True)
class SurfaceOfRevolution:
    """A collar with outer boundary, or a closed surface with two caps.

    For collar topology the meridian coordinate covers [0, r] and the outer
    rim at x = r carries exactly one declared boundary condition.  For closed
    topology it covers [0, L] with a warp profile at each cap; the two collar
    descriptions must agree at the equator x = L/2.
    """

    topology: str  # "collar-with-outer-boundary" | "closed"
    north: WarpProfile
    south: WarpProfile | None
    length: float
    outer_bc: str | None  # "dirichlet" | "neumann" for collar topology

    def __post_init__(self):
        if self.topology == "collar-with-outer-boundary":
            if self.outer_bc not in ("dirichlet", "neumann"):
                raise GeometryError(
                    "collar topology needs outer_bc dirichlet or neumann"
                )
            if self.length > self.north.collar_length * (1 + 1e-12):
                raise GeometryError("collar length exceeds profile collar")
        elif self.topology == "closed":
            if self.south is None:
                raise GeometryError("closed topology needs a south profile")
            if self.outer_bc is not None:
                raise GeometryError("closed topology carries no outer BC")
            half = self.length / 2.0
            if (
                self.north.collar_length < half * (1 - 1e-12)
                or self.south.collar_length < half * (1 - 1e-12)
            ):
                raise GeometryError("cap collars must reach the equator")
            rn = half * self.north.rho(min(half, self.north.collar_length))
            rs = half * self.south.rho(min(half, self.south.collar_length))
            if abs(rn - rs) > 1e-8 * max(abs(rn), abs(rs)):
                raise GeometryError(
                    f"cap radii disagree at the equator: {rn} vs {rs}"
                )
        else:
            raise GeometryError(f"unknown topology {self.topology!r}")

    @property
    def closed(self) -> bool:
        return self.topology == "closed"

    def radius(self, x):
        """Circumferential radius R(x) > 0 in the interior."""
        x = np.asarray(x, dtype=float)
        if self.closed:
            half = self.length / 2.0
            xs = np.minimum(x, half)
            xn = np.minimum(self.length - x, half)
            north_side = x <= half
            out = np.where(
                north_side,
                xs * self.north.rho(xs),
                xn * self.south.rho(xn),
            )
            return out
        return x * self.north.rho(x)

    def dradius(self, x):
        """dR/dx, using the cap-local profile on each half."""
        x = np.asarray(x, dtype=float)
        if self.closed:
            half = self.length / 2.0
            xs = np.minimum(x, half)
            xn = np.minimum(self.length - x, half)
            north_side = x <= half
            dn = self.north.rho(xs) + xs * self.north.drho(xs)
            dsouth = -(self.south.rho(xn) + xn * self.south.drho(xn))
            return np.where(north_side, dn, dsouth)
        return self.north.rho(x) + x * self.north.drho(x)

    def tip_rho0(self, side: str = "north") -> float:
        prof = self.north if side == "north" else self.south
        if prof is None:
            raise GeometryError(f"surface has no {side} cap profile")
        return prof.rho0


def collar_surface(profile: WarpProfile, outer_bc: str = "dirichlet") -> SurfaceOfRevolution:
    return SurfaceOfRevolution(
        topology="collar-with-outer-boundary",
        north=profile,
        south=None,
        length=profile.collar_length,
        outer_bc=outer_bc,
    )


def closed_surface(north: WarpProfile, south: WarpProfile, length: float) -> SurfaceOfRevolution:
    return SurfaceOfRevolution(
        topology="closed", north=north, south=south, length=float(length), outer_bc=None
    )


def sphere_surface(R: float) -> SurfaceOfRevolution:
    prof = round_sphere(R, collar_length=np.pi * R)
    return closed_surface(prof, prof, np.pi * R)


def spheroid_surface(a: float, c: float) -> SurfaceOfRevolution:
    prof = spheroid(a, c)
    return closed_surface(prof, prof, 2.0 * prof.params["quarter_meridian"])


@dataclass(frozen=True)
class CrossSectionSpectrum:
    """Spectrum of the cross-section Laplacian at the tip, non-positive convention.

    eigenvalues are sorted descending with lambda_0 = 0 first; labels carry the
    circle mode index k for n = 1 (signed, so k != 0 appears twice).
    """

    n: int
    eigenvalues: tuple
    labels: tuple

    def __post_init__(self):
        ev = self.eigenvalues
        if len(ev) == 0 or ev[0] != 0.0:
            raise SpectrumError("spectrum must start with lambda_0 = 0")
        if len(ev) != len(self.labels):
            raise SpectrumError("labels must match eigenvalues")
        if any(e > 0.0 for e in ev):
            raise SpectrumError("eigenvalues must be non-positive")
        if list(ev) != sorted(ev, reverse=True):
            raise SpectrumError("eigenvalues must be sorted descending")
        if len(ev) > 1 and ev[1] == 0.0:
            raise SpectrumError("lambda_0 = 0 must be simple (connected cross section)")

    @property
    def lambda1(self) -> float:
        """Greatest non-zero eigenvalue, or 0.0 if only constants are present."""
        return self.eigenvalues[1] if len(self.eigenvalues) > 1 else 0.0

    def distinct(self):
        """Yield (eigenvalue, multiplicity, labels) grouped by eigenvalue."""
        out = []
        for lam, lab in zip(self.eigenvalues, self.labels):
            if out and out[-1][0] == lam:
                out[-1] = (lam, out[-1][1] + 1, out[-1][2] + (lab,))
            else:
                out.append((lam, 1, (lab,)))
        return out

    @classmethod
    def from_table(cls, n: int, eigenvalues, labels=None):
        ev = tuple(float(e) for e in eigenvalues)
        if labels is None:
            labels = tuple(range(len(ev)))
        return cls(n=int(n), eigenvalues=ev, labels=tuple(labels))


def cross_section_spectrum(profile: WarpProfile, n: int = 1, k_max: int = 8) -> CrossSectionSpectrum:
    """Analytic circle spectrum -k^2/rho(0)^2 for n = 1; tables cover n > 1."""
    if n != 1:
        raise UnsupportedDimensionError(
            "analytic cross-section spectra exist only for n = 1; "
            "supply CrossSectionSpectrum.from_table for higher n"
        )
    if k_max < 0:
        raise SpectrumError("k_max must be >= 0")
    rho0 = profile.rho0
    evs = [0.0]
    labels = [0]
    for k in range(1, k_max + 1):
        lam = -(k / rho0) ** 2
        evs.extend([lam, lam])
        labels.extend([k, -k])
    return CrossSectionSpectrum(n=1, eigenvalues=tuple(evs), labels=tuple(labels))
