"""Per-mode radial discretization on log-graded grids.

The mode-k reduction of the Laplacian on a surface of revolution with
circumferential radius R(x) is, in Sturm-Liouville form,

    Delta_k u = (1/m) d/dxi ( rt du/dxi ) - (k^2/R^2) u,
    m = R x_xi,   rt = R / x_xi,

where xi is the grid coordinate: xi = log x on a collar (so x = e^xi is
log-uniform toward the tip) and the logistic map x = L/(1+e^-xi) on a closed
surface (log-graded at both poles, blending to uniform-in-x at the equator).

The derivative pair (D: nodes -> flux points, and its summation-by-parts
adjoint) uses the 4th-order staggered interior stencil
(1, -27, 27, -1)/24h with boundary blocks derived so that

    K = D^T P_f diag(rt) D

is exactly symmetric positive semi-definite while every non-edge row of
W^-1 K remains a consistent discretization of -(1/m) d(rt d.)  (4th order in
the interior, 2nd order on the few edge-adjacent rows).  The flux grid holds
both domain endpoints plus all midpoints, with quadrature weights
(1/9, 7/8, 73/72, 1, ...)h; the node weights are (17/48, 59/48, 43/48,
49/48, 1, ...)h.  W = P_n m is then a quadrature for the surface measure
R dx, the inner product in which Delta_k is self-adjoint, so assembled
operators have exactly real spectra.

Tip closures are imposed weakly: the admissible indicial branch x^{mu_k},
mu_0 = 0 and mu_k = k/rho(0), enters the quadratic form as the boundary-flux
substitution x du/dx = mu_k u, a rank-one term mu_k R(x0)/x0 at the tip node.
For k = 0 this term vanishes and constants lie in the exact discrete kernel,
realizing the extension that adjoins constant functions; for k != 0 it
selects the branch decaying toward the tip.  The bi-Laplacian is never
formed: (Delta+1)^2 + beta is applied and inverted through the two banded
factors Delta + (1 -+ i sqrt(beta)), each carrying the same closures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eig_banded, solve_banded
from scipy.optimize import minimize_scalar
from scipy.special import roots_legendre

from .geometry import SurfaceOfRevolution, GeometryError, DegenerateMetricError

__all__ = [
    "DiscretizationError",
    "RadialGrid",
    "ModeOperator",
    "SpectrumReport",
    "build_grid",
    "assemble_mode_laplacian",
    "tip_closure",
    "spectrum_diagnostics",
]

HALF_BANDWIDTH = 3  # K couples nodes at most 3 apart

# staggered summation-by-parts blocks (boundary accuracy 2, interior 4);
# flux grid = left endpoint, midpoints, right endpoint
_PN_HEAD = (17.0 / 48.0, 59.0 / 48.0, 43.0 / 48.0, 49.0 / 48.0)
_PF_HEAD = (1.0 / 9.0, 7.0 / 8.0, 73.0 / 72.0)
_D_HEAD = (
    (-1.0 / 2.0, -1.0, 5.0 / 2.0, -1.0),
    (-17.0 / 14.0, 23.0 / 14.0, -9.0 / 14.0, 3.0 / 14.0),
    (17.0 / 146.0, -197.0 / 146.0, 197.0 / 146.0, -17.0 / 146.0),
)
_D_INT = (1.0 / 24.0, -27.0 / 24.0, 27.0 / 24.0, -1.0 / 24.0)


class DiscretizationError(ValueError):
    """Invalid grid or operator configuration."""


def _zero_sum(row):
    """Nudge the largest entry so the row annihilates constants exactly."""
    row = np.asarray(row, dtype=float).copy()
    row[np.argmax(np.abs(row))] -= row.sum()
    return row


def _staggered_rows(N):
    """(support, coefficients/h-units) for each of the N+1 flux rows."""
    rows = []
    for r, head in enumerate(_D_HEAD):
        rows.append((np.arange(4), _zero_sum(head)))
    for i in range(3, N - 2):
        rows.append((np.arange(i - 2, i + 2), _zero_sum(_D_INT)))
    for r in (2, 1, 0):
        cols = np.arange(N - 4, N)
        rows.append((cols, _zero_sum([-c for c in _D_HEAD[r][::-1]])))
    return rows


def _interp_weights(x, weight_fn, stencil=6, gauss=10):
    """Interpolatory quadrature against an analytic measure density.

    Integrates the degree-(stencil-1) Lagrange interpolant through the
    nearest nodes on each interval against weight_fn(x) dx with Gauss
    panels, so polynomials up to that degree are integrated exactly.
    """
    N = len(x)
    w = np.zeros(N)
    gx, gw = roots_legendre(gauss)
    for j in range(N - 1):
        lo = min(max(j - (stencil // 2 - 1), 0), N - stencil)
        cols = np.arange(lo, lo + stencil)
        xs = x[cols]
        a, b = x[j], x[j + 1]
        t = 0.5 * (b - a) * gx + 0.5 * (a + b)
        gwt = 0.5 * (b - a) * gw * weight_fn(t)
        # Lagrange basis values at the Gauss points
        for i, c in enumerate(cols):
            num = np.ones_like(t)
            den = 1.0
            for ii, cc in enumerate(cols):
                if ii == i:
                    continue
                num *= t - xs[ii]
                den *= xs[i] - xs[ii]
            w[c] += np.dot(gwt, num / den)
    return w


@dataclass(frozen=True)
class RadialGrid:
    """Radial nodes, grid-coordinate data and quadrature weights."""

    surface: SurfaceOfRevolution
    N: int
    map_kind: str  # "collar-log" | "closed-logit"
    x: np.ndarray
    xi: np.ndarray
    h: float
    x_min: float
    x_max: float
    x_xi: np.ndarray
    flux_x: np.ndarray
    flux_x_xi: np.ndarray
    node_pweights: np.ndarray  # P_n diagonal (includes h)
    flux_pweights: np.ndarray  # P_f diagonal (includes h)
    mass_weights: np.ndarray  # W = P_n * R * x_xi, the operator inner product
    mellin_weights: np.ndarray  # high-order quadrature vs R(x)/x^2 dx
    area_weights: np.ndarray  # high-order quadrature vs R(x) dx

    @property
    def radius(self):
        return self.surface.radius(self.x)


def build_grid(surface: SurfaceOfRevolution, N: int, x_min_policy="default") -> RadialGrid:
    """Log-graded radial grid for a collar or closed surface of revolution.

    x_min_policy: "default" places the inner truncation at length/1000;
    a float gives the absolute truncation radius.
    """
    if N < 16:
        raise DiscretizationError("N must be at least 16")
    L = surface.length
    if x_min_policy == "default":
        x_min = 1e-3 * L
    else:
        x_min = float(x_min_policy)
    if x_min <= 0.0:
        raise DiscretizationError("x_min must be positive")

    if surface.closed:
        if x_min >= L / 2:
            raise DiscretizationError("x_min must lie below the equator")
        xi_max = math.log((L - x_min) / x_min)
        xi = np.linspace(-xi_max, xi_max, N)
        sig = 1.0 / (1.0 + np.exp(-xi))
        x = L * sig
        # enforce exact reflection symmetry of the nodes
        x = 0.5 * (x + (L - x[::-1]))
        x_xi = x * (L - x) / L
        map_kind = "closed-logit"
        x_max = L - x_min
    else:
        if x_min >= L:
            raise DiscretizationError("x_min must be below the outer radius")
        xi = np.linspace(math.log(x_min), math.log(L), N)
        x = np.exp(xi)
        x[-1] = L
        x_xi = x.copy()
        map_kind = "collar-log"
        x_max = L
    h = xi[1] - xi[0]

    flux_xi = np.concatenate(([xi[0]], 0.5 * (xi[:-1] + xi[1:]), [xi[-1]]))
    if surface.closed:
        fs = 1.0 / (1.0 + np.exp(-flux_xi))
        flux_x = L * fs
        flux_x = 0.5 * (flux_x + (L - flux_x[::-1]))
        flux_x_xi = flux_x * (L - flux_x) / L
    else:
        flux_x = np.exp(flux_xi)
        flux_x[-1] = L
        flux_x_xi = flux_x.copy()

    pn = np.full(N, h)
    pn[:4] = np.array(_PN_HEAD) * h
    pn[-4:] = np.array(_PN_HEAD[::-1]) * h
    pf = np.full(N + 1, h)
    pf[:3] = np.array(_PF_HEAD) * h
    pf[-3:] = np.array(_PF_HEAD[::-1]) * h

    R = surface.radius(x)
    if np.any(R <= 0.0) or not np.all(np.isfinite(R)):
        raise DegenerateMetricError("radius must be positive on all nodes")
    mass = pn * R * x_xi

    mellin_w = _interp_weights(x, lambda t: surface.radius(t) / t**2)
    area_w = _interp_weights(x, surface.radius)

    return RadialGrid(
        surface=surface,
        N=N,
        map_kind=map_kind,
        x=x,
        xi=xi,
        h=h,
        x_min=x_min,
        x_max=x_max,
        x_xi=x_xi,
        flux_x=flux_x,
        flux_x_xi=flux_x_xi,
        node_pweights=pn,
        flux_pweights=pf,
        mass_weights=mass,
        mellin_weights=mellin_w,
        area_weights=area_w,
    )


def _banded_from_rows(grid, rt_flux):
    """Symmetric banded K = D^T P_f diag(rt) D, layout ab[u+i-j, j], u=3."""
    N = grid.N
    bw = HALF_BANDWIDTH
    kb = np.zeros((2 * bw + 1, N))
    rows = _staggered_rows(N)
    pf = grid.flux_pweights
    h = grid.h
    for m, (cols, coefs) in enumerate(rows):
        c = coefs / h
        scale = pf[m] * rt_flux[m]
        for a in range(len(cols)):
            for b in range(len(cols)):
                i, j = cols[a], cols[b]
                kb[bw + i - j, j] += scale * c[a] * c[b]
    return kb


def _banded_matvec(kb, u):
    """y = K u for the banded layout kb[bw + i - j, j]."""
    bw = (kb.shape[0] - 1) // 2
    N = kb.shape[1]
    y = kb[bw] * u
    for off in range(1, bw + 1):
        y[:N - off] += kb[bw - off, off:] * u[off:]  # upper: K[i, i+off]
        y[off:] += kb[bw + off, :N - off] * u[:N - off]  # lower: K[i, i-off]
    return y


@dataclass
class ModeOperator:
    """Closed mode-k Laplacian in symmetric banded form.

    K_banded holds K = D^T P_f rt D + tip terms + W k^2/R^2, so that
    Delta_k u = -K u / W elementwise in the banded sense.  dirichlet_outer
    marks strong elimination of the outermost node in solves.
    """

    grid: RadialGrid
    k: int
    shift: float
    K_banded: np.ndarray
    potential: np.ndarray
    mu_north: float | None
    mu_south: float | None
    dirichlet_outer: bool
    closed_extension: bool

    @property
    def mass(self):
        return self.grid.mass_weights

    def apply_laplacian(self, u):
        """Delta_k applied to nodal values."""
        return -_banded_matvec(self.K_banded, u) / self.mass

    def _solve_K_plus_diag(self, d, rhs):
        """Solve (K + diag(d)) u = rhs, honoring outer Dirichlet."""
        bw = HALF_BANDWIDTH
        ab = self.K_banded.astype(np.result_type(self.K_banded, d, rhs)).copy()
        ab[bw, :] += d
        if self.dirichlet_outer:
            u = np.zeros(self.grid.N, dtype=ab.dtype)
            u[:-1] = solve_banded((bw, bw), ab[:, :-1], rhs[:-1])
            return u
        return solve_banded((bw, bw), ab, rhs)

    def solve_helmholtz(self, z, rhs):
        """Solve (z - Delta_k) u = rhs for complex shift z."""
        # (z - Delta) u = rhs  <=>  (K + z W) u = W rhs
        return self._solve_K_plus_diag(z * self.mass, self.mass * rhs)

    def solve_shifted_bilaplacian(self, beta, rhs):
        """Solve (beta + (Delta_k + 1)^2) u = rhs, beta >= 0, via two factors.

        (beta + (Delta+1)^2) = (1 - i sqrt(beta) - Delta)(1 + i sqrt(beta) - Delta)
        with the sign convention z - Delta per factor.  A real right side
        returns a real field (the factors are conjugate, the imaginary residue
        is round-off); a complex right side is solved componentwise.
        """
        if beta < 0.0:
            raise DiscretizationError("beta must be >= 0")
        if beta == 0.0:
            v = self.solve_helmholtz(-1.0, rhs)
            return self.solve_helmholtz(-1.0, v)
        s = 1j * math.sqrt(beta)
        if np.iscomplexobj(rhs):
            re = self.solve_helmholtz(-1.0 - s, self.solve_helmholtz(-1.0 + s, rhs.real))
            im = self.solve_helmholtz(-1.0 - s, self.solve_helmholtz(-1.0 + s, rhs.imag))
            return re.real + 1j * im.real
        v = self.solve_helmholtz(-1.0 + s, rhs)
        u = self.solve_helmholtz(-1.0 - s, v)
        return np.real(u)

    def robin_residual(self, u):
        """Tip-closure residuals (x d/dx - mu) u at each tip, per unit u-scale.

        Returns a dict side -> residual value using the one-sided boundary
        derivative row of the staggered pair.
        """
        grid = self.grid
        h = grid.h
        out = {}
        if self.mu_north is not None:
            du = np.dot(_zero_sum(_D_HEAD[0]) / h, u[:4])  # u_xi at xi_min
            x0 = grid.x[0]
            xdx = du * x0 / grid.x_xi[0]
            out["north"] = xdx - self.mu_north * u[0]
        if self.mu_south is not None:
            du = np.dot(-_zero_sum(_D_HEAD[0])[::-1] / h, u[-4:])
            xN = grid.x[-1]
            dist = grid.surface.length - xN
            xdx = -du * dist / grid.x_xi[-1]
            out["south"] = xdx - self.mu_south * u[-1]
        return out

    def symmetry_defect(self):
        """Max relative asymmetry of W Delta_k; structurally zero."""
        bw = HALF_BANDWIDTH
        kb = self.K_banded
        worst = 0.0
        scale = np.abs(kb).max()
        for off in range(1, bw + 1):
            upper = kb[bw - off, off:]
            lower = kb[bw + off, : kb.shape[1] - off]
            worst = max(worst, np.abs(upper - lower).max())
        return worst / scale

    def eigenvalues(self):
        """Real spectrum of the closed Delta_k via the symmetric reduction."""
        bw = HALF_BANDWIDTH
        w = self.mass
        if self.dirichlet_outer:
            kb = self.K_banded[:, :-1].copy()
            w = w[:-1]
        else:
            kb = self.K_banded.copy()
        n = kb.shape[1]
        # similarity by W^{-1/2}: upper banded of W^{-1/2} K W^{-1/2}
        ab = np.zeros((bw + 1, n))
        sw = np.sqrt(w)
        for off in range(0, bw + 1):
            ab[bw - off, off:] = kb[bw - off, off:] / (sw[off:] * sw[: n - off])
        vals = eig_banded(ab, lower=False, eigvals_only=True)
        return -vals  # Delta_k = -W^{-1/2} B W^{1/2}

    def eigensystem(self):
        """(eigenvalues of Delta_k, W-orthonormal eigenvector columns).

        Dirichlet-eliminated vectors are padded with the boundary zero.
        """
        bw = HALF_BANDWIDTH
        w = self.mass
        if self.dirichlet_outer:
            kb = self.K_banded[:, :-1]
            w = w[:-1]
        else:
            kb = self.K_banded
        n = kb.shape[1]
        ab = np.zeros((bw + 1, n))
        sw = np.sqrt(w)
        for off in range(0, bw + 1):
            ab[bw - off, off:] = kb[bw - off, off:] / (sw[off:] * sw[: n - off])
        vals, vecs = eig_banded(ab, lower=False)
        modes = vecs / sw[:, None]
        if self.dirichlet_outer:
            modes = np.vstack([modes, np.zeros(n)])
        return -vals, modes


def assemble_mode_laplacian(grid: RadialGrid, k: int, shift: float = 0.0) -> ModeOperator:
    """Open (no tip closure) mode-k operator on the grid."""
    if k < 0:
        raise DiscretizationError("assemble with k >= 0; negative modes mirror")
    surface = grid.surface
    rt_flux = surface.radius(grid.flux_x) / grid.flux_x_xi
    if not np.all(np.isfinite(rt_flux)) or np.any(rt_flux <= 0.0):
        raise DegenerateMetricError("metric degenerate on flux grid")
    kb = _banded_from_rows(grid, rt_flux)
    R = grid.radius
    pot = (k * k) / (R * R)
    kb[HALF_BANDWIDTH, :] += grid.mass_weights * pot
    return ModeOperator(
        grid=grid,
        k=k,
        shift=shift,
        K_banded=kb,
        potential=pot,
        mu_north=None,
        mu_south=None,
        dirichlet_outer=False,
        closed_extension=False,
    )


def tip_closure(op: ModeOperator, extension: str = "chosen", weight_window=None) -> ModeOperator:
    """Install tip closures (and the outer closure on collars).

    chosen: weak Robin x du/dx = mu_k u with mu_0 = 0 (bounded branch, the
    extension adjoining constants) and mu_k = k/rho(0) (decaying branch).
    minimal: additionally requires a nonempty weight window and realizes the
    domain without the adjoined constants by a homogeneous Dirichlet row at
    the truncation radius for k = 0.
    """
    if extension not in ("chosen", "minimal"):
        raise DiscretizationError(f"unknown extension {extension!r}")
    if extension == "minimal" and (weight_window is None or not weight_window.nonempty):
        raise DiscretizationError(
            "minimal extension requires a nonempty Mellin weight window"
        )
    grid = op.grid
    surface = grid.surface
    kb = op.K_banded.copy()
    k = op.k
    bw = HALF_BANDWIDTH

    mu_n = k / surface.tip_rho0("north")
    kb[bw, 0] += mu_n * surface.radius(grid.x[0]) / grid.x[0]
    mu_s = None
    dirichlet_outer = False
    if surface.closed:
        mu_s = k / surface.tip_rho0("south")
        xN = grid.x[-1]
        kb[bw, -1] += mu_s * surface.radius(xN) / (surface.length - xN)
    else:
        dirichlet_outer = surface.outer_bc == "dirichlet"
    return ModeOperator(
        grid=grid,
        k=k,
        shift=op.shift,
        K_banded=kb,
        potential=op.potential,
        mu_north=mu_n,
        mu_south=mu_s,
        dirichlet_outer=dirichlet_outer,
        closed_extension=(extension == "chosen"),
    )


@dataclass(frozen=True)
class SpectrumReport:
    k: int
    c: float
    a: float
    laplacian_eigenvalues: np.ndarray
    composite_min: float
    smoothing_sup: float
    symmetry_defect: float


def _smoothing_sup_single(mu, a, t_hi):
    """sup_t (t mu)^a e^{-t mu} by bounded maximization."""
    if a == 0.0:
        return 1.0
    if mu <= 0.0:
        return math.inf

    def neg(logt):
        t = math.exp(logt)
        return -((t * mu) ** a) * math.exp(-t * mu)

    center = math.log(a / mu)  # analytic optimum; scan a wide bracket
    res = minimize_scalar(
        neg, bounds=(center - 20.0, min(center + 20.0, math.log(t_hi))),
        method="bounded", options={"xatol": 1e-14},
    )
    return -res.fun


def spectrum_diagnostics(op: ModeOperator, c: float = 0.0, a: float = 0.0) -> SpectrumReport:
    """Eigenvalue positivity and semigroup-smoothing diagnostics.

    Reports the spectrum of Delta_k, the minimum of (lambda+1)^2 + c over it,
    and sup over eigenvalues mu of the composite and t > 0 of (t mu)^a e^{-t mu},
    which for a real positive spectrum equals (a/e)^a.
    """
    if not (0.0 <= a < 1.0):
        raise DiscretizationError("fractional power a must lie in [0, 1)")
    if c < 0.0:
        raise DiscretizationError("shift c must be >= 0")
    lam = op.eigenvalues()
    composite = (lam + 1.0) ** 2 + c
    sup = 1.0 if a == 0.0 else max(
        _smoothing_sup_single(float(mu), a, 1e18) for mu in composite if mu > 0
    )
    return SpectrumReport(
        k=op.k,
        c=c,
        a=a,
        laplacian_eigenvalues=np.sort(lam),
        composite_min=float(composite.min()),
        smoothing_sup=float(sup),
        symmetry_defect=float(op.symmetry_defect()),
    )
