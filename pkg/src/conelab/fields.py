"""Scalar fields on a surface of revolution as circumferential Fourier modes.

A field u(x, theta) is stored as the rfft of its samples on n_theta uniform
angles, one complex row per mode k, on the radial nodes of a RadialGrid.
Angular derivatives are diagonal in this representation; radial derivatives
use a 4th-order node-centered stencil in the grid coordinate xi, converted
through the chain rule of the grid map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretization import RadialGrid

__all__ = ["ModalField", "ddxi_4th"]

_EDGE_ROWS = (
    (-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -1.0 / 4.0),
    (-1.0 / 4.0, -5.0 / 6.0, 3.0 / 2.0, -1.0 / 2.0, 1.0 / 12.0),
)


def ddxi_4th(values, h):
    """4th-order first derivative along the last axis of a uniform grid."""
    v = np.asarray(values)
    if v.shape[-1] < 6:
        raise ValueError("need at least 6 nodes for the 4th-order stencil")
    d = np.empty_like(v, dtype=np.result_type(v, float))
    d[..., 2:-2] = (
        v[..., :-4] - 8.0 * v[..., 1:-3] + 8.0 * v[..., 3:-1] - v[..., 4:]
    ) / 12.0
    for r, row in enumerate(_EDGE_ROWS):
        c = np.array(row)
        d[..., r] = np.tensordot(v[..., :5], c, axes=([-1], [0]))
        d[..., -1 - r] = -np.tensordot(v[..., -5:], c[::-1], axes=([-1], [0]))
    return d / h


@dataclass
class ModalField:
    """rfft-over-theta representation: coeffs[k, j] for mode k, node j."""

    grid: RadialGrid
    coeffs: np.ndarray  # complex, shape (n_modes, N)
    n_theta: int

    def __post_init__(self):
        self.coeffs = np.atleast_2d(np.asarray(self.coeffs, dtype=complex))
        if self.coeffs.shape[1] != self.grid.N:
            raise ValueError("mode rows must match the radial grid")
        if self.coeffs.shape[0] != self.n_theta // 2 + 1:
            raise ValueError("mode count must match n_theta//2 + 1")

    @classmethod
    def axisymmetric(cls, grid: RadialGrid, radial_values) -> "ModalField":
        vals = np.asarray(radial_values, dtype=float)
        return cls(grid=grid, coeffs=vals[None, :].astype(complex), n_theta=1)

    @classmethod
    def from_physical(cls, grid: RadialGrid, values) -> "ModalField":
        """values[m, j] on theta_m = 2 pi m / M."""
        vals = np.atleast_2d(np.asarray(values, dtype=float))
        return cls(grid=grid, coeffs=np.fft.rfft(vals, axis=0), n_theta=vals.shape[0])

    @classmethod
    def single_mode(cls, grid: RadialGrid, k: int, radial_values, n_theta=None) -> "ModalField":
        """cos(k theta) profile with the given radial dependence."""
        if n_theta is None:
            n_theta = max(4 * (abs(k) + 1), 8)
        coeffs = np.zeros((n_theta // 2 + 1, grid.N), dtype=complex)
        vals = np.asarray(radial_values, dtype=float)
        if k == 0:
            coeffs[0] = vals * n_theta
        else:
            coeffs[abs(k)] = 0.5 * vals * n_theta
            if abs(k) == n_theta // 2 and n_theta % 2 == 0:
                coeffs[abs(k)] = vals * n_theta  # Nyquist row carries full weight
        return cls(grid=grid, coeffs=coeffs, n_theta=n_theta)

    @property
    def mode_numbers(self):
        return np.arange(self.coeffs.shape[0])

    def physical(self):
        """Samples on the uniform angle grid, shape (n_theta, N)."""
        return np.fft.irfft(self.coeffs, n=self.n_theta, axis=0)

    def theta_derivative(self, order: int = 1) -> "ModalField":
        k = self.mode_numbers[:, None]
        return ModalField(self.grid, (1j * k) ** order * self.coeffs, self.n_theta)

    def radial_xdx(self) -> "ModalField":
        """(x d/dx) applied modewise through the grid map."""
        g = self.grid
        du = ddxi_4th(self.coeffs, g.h) * (g.x / g.x_xi)[None, :]
        return ModalField(g, du, self.n_theta)

    def radial_ddx(self) -> "ModalField":
        g = self.grid
        du = ddxi_4th(self.coeffs, g.h) / g.x_xi[None, :]
        return ModalField(g, du, self.n_theta)

    def scaled_by(self, radial_factor) -> "ModalField":
        return ModalField(self.grid, self.coeffs * np.asarray(radial_factor)[None, :], self.n_theta)
