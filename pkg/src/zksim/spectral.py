"""Torus geometry, FFT-based transforms and spectral differential operators.

All fields live on a uniform grid of the torus
``[-pi*Lx, pi*Lx) x [-pi*Ly, pi*Ly)`` (periods ``2*pi*Lx``, ``2*pi*Ly``)
sampled with ``Nx x Ny`` points, x being the outer (slower) index.
Spectral coefficients use the real-to-complex half spectrum of shape
``(Nx, Ny//2 + 1)`` and carry the ``1/(Nx*Ny)`` normalization on the
forward transform, so ``coeffs[0, 0]`` is the field mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Torus geometry and resolution; owns the wavenumber tables.

    ``Lx``/``Ly`` are half-period scales (physical x-period is ``2*pi*Lx``),
    ``Nx``/``Ny`` the sample counts, powers of two.
    """

    Lx: float
    Ly: float
    Nx: int
    Ny: int

    def __post_init__(self):
        if not (self.Lx > 0 and self.Ly > 0):
            raise ValueError(f"half-period scales must be positive, got Lx={self.Lx}, Ly={self.Ly}")
        for name, n in (("Nx", self.Nx), ("Ny", self.Ny)):
            if not _is_power_of_two(int(n)):
                raise ValueError(f"{name} must be a power of two, got {n}")

    @cached_property
    def x(self) -> np.ndarray:
        return -np.pi * self.Lx + np.arange(self.Nx) * self.dx

    @cached_property
    def y(self) -> np.ndarray:
        return -np.pi * self.Ly + np.arange(self.Ny) * self.dy

    @property
    def dx(self) -> float:
        return 2 * np.pi * self.Lx / self.Nx

    @property
    def dy(self) -> float:
        return 2 * np.pi * self.Ly / self.Ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def area(self) -> float:
        return (2 * np.pi * self.Lx) * (2 * np.pi * self.Ly)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.Nx, self.Ny)

    @property
    def spectral_shape(self) -> tuple[int, int]:
        return (self.Nx, self.Ny // 2 + 1)

    # Integer mode indices. kx follows the fft layout [0..Nx/2-1, -Nx/2..-1];
    # ky is the non-negative rfft half [0..Ny/2].
    @cached_property
    def kx_int(self) -> np.ndarray:
        return np.fft.fftfreq(self.Nx, d=1.0 / self.Nx)

    @cached_property
    def ky_int(self) -> np.ndarray:
        return np.arange(self.Ny // 2 + 1, dtype=float)

    @cached_property
    def kx(self) -> np.ndarray:
        """Physical x-wavenumbers, column vector for broadcasting."""
        return (self.kx_int / self.Lx)[:, None]

    @cached_property
    def ky(self) -> np.ndarray:
        """Physical y-wavenumbers (half spectrum), row vector."""
        return (self.ky_int / self.Ly)[None, :]

    # Variants with the Nyquist mode zeroed, for odd derivative orders.
    @cached_property
    def kx_odd(self) -> np.ndarray:
        k = self.kx.copy()
        k[self.Nx // 2, 0] = 0.0
        return k

    @cached_property
    def ky_odd(self) -> np.ndarray:
        k = self.ky.copy()
        k[0, self.Ny // 2] = 0.0
        return k

    @cached_property
    def k_squared(self) -> np.ndarray:
        return self.kx**2 + self.ky**2

    @cached_property
    def parseval_weights(self) -> np.ndarray:
        """Column weights for sums over the half spectrum: 2 except at ky=0, Nyquist."""
        w = np.full(self.Ny // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return w[None, :]

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: keep modes with |integer index| <= N/3 in each direction."""
        keep_x = np.abs(self.kx_int) <= self.Nx / 3.0
        keep_y = self.ky_int <= self.Ny / 3.0
        return keep_x[:, None] & keep_y[None, :]

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")


@dataclass(frozen=True)
class Field:
    """One real scalar sample set on a grid, shape (Nx, Ny), x outer."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError(f"field shape {self.values.shape} does not match grid {self.grid.shape}")


@dataclass(frozen=True)
class SpectralField:
    """Half-spectrum coefficients of a real field, normalized so coeffs[0,0] is the mean."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != self.grid.spectral_shape:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.spectral_shape}"
            )


def forward_transform(f: Field, workers: int = 1) -> SpectralField:
    """Real-to-complex FFT with mean normalization.

    Rejects non-finite input, naming the first offending sample.
    """
    vals = f.values
    if not np.isfinite(vals).all():
        bad = np.argwhere(~np.isfinite(vals))[0]
        raise ValueError(f"non-finite sample at index ({bad[0]}, {bad[1]}): {vals[bad[0], bad[1]]}")
    coeffs = sfft.rfft2(vals, workers=workers) / (f.grid.Nx * f.grid.Ny)
    return SpectralField(f.grid, coeffs)


def inverse_transform(sf: SpectralField, workers: int = 1) -> Field:
    g = sf.grid
    vals = sfft.irfft2(sf.coeffs, s=g.shape, workers=workers) * (g.Nx * g.Ny)
    return Field(g, vals)


def spectral_derivative(sf: SpectralField, order_x: int, order_y: int) -> SpectralField:
    """Differentiate by multiplying modes with (i kx)^ox (i ky)^oy.

    Nyquist modes are zeroed for odd orders so derivatives of real fields
    stay real. Orders above 3 are rejected (the evolution never needs them).
    """
    if not (0 <= order_x <= 3 and 0 <= order_y <= 3):
        raise ValueError(f"derivative orders must be in [0, 3], got ({order_x}, {order_y})")
    g = sf.grid
    out = sf.coeffs
    if order_x:
        kx = g.kx_odd if order_x % 2 else g.kx
        out = out * (1j * kx) ** order_x
    if order_y:
        ky = g.ky_odd if order_y % 2 else g.ky
        out = out * (1j * ky) ** order_y
    if not (order_x or order_y):
        out = out.copy()
    return SpectralField(g, out)


def dealias(sf: SpectralField, enabled: bool = True) -> SpectralField:
    """Zero modes beyond the 2/3 cutoff; identity when disabled."""
    if not enabled:
        return sf
    return SpectralField(sf.grid, sf.coeffs * sf.grid.dealias_mask)


def fourier_tail(f: Field) -> float:
    """Resolution indicator: relative modulus of the highest-index tenth of modes.

    Returns max |coeff| over modes with |integer index| >= 0.9 * N/2 in either
    direction, divided by the overall max; 0 for the zero field.
    """
    sf = forward_transform(f)
    g = f.grid
    mag = np.abs(sf.coeffs)
    total = mag.max()
    if total == 0.0:
        return 0.0
    tail_x = np.abs(g.kx_int) >= 0.9 * (g.Nx / 2)
    tail_y = g.ky_int >= 0.9 * (g.Ny / 2)
    tail = tail_x[:, None] | tail_y[None, :]
    return float(mag[tail].max() / total)


def spectral_sum_of_squares(sf: SpectralField) -> float:
    """Parseval partner of sum(u**2): (2 pi Lx)(2 pi Ly) * weighted sum |coeff|^2."""
    g = sf.grid
    return float(g.area * np.sum(g.parseval_weights * np.abs(sf.coeffs) ** 2))
