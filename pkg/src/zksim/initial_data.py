"""Closed-form line solitons, perturbation families and the lump ground state.

Line solitons extend the 1D solitary wave
``Q_c(z) = (p(p+1)c/2 * sech^2(sqrt(c)(p-1)/2 * z))^(1/(p-1))``
uniformly in y. Lumps are fully localized traveling waves solving
``-c Q + Q_xx + Q_yy + Q^p = 0``; they are computed by a stabilized
Petviashvili fixed-point iteration and related across speeds by
``Q_c(x, y) = c^(1/(p-1)) Q(sqrt(c) x, sqrt(c) y)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .spectral import Field, Grid, SpectralField, forward_transform, inverse_transform

VALID_POWERS = (2, 3, 4)

BOUNDARY_DECAY = 1e-15  # relative soliton amplitude tolerated at the x-boundary


class ConvergenceError(RuntimeError):
    """Petviashvili iteration failed; carries the last residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class SolitonParams:
    p: int
    c: float
    x0: float = 0.0

    def __post_init__(self):
        if self.p not in VALID_POWERS:
            raise ValueError(f"p must be one of {VALID_POWERS}, got {self.p}")
        if self.c <= 0:
            raise ValueError(f"soliton speed must be positive, got c={self.c}")

    @property
    def amplitude(self) -> float:
        return (self.p * (self.p + 1) * self.c / 2.0) ** (1.0 / (self.p - 1))


@dataclass(frozen=True)
class PerturbationSpec:
    """Additive perturbation: gaussian a*exp(-b^2(x^2+y^2)) or
    cosine_modulated a*cos^2(y/b + delta)*exp(-x^2)."""

    kind: str = "none"
    a: float = 0.0
    b: float = 1.0
    delta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "gaussian", "cosine_modulated"):
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        if self.kind != "none" and self.b <= 0:
            raise ValueError(f"perturbation width must be positive, got b={self.b}")


def sech(t: np.ndarray) -> np.ndarray:
    """Overflow-safe sech."""
    a = np.abs(t)
    e = np.exp(-a)
    return 2.0 * e / (1.0 + e * e)


def soliton_profile(params: SolitonParams, x: np.ndarray) -> np.ndarray:
    p, c = params.p, params.c
    z = x - params.x0
    base = sech(0.5 * np.sqrt(c) * (p - 1) * z)
    return params.amplitude * base ** (2.0 / (p - 1))


def line_soliton(params: SolitonParams, grid: Grid) -> Field:
    """y-independent soliton field, maximum at x0.

    Warns when the profile has not decayed below machine precision at the
    x-boundary (the torus then visibly truncates the tail).
    """
    profile = soliton_profile(params, grid.x)
    edge = max(profile[0], profile[-1])
    if edge > BOUNDARY_DECAY * params.amplitude:
        warnings.warn(
            f"line soliton only decays to {edge / params.amplitude:.2e} of its peak "
            f"at the x-boundary; increase Lx for a cleaner periodization",
            stacklevel=2,
        )
    values = np.repeat(profile[:, None], grid.Ny, axis=1)
    return Field(grid, values)


def perturbation_values(pert: PerturbationSpec, grid: Grid) -> np.ndarray:
    if pert.kind == "none":
        return np.zeros(grid.shape)
    X, Y = grid.meshgrid()
    if pert.kind == "gaussian":
        return pert.a * np.exp(-pert.b**2 * (X**2 + Y**2))
    return pert.a * np.cos(Y / pert.b + pert.delta) ** 2 * np.exp(-(X**2))


def build_initial_data(params: SolitonParams, pert: PerturbationSpec, grid: Grid) -> Field:
    base = line_soliton(params, grid)
    if pert.kind == "none":
        return base
    return Field(grid, base.values + perturbation_values(pert, grid))


def lump_amplitude_factor(p: int) -> float:
    """Amplitude ratio p^(1/(p-1)) between traveling lumps of the evolution
    (flux u^(p-1) u_x) and the normalized ground state of
    -c Q + Laplacian(Q) + Q^p = 0. The two families share speed, width and
    shape; only the height differs by this constant."""
    return p ** (1.0 / (p - 1))


def critical_speed_p2(Ly: float) -> float:
    """Stability threshold 4/(5*Ly^2) for p=2 line solitons on a transverse torus."""
    if Ly <= 0:
        raise ValueError(f"Ly must be positive, got {Ly}")
    return 4.0 / (5.0 * Ly**2)


# ---------------------------------------------------------------------------
# Lump ground states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LumpProfile:
    """Ground state of -c Q + Laplacian(Q) + Q^p = 0 on its grid."""

    grid: Grid
    values: Field
    c: float
    p: int
    residual: float

    @property
    def peak_amplitude(self) -> float:
        return float(self.values.values.max())


def default_lump_grid(c: float, n: int = 512) -> Grid:
    """Square grid scaled with the lump width so decay and resolution balance."""
    scale = 10.0 / np.sqrt(c)
    return Grid(Lx=scale, Ly=scale, Nx=n, Ny=n)


def _stationary_defect(grid: Grid, q_hat: np.ndarray, q_pow_p: np.ndarray, c: float,
                       workers: int = 1) -> np.ndarray:
    lin = inverse_transform(SpectralField(grid, -(c + grid.k_squared) * q_hat), workers=workers)
    return lin.values + q_pow_p


def petviashvili(p: int, c: float, grid: Grid | None = None, tol: float = 1e-12,
                 max_iter: int = 500, workers: int = 1) -> LumpProfile:
    """Compute the lump ground state by Petviashvili iteration.

    Fixed point update ``Q_hat <- S^gamma * (Q^p)_hat / (c + |k|^2)`` with the
    stabilizing exponent ``gamma = p/(p-1)`` and normalization factor
    ``S = <(c+|k|^2) Q_hat, Q_hat> / <(Q^p)_hat, Q_hat>``. Stops when the
    sup-norm defect of the stationary equation drops below ``tol``.
    """
    if p not in VALID_POWERS:
        raise ValueError(f"p must be one of {VALID_POWERS}, got {p}")
    if c <= 0:
        raise ValueError(f"lump speed must be positive, got c={c}")
    if grid is None:
        grid = default_lump_grid(c)

    X, Y = grid.meshgrid()
    seed = np.exp(-(X**2 + Y**2) / 4.0)
    edge = max(seed[0].max(), seed[:, 0].max())
    if edge > 1e-12:
        raise ValueError(f"lump grid too small: seed boundary value {edge:.2e} of peak")

    gamma = p / (p - 1.0)
    sym = c + grid.k_squared
    w = grid.parseval_weights

    q = seed
    q_hat = forward_transform(Field(grid, q), workers=workers).coeffs
    residual = np.inf
    for _ in range(max_iter):
        qp = q**p
        qp_hat = forward_transform(Field(grid, qp), workers=workers).coeffs
        num = np.sum(w * sym * np.abs(q_hat) ** 2)
        den = np.sum(w * np.real(qp_hat * np.conj(q_hat)))
        s = num / den
        if not (0.1 < s < 10.0):
            raise ConvergenceError(
                f"Petviashvili factor S={s:.4g} left the trust interval (0.1, 10)", residual
            )
        q_hat = s**gamma * qp_hat / sym
        q = inverse_transform(SpectralField(grid, q_hat), workers=workers).values
        defect = _stationary_defect(grid, q_hat, q**p, c, workers=workers)
        residual = float(np.abs(defect).max())
        if residual < tol:
            return LumpProfile(grid, Field(grid, q), c, p, residual)
    raise ConvergenceError(
        f"Petviashvili did not reach tol={tol:.2e} in {max_iter} iterations "
        f"(last residual {residual:.2e})", residual
    )


def evaluate_lump(base: LumpProfile, c: float, x_off: np.ndarray, y_off: np.ndarray) -> np.ndarray:
    """Evaluate ``c^(1/(p-1)) Q(sqrt(c) x_off_i, sqrt(c) y_off_j)`` on a tensor grid.

    Off-grid evaluation sums the base profile's Fourier series; scaled points
    falling outside the base cell map to zero (the lump is below truncation
    there) instead of wrapping onto periodic images.
    """
    if c <= 0:
        raise ValueError(f"target speed must be positive, got c={c}")
    g = base.grid
    coeffs = forward_transform(base.values).coeffs
    # rfft2 indexes samples from the cell corner (-pi*Lx, -pi*Ly); the factor
    # (-1)^(m+n) converts to coefficients of the origin-centered series.
    phase_x = np.where(g.kx_int.astype(int) % 2 == 0, 1.0, -1.0)
    phase_y = np.where(g.ky_int.astype(int) % 2 == 0, 1.0, -1.0)
    coeffs = coeffs * phase_x[:, None] * phase_y[None, :]
    root = np.sqrt(c)
    X = root * np.asarray(x_off, dtype=float)
    Y = root * np.asarray(y_off, dtype=float)
    in_x = np.abs(X) <= np.pi * g.Lx
    in_y = np.abs(Y) <= np.pi * g.Ly

    out = np.zeros((X.size, Y.size))
    if in_x.any() and in_y.any():
        ex = np.exp(1j * np.outer(X[in_x], g.kx_int / g.Lx))
        ey = np.exp(1j * np.outer(Y[in_y], g.ky_int / g.Ly))
        block = np.real(ex @ (coeffs * g.parseval_weights) @ ey.T)
        out[np.ix_(in_x, in_y)] = block
    return c ** (1.0 / (base.p - 1)) * out


def rescale_lump(base: LumpProfile, c_new: float) -> LumpProfile:
    """Rescale a unit-speed lump to speed c_new, resampled on the base grid."""
    if base.c != 1.0:
        raise ValueError(f"rescaling requires a unit-speed base lump, got c={base.c}")
    if c_new <= 0:
        raise ValueError(f"target speed must be positive, got c_new={c_new}")
    g = base.grid
    values = evaluate_lump(base, c_new, g.x, g.y)
    fld = Field(g, values)
    q_hat = forward_transform(fld).coeffs
    defect = _stationary_defect(g, q_hat, values**base.p, c_new)
    return LumpProfile(g, fld, c_new, base.p, float(np.abs(defect).max()))
