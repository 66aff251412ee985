"""Post-processing fitters.

Three independent questions about a finished run:

* which line soliton does the final state relax to (speed from the inverted
  amplitude formula),
* does an unstable state decompose into lumps (peak detection plus
  subtraction of rescaled ground states),
* at which rate does a singular run blow up (least-squares power law
  ``log10 |u|_inf = -q log10(t* - t) + r`` with t* profiled out by
  golden-section search).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diagnostics import DiagnosticsSeries, refine_peak
from .initial_data import LumpProfile, evaluate_lump, lump_amplitude_factor
from .spectral import Field

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class BlowupFit:
    """Fitted singularity: sup|u| ~ 10^r * (t_star - t)^(-q).

    The fitted slope in log-log space is -q; q is reported positive for a
    growing sup norm. ``window`` holds (first, last) sample indices used.
    """

    t_star: float
    q: float
    r: float
    window: tuple[int, int]
    rms_residual: float


@dataclass(frozen=True)
class LumpFitResult:
    """Peaks as (x, y, c_fitted, residual_rel), sorted by descending amplitude."""

    peaks: list[tuple[float, float, float, float]]
    global_residual_rel: float


@dataclass(frozen=True)
class WindowPolicy:
    """Sample selection for blow-up fitting.

    Keeps the trailing run of samples that are still trustworthy (mass drift
    under ``max_mass_rel_err``) and already in the growth regime (sup norm
    above ``min_amp_factor`` times the initial one), capped at ``max_samples``.
    """

    max_mass_rel_err: float = 1e-4
    min_amp_factor: float = 2.0
    max_samples: int = 40_000
    span_factor: float = 10.0
    golden_tol: float = 1e-10


def fit_soliton_speed(final: Field, p: int) -> float:
    """Speed of the line soliton matching the y-averaged maximum.

    Inverts the amplitude relation A = (p(p+1)c/2)^(1/(p-1)).
    """
    profile = final.values.mean(axis=1)
    i = int(np.argmax(profile))
    n = profile.size
    fm, f0, fp = profile[(i - 1) % n], profile[i], profile[(i + 1) % n]
    denom = fm - 2.0 * f0 + fp
    if denom < 0:  # strict interior parabola maximum
        delta = 0.5 * (fm - fp) / denom
        amp = f0 - 0.25 * (fm - fp) * delta
    else:
        amp = f0
    if amp <= 0:
        raise ValueError(f"final state has non-positive y-averaged maximum {amp}")
    return float(2.0 * amp ** (p - 1) / (p * (p + 1)))


def _periodic_delta(a: float, b: float, period: float) -> float:
    d = (a - b) % period
    return d - period if d > period / 2 else d


def detect_peaks(u: Field, threshold_frac: float = 0.3, min_separation: float = 1.0) -> list[tuple[float, float, float]]:
    """Refined local maxima, thinned to a minimum pairwise periodic distance.

    Keeps strict 8-neighbor grid maxima whose refined amplitude reaches
    ``threshold_frac`` of the global refined maximum, then greedily accepts
    them in deterministic order (descending amplitude, ties by x then y).
    """
    if not 0 < threshold_frac < 1:
        raise ValueError(f"threshold_frac must be in (0, 1), got {threshold_frac}")
    vals = u.values
    strict = np.ones(vals.shape, dtype=bool)
    for si in (-1, 0, 1):
        for sj in (-1, 0, 1):
            if si == 0 and sj == 0:
                continue
            strict &= vals > np.roll(np.roll(vals, si, axis=0), sj, axis=1)
    cand = np.argwhere(strict)
    if cand.size == 0:
        return []

    g = u.grid
    refined = []
    for i, j in cand:
        value, dx, dy = refine_peak(vals, int(i), int(j))
        px = g.x[i] + dx * g.dx
        py = g.y[j] + dy * g.dy
        px = (px + np.pi * g.Lx) % (2 * np.pi * g.Lx) - np.pi * g.Lx
        py = (py + np.pi * g.Ly) % (2 * np.pi * g.Ly) - np.pi * g.Ly
        refined.append((float(px), float(py), float(value)))

    gmax = max(r[2] for r in refined)
    refined = [r for r in refined if r[2] >= threshold_frac * gmax]
    refined.sort(key=lambda r: (-r[2], r[0], r[1]))

    period_x = 2 * np.pi * g.Lx
    period_y = 2 * np.pi * g.Ly
    accepted: list[tuple[float, float, float]] = []
    for px, py, amp in refined:
        close = any(
            np.hypot(
                _periodic_delta(px, qx, period_x),
                _periodic_delta(py, qy, period_y),
            ) < min_separation
            for qx, qy, _ in accepted
        )
        if not close:
            accepted.append((px, py, amp))
    return accepted


def lump_field_at(base: LumpProfile, c: float, grid, x0: float, y0: float) -> np.ndarray:
    """Traveling lump of speed c centered at (x0, y0), sampled on grid.

    Rescales the normalized ground state and applies the flow's amplitude
    factor p^(1/(p-1)), so the result is the solitary wave the evolution
    actually transports.
    """
    period_x = 2 * np.pi * grid.Lx
    period_y = 2 * np.pi * grid.Ly
    dx = (grid.x - x0 + period_x / 2) % period_x - period_x / 2
    dy = (grid.y - y0 + period_y / 2) % period_y - period_y / 2
    return lump_amplitude_factor(base.p) * evaluate_lump(base, c, dx, dy)


def fit_lumps(u: Field, p: int, base_lump: LumpProfile,
              peaks: list[tuple[float, float, float]]) -> LumpFitResult:
    """Subtract a traveling lump at every peak and measure the remainder.

    The speed of each lump comes from the amplitude ratio against the unit
    traveling lump, ``c = (A / (mu * A_base))^(p-1)`` with
    ``mu = p^(1/(p-1))``; the local residual is the sup norm of the
    difference within radius ``3/sqrt(c)`` of the peak, relative to A.
    """
    if base_lump.c != 1.0:
        raise ValueError(f"fit requires a unit-speed base lump, got c={base_lump.c}")
    if base_lump.p != p:
        raise ValueError(f"base lump has p={base_lump.p}, field fit requested p={p}")
    if not peaks:
        return LumpFitResult([], 0.0)

    g = u.grid
    mu = lump_amplitude_factor(p)
    unit_peak = mu * base_lump.peak_amplitude
    residual = u.values.copy()
    period_x = 2 * np.pi * g.Lx
    period_y = 2 * np.pi * g.Ly

    fitted = []
    for px, py, amp in peaks:
        c = (amp / unit_peak) ** (p - 1)
        residual -= lump_field_at(base_lump, c, g, px, py)
        fitted.append((px, py, c))

    out = []
    for px, py, c in fitted:
        dx = (g.x - px + period_x / 2) % period_x - period_x / 2
        dy = (g.y - py + period_y / 2) % period_y - period_y / 2
        region = (dx[:, None] ** 2 + dy[None, :] ** 2) <= (3.0 / np.sqrt(c)) ** 2
        amp = unit_peak * c ** (1.0 / (p - 1))
        local = float(np.abs(residual[region]).max() / amp) if region.any() else np.inf
        out.append((px, py, float(c), local))

    global_rel = float(np.abs(residual).max() / np.abs(u.values).max())
    return LumpFitResult(out, global_rel)


def _golden_section(f, a: float, b: float, tol: float) -> float:
    """Golden-section minimizer of a unimodal objective on [a, b]."""
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
    return 0.5 * (a + b)


def _loglog_ls(log_dt: np.ndarray, log_sup: np.ndarray) -> tuple[float, float, float]:
    """Closed-form linear least squares; returns (slope, intercept, sse)."""
    n = log_dt.size
    sx = log_dt.sum()
    sy = log_sup.sum()
    sxx = (log_dt * log_dt).sum()
    sxy = (log_dt * log_sup).sum()
    det = n * sxx - sx * sx
    slope = (n * sxy - sx * sy) / det
    intercept = (sy * sxx - sx * sxy) / det
    res = log_sup - slope * log_dt - intercept
    return slope, intercept, float(res @ res)


def select_window(series: DiagnosticsSeries, policy: WindowPolicy) -> tuple[int, int]:
    """Trailing trustworthy growth window as inclusive sample indices."""
    ok = (series.mass_rel_err < policy.max_mass_rel_err) & (
        series.sup_norm > policy.min_amp_factor * series.sup_norm[0]
    )
    idx = np.flatnonzero(ok)
    if idx.size == 0:
        raise ValueError("no samples satisfy the window policy")
    # trailing contiguous run
    last = idx[-1]
    first = last
    pos = idx.size - 1
    while pos > 0 and idx[pos - 1] == first - 1:
        first -= 1
        pos -= 1
    # longest strictly increasing suffix of sup_norm
    sup = series.sup_norm
    lo = last
    while lo > first and sup[lo] > sup[lo - 1]:
        lo -= 1
    first = max(first, lo)
    first = max(first, last - policy.max_samples + 1)
    return int(first), int(last)


def fit_blowup(series: DiagnosticsSeries, policy: WindowPolicy = WindowPolicy(),
               window: tuple[int, int] | None = None) -> BlowupFit:
    """Fit (t_star, q, r) to the sup-norm history.

    The inner (q, r) problem is linear for fixed t_star and solved in closed
    form; the outer 1D search minimizes the profiled sum of squares by
    golden section over ``t_star in (t_last, t_last + span]``.
    """
    if window is None:
        window = select_window(series, policy)
    first, last = window
    t = series.t[first:last + 1]
    sup = series.sup_norm[first:last + 1]
    if t.size < 8:
        raise ValueError(f"blow-up fit needs at least 8 samples, window has {t.size}")
    if np.any(np.diff(sup) <= 0):
        raise ValueError("sup_norm must increase strictly over the fit window")

    log_sup = np.log10(sup)
    t_last = t[-1]
    span = policy.span_factor * (t_last - t[0])

    def sse(t_star: float) -> float:
        return _loglog_ls(np.log10(t_star - t), log_sup)[2]

    eps = max(1e-12, 1e-9 * span)
    t_star = _golden_section(sse, t_last + eps, t_last + span, policy.golden_tol)
    slope, intercept, sse_val = _loglog_ls(np.log10(t_star - t), log_sup)
    return BlowupFit(
        t_star=float(t_star),
        q=float(-slope),
        r=float(intercept),
        window=(first, last),
        rms_residual=float(np.sqrt(sse_val / t.size)),
    )
