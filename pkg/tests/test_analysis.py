import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import zksim as zk
from zksim.analysis import WindowPolicy, lump_field_at, select_window
from zksim.diagnostics import DiagnosticsSeries


def power_law_series(q, t_star, r, n=64, t0=1.0, t1=None, mass_rel_err=None):
    if t1 is None:
        t1 = t_star - 0.05 * (t_star - t0)
    t = np.linspace(t0, t1, n)
    sup = 10.0**r * (t_star - t) ** (-q)
    z = np.zeros(n)
    mre = z if mass_rel_err is None else np.asarray(mass_rel_err)
    return DiagnosticsSeries(t, sup, z + 1.0, z, z, z, z, z, z, mre)


LOOSE = WindowPolicy(min_amp_factor=0.0)


class TestFitBlowup:
    def test_exact_recovery_reference_case(self):
        s = power_law_series(0.7, 3.858, 1.0)
        fit = zk.fit_blowup(s, LOOSE)
        assert fit.t_star == pytest.approx(3.858, abs=1e-8)
        assert fit.q == pytest.approx(0.7, abs=1e-8)
        assert fit.r == pytest.approx(1.0, abs=1e-8)
        assert fit.rms_residual < 1e-10

    @given(
        q=st.floats(0.1, 2.0),
        t_star=st.floats(0.5, 10.0),
        r=st.floats(-1.0, 1.0),
    )
    @settings(max_examples=40, deadline=None)
    def test_exact_recovery_property(self, q, t_star, r):
        s = power_law_series(q, t_star, r, n=16, t0=0.1 * t_star)
        fit = zk.fit_blowup(s, LOOSE)
        assert fit.q == pytest.approx(q, abs=1e-6)
        assert fit.t_star == pytest.approx(t_star, rel=1e-6)

    def test_window_excludes_drifted_samples(self):
        mre = np.zeros(64)
        mre[-10:] = 1e-2  # post-stop regime
        s = power_law_series(0.7, 3.858, 0.0, n=64, mass_rel_err=mre)
        fit = zk.fit_blowup(s, LOOSE)
        assert fit.window[1] == 53
        assert fit.q == pytest.approx(0.7, abs=1e-6)

    def test_too_few_samples_rejected(self):
        s = power_law_series(0.7, 2.0, 0.0, n=6)
        with pytest.raises(ValueError, match="at least 8"):
            zk.fit_blowup(s, LOOSE)

    def test_non_monotone_window_rejected(self):
        s = power_law_series(0.7, 2.0, 0.0, n=16)
        sup = s.sup_norm.copy()
        sup[8] = sup[9] + 1.0  # break monotonicity inside the window
        broken = DiagnosticsSeries(s.t, sup, s.mass, s.mean_integral, s.energy,
                                   s.ux_l2, s.peak_x, s.peak_y, s.fourier_tail,
                                   s.mass_rel_err)
        with pytest.raises(ValueError, match="increase strictly"):
            zk.fit_blowup(broken, LOOSE, window=(0, 15))

    def test_amplitude_filter_trims_early_samples(self):
        s = power_law_series(0.5, 5.0, 0.0, n=100, t0=0.5)
        first, last = select_window(s, WindowPolicy(min_amp_factor=2.0))
        assert s.sup_norm[first] > 2.0 * s.sup_norm[0]
        assert last == 99

    def test_slope_sign_convention(self):
        # growing sup norm means negative log-log slope and positive q
        s = power_law_series(0.3, 2.0, 0.0)
        fit = zk.fit_blowup(s, LOOSE)
        assert fit.q > 0
        assert np.all(np.diff(s.sup_norm) > 0)


class TestFitSolitonSpeed:
    @pytest.mark.parametrize("p", [2, 3, 4])
    @pytest.mark.parametrize("c", [0.25, 0.75, 2.0])
    def test_inverts_line_soliton(self, p, c):
        g = zk.Grid(Lx=80.0, Ly=1.0, Nx=2048, Ny=4)
        f = zk.line_soliton(zk.SolitonParams(p=p, c=c), g)
        assert zk.fit_soliton_speed(f, p) == pytest.approx(c, abs=1e-10)

    def test_amplitude_three_gives_unit_speed(self):
        g = zk.Grid(Lx=1.0, Ly=1.0, Nx=32, Ny=16)
        X, _ = g.meshgrid()
        f = zk.Field(g, 3.0 * np.cos(X) ** 2)  # peak exactly 3 on-grid
        assert zk.fit_soliton_speed(f, 2) == pytest.approx(1.0, rel=1e-12)

    def test_nonpositive_max_rejected(self):
        g = zk.Grid(Lx=1.0, Ly=1.0, Nx=16, Ny=16)
        with pytest.raises(ValueError, match="non-positive"):
            zk.fit_soliton_speed(zk.Field(g, -np.ones(g.shape)), 2)


class TestDetectPeaks:
    def test_single_lump(self, base_lump_p2):
        g = base_lump_p2.grid
        u = zk.Field(g, lump_field_at(base_lump_p2, 1.0, g, g.x[300], g.y[200]))
        peaks = zk.detect_peaks(u)
        assert len(peaks) == 1
        px, py, amp = peaks[0]
        assert px == pytest.approx(g.x[300], abs=1e-8)
        assert py == pytest.approx(g.y[200], abs=1e-8)
        assert amp == pytest.approx(2.0 * base_lump_p2.peak_amplitude, rel=1e-10)

    def test_two_separated_lumps(self, base_lump_p2):
        g = base_lump_p2.grid
        vals = lump_field_at(base_lump_p2, 1.5, g, g.x[140], g.y[140])
        vals = vals + lump_field_at(base_lump_p2, 1.0, g, g.x[360], g.y[380])
        peaks = zk.detect_peaks(zk.Field(g, vals))
        assert len(peaks) == 2
        assert peaks[0][2] > peaks[1][2]  # descending amplitude
        for (px, py, amp), (i, j, c) in zip(peaks, [(140, 140, 1.5), (360, 380, 1.0)]):
            expect = 2.0 * c * base_lump_p2.peak_amplitude
            assert amp == pytest.approx(expect, rel=0.01)

    def test_constant_field_has_no_peaks(self):
        g = zk.Grid(Lx=1.0, Ly=1.0, Nx=32, Ny=32)
        assert zk.detect_peaks(zk.Field(g, np.ones(g.shape))) == []

    def test_min_separation_thins(self, base_lump_p2):
        g = base_lump_p2.grid
        vals = lump_field_at(base_lump_p2, 1.0, g, g.x[256], g.y[256])
        vals = vals + 0.5 * lump_field_at(base_lump_p2, 1.0, g, g.x[260], g.y[256])
        peaks = zk.detect_peaks(zk.Field(g, vals), min_separation=3.0)
        assert len(peaks) == 1

    def test_threshold_validation(self, base_lump_p2):
        g = base_lump_p2.grid
        u = zk.Field(g, np.ones(g.shape))
        with pytest.raises(ValueError, match="threshold_frac"):
            zk.detect_peaks(u, threshold_frac=1.5)


class TestFitLumps:
    def test_exact_on_grid_lump(self, base_lump_p2):
        g = base_lump_p2.grid
        u = zk.Field(g, lump_field_at(base_lump_p2, 1.5, g, g.x[300], g.y[220]))
        peaks = zk.detect_peaks(u)
        res = zk.fit_lumps(u, 2, base_lump_p2, peaks)
        assert len(res.peaks) == 1
        _, _, c, local = res.peaks[0]
        assert c == pytest.approx(1.5, rel=1e-10)
        assert local < 1e-8
        assert res.global_residual_rel < 1e-8

    def test_off_grid_lump(self, base_lump_p2):
        g = base_lump_p2.grid
        x0 = g.x[300] + 0.4 * g.dx
        y0 = g.y[220] + 0.27 * g.dy
        u = zk.Field(g, lump_field_at(base_lump_p2, 1.5, g, x0, y0))
        res = zk.fit_lumps(u, 2, base_lump_p2, zk.detect_peaks(u))
        assert res.peaks[0][3] < 1e-3

    def test_translation_equivariance(self, base_lump_p2):
        g = base_lump_p2.grid
        u = zk.Field(g, lump_field_at(base_lump_p2, 1.2, g, g.x[300], g.y[220]))
        shifted = zk.Field(g, np.roll(u.values, (57, -31), axis=(0, 1)))
        r0 = zk.fit_lumps(u, 2, base_lump_p2, zk.detect_peaks(u))
        r1 = zk.fit_lumps(shifted, 2, base_lump_p2, zk.detect_peaks(shifted))
        assert r1.peaks[0][3] == pytest.approx(r0.peaks[0][3], rel=1e-6, abs=1e-12)
        assert r1.global_residual_rel == pytest.approx(r0.global_residual_rel, rel=1e-6, abs=1e-12)

    def test_empty_peaks_empty_result(self, base_lump_p2):
        g = base_lump_p2.grid
        u = zk.Field(g, np.zeros(g.shape))
        res = zk.fit_lumps(u, 2, base_lump_p2, [])
        assert res.peaks == [] and res.global_residual_rel == 0.0

    def test_requires_unit_base(self, base_lump_p2):
        g = base_lump_p2.grid
        u = zk.Field(g, np.zeros(g.shape))
        base2 = zk.rescale_lump(base_lump_p2, 2.0)
        with pytest.raises(ValueError, match="unit-speed"):
            zk.fit_lumps(u, 2, base2, [(0.0, 0.0, 1.0)])
