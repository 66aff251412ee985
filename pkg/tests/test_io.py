import numpy as np
import pytest

import zksim as zk
from zksim.cli import main as cli_main
from zksim.diagnostics import DiagnosticsSeries
from zksim.io import (
    ConfigError,
    ExperimentConfig,
    format_config,
    parse_config,
    read_series,
    read_snapshot,
    run_experiment,
    write_series,
    write_snapshot,
)

MINIMAL = """
p = 2
c = 1.0
Lx = 20
Ly = 1
Nx = 256
Ny = 8
t_end = 0.1
Nt = 50
"""

PAPER_STABLE = """
# stable subcritical setup
p = 2
c = 0.75
Lx = 250
Ly = 1
Nx = 32768
Ny = 128
t_end = 1.0
Nt = 2000
perturbation = gaussian
a = 0.1
b = 3
"""


class TestParseConfig:
    def test_minimal_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.perturbation == "none"
        assert cfg.dealias is False
        assert cfg.mass_stop_tol == 1e-3
        assert cfg.output_every is None
        assert cfg.snapshot_times == ()

    def test_paper_stable_setup(self):
        cfg = parse_config(PAPER_STABLE)
        assert (cfg.Nx, cfg.Ny) == (2**15, 2**7)
        assert cfg.c == 0.75 and cfg.a == 0.1 and cfg.b == 3.0
        assert cfg.grid().Lx == 250.0

    def test_invalid_power(self):
        with pytest.raises(ConfigError, match="p must be one of 2,3,4"):
            parse_config(MINIMAL.replace("p = 2", "p = 5"))

    def test_unknown_key_with_line_number(self):
        with pytest.raises(ConfigError, match="line 2.*frobnicate"):
            parse_config("p = 2\nfrobnicate = 1\n")

    def test_type_error_names_key_and_line(self):
        with pytest.raises(ConfigError, match="line 1.*'Nt'"):
            parse_config("Nt = soon\n")

    def test_missing_required(self):
        with pytest.raises(ConfigError, match="missing required keys"):
            parse_config("p = 2\nc = 1.0\n")

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config(MINIMAL + "p = 3\n")

    def test_comments_and_blanks_ignored(self):
        cfg = parse_config(MINIMAL + "# trailing comment\n\nlabel = demo # inline\n")
        assert cfg.label == "demo"

    def test_round_trip_lossless(self):
        cfg = parse_config(PAPER_STABLE + "snapshot_times = 0.25,0.5\nmass_stop_tol = 1e-4\n")
        assert parse_config(format_config(cfg)) == cfg

    def test_round_trip_awkward_floats(self):
        cfg = parse_config(MINIMAL.replace("c = 1.0", "c = 0.1") + "b = 0.30000000000000004\n")
        assert parse_config(format_config(cfg)) == cfg


class TestSnapshots:
    def test_round_trip_bitwise(self, tmp_path, rng):
        g = zk.Grid(Lx=3.0, Ly=2.0, Nx=32, Ny=16)
        u = zk.Field(g, rng.standard_normal(g.shape))
        path = tmp_path / "u.zksnap"
        write_snapshot(path, u, 0.625)
        back, t = read_snapshot(path)
        assert t == 0.625
        assert back.grid == g
        assert np.array_equal(back.values, u.values)

    def test_magic_checked(self, tmp_path):
        path = tmp_path / "bad.zksnap"
        path.write_bytes(b"NOTMAGIC" + b"\0" * 48)
        with pytest.raises(ValueError, match="bad magic"):
            read_snapshot(path)

    def test_truncated_rejected(self, tmp_path, rng):
        g = zk.Grid(Lx=1.0, Ly=1.0, Nx=16, Ny=16)
        path = tmp_path / "u.zksnap"
        write_snapshot(path, zk.Field(g, rng.standard_normal(g.shape)), 0.0)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ValueError, match="size"):
            read_snapshot(path)

    def test_layout_x_outer_little_endian(self, tmp_path):
        g = zk.Grid(Lx=1.0, Ly=1.0, Nx=4, Ny=4)
        vals = np.arange(16, dtype=float).reshape(4, 4)
        path = tmp_path / "u.zksnap"
        write_snapshot(path, zk.Field(g, vals), 0.0)
        raw = path.read_bytes()
        assert raw[:8] == b"ZKSNAP01"
        data = np.frombuffer(raw, dtype="<f8", offset=8 + 8 + 8 + 24)
        assert np.array_equal(data, np.arange(16.0))  # row-major, x outer


class TestSeriesFile:
    def _series(self, n=5):
        cols = [np.linspace(0, 1, n)]
        cols += [np.linspace(0, 1, n) * k for k in range(1, 10)]
        return DiagnosticsSeries(*cols)

    def test_column_contract(self, tmp_path):
        path = tmp_path / "series.csv"
        write_series(path, self._series())
        header = path.read_text().splitlines()[0]
        assert header == "t,sup_norm,mass,mean_integral,energy,ux_l2,peak_x,peak_y,fourier_tail,mass_rel_err"

    def test_round_trip_exact(self, tmp_path, rng):
        cols = [np.sort(rng.standard_normal(7))] + [rng.standard_normal(7) for _ in range(9)]
        series = DiagnosticsSeries(*cols)
        path = tmp_path / "series.csv"
        write_series(path, series)
        back = read_series(path)
        for name in DiagnosticsSeries.COLUMNS:
            assert np.array_equal(back.column(name), series.column(name))

    def test_wrong_columns_rejected(self, tmp_path):
        path = tmp_path / "series.csv"
        path.write_text("t,sup\n0,1\n")
        with pytest.raises(ValueError, match="columns"):
            read_series(path)


class TestRunExperiment:
    def _cfg(self, **over):
        base = dict(p=2, c=1.0, Lx=20.0, Ly=1.0, Nx=256, Ny=8, t_end=0.1, Nt=50,
                    label="t", snapshot_times=(0.05,))
        base.update(over)
        return ExperimentConfig(**base)

    def test_outputs_written(self, tmp_path):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result = run_experiment(self._cfg(), output_dir=tmp_path)
        assert (tmp_path / "series.csv").exists()
        assert (tmp_path / "run.meta").exists()
        assert (tmp_path / "final.zksnap").exists()
        assert (tmp_path / "snapshot_t0.050000.zksnap").exists()
        assert result.stop_reason == "completed"
        meta = (tmp_path / "run.meta").read_text()
        assert "stop_reason = completed" in meta
        assert "workers = 1" in meta

    def test_outputs_deterministic(self, tmp_path):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            run_experiment(self._cfg(), output_dir=tmp_path / "a")
            run_experiment(self._cfg(), output_dir=tmp_path / "b")
        for name in ("series.csv", "final.zksnap", "run.meta"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_zero_field_completes(self, tmp_path):
        cfg = self._cfg(c=1e-30)  # vanishing soliton is effectively zero data
        # build literal zero initial data through the solver API instead
        g = cfg.grid()
        res = zk.etdrk4_run(zk.Field(g, np.zeros(g.shape)), cfg.solver())
        assert res.stop_reason == "completed"
        assert res.series.sup_norm.max() == 0.0


class TestCli:
    def test_run_and_fit_soliton(self, tmp_path, capsys):
        cfg_text = MINIMAL + f"output_dir = {tmp_path}/run\n"
        cfg_file = tmp_path / "exp.cfg"
        cfg_file.write_text(cfg_text)
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            assert cli_main(["run", str(cfg_file)]) == 0
        out = capsys.readouterr().out
        assert "stop_reason=completed" in out
        assert cli_main(["fit-soliton", f"{tmp_path}/run/final.zksnap", "--p", "2"]) == 0
        line = capsys.readouterr().out.strip()
        assert line.startswith("fit-soliton c_F=")
        c_f = float(line.split("c_F=")[1].split()[0])
        assert c_f == pytest.approx(1.0, rel=1e-3)

    def test_groundstate_and_fit_lumps(self, tmp_path, capsys):
        assert cli_main([
            "groundstate", "--p", "2", "--c", "1", "--n", "256",
            "--half-period", "8", "--tol", "1e-10", "--output-dir", str(tmp_path),
        ]) == 0
        line = capsys.readouterr().out.strip()
        assert line.startswith("groundstate ")
        lump_file = line.split("file=")[1]
        u, t = read_snapshot(lump_file)
        assert t == 0.0 and u.values.max() == pytest.approx(2.3919564, abs=1e-5)

        # self-fit: the lump snapshot itself decomposes into one unit lump
        # only after the traveling-amplitude factor is applied, so scale it
        scaled = tmp_path / "scaled.zksnap"
        write_snapshot(scaled, zk.Field(u.grid, 2.0 * u.values), 0.0)
        assert cli_main([
            "fit-lumps", str(scaled), "--base", lump_file, "--p", "2",
            "--output-dir", str(tmp_path / "fits"),
        ]) == 0
        line = capsys.readouterr().out.strip()
        assert "n_peaks=1" in line
        assert (tmp_path / "fits" / "residual.zksnap").exists()
        resid, _ = read_snapshot(tmp_path / "fits" / "residual.zksnap")
        assert np.abs(resid.values).max() < 1e-7

    def test_fit_blowup_cli(self, tmp_path, capsys):
        t = np.linspace(1.0, 3.7, 64)
        sup = 10.0 ** 1.0 * (3.858 - t) ** (-0.7)
        z = np.zeros(64)
        series = DiagnosticsSeries(t, sup, z + 1, z, z, z, z, z, z, z)
        path = tmp_path / "series.csv"
        write_series(path, series)
        assert cli_main(["fit-blowup", str(path), "--min-amp-factor", "0"]) == 0
        line = capsys.readouterr().out.strip()
        assert "q=0.699999" in line or "q=0.7 " in line
        assert "t_star=3.85" in line

    def test_error_paths(self, tmp_path, capsys):
        assert cli_main(["fit-soliton", str(tmp_path / "missing.zksnap"), "--p", "2"]) == 1
        assert "error:" in capsys.readouterr().err
