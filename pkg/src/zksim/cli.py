"""Command line front end.

Subcommands: ``run`` (evolve a config file), ``groundstate`` (compute and
save a lump), and the fitters ``fit-blowup``, ``fit-soliton``, ``fit-lumps``,
each of which prints a single-line structured result of the form
``<command> key=value ...`` that downstream tools can parse.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import analysis, initial_data, io
from .spectral import Field, forward_transform


def _emit(args, command: str, pairs: list[tuple[str, object]]) -> None:
    def fmt(v) -> str:
        if isinstance(v, float):
            return f"{v:.17g}"
        return str(v)

    line = command + " " + " ".join(f"{k}={fmt(v)}" for k, v in pairs)
    print(line)
    if args.output_dir:
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{command}.txt").write_text(line + "\n")


def _cmd_run(args) -> int:
    cfg = io.load_config(args.config)
    result = io.run_experiment(cfg, output_dir=args.output_dir)
    out = Path(args.output_dir) if args.output_dir else Path(cfg.output_dir or f"runs/{cfg.label}")
    print(
        f"run stop_reason={result.stop_reason} final_t={result.final_t:.17g} "
        f"samples={len(result.series)} output={out}"
    )
    return 0


def _cmd_groundstate(args) -> int:
    grid = None
    if args.half_period is not None:
        n = args.n
        grid = initial_data.Grid(Lx=args.half_period, Ly=args.half_period, Nx=n, Ny=n)
    elif args.n != 512:
        scale = 10.0 / np.sqrt(args.c)
        grid = initial_data.Grid(Lx=scale, Ly=scale, Nx=args.n, Ny=args.n)
    lump = initial_data.petviashvili(args.p, args.c, grid=grid, tol=args.tol)
    out = Path(args.output_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"lump_p{args.p}_c{args.c:g}.zksnap"
    io.write_snapshot(path, lump.values, 0.0)
    _emit(args, "groundstate", [
        ("p", lump.p), ("c", lump.c), ("peak", lump.peak_amplitude),
        ("residual", lump.residual), ("file", path),
    ])
    return 0


def _cmd_fit_blowup(args) -> int:
    series = io.read_series(args.series)
    policy = analysis.WindowPolicy(
        max_mass_rel_err=args.max_mass_rel_err,
        min_amp_factor=args.min_amp_factor,
        max_samples=args.max_samples,
    )
    fit = analysis.fit_blowup(series, policy)
    _emit(args, "fit-blowup", [
        ("t_star", fit.t_star), ("q", fit.q), ("r", fit.r),
        ("rms_residual", fit.rms_residual),
        ("window", f"{fit.window[0]}:{fit.window[1]}"),
        ("n", fit.window[1] - fit.window[0] + 1),
    ])
    return 0


def _cmd_fit_soliton(args) -> int:
    u, t = io.read_snapshot(args.snapshot)
    c_f = analysis.fit_soliton_speed(u, args.p)
    _emit(args, "fit-soliton", [("c_F", c_f), ("t", t), ("p", args.p)])
    return 0


def _load_base_lump(path: str, p: int) -> initial_data.LumpProfile:
    u, _ = io.read_snapshot(path)
    q_hat = forward_transform(u).coeffs
    defect = initial_data._stationary_defect(u.grid, q_hat, u.values**p, 1.0)
    return initial_data.LumpProfile(u.grid, u, 1.0, p, float(np.abs(defect).max()))


def _cmd_fit_lumps(args) -> int:
    u, t = io.read_snapshot(args.snapshot)
    base = _load_base_lump(args.base, args.p)
    peaks = analysis.detect_peaks(u, threshold_frac=args.threshold, min_separation=args.min_separation)
    fit = analysis.fit_lumps(u, args.p, base, peaks)
    if args.output_dir:
        residual = u.values.copy()
        for px, py, c, _ in fit.peaks:
            residual -= analysis.lump_field_at(base, c, u.grid, px, py)
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        io.write_snapshot(out / "residual.zksnap", Field(u.grid, residual), t)
    peaks_txt = ";".join(f"{x:.6g}:{y:.6g}:{c:.6g}:{res:.3g}" for x, y, c, res in fit.peaks)
    _emit(args, "fit-lumps", [
        ("n_peaks", len(fit.peaks)),
        ("global_residual_rel", fit.global_residual_rel),
        ("t", t),
        ("peaks", peaks_txt or "-"),
    ])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zksim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="evolve an experiment config file")
    p_run.add_argument("config")
    p_run.add_argument("--output-dir", default=None)
    p_run.set_defaults(func=_cmd_run)

    p_gs = sub.add_parser("groundstate", help="compute a lump ground state")
    p_gs.add_argument("--p", type=int, required=True, choices=(2, 3, 4))
    p_gs.add_argument("--c", type=float, default=1.0)
    p_gs.add_argument("--n", type=int, default=512, help="grid points per direction")
    p_gs.add_argument("--half-period", type=float, default=None,
                      help="grid half-period scale (default 10/sqrt(c))")
    p_gs.add_argument("--tol", type=float, default=1e-12)
    p_gs.add_argument("--output-dir", default=None)
    p_gs.set_defaults(func=_cmd_groundstate)

    p_fb = sub.add_parser("fit-blowup", help="power-law fit of a sup-norm series")
    p_fb.add_argument("series")
    p_fb.add_argument("--max-mass-rel-err", type=float, default=1e-4)
    p_fb.add_argument("--min-amp-factor", type=float, default=2.0)
    p_fb.add_argument("--max-samples", type=int, default=40_000)
    p_fb.add_argument("--output-dir", default=None)
    p_fb.set_defaults(func=_cmd_fit_blowup)

    p_fs = sub.add_parser("fit-soliton", help="line-soliton speed from a snapshot")
    p_fs.add_argument("snapshot")
    p_fs.add_argument("--p", type=int, required=True, choices=(2, 3, 4))
    p_fs.add_argument("--output-dir", default=None)
    p_fs.set_defaults(func=_cmd_fit_soliton)

    p_fl = sub.add_parser("fit-lumps", help="multi-lump decomposition of a snapshot")
    p_fl.add_argument("snapshot")
    p_fl.add_argument("--base", required=True, help="unit-speed lump snapshot")
    p_fl.add_argument("--p", type=int, required=True, choices=(2, 3, 4))
    p_fl.add_argument("--threshold", type=float, default=0.3)
    p_fl.add_argument("--min-separation", type=float, default=1.0)
    p_fl.add_argument("--output-dir", default=None)
    p_fl.set_defaults(func=_cmd_fit_lumps)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, initial_data.ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
