"""Experiment configuration, run orchestration and bit-exact file formats.

Formats (all little-endian, all text UTF-8):

* config: flat ``key = value`` lines, ``#`` comments, no nesting;
* ``series.csv``: the diagnostics columns in fixed order, 17 significant
  digits so values round-trip exactly;
* ``ZKSNAP01`` snapshots: 8-byte ASCII magic, u64 Nx, u64 Ny, f64 Lx, f64 Ly,
  f64 t, then Nx*Ny f64 samples with x as the outer index;
* ``run.meta``: config echo plus stop reason, final time and versions.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import DiagnosticsSeries
from .initial_data import PerturbationSpec, SolitonParams, build_initial_data
from .spectral import Field, Grid
from .stepper import RunResult, SolverConfig, etdrk4_run

SNAPSHOT_MAGIC = b"ZKSNAP01"
_HEADER = struct.Struct("<QQddd")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one run, round-trippable through text."""

    p: int
    c: float
    Lx: float
    Ly: float
    Nx: int
    Ny: int
    t_end: float
    Nt: int
    x0: float = 0.0
    perturbation: str = "none"
    a: float = 0.0
    b: float = 1.0
    delta: float = 0.0
    output_every: int | None = None
    snapshot_times: tuple[float, ...] = ()
    mass_stop_tol: float = 1e-3
    dealias: bool = False
    workers: int = 1
    label: str = "run"
    output_dir: str = ""

    def grid(self) -> Grid:
        return Grid(Lx=self.Lx, Ly=self.Ly, Nx=self.Nx, Ny=self.Ny)

    def soliton(self) -> SolitonParams:
        return SolitonParams(p=self.p, c=self.c, x0=self.x0)

    def perturbation_spec(self) -> PerturbationSpec:
        return PerturbationSpec(kind=self.perturbation, a=self.a, b=self.b, delta=self.delta)

    def solver(self) -> SolverConfig:
        return SolverConfig(
            p=self.p, grid=self.grid(), t_end=self.t_end, Nt=self.Nt,
            output_every=self.output_every, snapshot_times=self.snapshot_times,
            mass_stop_tol=self.mass_stop_tol, dealias=self.dealias, workers=self.workers,
        )


_REQUIRED = ("p", "c", "Lx", "Ly", "Nx", "Ny", "t_end", "Nt")

_PARSERS = {
    "p": int, "Nx": int, "Ny": int, "Nt": int, "workers": int,
    "c": float, "Lx": float, "Ly": float, "t_end": float, "x0": float,
    "a": float, "b": float, "delta": float, "mass_stop_tol": float,
    "perturbation": str, "label": str, "output_dir": str,
}


def _parse_bool(s: str) -> bool:
    low = s.lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _parse_times(s: str) -> tuple[float, ...]:
    s = s.strip()
    if not s:
        return ()
    return tuple(float(tok) for tok in s.split(","))


def _parse_output_every(s: str) -> int | None:
    return None if s.lower() in ("", "none", "auto") else int(s)


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat ``key = value`` format; unknown keys are errors."""
    raw: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            if key in _PARSERS:
                raw[key] = _PARSERS[key](value)
            elif key == "dealias":
                raw[key] = _parse_bool(value)
            elif key == "snapshot_times":
                raw[key] = _parse_times(value)
            elif key == "output_every":
                raw[key] = _parse_output_every(value)
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc

    missing = [k for k in _REQUIRED if k not in raw]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")

    cfg = ExperimentConfig(**raw)  # type: ignore[arg-type]
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.p not in (2, 3, 4):
        raise ConfigError("p must be one of 2,3,4")
    try:
        cfg.grid()
        cfg.soliton()
        cfg.perturbation_spec()
        cfg.solver()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def format_config(cfg: ExperimentConfig) -> str:
    """Inverse of parse_config; floats carry 17 significant digits."""
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if f.name == "snapshot_times":
            v = ",".join(f"{x:.17g}" for x in v)
        elif f.name == "output_every":
            v = "auto" if v is None else str(v)
        elif isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = f"{v:.17g}"
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


# ---------------------------------------------------------------------------
# Snapshots and series
# ---------------------------------------------------------------------------

def write_snapshot(path: str | Path, u: Field, t: float) -> None:
    g = u.grid
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(_HEADER.pack(g.Nx, g.Ny, g.Lx, g.Ly, t))
        fh.write(np.ascontiguousarray(u.values, dtype="<f8").tobytes())


def read_snapshot(path: str | Path) -> tuple[Field, float]:
    data = Path(path).read_bytes()
    if data[:8] != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: bad magic {data[:8]!r}, expected {SNAPSHOT_MAGIC!r}")
    nx, ny, lx, ly, t = _HEADER.unpack_from(data, 8)
    expected = 8 + _HEADER.size + nx * ny * 8
    if len(data) != expected:
        raise ValueError(f"{path}: size {len(data)} does not match header ({expected} expected)")
    vals = np.frombuffer(data, dtype="<f8", offset=8 + _HEADER.size).reshape(nx, ny).copy()
    return Field(Grid(Lx=lx, Ly=ly, Nx=nx, Ny=ny), vals), t


def write_series(path: str | Path, series: DiagnosticsSeries) -> None:
    cols = DiagnosticsSeries.COLUMNS
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in zip(*(series.column(c) for c in cols)):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_series(path: str | Path) -> DiagnosticsSeries:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != DiagnosticsSeries.COLUMNS:
            raise ValueError(f"{path}: unexpected columns {header}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        raise ValueError(f"{path}: empty series")
    return DiagnosticsSeries(*(data[:, i] for i in range(len(DiagnosticsSeries.COLUMNS))))


def write_run_meta(path: str | Path, cfg: ExperimentConfig, result: RunResult) -> None:
    lines = [format_config(cfg).rstrip("\n")]
    lines.append(f"stop_reason = {result.stop_reason}")
    lines.append(f"final_t = {result.final_t:.17g}")
    lines.append(f"samples = {len(result.series)}")
    lines.append(f"zksim_version = {__version__}")
    lines.append(f"numpy_version = {np.__version__}")
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------

def run_experiment(cfg: ExperimentConfig, output_dir: str | Path | None = None) -> RunResult:
    """build_initial_data -> etdrk4_run -> series.csv + snapshots + run.meta.

    Outputs are byte-identical across repeat runs of the same configuration
    and worker count. Returns the in-memory result as well.
    """
    _validate(cfg)
    out = Path(output_dir) if output_dir is not None else Path(cfg.output_dir or f"runs/{cfg.label}")
    out.mkdir(parents=True, exist_ok=True)

    grid = cfg.grid()
    u0 = build_initial_data(cfg.soliton(), cfg.perturbation_spec(), grid)
    result = etdrk4_run(u0, cfg.solver())

    write_series(out / "series.csv", result.series)
    for t, snap in result.snapshots:
        write_snapshot(out / f"snapshot_t{t:.6f}.zksnap", snap, t)
    write_snapshot(out / "final.zksnap", result.final_field, result.final_t)
    write_run_meta(out / "run.meta", cfg, result)
    return result
