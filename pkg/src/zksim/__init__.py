"""Pseudospectral study of line-soliton stability for the 2D generalized
Zakharov-Kuznetsov equation u_t + (u_xx + u_yy + u^p)_x = 0 on a torus."""

__version__ = "0.1.0"

from .spectral import Field, Grid, SpectralField, dealias, forward_transform, fourier_tail, inverse_transform, spectral_derivative
from .initial_data import (
    LumpProfile,
    PerturbationSpec,
    SolitonParams,
    build_initial_data,
    critical_speed_p2,
    line_soliton,
    petviashvili,
    rescale_lump,
)
from .stepper import RunResult, SolverConfig, etdrk4_run, etdrk4_tables, linear_symbol, nonlinear_term
from .diagnostics import DiagnosticsSeries, energy, extract_L, mass, mean_integral, sup_norm_refined, ux_l2
from .analysis import BlowupFit, LumpFitResult, WindowPolicy, detect_peaks, fit_blowup, fit_lumps, fit_soliton_speed
from .io import ExperimentConfig, parse_config, read_series, read_snapshot, run_experiment, write_snapshot

__all__ = [
    "Field", "Grid", "SpectralField", "dealias", "forward_transform", "fourier_tail",
    "inverse_transform", "spectral_derivative",
    "LumpProfile", "PerturbationSpec", "SolitonParams", "build_initial_data",
    "critical_speed_p2", "line_soliton", "petviashvili", "rescale_lump",
    "RunResult", "SolverConfig", "etdrk4_run", "etdrk4_tables", "linear_symbol", "nonlinear_term",
    "DiagnosticsSeries", "energy", "extract_L", "mass", "mean_integral", "sup_norm_refined", "ux_l2",
    "BlowupFit", "LumpFitResult", "WindowPolicy", "detect_peaks", "fit_blowup", "fit_lumps",
    "fit_soliton_speed",
    "ExperimentConfig", "parse_config", "read_series", "read_snapshot", "run_experiment",
    "write_snapshot",
]
