"""Experiment pipelines: the work behind each CLI subcommand.

Each pipeline takes a validated ExperimentConfig, writes its outputs under
cfg.out_dir, and returns a RunManifest summarizing the in-run checks.  All
physics is deterministic; the seed only shapes initial perturbation noise,
so rerunning a config reproduces every CSV byte for byte in serial mode.
"""
from __future__ import annotations

import json
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import fft as sp_fft

from . import __version__
from .config import ExperimentConfig, canonical_text, config_hash
from .dynamics import (
    ELEC,
    MAG,
    SCALAR,
    VEL,
    cfl_dt,
    compatible_perturbation,
    constraint_residuals,
    integrate_fixed,
    rhs_symmetric,
)
from .energy import energy_report, lyapunov_certify
from .grid import GridSpec
from .lindecay import decay_trajectory, fit_decay
from .snapshot import read_snapshot, write_snapshot
from .stationary import StationaryState, background_profile, picard_iterate, verify_smallness_bounds

__all__ = [
    "RunManifest",
    "emit_series",
    "emit_report",
    "run_stationary",
    "run_evolve",
    "run_lyapunov",
    "run_lindecay",
    "run_experiment",
]

SERIES_COLUMNS = (
    "t",
    "energy_full",
    "dissipation_full",
    "energy_high",
    "dissipation_high",
    "int1",
    "int2",
    "int3",
    "gauss_e",
    "gauss_b",
    "norm_sigma",
    "norm_v",
    "norm_e",
    "norm_b",
)

# channel -> (fit kind, window key, target exponent, tolerance)
DECAY_TARGETS = {
    "rho": ("exponential", "rho", -0.5, 0.05),
    "u": ("power", "main", -1.25, 0.10),
    "e": ("power", "main", -1.25, 0.10),
    "b": ("power", "main", -0.75, 0.08),
    "grad_b": ("power", "main", -1.25, 0.10),
}


@dataclass
class RunManifest:
    """Reproducibility record written at the end of every run."""

    command: str
    config_hash: str
    code_version: str
    wall_clock_s: float = 0.0
    checks: dict[str, bool] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    notes: dict[str, object] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def write(self, path: str | os.PathLike) -> None:
        payload = asdict(self)
        payload["passed"] = self.passed
        emit_report(path, payload)


def _atomic_write_text(path: str | os.PathLike, text: str) -> None:
    dest_dir = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=dest_dir, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_series(path: str | os.PathLike, columns: tuple[str, ...], rows: list) -> None:
    """CSV with a fixed column order and 17-significant-digit floats."""
    lines = [",".join(columns)]
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row of width {len(row)} against {len(columns)} columns")
        lines.append(",".join("%.17g" % float(v) for v in row))
    try:
        _atomic_write_text(path, "\n".join(lines) + "\n")
    except OSError as err:
        raise OSError(f"cannot write series {path}: {err}") from err


def _json_default(value):
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialize {type(value).__name__} in a report")


def emit_report(path: str | os.PathLike, payload: dict) -> None:
    """JSON report with stable key order."""
    text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default)
    try:
        _atomic_write_text(path, text + "\n")
    except OSError as err:
        raise OSError(f"cannot write report {path}: {err}") from err


def _prepare_out_dir(cfg: ExperimentConfig) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    _atomic_write_text(os.path.join(cfg.out_dir, "config.resolved.ini"), canonical_text(cfg))
    return cfg.out_dir


def _vector_norm(grid: GridSpec, vec: np.ndarray) -> float:
    return float(np.sqrt(sum(grid.l2_norm(vec[c]) ** 2 for c in range(3))))


def _solve_background(cfg: ExperimentConfig) -> tuple[GridSpec, np.ndarray, StationaryState]:
    grid = GridSpec(cfg.grid_n, cfg.box_l)
    n_b = background_profile(grid, cfg.profile, cfg.eps, cfg.width)
    state = picard_iterate(grid, n_b, cfg.gamma, tol=cfg.tol)
    return grid, n_b, state


def _base_symmetric(state: StationaryState, gamma: float) -> np.ndarray:
    base = np.zeros((10,) + state.grid.shape)
    base[SCALAR] = state.sigma_st
    base[ELEC] = state.e_st / np.sqrt(gamma)
    return base


SYMMETRIC_FIELDS = (
    "sigma", "v_x", "v_y", "v_z", "e_x", "e_y", "e_z", "b_x", "b_y", "b_z",
)


def _state_fields(state: np.ndarray) -> dict[str, np.ndarray]:
    return {name: state[i] for i, name in enumerate(SYMMETRIC_FIELDS)}


# ---- subcommand pipelines ---------------------------------------------


def run_stationary(cfg: ExperimentConfig) -> RunManifest:
    out_dir = _prepare_out_dir(cfg)
    manifest = RunManifest("stationary", config_hash(cfg), __version__)
    grid, n_b, state = _solve_background(cfg)

    # sweeps that moved nothing mean the trivial solution was already exact
    corrective = sum(1 for r in state.residual_history if r > 0.0)
    trivial = corrective == 0
    worst_factor = max(state.contraction_factors, default=0.0)
    report: dict[str, object] = {
        "iterations": corrective,
        "trivial_solution": trivial,
        "converged": state.converged,
        "contraction_factor": worst_factor,
        "elliptic_residual_l2": state.elliptic_residual_l2,
        "elliptic_residual_max": state.elliptic_residual_max,
        "curl_e_max": state.curl_e_max,
        "residual_history": state.residual_history,
    }
    if trivial:
        report["ratios"] = None
    else:
        report["ratios"] = verify_smallness_bounds(grid, n_b, state)

    snap_path = cfg.out or os.path.join(out_dir, "stationary.emxf")
    report_path = cfg.report or os.path.join(out_dir, "stationary.json")
    write_snapshot(snap_path, grid, state.fields())
    emit_report(report_path, report)

    manifest.checks = {
        "picard_converged": state.converged,
        "contracting": trivial or worst_factor < 1.0,
        "elliptic_residual_small": state.elliptic_residual_l2 <= 1e-6,
        "electric_field_curl_free": state.curl_e_max <= 1e-8,
    }
    manifest.outputs = [snap_path, report_path]
    manifest.notes = {"iterations": corrective, "trivial_solution": trivial}
    return manifest


def run_evolve(cfg: ExperimentConfig) -> RunManifest:
    out_dir = _prepare_out_dir(cfg)
    manifest = RunManifest("evolve", config_hash(cfg), __version__)
    grid, n_b, state = _solve_background(cfg)
    base = _base_symmetric(state, cfg.gamma)

    if cfg.init == "stationary-exact":
        y0 = base.copy()
    elif cfg.init == "stationary+noise":
        y0 = base + compatible_perturbation(
            grid, cfg.gamma, state.sigma_st, cfg.amp, seed=cfg.seed
        )
    else:
        snap_grid, fields = read_snapshot(cfg.init_snapshot)
        if (snap_grid.n, snap_grid.box) != (grid.n, grid.box):
            raise ValueError(
                f"snapshot grid {snap_grid.n}/{snap_grid.box} does not match "
                f"configured grid {grid.n}/{grid.box}"
            )
        missing = [f for f in SYMMETRIC_FIELDS if f not in fields]
        if missing:
            raise ValueError(f"snapshot {cfg.init_snapshot} lacks fields {missing}")
        y0 = np.stack([fields[f] for f in SYMMETRIC_FIELDS])

    # the symmetric system runs in rescaled time; outputs report physical t
    root_g = np.sqrt(cfg.gamma)
    rhs = lambda y: rhs_symmetric(grid, cfg.gamma, y)
    dt_cap = lambda y: cfl_dt(grid, cfg.gamma, y, cfg.cfl)
    weights = cfg.energy_weights()

    rows = []
    max_v_norm = 0.0
    max_gauss = 0.0
    max_gauss_full = 0.0
    y_final = y0
    for tau, y in integrate_fixed(y0, rhs, cfg.t_end * root_g, dt_cap, cfg.cadence * root_g):
        pert = y - base
        rep = energy_report(grid, pert, state.sigma_st, cfg.gamma, weights)
        res = constraint_residuals(
            grid, cfg.gamma, y, n_b=n_b, form="symmetric", band_limited=True
        )
        full = constraint_residuals(grid, cfg.gamma, y, n_b=n_b, form="symmetric")
        norm_v = _vector_norm(grid, pert[VEL])
        rows.append((
            tau / root_g,
            rep["energy_full"], rep["dissipation_full"],
            rep["energy_high"], rep["dissipation_high"],
            rep["int1"], rep["int2"], rep["int3"],
            res["gauss_e_l2"], res["gauss_b_l2"],
            grid.l2_norm(pert[SCALAR]), norm_v,
            _vector_norm(grid, pert[ELEC]), _vector_norm(grid, pert[MAG]),
        ))
        max_v_norm = max(max_v_norm, norm_v)
        max_gauss = max(max_gauss, res["gauss_e_l2"], res["gauss_b_l2"])
        max_gauss_full = max(max_gauss_full, full["gauss_e_l2"], full["gauss_b_l2"])
        y_final = y

    series_path = os.path.join(out_dir, "series.csv")
    final_path = os.path.join(out_dir, "state_final.emxf")
    emit_series(series_path, SERIES_COLUMNS, rows)
    write_snapshot(final_path, grid, _state_fields(y_final))

    finite = all(np.isfinite(row).all() for row in np.asarray(rows))
    manifest.checks = {
        "all_samples_finite": bool(finite),
        "gauss_laws_transported": max_gauss <= 1e-6,
    }
    if cfg.init == "stationary-exact":
        manifest.checks["equilibrium_fixed"] = max_v_norm <= 1e-8 and max_gauss <= 1e-8
    manifest.outputs = [series_path, final_path]
    manifest.notes = {
        "samples": len(rows),
        "max_norm_v": max_v_norm,
        "max_gauss": max_gauss,
        "max_gauss_full_spectrum": max_gauss_full,
    }
    return manifest


def run_lyapunov(cfg: ExperimentConfig) -> RunManifest:
    out_dir = _prepare_out_dir(cfg)
    manifest = RunManifest("lyapunov", config_hash(cfg), __version__)
    if not cfg.series:
        raise ValueError("lyapunov requires series = <path to a series.csv>")
    try:
        data = np.genfromtxt(cfg.series, delimiter=",", names=True)
    except (OSError, ValueError) as err:
        raise ValueError(f"cannot read series {cfg.series}: {err}") from None
    if data.shape == () or data.size < 2:
        raise ValueError(f"series {cfg.series} holds fewer than two samples")

    results = {}
    for label, e_col, d_col in (
        ("full", "energy_full", "dissipation_full"),
        ("high", "energy_high", "dissipation_high"),
    ):
        cert = lyapunov_certify(data["t"], data[e_col], data[d_col])
        results[label] = {
            "lambda_best": cert.lambda_best,
            "lambda_strict": cert.lambda_strict,
            "tol_disc": cert.tol_disc,
            "violations": list(cert.violations),
            "certified": cert.certified,
        }

    report_path = cfg.report or os.path.join(out_dir, "lyapunov.json")
    emit_report(report_path, {"series": str(cfg.series), **results})
    manifest.checks = {
        "full_pair_certified": results["full"]["certified"],
        "high_pair_certified": results["high"]["certified"],
    }
    manifest.outputs = [report_path]
    manifest.notes = {"samples": int(data.size)}
    return manifest


def run_lindecay(cfg: ExperimentConfig) -> RunManifest:
    out_dir = _prepare_out_dir(cfg)
    manifest = RunManifest("lindecay", config_hash(cfg), __version__)
    times = cfg.time_grid()
    traj = decay_trajectory(cfg.family(), cfg.gamma, times, cfg.quadrature())

    windows = {"main": cfg.fit_window_values(), "rho": cfg.rho_fit_window_values()}
    fits: dict[str, dict[str, object]] = {}
    for channel, (kind, window_key, target, tolerance) in DECAY_TARGETS.items():
        window = windows[window_key]
        fit = fit_decay(times, traj.norms[channel], window, target, tolerance, kind)
        fits[channel] = {
            "exponent": fit.exponent,
            "intercept": fit.intercept,
            "residual": fit.residual,
            "window": list(window),
            "n_samples": fit.n_samples,
            "kind": kind,
            "target": target,
            "tolerance": tolerance,
            "verdict": "pass" if fit.passed else "fail",
        }
        manifest.checks[f"fit_{channel}"] = bool(fit.passed)

    csv_path = cfg.out or os.path.join(out_dir, "norms.csv")
    report_path = cfg.report or os.path.join(out_dir, "decay_fits.json")
    channels = tuple(DECAY_TARGETS)
    rows = [
        (t, *(traj.norms[c][i] for c in channels)) for i, t in enumerate(times)
    ]
    emit_series(csv_path, ("t", *channels), rows)
    emit_report(report_path, {"quadrature_tail_bound": traj.tail_bound, "fits": fits})

    manifest.outputs = [csv_path, report_path]
    manifest.notes = {"samples": int(times.size), "tail_bound": traj.tail_bound}
    return manifest


_PIPELINES = {
    "stationary": run_stationary,
    "evolve": run_evolve,
    "lyapunov": run_lyapunov,
    "lindecay": run_lindecay,
}


def run_experiment(cfg: ExperimentConfig) -> RunManifest:
    """Dispatch to the configured subcommand and write the manifest."""
    start = time.perf_counter()
    with sp_fft.set_workers(cfg.threads):
        manifest = _PIPELINES[cfg.command](cfg)
    manifest.wall_clock_s = time.perf_counter() - start
    manifest.write(os.path.join(cfg.out_dir, "manifest.json"))
    return manifest
