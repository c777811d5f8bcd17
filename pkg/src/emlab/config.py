"""Typed experiment configuration with file and flag parsing.

A configuration is a flat set of uniquely named keys grouped into INI
sections.  Files use ``key = value`` syntax; command-line flags mirror the
keys one to one (``grid_n`` becomes ``--grid-n``) and override file values.
Every invariant is checked at parse time so a bad experiment fails before
any work starts, with the offending key named in the message.
"""
from __future__ import annotations

import configparser
import hashlib
import os
from dataclasses import dataclass, fields
from typing import Mapping

import numpy as np

from .energy import EnergyWeights
from .lindecay import GaussianFamily, QuadratureScheme

__all__ = ["ExperimentConfig", "parse_config", "canonical_text", "config_hash", "KEY_SECTIONS"]

COMMANDS = ("stationary", "evolve", "lyapunov", "lindecay")
PROFILES = ("gaussian", "double-bump")
INIT_MODES = ("stationary+noise", "stationary-exact", "custom")

# section -> keys, in the canonical serialization order
KEY_SECTIONS: dict[str, tuple[str, ...]] = {
    "run": ("command", "out_dir", "seed", "threads", "series", "out", "report"),
    "model": ("gamma",),
    "background": ("profile", "eps", "width"),
    "grid": ("grid_n", "box_l"),
    "stationary": ("tol",),
    "integrator": ("init", "init_snapshot", "amp", "t_end", "cfl", "cadence"),
    "energy": ("kappa1", "kappa2", "kappa3", "order"),
    "fit": ("fit_window", "rho_fit_window"),
    "lindecay": ("t_grid", "family_width", "radial_nodes", "theta_nodes", "phi_nodes"),
}
_KEY_TO_SECTION = {k: s for s, ks in KEY_SECTIONS.items() for k in ks}


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully validated description of one experiment run."""

    command: str = "stationary"
    out_dir: str = "runs"
    seed: int = 0
    threads: int = 1
    series: str = ""
    out: str = ""
    report: str = ""

    gamma: float = 5.0 / 3.0

    profile: str = "gaussian"
    eps: float = 0.05
    width: float = 1.0

    grid_n: int = 48
    box_l: float = 40.0

    tol: float = 1e-10

    init: str = "stationary+noise"
    init_snapshot: str = ""
    amp: float = 1e-3
    t_end: float = 40.0
    cfl: float = 0.4
    cadence: float = 0.5

    kappa1: float = 0.1
    kappa2: float = 0.005
    kappa3: float = 0.002
    order: int = 3

    fit_window: str = "50:500"
    rho_fit_window: str = "5:45"

    t_grid: str = "5:500:40"
    family_width: float = 2.0
    radial_nodes: int = 32
    theta_nodes: int = 16
    phi_nodes: int = 32

    def __post_init__(self) -> None:
        req = _require
        req(self.command in COMMANDS, "command", f"must be one of {COMMANDS}", self.command)
        req(bool(self.out_dir), "out_dir", "must be a non-empty path", self.out_dir)
        req(self.seed >= 0, "seed", "must be >= 0", self.seed)
        req(self.threads >= 1, "threads", "must be >= 1", self.threads)
        req(self.gamma > 1.0, "gamma", "must satisfy gamma > 1 (pressure law)", self.gamma)
        req(self.profile in PROFILES, "profile", f"must be one of {PROFILES}", self.profile)
        req(self.eps >= 0.0, "eps", "must be >= 0", self.eps)
        req(self.width > 0.0, "width", "must be positive", self.width)
        req(
            self.grid_n >= 8 and self.grid_n % 2 == 0,
            "grid_n", "must be even and >= 8", self.grid_n,
        )
        req(self.box_l > 0.0, "box_l", "must be positive", self.box_l)
        req(self.tol > 0.0, "tol", "must be positive", self.tol)
        req(self.init in INIT_MODES, "init", f"must be one of {INIT_MODES}", self.init)
        if self.init == "custom":
            req(bool(self.init_snapshot), "init_snapshot", "is required when init = custom", "")
        if self.init == "stationary+noise":
            req(self.amp > 0.0, "amp", "must be positive for a noise run", self.amp)
        req(self.t_end > 0.0, "t_end", "must be positive", self.t_end)
        req(0.0 < self.cfl < 1.0, "cfl", "must lie in (0, 1)", self.cfl)
        req(self.cadence > 0.0, "cadence", "must be positive", self.cadence)
        chunks = self.t_end / self.cadence
        req(
            abs(chunks - round(chunks)) < 1e-9 and round(chunks) >= 1,
            "cadence", f"must divide t_end = {self.t_end}", self.cadence,
        )
        # constructing the dependent objects runs their own named checks
        try:
            self.energy_weights()
            self.quadrature()
            self.family()
        except ValueError as err:
            raise ValueError(f"invalid config: {err}") from None
        self.fit_window_values()
        self.rho_fit_window_values()
        grid_t = self.time_grid()
        if self.command == "lindecay":
            for key, (lo, hi) in (
                ("fit_window", self.fit_window_values()),
                ("rho_fit_window", self.rho_fit_window_values()),
            ):
                inside = int(((grid_t >= lo) & (grid_t <= hi)).sum())
                req(
                    inside >= 10,
                    key, f"covers only {inside} t_grid samples; fits need >= 10",
                    getattr(self, key),
                )

    # ---- derived views -----------------------------------------------

    def energy_weights(self) -> EnergyWeights:
        return EnergyWeights(self.kappa1, self.kappa2, self.kappa3, self.order)

    def quadrature(self) -> QuadratureScheme:
        return QuadratureScheme(
            radial_nodes=self.radial_nodes,
            theta_nodes=self.theta_nodes,
            phi_nodes=self.phi_nodes,
        )

    def family(self) -> GaussianFamily:
        return GaussianFamily(width=self.family_width)

    def fit_window_values(self) -> tuple[float, float]:
        return _parse_window("fit_window", self.fit_window)

    def rho_fit_window_values(self) -> tuple[float, float]:
        return _parse_window("rho_fit_window", self.rho_fit_window)

    def time_grid(self) -> np.ndarray:
        """Expand t_grid: 'lo:hi:count' (log-spaced) or an explicit list."""
        text = self.t_grid
        parts = text.split(":")
        if len(parts) == 3:
            lo, hi = _as_float("t_grid", parts[0]), _as_float("t_grid", parts[1])
            count = _as_int("t_grid", parts[2])
            _require(0.0 < lo < hi, "t_grid", "needs 0 < lo < hi", text)
            _require(count >= 10, "t_grid", "needs count >= 10", text)
            return np.geomspace(lo, hi, count)
        values = np.array([_as_float("t_grid", p) for p in text.split(",")])
        _require(
            values.size >= 10 and (values > 0.0).all() and (np.diff(values) > 0.0).all(),
            "t_grid", "an explicit list needs >= 10 increasing positive times", text,
        )
        return values


def _require(ok: bool, key: str, constraint: str, value: object) -> None:
    if not ok:
        raise ValueError(f"invalid config: key {key} {constraint} (got {value!r})")


def _parse_window(key: str, text: str) -> tuple[float, float]:
    parts = text.split(":")
    _require(len(parts) == 2, key, "must look like 'lo:hi'", text)
    lo, hi = _as_float(key, parts[0]), _as_float(key, parts[1])
    _require(0.0 <= lo < hi, key, "needs 0 <= lo < hi", text)
    return lo, hi


def _as_float(key: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"invalid config: key {key} expects a number, got {text!r}") from None


def _as_int(key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"invalid config: key {key} expects an integer, got {text!r}") from None


def _cast(key: str, text: str) -> object:
    kind = ExperimentConfig.__dataclass_fields__[key].type
    text = text.strip()
    if kind == "int":
        return _as_int(key, text)
    if kind == "float":
        return _as_float(key, text)
    return text


def parse_config(
    path: str | os.PathLike | None = None,
    overrides: Mapping[str, str] | None = None,
) -> ExperimentConfig:
    """Build a validated config from an optional file plus flag overrides.

    Unknown keys, keys in the wrong section, unparseable values, and
    invariant violations all raise ValueError naming the offender.
    """
    values: dict[str, object] = {}
    if path is not None:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as err:
            raise ValueError(f"cannot read config file {path}: {err}") from None
        except configparser.Error as err:
            raise ValueError(f"malformed config file {path}: {err}") from None
        for section in parser.sections():
            if section not in KEY_SECTIONS:
                raise ValueError(f"unknown config section [{section}] in {path}")
            for key, raw in parser.items(section):
                home = _KEY_TO_SECTION.get(key)
                if home is None:
                    raise ValueError(f"unknown config key {key!r} in section [{section}]")
                if home != section:
                    raise ValueError(f"config key {key!r} belongs in section [{home}]")
                values[key] = _cast(key, raw)
    for key, raw in (overrides or {}).items():
        if key not in _KEY_TO_SECTION:
            raise ValueError(f"unknown config key {key!r}")
        values[key] = _cast(key, str(raw))
    return ExperimentConfig(**values)


def canonical_text(cfg: ExperimentConfig) -> str:
    """Deterministic full serialization; hashing it identifies the run."""
    lines = []
    for section, keys in KEY_SECTIONS.items():
        lines.append(f"[{section}]")
        for key in keys:
            lines.append(f"{key} = {getattr(cfg, key)!r}")
        lines.append("")
    return "\n".join(lines)


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(canonical_text(cfg).encode("utf-8")).hexdigest()


def _check_fields_cover_schema() -> None:
    declared = {f.name for f in fields(ExperimentConfig)}
    schema = set(_KEY_TO_SECTION)
    if declared != schema:
        raise AssertionError(f"schema drift: {declared ^ schema}")


_check_fields_cover_schema()
