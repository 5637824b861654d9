"""Run configuration: INI-style files with named sections and strict keys.

Every value has a default mirroring the reference numerical experiment, so a
missing file or an empty section still produces a complete, valid setup.
Unknown sections or keys are rejected outright rather than ignored.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, replace
from pathlib import Path

from .mc import McConfig
from .model import ModelParams, ParameterError, validate_params
from .solver import Grid, SolverConfig

__all__ = ["ConfigError", "RunConfig", "load_run_config", "DEFAULTS"]


class ConfigError(ValueError):
    """Bad configuration: unknown names, unparsable or inadmissible values."""


DEFAULTS = {
    "model": {
        "r": "0.05",
        "delta": "0.03",
        "sigma_h": "0.2",
        "sigma_l": "0.3",
        "gamma": "0.6",
    },
    "grid": {
        "xi_min": "-5.0",
        "xi_max": "5.0",
        "dxi": "0.001",
        "dt": "0.01",
        "t_final": "200.0",
    },
    "solver": {
        "eps_penalty": "1e-8",
        "eps_heaviside": "1e-8",
        "tol_newton": "1e-4",
        "max_newton_iters": "50",
    },
    "mc": {
        "n_paths": "100000",
        "maturity": "1.0",
        "s0": "2.0",
        "seed": "12345",
        "dt_sim": "",  # empty means maturity / 2000
    },
    "output": {
        "snapshots": "0,50,100,150,200",
        "tw_samples": "1001",
        "figures": "true",
    },
}

_BOOL_VALUES = {"true": True, "yes": True, "on": True, "1": True,
                "false": False, "no": False, "off": False, "0": False}


@dataclass(frozen=True)
class RunConfig:
    """Validated run setup assembled from the section owners' own types."""

    model: ModelParams
    grid: Grid
    solver: SolverConfig
    mc: McConfig
    snapshots: tuple[float, ...]
    tw_samples: int
    figures: bool

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, mc=replace(self.mc, seed=seed))

    def with_snapshots(self, snapshots) -> "RunConfig":
        return replace(self, snapshots=tuple(float(t) for t in snapshots))


def _merge(path: str | Path | None) -> dict[str, dict[str, str]]:
    merged = {section: dict(values) for section, values in DEFAULTS.items()}
    if path is None:
        return merged
    parser = configparser.ConfigParser()
    read = parser.read(str(path))
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    for section in parser.sections():
        if section not in merged:
            raise ConfigError(
                f"unknown section [{section}]; expected one of "
                f"{sorted(merged)}")
        for key, value in parser.items(section):
            if key not in merged[section]:
                raise ConfigError(
                    f"unknown key '{key}' in section [{section}]; expected "
                    f"one of {sorted(merged[section])}")
            merged[section][key] = value
    return merged


def _float(section, key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(
            f"[{section}] {key} must be a number, got {raw!r}") from None


def _int(section, key, raw):
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(
            f"[{section}] {key} must be an integer, got {raw!r}") from None


def _bool(section, key, raw):
    try:
        return _BOOL_VALUES[str(raw).strip().lower()]
    except KeyError:
        raise ConfigError(
            f"[{section}] {key} must be a boolean, got {raw!r}") from None


def _snapshot_list(raw: str) -> tuple[float, ...]:
    raw = raw.strip()
    if not raw:
        return ()
    try:
        return tuple(float(tok) for tok in raw.split(","))
    except ValueError:
        raise ConfigError(
            f"[output] snapshots must be comma-separated numbers, got "
            f"{raw!r}") from None


def load_run_config(path: str | Path | None = None) -> RunConfig:
    """Parse, merge with defaults, and validate a run configuration.

    Any violation (unknown name, bad literal, inadmissible model or solver
    value) raises ConfigError before any solving starts.
    """
    raw = _merge(path)

    model = ModelParams(
        r=_float("model", "r", raw["model"]["r"]),
        delta=_float("model", "delta", raw["model"]["delta"]),
        sigma_h=_float("model", "sigma_h", raw["model"]["sigma_h"]),
        sigma_l=_float("model", "sigma_l", raw["model"]["sigma_l"]),
        gamma=_float("model", "gamma", raw["model"]["gamma"]),
    )
    try:
        validate_params(model)
    except ParameterError as exc:
        raise ConfigError(f"[model] violates '{exc.constraint}': {exc}") \
            from exc

    g = raw["grid"]
    try:
        grid = Grid.from_spacing(
            xi_min=_float("grid", "xi_min", g["xi_min"]),
            xi_max=_float("grid", "xi_max", g["xi_max"]),
            dxi=_float("grid", "dxi", g["dxi"]),
            dt=_float("grid", "dt", g["dt"]),
            t_final=_float("grid", "t_final", g["t_final"]),
        )
    except ValueError as exc:
        raise ConfigError(f"[grid] invalid: {exc}") from exc

    s = raw["solver"]
    try:
        solver = SolverConfig(
            eps_penalty=_float("solver", "eps_penalty", s["eps_penalty"]),
            eps_heaviside=_float("solver", "eps_heaviside",
                                 s["eps_heaviside"]),
            tol_newton=_float("solver", "tol_newton", s["tol_newton"]),
            max_newton_iters=_int("solver", "max_newton_iters",
                                  s["max_newton_iters"]),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[solver] invalid: {exc}") from exc

    m = raw["mc"]
    dt_sim_raw = str(m["dt_sim"]).strip()
    try:
        mc = McConfig(
            n_paths=_int("mc", "n_paths", m["n_paths"]),
            maturity=_float("mc", "maturity", m["maturity"]),
            s0=_float("mc", "s0", m["s0"]),
            seed=_int("mc", "seed", m["seed"]),
            dt_sim=_float("mc", "dt_sim", dt_sim_raw) if dt_sim_raw else None,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[mc] invalid: {exc}") from exc

    o = raw["output"]
    tw_samples = _int("output", "tw_samples", o["tw_samples"])
    if tw_samples < 2:
        raise ConfigError(f"[output] tw_samples must be >= 2, got "
                          f"{tw_samples}")
    return RunConfig(
        model=model,
        grid=grid,
        solver=solver,
        mc=mc,
        snapshots=_snapshot_list(o["snapshots"]),
        tw_samples=tw_samples,
        figures=_bool("output", "figures", o["figures"]),
    )
