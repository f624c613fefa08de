"""TOML experiment files: defaults, validation, and the resolved-config echo.

Sections: ``[drive]``, ``[measurement]``, ``[noise.alpha]``, ``[noise.beta]``,
``[run]``, ``[ensemble]``, ``[sweep]`` and ``[preview]``. Physical rates are in
units of the Rabi frequency; times are read in the unit named by
``drive.time_units`` (``"T_R"`` or ``"1/Omega_R"``) and always written in T_R.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .dynamics import DriveConfig, StepControl
from .experiment import EnsembleConfig, SweepConfig
from .monitor import RunConfig
from .noise import NoiseSpec
from .povm import MeasurementConfig
from .qubit import PureState

TIME_UNITS = ("T_R", "1/Omega_R")

_NOISE_DEFAULTS = {
    "spectrum": "one-over-f",
    "amplitude": 1.0,
    "omega_min": 0.01,
    "omega_max": 10.0,
    "n_components": 200,
    "target_rms": 0.0,
}

DEFAULTS = {
    "drive": {"rabi_frequency": 1.0, "time_units": "T_R"},
    "measurement": {"direction": [0.0, 0.0, 1.0], "delta_p": 0.2, "period": 0.1},
    "noise.alpha": dict(_NOISE_DEFAULTS),
    "noise.beta": dict(_NOISE_DEFAULTS),
    "run": {
        "n_periods": 300,
        "initial_state": "up",
        "initial_estimate": "down",
        "substeps_per_period": 32,
        "seed": 0,
    },
    "ensemble": {"n_runs": 1000, "master_seed": 0, "baseline": False},
    "sweep": {
        "delta_p": [0.4, 0.28, 0.2, 0.14, 0.1, 0.05, 0.02],
        "period": 0.1,
        "noise_levels": [[0.0, 0.0], [0.05, 0.005], [0.1, 0.01]],
        "n_runs": 200,
        "master_seed": 0,
        "span_factor": 8.0,
        "min_periods": 300,
        "max_periods": 20000,
        "max_periods_noisy": 6000,
    },
    "preview": {"window": 600.0, "samples": 32768, "realizations": 50, "n_bands": 12, "seed": 0},
}

SECTION_ORDER = list(DEFAULTS)

_NAMED_STATES = {
    "up": (0.0, 0.0, 1.0),
    "down": (0.0, 0.0, -1.0),
    "plus": (1.0, 0.0, 0.0),
    "minus": (-1.0, 0.0, 0.0),
}


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass
class Experiment:
    """Resolved configuration plus the typed objects built from it."""

    raw: dict
    run: RunConfig
    ensemble: EnsembleConfig
    sweep: SweepConfig
    baseline: bool

    @property
    def rabi_period(self) -> float:
        return self.run.drive.rabi_period


def _flatten(doc: dict) -> dict:
    """Map the parsed TOML onto section names, rejecting unknown keys."""
    out = {}
    for key, value in doc.items():
        if key == "noise" and isinstance(value, dict):
            for sub, body in value.items():
                name = f"noise.{sub}"
                if name not in DEFAULTS or not isinstance(body, dict):
                    raise ConfigError(f"unknown section [{name}]")
                out[name] = body
        elif key in DEFAULTS and isinstance(value, dict):
            out[key] = value
        else:
            raise ConfigError(f"unknown section or top-level key {key!r}")
    for section, body in out.items():
        for k in body:
            if k not in DEFAULTS[section]:
                raise ConfigError(f"unknown key {k!r} in section [{section}]")
    return out


def resolve(doc: dict) -> dict:
    """Defaults overlaid with the user's values."""
    user = _flatten(doc)
    resolved = copy.deepcopy(DEFAULTS)
    for section, body in user.items():
        resolved[section].update(body)
    return resolved


def _state(value, what: str) -> PureState:
    if isinstance(value, str):
        if value not in _NAMED_STATES:
            raise ConfigError(f"{what}: unknown state name {value!r}; use one of {sorted(_NAMED_STATES)} or a Bloch vector")
        value = _NAMED_STATES[value]
    try:
        return PureState.from_bloch(value)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{what}: {exc}") from None


def build(resolved: dict) -> Experiment:
    try:
        drive_s = resolved["drive"]
        units = drive_s["time_units"]
        if units not in TIME_UNITS:
            raise ConfigError(f"drive.time_units must be one of {TIME_UNITS}, got {units!r}")
        drive = DriveConfig(float(drive_s["rabi_frequency"]))
        to_internal = drive.rabi_period if units == "T_R" else 1.0 / drive.rabi_frequency

        m = resolved["measurement"]
        measurement = MeasurementConfig(
            tuple(float(c) for c in m["direction"]), float(m["delta_p"]), float(m["period"]) * to_internal
        )
        noise = {name: NoiseSpec(**resolved[f"noise.{name}"]) for name in ("alpha", "beta")}

        r = resolved["run"]
        run = RunConfig(
            drive=drive,
            measurement=measurement,
            noise_alpha=noise["alpha"],
            noise_beta=noise["beta"],
            initial_state=_state(r["initial_state"], "run.initial_state"),
            initial_estimate=_state(r["initial_estimate"], "run.initial_estimate"),
            n_periods=int(r["n_periods"]),
            step_control=StepControl(int(r["substeps_per_period"])),
            seed=int(r["seed"]),
        )

        e = resolved["ensemble"]
        ensemble = EnsembleConfig(run, int(e["n_runs"]), int(e["master_seed"]))

        s = resolved["sweep"]
        period = float(s["period"]) * to_internal
        levels = tuple(tuple(float(x) for x in lvl) for lvl in s["noise_levels"])
        if any(len(lvl) != 2 for lvl in levels):
            raise ConfigError("sweep.noise_levels entries must be [d_beta, d_alpha] pairs")
        sweep = SweepConfig(
            template=run,
            strengths=tuple((float(dp), period) for dp in s["delta_p"]),
            noise_levels=levels,
            n_runs=int(s["n_runs"]),
            master_seed=int(s["master_seed"]),
            span_factor=float(s["span_factor"]),
            min_periods=int(s["min_periods"]),
            max_periods=int(s["max_periods"]),
            max_periods_noisy=int(s["max_periods_noisy"]),
        )
        if not sweep.strengths or not sweep.noise_levels:
            raise ConfigError("sweep grids must be nonempty")
        for dp, _ in sweep.strengths:
            MeasurementConfig(measurement.direction, dp, period)
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(str(exc)) from None
    return Experiment(resolved, run, ensemble, sweep, bool(resolved["ensemble"]["baseline"]))


def loads(text: str) -> Experiment:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    return build(resolve(doc))


def load(path) -> Experiment:
    try:
        with open(path, "rb") as fh:
            text = fh.read().decode("utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return loads(text)


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value) or math.isnan(value):
            return {True: "inf", False: "-inf"}[value > 0] if math.isinf(value) else "nan"
        text = f"{value:.17g}"
        return text if any(c in text for c in ".eni") else text + ".0"
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(format_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {value!r}")


def dumps(resolved: dict) -> str:
    """TOML text of a resolved config; ``loads(dumps(c))`` rebuilds it exactly."""
    lines = []
    for section in SECTION_ORDER:
        lines.append(f"[{section}]")
        for key, value in resolved[section].items():
            lines.append(f"{key} = {format_value(value)}")
    return "\n".join(lines) + "\n"
