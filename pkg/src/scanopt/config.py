"""Flat key = value experiment configuration.

Files hold one `key = value` pair per line with dotted section prefixes
(`plant.dt = 0.01`), `#` comments and blank lines. Every key must be in
the documented registry; anything else is rejected by name so typos
cannot silently fall back to defaults.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError
from .ilc import (
    CIRCULANT_INVERSE,
    INVERSE,
    NORM_OPTIMAL,
    PARTIAL_ISOMETRY,
    TRANSPOSE,
    LearningLaw,
)
from .plant import (
    StateSpaceModel,
    first_order_lag,
    second_order_mode,
    series,
    zoh_discretize,
)
from .scan import (
    HORIZONTAL,
    VERTICAL,
    ActuatorLimits,
    Geometry,
    ScanParams,
    default_capture_indices,
)

LAW_NAMES = (TRANSPOSE, PARTIAL_ISOMETRY, INVERSE, NORM_OPTIMAL, CIRCULANT_INVERSE)

# Registry of every accepted key. Values are short descriptions used in
# diagnostics; the README carries the full reference table.
KEY_REGISTRY = {
    "seed": "master seed (unsigned integer)",
    "plant.tau": "servo lag time constant, seconds",
    "plant.omega_n": "servo mode natural frequency, rad/s",
    "plant.zeta": "servo mode damping ratio",
    "plant.dt": "sample interval, seconds",
    "plant.world.tau_scale": "world-plant tau multiplier",
    "plant.world.omega_scale": "world-plant omega_n multiplier",
    "plant.world.zeta_scale": "world-plant zeta multiplier",
    "ilc.law": "learning law name",
    "ilc.gain": "gain for transpose/partial_isometry laws",
    "ilc.weight": "weight r for the norm_optimal law",
    "ilc.cutoff": "band cutoff for the circulant_inverse law",
    "ilc.tol": "RMS tracking tolerance",
    "ilc.max_model_iters": "model-phase iteration budget",
    "ilc.max_hw_iters": "hardware-phase iteration budget",
    "ilc.filter_cutoff": "zero-phase filter cutoff for command increments",
    "ilc.saturation": "hardware command saturation level",
    "scan.amplitude": "scan sine amplitude, radians",
    "scan.period": "scan sine period, samples",
    "scan.captures": "captures per scan",
    "scan.n_periods": "scan length, whole periods",
    "limits.max_velocity": "actuator velocity limit, rad/s",
    "limits.max_acceleration": "actuator acceleration limit, rad/s^2",
    "limits.time_budget": "capture-window budget, seconds",
    "geometry.shift_gain": "image shift per radian, fine px/rad",
    "geometry.axis": "scan axis: horizontal or vertical",
    "imaging.q": "downsample factor",
    "imaging.scene": "scene kind: bars or terrain",
    "imaging.size": "scene edge length, fine px",
    "imaging.scene_seed": "scene synthesis seed",
    "imaging.noise_sigma": "capture noise std",
    "imaging.lambda": "ls_recon gradient penalty",
    "imaging.max_cg_iters": "ls_recon iteration cap",
    "optimize.amplitudes": "comma-separated amplitude grid",
    "optimize.periods": "comma-separated period grid",
    "optimize.shift_error_std": "injected shift error std, fine px",
    "simdemo.length": "demo signal length M",
    "simdemo.f0": "modulation frequency, cycles/sample",
    "simdemo.fc": "capture passband cutoff, cycles/sample",
    "simdemo.m": "modulation depth",
    "simdemo.phases": "three pattern phases, comma-separated radians",
    "simdemo.signal_seed": "demo signal spectrum seed",
    "reconstruct.shifts": "semicolon-separated dx:dy shift pairs, fine px",
}


def parse_config_file(path) -> dict:
    """Read a key = value file into a string dict.

    Rejects unknown and duplicated keys by name, with line numbers in
    every diagnostic.
    """
    try:
        with open(path) as f:
            lines = f.readlines()
    except OSError as err:
        raise ConfigurationError(f"cannot read config {path}: {err}") from err
    values = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path} line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in KEY_REGISTRY:
            raise ConfigurationError(f"{path} line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigurationError(f"{path} line {lineno}: duplicate key {key!r}")
        if not value:
            raise ConfigurationError(f"{path} line {lineno}: empty value for {key!r}")
        values[key] = value
    return values


class _Required:
    """Sentinel: passing REQUIRED as a default makes the key mandatory."""


REQUIRED = _Required()


@dataclass(frozen=True)
class ExperimentConfig:
    """Typed access to parsed config values; every getter names the key
    in its diagnostics so config errors are actionable."""

    values: dict

    def has(self, key: str) -> bool:
        return key in self.values

    def _raw(self, key: str, default):
        if key not in self.values:
            if default is REQUIRED:
                raise ConfigurationError(f"missing required key {key!r}")
            return None
        return self.values[key]

    def get_float(self, key: str, default=None):
        raw = self._raw(key, default)
        if raw is None:
            return default
        try:
            value = float(raw)
        except ValueError as err:
            raise ConfigurationError(f"{key} must be a number, got {raw!r}") from err
        if not math.isfinite(value):
            raise ConfigurationError(f"{key} must be finite, got {raw!r}")
        return value

    def get_int(self, key: str, default=None):
        raw = self._raw(key, default)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError as err:
            raise ConfigurationError(f"{key} must be an integer, got {raw!r}") from err

    def get_choice(self, key: str, choices, default=None):
        raw = self._raw(key, default)
        if raw is None:
            return default
        if raw not in choices:
            options = ", ".join(choices)
            raise ConfigurationError(f"{key} must be one of: {options}; got {raw!r}")
        return raw

    def get_float_list(self, key: str, default=None):
        raw = self._raw(key, default)
        if raw is None:
            return default
        if not isinstance(raw, str):
            return raw
        try:
            return tuple(float(part) for part in raw.split(","))
        except ValueError as err:
            raise ConfigurationError(f"{key} must be comma-separated numbers, got {raw!r}") from err

    def get_int_list(self, key: str, default=None):
        raw = self._raw(key, default)
        if raw is None:
            return default
        if not isinstance(raw, str):
            return raw
        try:
            return tuple(int(part) for part in raw.split(","))
        except ValueError as err:
            raise ConfigurationError(f"{key} must be comma-separated integers, got {raw!r}") from err

    def get_shift_pairs(self, key: str):
        raw = self._raw(key, REQUIRED)
        pairs = []
        for chunk in raw.split(";"):
            parts = chunk.split(":")
            if len(parts) != 2:
                raise ConfigurationError(f"{key} entries must look like dx:dy, got {chunk!r}")
            try:
                pairs.append((float(parts[0]), float(parts[1])))
            except ValueError as err:
                raise ConfigurationError(f"{key} entries must be numeric, got {chunk!r}") from err
        return tuple(pairs)


def load_config(path, seed_override=None) -> ExperimentConfig:
    values = parse_config_file(path)
    if seed_override is not None:
        values = dict(values)
        values["seed"] = str(int(seed_override))
    return ExperimentConfig(values)


def _positive(cfg_key: str, value: float) -> float:
    if value is None or not (value > 0):
        raise ConfigurationError(f"{cfg_key} must be positive, got {value!r}")
    return value


def build_model_plant(cfg: ExperimentConfig) -> StateSpaceModel:
    tau = _positive("plant.tau", cfg.get_float("plant.tau", REQUIRED))
    omega = _positive("plant.omega_n", cfg.get_float("plant.omega_n", REQUIRED))
    zeta = _positive("plant.zeta", cfg.get_float("plant.zeta", REQUIRED))
    dt = _positive("plant.dt", cfg.get_float("plant.dt", REQUIRED))
    return _servo(tau, omega, zeta, dt)


def build_world_plant(cfg: ExperimentConfig) -> StateSpaceModel:
    """World plant = model plant with its physical parameters rescaled."""
    tau = _positive("plant.tau", cfg.get_float("plant.tau", REQUIRED))
    omega = _positive("plant.omega_n", cfg.get_float("plant.omega_n", REQUIRED))
    zeta = _positive("plant.zeta", cfg.get_float("plant.zeta", REQUIRED))
    dt = _positive("plant.dt", cfg.get_float("plant.dt", REQUIRED))
    tau *= _positive("plant.world.tau_scale", cfg.get_float("plant.world.tau_scale", 1.0))
    omega *= _positive("plant.world.omega_scale", cfg.get_float("plant.world.omega_scale", 1.0))
    zeta *= _positive("plant.world.zeta_scale", cfg.get_float("plant.world.zeta_scale", 1.0))
    return _servo(tau, omega, zeta, dt)


def _servo(tau, omega, zeta, dt) -> StateSpaceModel:
    a, b, c = series(first_order_lag(tau), second_order_mode(omega, zeta))
    return zoh_discretize(a, b, c, dt)


def build_law(cfg: ExperimentConfig) -> LearningLaw:
    kind = cfg.get_choice("ilc.law", LAW_NAMES, REQUIRED)
    return LearningLaw(
        kind,
        gain=cfg.get_float("ilc.gain"),
        weight=cfg.get_float("ilc.weight"),
        cutoff=cfg.get_float("ilc.cutoff"),
    )


def build_limits(cfg: ExperimentConfig) -> ActuatorLimits:
    return ActuatorLimits(
        max_velocity=cfg.get_float("limits.max_velocity", REQUIRED),
        max_acceleration=cfg.get_float("limits.max_acceleration", REQUIRED),
        time_budget=cfg.get_float("limits.time_budget", REQUIRED),
    )


def build_geometry(cfg: ExperimentConfig) -> Geometry:
    return Geometry(
        shift_gain=cfg.get_float("geometry.shift_gain", REQUIRED),
        axis=cfg.get_choice("geometry.axis", (HORIZONTAL, VERTICAL), HORIZONTAL),
    )


def build_scan_params(cfg: ExperimentConfig, dt: float) -> ScanParams:
    period = cfg.get_int("scan.period", REQUIRED)
    if period < 2:
        raise ConfigurationError(f"scan.period must be an integer >= 2, got {period}")
    captures = cfg.get_int("scan.captures", 4)
    if captures < 1:
        raise ConfigurationError(f"scan.captures must be >= 1, got {captures}")
    amplitude = cfg.get_float("scan.amplitude", REQUIRED)
    indices = default_capture_indices(period, captures)
    return ScanParams(amplitude, period, captures, indices, dt)
