"""Periodic scan trajectories, angle-to-shift geometry, actuator feasibility."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .plant import Trajectory

HORIZONTAL = "horizontal"
VERTICAL = "vertical"


@dataclass(frozen=True)
class ScanParams:
    """One scan candidate: sine amplitude/period plus its capture schedule."""

    amplitude: float
    period: int
    captures: int
    capture_indices: tuple
    dt: float

    def __post_init__(self):
        if not (np.isfinite(self.amplitude) and self.amplitude >= 0):
            raise ConfigurationError("scan amplitude must be finite and >= 0")
        if int(self.period) != self.period or self.period < 2:
            raise ConfigurationError("scan period must be an integer >= 2 samples")
        object.__setattr__(self, "period", int(self.period))
        idx = tuple(int(i) for i in self.capture_indices)
        if len(idx) != self.captures or self.captures < 1:
            raise ConfigurationError("captures must equal len(capture_indices) and be >= 1")
        if any(i < 0 for i in idx) or any(b <= a for a, b in zip(idx, idx[1:])):
            raise ConfigurationError("capture_indices must be non-negative and strictly increasing")
        object.__setattr__(self, "capture_indices", idx)
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ConfigurationError("dt must be positive and finite")


@dataclass(frozen=True)
class ActuatorLimits:
    max_velocity: float
    max_acceleration: float
    time_budget: float

    def __post_init__(self):
        for name in ("max_velocity", "max_acceleration", "time_budget"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ConfigurationError(f"{name} must be positive and finite")


@dataclass(frozen=True)
class Geometry:
    """Small-angle camera geometry: image shift per radian along one axis."""

    shift_gain: float
    axis: str = HORIZONTAL

    def __post_init__(self):
        if not (np.isfinite(self.shift_gain) and self.shift_gain > 0):
            raise ConfigurationError("shift_gain must be positive and finite")
        if self.axis not in (HORIZONTAL, VERTICAL):
            raise ConfigurationError(f"axis must be {HORIZONTAL!r} or {VERTICAL!r}")


@dataclass(frozen=True)
class Violation:
    name: str
    actual: float
    limit: float

    @property
    def margin(self) -> float:
        return self.limit - self.actual


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    peak_velocity: float
    peak_acceleration: float
    duration: float
    violations: tuple


def gen_periodic_trajectory(p: ScanParams, n_samples: int) -> Trajectory:
    """samples(k) = amplitude * sin(2 pi k / period), k = 0..n_samples-1."""
    if n_samples < p.period:
        raise ConfigurationError("trajectory must cover at least one scan period")
    if p.capture_indices[-1] >= n_samples:
        raise ConfigurationError("capture_indices must lie within the trajectory length")
    k = np.arange(n_samples)
    return Trajectory(p.amplitude * np.sin(2.0 * np.pi * k / p.period), p.dt)


def angle_to_shift(angle: float, g: Geometry) -> float:
    return g.shift_gain * angle


def shift_to_angle(shift: float, g: Geometry) -> float:
    return shift / g.shift_gain


def feasibility_check(p: ScanParams, limits: ActuatorLimits) -> FeasibilityReport:
    """Check the sine's continuous-time envelope against actuator limits.

    Peak rates of A sin(2 pi t / (period dt)) are 2 pi A / (period dt) and
    (2 pi / (period dt))^2 A; both are conservative versus the discrete
    differences. Constraints are closed: exactly hitting a limit is
    feasible. Duration runs through the last scheduled capture.
    """
    omega = 2.0 * np.pi / (p.period * p.dt)
    peak_v = omega * p.amplitude
    peak_a = omega**2 * p.amplitude
    duration = (p.capture_indices[-1] + 1) * p.dt
    violations = []
    if peak_v > limits.max_velocity:
        violations.append(Violation("velocity", peak_v, limits.max_velocity))
    if peak_a > limits.max_acceleration:
        violations.append(Violation("acceleration", peak_a, limits.max_acceleration))
    if duration > limits.time_budget:
        violations.append(Violation("duration", duration, limits.time_budget))
    return FeasibilityReport(not violations, peak_v, peak_a, duration, tuple(violations))


def default_capture_indices(period: int, count: int) -> tuple:
    """count capture instants uniformly phased over the first scan period."""
    if count < 1:
        raise ConfigurationError("capture count must be >= 1")
    if period < count:
        raise ConfigurationError("period must be >= capture count for distinct capture instants")
    return tuple(int(round(i * period / count)) for i in range(count))


def load_angle_file(path, dt: float) -> Trajectory:
    """Desired angles from a text file, one value per line (radians)."""
    values = []
    with open(path) as f:
        for ln, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise ConfigurationError(f"{path}: line {ln} is not a number: {line!r}")
    if not values:
        raise ConfigurationError(f"{path}: no angle samples found")
    return Trajectory(np.array(values), dt)
