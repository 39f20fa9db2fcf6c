"""Iterative learning control over a lifted servo model.

A learning law maps the previous trial's tracking error to a command
correction, u_{j+1} = u_j + L(e_j). Four laws are provided:

    transpose          L = phi * P^T           monotone for phi < 2 / sigma_max(P)^2
    partial_isometry   L = phi * V U^T         monotone for phi < 2 / sigma_max(P)
    inverse            L = P^-1                one trial on an exact model
    norm_optimal       L = (P^T P + r I)^-1 P^T  monotone for any r > 0
    circulant_inverse  DFT-domain inverse of the periodized impulse
                       response, restricted to a frequency band

where P = U Sigma V^T is the lifted plant. Learning can be run in two
phases: first against the numerical model, then against a second
("hardware") plant, using the model-phase command as the starting point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular, svd, svdvals

from .errors import (
    ConfigurationError,
    DivergenceError,
    IllConditionedBandError,
    SingularModelError,
)
from .plant import LiftedSystem, StateSpaceModel, Trajectory, _as_samples, lift, simulate

TRANSPOSE = "transpose"
PARTIAL_ISOMETRY = "partial_isometry"
INVERSE = "inverse"
NORM_OPTIMAL = "norm_optimal"
CIRCULANT_INVERSE = "circulant_inverse"
LAW_KINDS = (TRANSPOSE, PARTIAL_ISOMETRY, INVERSE, NORM_OPTIMAL, CIRCULANT_INVERSE)

MODEL = "model"
HARDWARE = "hardware"

# Abort once the error has grown this far past the initial error.
DIVERGENCE_RATIO = 1e6


@dataclass(frozen=True)
class LearningLaw:
    """Learning-law selector plus its parameters.

    gain applies to transpose/partial_isometry, weight to norm_optimal,
    cutoff (cycles per sample) to circulant_inverse.
    """

    kind: str
    gain: float | None = None
    weight: float | None = None
    cutoff: float | None = None

    def __post_init__(self):
        if self.kind not in LAW_KINDS:
            raise ConfigurationError(f"unknown learning law: {self.kind!r}")
        if self.kind in (TRANSPOSE, PARTIAL_ISOMETRY):
            if self.gain is None or not (np.isfinite(self.gain) and self.gain > 0):
                raise ConfigurationError(f"{self.kind} law requires gain > 0")
        if self.kind == NORM_OPTIMAL:
            if self.weight is None or not (np.isfinite(self.weight) and self.weight > 0):
                raise ConfigurationError("norm_optimal law requires weight > 0")
        if self.kind == CIRCULANT_INVERSE:
            if self.cutoff is None or not (0.0 < self.cutoff <= 0.5):
                raise ConfigurationError("circulant_inverse law requires cutoff in (0, 0.5]")


@dataclass(frozen=True)
class IterationRecord:
    index: int
    command: Trajectory
    rms_error: float
    phase: str


@dataclass(frozen=True)
class IterationHistory:
    records: tuple
    hardware_iterations: int
    converged: bool
    tolerance: float

    def __post_init__(self):
        hw = sum(1 for r in self.records if r.phase == HARDWARE)
        if hw != self.hardware_iterations:
            raise ConfigurationError("hardware_iterations inconsistent with records")


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(x * x)))


def _check_invertible(model: LiftedSystem):
    h1 = model.h[0]
    if abs(h1) <= 1e-12 * max(1.0, float(np.max(np.abs(model.h)))):
        raise SingularModelError(
            "first Markov parameter C*B is zero; inverse-type laws need relative degree one"
        )


def _learning_update(law: LearningLaw, model: LiftedSystem, e: np.ndarray) -> np.ndarray:
    """Command correction delta = L(e) for the given law."""
    N = len(model)
    if law.kind == TRANSPOSE:
        P = model.as_matrix()
        return law.gain * (P.T @ e)
    if law.kind == PARTIAL_ISOMETRY:
        U, _, Vt = svd(model.as_matrix())
        return law.gain * (Vt.T @ (U.T @ e))
    if law.kind == INVERSE:
        _check_invertible(model)
        return solve_triangular(model.as_matrix(), e, lower=True)
    if law.kind == NORM_OPTIMAL:
        _check_invertible(model)
        P = model.as_matrix()
        G = P.T @ P + law.weight * np.eye(N)
        return np.linalg.solve(G, P.T @ e)
    # circulant_inverse: invert the plant's periodized frequency response
    H = np.fft.fft(model.h)
    band = np.abs(np.fft.fftfreq(N)) <= law.cutoff + 1e-12
    if np.min(np.abs(H[band])) < 1e-12:
        raise IllConditionedBandError(
            "plant frequency response is numerically zero inside the retained band"
        )
    E = np.fft.fft(e)
    D = np.where(band, E / np.where(band, H, 1.0), 0.0)
    return np.fft.ifft(D).real


def ilc_step(law: LearningLaw, model: LiftedSystem, u_j, e_j) -> Trajectory:
    """One learning update: u_{j+1} = u_j + L(e_j)."""
    u = _as_samples(u_j)
    e = _as_samples(e_j)
    if u.size != len(model) or e.size != len(model):
        raise ConfigurationError("ilc_step: command, error and model lengths must match")
    return Trajectory(u + _learning_update(law, model, e), model.dt)


def monotonic_gain_bound(model: LiftedSystem, kind: str) -> float:
    """Supremum gain for monotone RMS error decay on the exact model."""
    smax = float(svdvals(model.as_matrix())[0])
    if kind == TRANSPOSE:
        return 2.0 / smax**2
    if kind == PARTIAL_ISOMETRY:
        return 2.0 / smax
    raise ConfigurationError(f"no gain bound defined for law kind {kind!r}")


def zero_phase_filter(signal, cutoff: float):
    """Ideal low-pass in the DFT domain; keeps bins with |f| <= cutoff.

    Masking magnitudes only, with no phase term, makes the filter
    zero-phase and idempotent.
    """
    if not (0.0 < cutoff <= 0.5):
        raise ConfigurationError("filter cutoff must lie in (0, 0.5] cycles per sample")
    x = _as_samples(signal)
    if cutoff >= 0.5:
        out = x.copy()
    else:
        X = np.fft.rfft(x)
        X[np.fft.rfftfreq(x.size) > cutoff + 1e-12] = 0.0
        out = np.fft.irfft(X, n=x.size)
    if isinstance(signal, Trajectory):
        return Trajectory(out, signal.dt)
    return out


def tracked_output(model: StateSpaceModel, u, saturation: float | None = None) -> Trajectory:
    """Plant response aligned with the command that caused it.

    Simulation output y(k) = C x(k) lags the input by one step; here the
    leading zero is dropped so sample k is the response to u(0..k). With a
    saturation level the command is clipped first, which is how actuator
    limits show up in the hardware phase.
    """
    us = _as_samples(u)
    if saturation is not None:
        if saturation <= 0:
            raise ConfigurationError("saturation level must be positive")
        us = np.clip(us, -saturation, saturation)
    y = simulate(model, np.append(us, 0.0)).samples[1:]
    return Trajectory(y, model.dt)


def run_ilc(
    law: LearningLaw,
    model_plant: StateSpaceModel,
    world_plant: StateSpaceModel,
    y_d,
    tol: float,
    max_model_iters: int,
    max_hw_iters: int,
    filter_cutoff: float | None = None,
    world_saturation: float | None = None,
) -> IterationHistory:
    """Two-phase learning: iterate on the model, then on the world plant.

    The model phase starts from u = 0 and runs until its predicted RMS
    error drops below tol (or the iteration cap); the world phase continues
    from the learned command. Each recorded rms_error is evaluated on the
    plant of its own phase. When filter_cutoff is set every update
    increment is zero-phase filtered before being added.
    """
    if tol <= 0:
        raise ConfigurationError("tol must be positive")
    if max_model_iters < 0 or max_hw_iters < 0:
        raise ConfigurationError("iteration caps must be non-negative")
    yd = _as_samples(y_d)
    N = yd.size
    model = lift(model_plant, N)
    u = np.zeros(N)
    records = []
    initial_rms = None

    def phase_loop(phase, response, max_iters):
        nonlocal u, initial_rms
        converged = False
        for _ in range(max_iters):
            y = response(u)
            e = yd - y
            r = _rms(e)
            records.append(IterationRecord(len(records), Trajectory(u, model.dt), r, phase))
            if initial_rms is None:
                initial_rms = r
            if r < tol:
                converged = True
                break
            if r > DIVERGENCE_RATIO * max(initial_rms, np.finfo(float).tiny):
                raise DivergenceError(
                    f"{phase} phase error {r:.3e} exceeded {DIVERGENCE_RATIO:.0e} x initial"
                )
            delta = _learning_update(law, model, e)
            if filter_cutoff is not None:
                delta = zero_phase_filter(delta, filter_cutoff)
            u = u + delta
        return converged

    converged = phase_loop(MODEL, lambda v: toeplitz_model_response(model, v), max_model_iters)
    if max_hw_iters > 0:
        converged = phase_loop(
            HARDWARE,
            lambda v: tracked_output(world_plant, v, world_saturation).samples,
            max_hw_iters,
        )
    hw = sum(1 for rec in records if rec.phase == HARDWARE)
    return IterationHistory(tuple(records), hw, converged, tol)


def toeplitz_model_response(model: LiftedSystem, u: np.ndarray) -> np.ndarray:
    """Model-phase prediction: the lifted convolution of the command."""
    return np.convolve(u, model.h)[: u.size]


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_history_csv(path, history: IterationHistory):
    lines = ["iter,phase,rms_error"]
    for rec in history.records:
        lines.append(f"{rec.index},{rec.phase},{_fmt(rec.rms_error)}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def write_trajectory_csv(path, command: Trajectory, desired: Trajectory, achieved: Trajectory):
    u, yd, y = command.samples, desired.samples, achieved.samples
    if not (u.size == yd.size == y.size):
        raise ConfigurationError("trajectory CSV: length mismatch")
    lines = ["k,u,y_d,y,e"]
    for k in range(u.size):
        lines.append(
            f"{k},{_fmt(u[k])},{_fmt(yd[k])},{_fmt(y[k])},{_fmt(yd[k] - y[k])}"
        )
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
