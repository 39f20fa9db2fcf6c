"""Discrete-time servo plant: state-space model, simulation, lifted form.

The plant is a strictly proper SISO system

    x(k+1) = A x(k) + B u(k)
    y(k)   = C x(k)

so the input reaches the output with a one-step delay and the finite-time
(lifted) representation is a lower-triangular Toeplitz matrix built from
the Markov parameters h_k = C A^(k-1) B, with h_1 = C B on the diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import ConfigurationError


def _frozen_array(x, shape=None, what="array"):
    a = np.array(x, dtype=float)
    if shape is not None and a.shape != shape:
        raise ConfigurationError(f"{what}: expected shape {shape}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ConfigurationError(f"{what}: non-finite entries")
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class StateSpaceModel:
    """Discrete-time model (A, B, C, dt) with zero direct feedthrough."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    dt: float

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = A.shape[0]
        if n < 1 or A.shape != (n, n):
            raise ConfigurationError(f"A must be square, got shape {A.shape}")
        B = np.asarray(self.B, dtype=float).reshape(n, 1)
        C = np.asarray(self.C, dtype=float).reshape(1, n)
        object.__setattr__(self, "A", _frozen_array(A, (n, n), "A"))
        object.__setattr__(self, "B", _frozen_array(B, (n, 1), "B"))
        object.__setattr__(self, "C", _frozen_array(C, (1, n), "C"))
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ConfigurationError("dt must be positive and finite")

    @property
    def order(self) -> int:
        return self.A.shape[0]

    def cb(self) -> float:
        """First Markov parameter C*B (lifted-matrix diagonal entry)."""
        return float(self.C.ravel() @ self.B.ravel())


@dataclass(frozen=True)
class Trajectory:
    """Sampled signal (angles in radians or command units) at fixed dt."""

    samples: np.ndarray
    dt: float

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float).ravel()
        if s.size < 1:
            raise ConfigurationError("trajectory must have at least one sample")
        object.__setattr__(self, "samples", _frozen_array(s, (s.size,), "samples"))
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ConfigurationError("dt must be positive and finite")

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class LiftedSystem:
    """Markov parameters h_1..h_N acting as a lower-triangular Toeplitz map."""

    h: np.ndarray
    dt: float

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float).ravel()
        if h.size < 1:
            raise ConfigurationError("lifted system needs at least one Markov parameter")
        object.__setattr__(self, "h", _frozen_array(h, (h.size,), "h"))
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ConfigurationError("dt must be positive and finite")

    def __len__(self) -> int:
        return self.h.size

    def as_matrix(self) -> np.ndarray:
        """Dense N x N matrix with entry (i, j) = h[i - j] for i >= j."""
        n = len(self)
        P = np.zeros((n, n))
        for j in range(n):
            P[j:, j] = self.h[: n - j]
        return P


def _as_samples(u) -> np.ndarray:
    if isinstance(u, Trajectory):
        return u.samples
    return np.asarray(u, dtype=float).ravel()


def simulate(model: StateSpaceModel, u, x0=None) -> Trajectory:
    """Run the state recursion and return y with y(k) = C x(k).

    The first output sample is C x0 (zero for the default zero initial
    state); the response to u(k) first shows up in y(k+1).
    """
    us = _as_samples(u)
    n = model.order
    if x0 is None:
        x = np.zeros(n)
    else:
        x = np.asarray(x0, dtype=float).ravel()
        if x.shape != (n,):
            raise ConfigurationError(f"x0 must have dimension {n}, got {x.shape}")
    A, B, C = model.A, model.B.ravel(), model.C.ravel()
    y = np.empty(us.size)
    for k in range(us.size):
        y[k] = C @ x
        x = A @ x + B * us[k]
    return Trajectory(y, model.dt)


def lift(model: StateSpaceModel, N: int) -> LiftedSystem:
    """Markov parameters h_k = C A^(k-1) B for k = 1..N."""
    if N < 1:
        raise ConfigurationError("lift: N must be >= 1")
    A, C = model.A, model.C.ravel()
    v = model.B.ravel().copy()
    h = np.empty(N)
    for k in range(N):
        h[k] = C @ v
        v = A @ v
    return LiftedSystem(h, model.dt)


def toeplitz_apply(sys: LiftedSystem, u) -> Trajectory:
    """Apply the lifted operator: y(i) = sum_{j<=i} h_{i-j+1} u(j)."""
    us = _as_samples(u)
    if us.size != len(sys):
        raise ConfigurationError(
            f"toeplitz_apply: length mismatch, operator {len(sys)} vs input {us.size}"
        )
    y = np.convolve(us, sys.h)[: us.size]
    return Trajectory(y, sys.dt)


def zoh_discretize(Ac, Bc, Cc, dt: float) -> StateSpaceModel:
    """Zero-order-hold discretization via the augmented matrix exponential.

    exp([[Ac, Bc], [0, 0]] dt) has the discrete A in its upper-left block
    and the discrete B in its upper-right column.
    """
    Ac = np.atleast_2d(np.asarray(Ac, dtype=float))
    n = Ac.shape[0]
    Bc = np.asarray(Bc, dtype=float).reshape(n, 1)
    Cc = np.asarray(Cc, dtype=float).reshape(1, n)
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = Ac
    M[:n, n:] = Bc
    E = expm(M * dt)
    return StateSpaceModel(E[:n, :n], E[:n, n:], Cc, dt)


def series(a, b):
    """Series connection of two continuous (A, B, C) triples: b drives from a."""
    A1, B1, C1 = a
    A2, B2, C2 = b
    n1, n2 = A1.shape[0], A2.shape[0]
    A = np.zeros((n1 + n2, n1 + n2))
    A[:n1, :n1] = A1
    A[n1:, n1:] = A2
    A[n1:, :n1] = B2 @ C1
    B = np.vstack([B1, np.zeros((n2, 1))])
    C = np.hstack([np.zeros((1, n1)), C2])
    return A, B, C


def first_order_lag(tau: float):
    """Continuous unity-gain lag 1/(tau s + 1) as an (A, B, C) triple."""
    if tau <= 0:
        raise ConfigurationError("tau must be positive")
    return (np.array([[-1.0 / tau]]), np.array([[1.0 / tau]]), np.array([[1.0]]))


def second_order_mode(omega_n: float, zeta: float):
    """Continuous unity-gain mode wn^2 / (s^2 + 2 zeta wn s + wn^2)."""
    if omega_n <= 0 or zeta <= 0:
        raise ConfigurationError("omega_n and zeta must be positive")
    A = np.array([[0.0, 1.0], [-omega_n**2, -2.0 * zeta * omega_n]])
    B = np.array([[0.0], [omega_n**2]])
    C = np.array([[1.0, 0.0]])
    return A, B, C


def servo_model(tau: float, omega_n: float, zeta: float, dt: float) -> StateSpaceModel:
    """Third-order servo: first-order lag in series with a second-order mode,
    discretized by zero-order hold."""
    return zoh_discretize(*series(first_order_lag(tau), second_order_mode(omega_n, zeta)), dt)
