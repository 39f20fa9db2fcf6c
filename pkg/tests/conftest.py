import numpy as np
import pytest

from scanopt.plant import servo_model

# Default servo used throughout the tests: a fast first-order lag feeding an
# underdamped mode, ZOH-sampled at 100 Hz. These coefficients were picked so
# the discretized plant is minimum phase (sampling zeros inside the unit
# circle), which keeps the inverse-type learning laws well conditioned. The
# shipped configs carry the same numbers.
SERVO_TAU = 0.005
SERVO_OMEGA_N = 400.0
SERVO_ZETA = 0.5
SERVO_DT = 0.01


@pytest.fixture(scope="session")
def default_servo():
    return servo_model(SERVO_TAU, SERVO_OMEGA_N, SERVO_ZETA, SERVO_DT)


def rms(x):
    x = np.asarray(x, dtype=float)
    return float(np.sqrt(np.mean(x * x)))
