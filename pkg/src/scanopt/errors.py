"""Exception types shared across the package."""


class ScanOptError(Exception):
    """Base class for all scanopt errors."""


class ConfigurationError(ScanOptError):
    """Invalid argument, dimension mismatch, or bad config entry."""


class SingularModelError(ScanOptError):
    """Plant has C*B = 0; inverse-type learning laws cannot be applied."""


class IllConditionedBandError(ScanOptError):
    """A retained frequency bin of the plant response is numerically zero."""


class DivergenceError(ScanOptError):
    """Tracking error grew past the divergence guard during learning."""


class SingularMixingError(ScanOptError):
    """Band-separation mixing matrix is singular (m = 0 or repeated phases)."""


class FeasibilityError(ScanOptError):
    """Scan candidate violates actuator or timing limits."""

    def __init__(self, violations):
        names = ", ".join(v.name for v in violations)
        super().__init__(f"infeasible scan candidate: {names}")
        self.violations = tuple(violations)


class EmptyFeasibleSetError(ScanOptError):
    """Every candidate in an optimization sweep was infeasible."""


class InterleaveContractError(ScanOptError):
    """Shift set is not an exact interleave; use ls_recon instead."""


class NoResolvableFrequencyError(ScanOptError):
    """No bar block reached the contrast threshold."""
