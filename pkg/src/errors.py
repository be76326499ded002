"""Exception hierarchy for the eight-port homodyne simulator."""


class EightPortError(ValueError):
    """Base class for all domain errors raised by the simulator."""

    exit_code = 2


class ConfigError(EightPortError):
    """Configuration document or command-line arguments are invalid."""

    exit_code = 1


class DomainError(EightPortError):
    """A numeric argument lies outside its admissible range."""

    exit_code = 1


class KindError(EightPortError):
    """Operation is undefined for the given kernel kind (e.g. Dirac density)."""


class UnsupportedState(EightPortError):
    """State cannot be expressed in the representation an operation requires."""


class ReconstructionError(EightPortError):
    """State reconstruction produced a degenerate estimate."""


class DivisorThresholdError(ReconstructionError):
    """Weyl divisor vanishes on frequencies where the signal has support."""


class TruncationInsufficient(EightPortError):
    """Truncated representation leaks more probability mass than allowed.

    Attributes:
        leaked_mass: Probability mass outside the retained representation
        tolerance: Admissible leaked mass
    """

    exit_code = 3

    def __init__(self, message: str, leaked_mass: float = float("nan"), tolerance: float = 0.0):
        super().__init__(message)
        self.leaked_mass = leaked_mass
        self.tolerance = tolerance


class ResolutionError(EightPortError):
    """Phase space grid does not resolve the smearing kernel."""

    exit_code = 3


class NoiseAmplificationWarning(UserWarning):
    """Deconvolution divides by small kernel values and amplifies noise."""
