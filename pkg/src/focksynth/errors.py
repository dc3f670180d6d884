"""Exception hierarchy shared by all focksynth modules."""


class FockSynthError(Exception):
    """Base class for every error raised by focksynth."""


class InvalidParameter(FockSynthError, ValueError):
    """A parameter lies outside the domain of the model."""


class InvalidState(FockSynthError, ValueError):
    """A density matrix or state vector violates its invariants."""


class DimensionMismatch(FockSynthError, ValueError):
    """Two objects defined on different Fock truncations were combined."""


class NoClickProbability(FockSynthError):
    """The detector click probability is too small to condition on."""


class NoResonance(FockSynthError):
    """No photon number in the truncation is resonant with the cavity."""


class TargetOutOfRange(FockSynthError):
    """A calibration target is not reachable inside the given bracket."""


class NonMonotoneBracket(FockSynthError):
    """The calibrated quantity is not monotone over the bracket."""


class TruncationTooSmall(FockSynthError):
    """The Fock cutoff of an explicit multimode state loses too much norm."""
