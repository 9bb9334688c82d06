"""Exception hierarchy shared by all solver modules."""


class SemilagError(Exception):
    """Base class for all errors raised by this package."""


class OutOfDomain(SemilagError):
    """A query point lies outside the padded computational box."""


class NonFiniteResult(SemilagError):
    """A numeric maximization diverged (usually a misdeclared growth class)."""


class EmptyCandidateSet(SemilagError):
    """No admissible velocity candidate was found for the value update."""


class NoContraction(SemilagError):
    """The implicit characteristic step failed to converge.

    Signals that the time step is too large relative to the smoothing
    radius for the fixed-point map to contract.
    """

    def __init__(self, message, observed_factor=None):
        super().__init__(message)
        self.observed_factor = observed_factor


class UnsupportedMeasure(SemilagError):
    """The initial measure description is not one of the supported forms."""


class MissingTrajectory(SemilagError):
    """A measure support node has no evolved characteristic."""


class DegenerateFit(SemilagError):
    """A rate regression was requested on degenerate data."""


class ConfigError(SemilagError):
    """A run configuration is invalid; the message names the field."""
