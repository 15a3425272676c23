"""Exception hierarchy.

The CLI maps each family to a fixed exit code (see ``cli.EXIT_CODES``).
"""


class TunnelPhaseError(Exception):
    """Base class for every error raised by this package."""


class SpecificationError(TunnelPhaseError, ValueError):
    """Invalid parameters, configuration, or precondition on a request."""


class DomainError(TunnelPhaseError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class CapabilityError(TunnelPhaseError):
    """Operation not supported for this kind of input."""


class ConsistencyError(TunnelPhaseError, ValueError):
    """Inputs that are individually valid but disagree with each other."""


class DataError(TunnelPhaseError, ValueError):
    """Non-finite or malformed data rows."""


class FormatError(TunnelPhaseError, ValueError):
    """Malformed or incompatible serialized document."""


class NumericalError(TunnelPhaseError, ArithmeticError):
    """A numerical procedure failed to converge."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class FittingError(NumericalError):
    """Least-squares fit impossible or ill-conditioned."""


class TrainingError(TunnelPhaseError, ValueError):
    """Model training cannot proceed on the given targets."""


class MetricError(TunnelPhaseError, ValueError):
    """Metric undefined for the given observations.

    ``report`` carries whatever metrics could still be computed.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
