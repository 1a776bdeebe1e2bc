"""Exception types shared across the toolkit."""


class QevtError(Exception):
    """Base class for all toolkit-specific errors."""


class CapacityError(QevtError, ValueError):
    """Problem size exceeds the exact-enumeration / statevector guard."""


class InstanceFormatError(QevtError, ValueError):
    """Instance file could not be parsed; message carries line/field context."""


class DegenerateSamplesError(QevtError, ValueError):
    """All samples identical: no variability left to model."""


class FitFailureError(QevtError, RuntimeError):
    """Maximum-likelihood fit did not converge from any start."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics) if diagnostics else []


class SingularCovarianceError(QevtError, ValueError):
    """Sample covariance matrix is singular; the test statistic is undefined."""


class InsufficientSamplesError(QevtError, ValueError):
    """Too few samples for the requested statistic or fit."""


class EstimationImpossibleError(QevtError, RuntimeError):
    """Sample-size estimation produced no usable p-values at any candidate n.

    ``failure_table`` maps each attempted subset size to
    ``(failed_fits, attempted_fits)``.
    """

    def __init__(self, message, failure_table=None):
        super().__init__(message)
        self.failure_table = dict(failure_table) if failure_table else {}


class ConfigError(QevtError, ValueError):
    """Invalid experiment configuration."""


class OutputLockedError(QevtError, RuntimeError):
    """Another invocation holds the output-directory lock."""
