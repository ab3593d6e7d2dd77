"""Exception types raised across the package."""


class DeepWSDError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(DeepWSDError, ValueError):
    """Tensor shapes incompatible with the requested operation."""


class UnsupportedShapeError(DeepWSDError, ValueError):
    """A weight tensor has a shape the kernel layer does not support."""


class TensorFormatError(DeepWSDError, ValueError):
    """A tensor file is not valid DWTEN1 data."""


class ArchiveFormatError(DeepWSDError, ValueError):
    """A weight archive file is not valid DWSDW1 data."""


class ArchiveCorruptionError(DeepWSDError, ValueError):
    """A weight archive failed its CRC-32 payload check."""


class ArchiveSchemaError(DeepWSDError, ValueError):
    """A weight archive is missing tensors or carries wrong shapes."""


class DegenerateDataError(DeepWSDError, ValueError):
    """Input data has no variation where the statistic requires some."""


class FitConvergenceError(DeepWSDError, RuntimeError):
    """The logistic fit ran out of iterations.

    Carries the best parameters seen so far in ``params`` so callers can
    still inspect or reuse them.
    """

    def __init__(self, message, params=None):
        super().__init__(message)
        self.params = params
