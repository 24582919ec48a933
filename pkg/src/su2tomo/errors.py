"""Exception types shared across the package."""


class Su2TomoError(Exception):
    """Base class for all package-specific errors."""


class InvalidParameterError(Su2TomoError, ValueError):
    """Gate parameters violate their invariants (axis norm, angle range)."""


class InvalidMatrixError(Su2TomoError, ValueError):
    """Matrix is not unitary with unit determinant within tolerance."""


class NonPhysicalDataError(Su2TomoError, ValueError):
    """Measured intensities are incompatible with any unitary process."""


class DegenerateGateError(Su2TomoError, ValueError):
    """Analytic inversion hit a (near-)degenerate gate; a best-effort
    candidate is attached as ``candidate``."""

    def __init__(self, message, candidate):
        super().__init__(message)
        self.candidate = candidate


class GeometryError(Su2TomoError, ValueError):
    """Incompatible grid shapes or non-divisible binning factors."""


class MalformedModelError(Su2TomoError, ValueError):
    """Network weights inconsistent with the declared layer widths."""


class ModelVersionError(Su2TomoError, ValueError):
    """Model file was written with an unsupported format version."""


class CorruptModelError(Su2TomoError, ValueError):
    """Model file is truncated or otherwise unreadable."""


class TrainingFailureError(Su2TomoError, RuntimeError):
    """Training diverged; the partial epoch log is attached as ``log``."""

    def __init__(self, message, log):
        super().__init__(message)
        self.log = log
