"""
Error types shared across the toolkit.

Validation problems subclass ValueError, numeric failures subclass ArithmeticError
and I/O problems are left as the built-in OSError family, so the CLI can map each
family to its own exit code.
"""


class IrisQualityError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(IrisQualityError, ValueError):
    """Input violates a documented invariant or precondition."""


class ImageFormatError(ValidationError):
    """Graymap header is malformed or not a binary P5 file."""


class UnsupportedMaxvalError(ImageFormatError):
    """Graymap declares a maxval other than 255."""


class TruncatedImageError(ValidationError):
    """Graymap payload is shorter than the header promises."""


class ManifestError(ValidationError):
    """Manifest line cannot be parsed or a record field is invalid."""


class DuplicateSampleError(ManifestError):
    """Two records share a sample_id."""


class EnrollmentError(ValidationError):
    """A class has zero or several enrollment records."""


class GeometryError(ValidationError):
    """Iris geometry is inconsistent or leaves the image bounds."""


class EmptyAnnulusError(ValidationError):
    """The iris annulus contains no pixel."""


class DimensionMismatchError(ValidationError):
    """Arrays, embeddings or grids have incompatible shapes."""


class ConfigError(ValidationError):
    """Configuration value out of range or unsatisfiable."""


class UndefinedCorrelationError(ValidationError):
    """Correlation requested on a list with zero variance."""


class NumericError(IrisQualityError, ArithmeticError):
    """Non-finite values encountered during optimization."""
