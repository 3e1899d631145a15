"""Exception types shared across the package."""


class StitchcalError(Exception):
    """Base class for all errors raised by this package."""


class NotARotation(StitchcalError):
    """A 3x3 matrix failed the orthonormality / determinant check."""


class BehindCamera(StitchcalError):
    """A world point projected with non-positive depth."""


class OutOfField(StitchcalError):
    """A query point lies outside the playfield rectangle."""


class OutOfImage(StitchcalError):
    """A sample coordinate lies outside the bilinear-interpolation domain."""


class DimensionMismatch(StitchcalError):
    """Two rasters (or a raster and a region) have different dimensions."""


class DimensionsOutOfRange(StitchcalError):
    """Requested field dimensions fall outside the legal pitch range."""


class LengthMismatch(StitchcalError):
    """Two genomes have different lengths."""


class ConfigError(StitchcalError):
    """A run configuration failed to parse or violated an invariant."""
