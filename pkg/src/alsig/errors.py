"""Exception types shared across the toolkit."""


class AlsigError(Exception):
    """Base class for all toolkit errors."""


class InsufficientSamples(AlsigError):
    """A user lacks enough genuines/forgeries for the requested split recipe."""


class SingleClass(AlsigError):
    """Training set contains only one label."""


class NonFinite(AlsigError):
    """Feature matrix contains NaN or infinity."""


class DimensionMismatch(AlsigError):
    """Feature vector dimension disagrees with the dataset."""


class Uncalibrated(AlsigError):
    """Probability requested from a model without a fitted sigmoid."""


class EmptyBand(AlsigError):
    """A selection strategy was handed an empty margin band."""


class EmptyPool(AlsigError):
    """Random selection from an empty pool."""


class PoolTooSmall(AlsigError):
    """KNN selection needs at least k+1 pool samples."""


class BadMagic(AlsigError):
    """Feature bundle file does not start with the expected magic bytes."""


class VersionUnsupported(AlsigError):
    """Feature bundle format version is unknown."""


class LengthMismatch(AlsigError):
    """Feature bundle matrix byte length disagrees with its header."""


class ManifestMismatch(AlsigError):
    """Feature bundle manifest disagrees with the matrix file."""
