class FeatxError(Exception):
    """Base class for extraction errors."""


class UnreadableImage(FeatxError):
    """Input file is not a decodable image."""


class WeightsUnavailable(FeatxError):
    """Pretrained network weights could not be loaded."""


class DimMismatch(FeatxError):
    """Extracted feature dimension disagrees with the declared variant."""
