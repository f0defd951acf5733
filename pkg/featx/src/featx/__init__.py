"""Image-to-feature extraction for the signature verification toolkit."""

from .bundle import ManifestRow, write_bundle
from .errors import DimMismatch, FeatxError, UnreadableImage, WeightsUnavailable
from .extract import VARIANT_DIMS, FeatureExtractor, variant_tag
from .preprocess import batch_preprocess, otsu_threshold, preprocess

__version__ = "0.1.0"

__all__ = [
    "DimMismatch", "FeatureExtractor", "FeatxError", "ManifestRow",
    "UnreadableImage", "VARIANT_DIMS", "WeightsUnavailable",
    "batch_preprocess", "otsu_threshold", "preprocess", "variant_tag",
    "write_bundle",
]
