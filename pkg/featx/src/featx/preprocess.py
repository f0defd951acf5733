"""Signature scan preprocessing: background removal, brightness inversion,
pad-to-square, resize.

The output canvas is float32 in [0, 1] with background pixels exactly 0 and
strokes bright, shaped (size, size). Network-specific input normalization is
applied later by the extractor, not here.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import UnreadableImage

TARGET_SIZE = 224


def otsu_threshold(gray: np.ndarray) -> float:
    """Global threshold maximizing inter-class variance on a 256-bin
    histogram of an 8-bit grayscale image."""
    hist = np.bincount(gray.astype(np.uint8).ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    levels = np.arange(256, dtype=np.float64)
    w0 = np.cumsum(hist)
    w1 = total - w0
    sum0 = np.cumsum(hist * levels)
    mean_all = sum0[-1]
    valid = (w0 > 0) & (w1 > 0)
    mu0 = np.where(valid, sum0 / np.maximum(w0, 1), 0.0)
    mu1 = np.where(valid, (mean_all - sum0) / np.maximum(w1, 1), 0.0)
    between = np.where(valid, w0 * w1 * (mu0 - mu1) ** 2, -1.0)
    return float(np.argmax(between))


def load_grayscale(source) -> np.ndarray:
    """Image file / PIL image / array -> uint8 grayscale array."""
    if isinstance(source, np.ndarray):
        arr = source
        if arr.ndim == 3:
            arr = arr.mean(axis=2)
        return np.clip(arr, 0, 255).astype(np.uint8)
    if isinstance(source, Image.Image):
        return np.asarray(source.convert("L"))
    try:
        with Image.open(Path(source)) as img:
            return np.asarray(img.convert("L"))
    except (UnidentifiedImageError, OSError) as exc:
        raise UnreadableImage(f"cannot decode image {source}: {exc}") from exc


def preprocess(source, size: int = TARGET_SIZE) -> np.ndarray:
    """Background-zeroed, stroke-bright, square canvas of the given size.

    The foreground is the minority side of an Otsu split (signatures are
    sparse); dark-on-light scans are inverted so strokes come out bright,
    already-inverted inputs pass through, making the operation idempotent up
    to resampling. A blank page yields an all-zero canvas.
    """
    gray = load_grayscale(source).astype(np.float64)
    if gray.size == 0:
        raise UnreadableImage("empty image")
    if float(np.ptp(gray)) < 1.0:
        return np.zeros((size, size), dtype=np.float32)

    t = otsu_threshold(gray)
    dark = gray <= t
    # background is the majority side; strokes the minority
    strokes_dark = dark.sum() <= dark.size / 2
    mask = dark if strokes_dark else ~dark
    intensity = (255.0 - gray) if strokes_dark else gray
    canvas = np.where(mask, intensity, 0.0) / 255.0

    h, w = canvas.shape
    side = max(h, w)
    padded = np.zeros((side, side), dtype=np.float64)
    top = (side - h) // 2
    left = (side - w) // 2
    padded[top : top + h, left : left + w] = canvas

    img = Image.fromarray((padded * 255.0).astype(np.uint8), mode="L")
    img = img.resize((size, size), Image.BILINEAR)
    return (np.asarray(img, dtype=np.float32) / 255.0).astype(np.float32)


def batch_preprocess(sources, size: int = TARGET_SIZE) -> np.ndarray:
    return np.stack([preprocess(s, size) for s in sources])
