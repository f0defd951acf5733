"""Feature extraction from a pretrained 50-layer residual network.

Three tap points off the final convolutional stage (a 7x7x2048 map for
224x224 inputs):

- pooled:   global average pool        -> 2048
- avg3x3s2: 3x3 average pool, stride 2 -> 3x3x2048 = 18432 (9 spatial cells)
- raw:      the full map flattened     -> 100352
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from torch.nn import functional as F
from torchvision.models import resnet50

from .errors import DimMismatch, WeightsUnavailable

VARIANT_DIMS = {"pooled": 2048, "avg3x3s2": 18432, "raw": 100352}

# standard ImageNet input statistics
_MEAN = torch.tensor([0.485, 0.456, 0.406]).view(1, 3, 1, 1)
_STD = torch.tensor([0.229, 0.224, 0.225]).view(1, 3, 1, 1)


def variant_tag(variant: str) -> str:
    return f"{variant}-{VARIANT_DIMS[variant]}"


class FeatureExtractor:
    """Backbone wrapper producing one of the three tap-point variants.

    weights: "imagenet" (download the standard release), "none" (seeded
    random initialization, for pipeline tests and dry runs), or a path to a
    state-dict file.
    """

    def __init__(self, variant: str, weights: str = "imagenet", seed: int = 0):
        if variant not in VARIANT_DIMS:
            raise ValueError(f"unknown variant {variant!r}; known: {sorted(VARIANT_DIMS)}")
        self.variant = variant
        self.dim = VARIANT_DIMS[variant]
        self._backbone = self._build(weights, seed)
        self._backbone.eval()

    @staticmethod
    def _build(weights: str, seed: int):
        if weights == "none":
            torch.manual_seed(seed)
            return resnet50(weights=None)
        if weights == "imagenet":
            try:
                from torchvision.models import ResNet50_Weights

                return resnet50(weights=ResNet50_Weights.IMAGENET1K_V1)
            except Exception as exc:
                raise WeightsUnavailable(
                    f"pretrained weights could not be loaded: {exc}"
                ) from exc
        path = Path(weights)
        if not path.exists():
            raise WeightsUnavailable(f"weights file not found: {path}")
        model = resnet50(weights=None)
        try:
            state = torch.load(path, map_location="cpu", weights_only=True)
            model.load_state_dict(state)
        except Exception as exc:
            raise WeightsUnavailable(f"cannot load weights from {path}: {exc}") from exc
        return model

    def _conv_map(self, batch: torch.Tensor) -> torch.Tensor:
        m = self._backbone
        x = m.conv1(batch)
        x = m.bn1(x)
        x = m.relu(x)
        x = m.maxpool(x)
        x = m.layer1(x)
        x = m.layer2(x)
        x = m.layer3(x)
        return m.layer4(x)  # (n, 2048, 7, 7) for 224x224 inputs

    def features(self, canvases: np.ndarray, batch_size: int = 8) -> np.ndarray:
        """Feature matrix for preprocessed canvases (n, H, W) in [0, 1]."""
        out = []
        with torch.no_grad():
            for start in range(0, len(canvases), batch_size):
                chunk = torch.from_numpy(
                    np.ascontiguousarray(canvases[start : start + batch_size])
                ).float()
                x = chunk.unsqueeze(1).repeat(1, 3, 1, 1)
                x = (x - _MEAN) / _STD
                fmap = self._conv_map(x)
                if self.variant == "pooled":
                    feats = F.adaptive_avg_pool2d(fmap, 1).flatten(1)
                elif self.variant == "avg3x3s2":
                    feats = F.avg_pool2d(fmap, kernel_size=3, stride=2).flatten(1)
                else:
                    feats = fmap.flatten(1)
                out.append(feats.cpu().numpy().astype(np.float32))
        feats = np.concatenate(out, axis=0) if out else np.zeros((0, self.dim), np.float32)
        if feats.shape[1] != self.dim:
            raise DimMismatch(
                f"variant {self.variant} produced dim {feats.shape[1]}, "
                f"declared {self.dim}"
            )
        return feats
