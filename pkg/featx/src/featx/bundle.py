"""Writer for the feature-bundle wire format the verification toolkit reads.

Implemented against the format contract (not by importing the consumer):
`features.fbnd` is magic FBND + u32 version + u64 n_samples + u64 dim,
little-endian, followed by the float32 row-major matrix; `manifest.csv`
carries one `sample_id,user_id,kind,source` row per matrix row.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"FBND"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


@dataclass(frozen=True)
class ManifestRow:
    sample_id: int
    user_id: int
    kind: str  # genuine | skilled_forgery
    source: str

    def __post_init__(self):
        if self.kind not in ("genuine", "skilled_forgery"):
            raise ValueError(f"invalid kind {self.kind!r}")


def write_bundle(features: np.ndarray, rows: list[ManifestRow], out_dir) -> None:
    features = np.ascontiguousarray(features, dtype="<f4")
    if features.ndim != 2:
        raise ValueError("features must be a 2-d matrix")
    if len(rows) != features.shape[0]:
        raise ValueError(
            f"{len(rows)} manifest rows for {features.shape[0]} feature rows"
        )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = _HEADER.pack(MAGIC, VERSION, features.shape[0], features.shape[1])
    (out / "features.fbnd").write_bytes(header + features.tobytes(order="C"))
    with (out / "manifest.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        for r in rows:
            w.writerow([r.sample_id, r.user_id, r.kind, r.source])
