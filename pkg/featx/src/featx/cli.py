"""featx command line: images in, feature bundle out.

Expected layout: IMAGES_DIR/<user>/genuine/*.png and
IMAGES_DIR/<user>/forgery/*.png (any Pillow-readable format). Users are
numbered 0..n-1 in sorted directory order; samples in sorted file order.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bundle import ManifestRow, write_bundle
from .errors import FeatxError
from .extract import FeatureExtractor, variant_tag
from .preprocess import batch_preprocess

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"}


def collect_images(images_dir: Path) -> list[tuple[Path, int, str]]:
    """(path, user_id, kind) triples in deterministic order."""
    user_dirs = sorted(p for p in images_dir.iterdir() if p.is_dir())
    if not user_dirs:
        raise FeatxError(f"no user directories under {images_dir}")
    out = []
    for uid, udir in enumerate(user_dirs):
        found = False
        for sub, kind in (("genuine", "genuine"), ("forgery", "skilled_forgery")):
            d = udir / sub
            if not d.is_dir():
                continue
            for f in sorted(d.iterdir()):
                if f.suffix.lower() in IMAGE_SUFFIXES:
                    out.append((f, uid, kind))
                    found = True
        if not found:
            raise FeatxError(f"{udir} has no genuine/ or forgery/ images")
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="featx")
    ap.add_argument("--images", required=True, help="image tree (see module docstring)")
    ap.add_argument("--variant", required=True, choices=["pooled", "avg3x3s2", "raw"])
    ap.add_argument("--out", required=True, help="bundle output directory")
    ap.add_argument("--weights", default="imagenet",
                    help="imagenet | none | path to a state-dict file")
    ap.add_argument("--size", type=int, default=224)
    ap.add_argument("--batch", type=int, default=8)
    args = ap.parse_args(argv)

    try:
        triples = collect_images(Path(args.images))
        extractor = FeatureExtractor(args.variant, weights=args.weights)
        canvases = batch_preprocess([p for p, _, _ in triples], size=args.size)
        feats = extractor.features(canvases, batch_size=args.batch)
        tag = variant_tag(args.variant)
        rows = [
            ManifestRow(sample_id=i, user_id=uid, kind=kind, source=tag)
            for i, (_, uid, kind) in enumerate(triples)
        ]
        write_bundle(feats, rows, args.out)
    except FeatxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {feats.shape[0]} x {feats.shape[1]} features ({tag}) to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
