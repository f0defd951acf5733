from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from imagegen import draw_signature


@pytest.fixture(scope="session")
def image_tree(tmp_path_factory):
    """Two users x (2 genuine + 1 forgery) scans on disk."""
    root = tmp_path_factory.mktemp("scans")
    seed = 0
    for user in ("u00", "u01"):
        for kind, count in (("genuine", 2), ("forgery", 1)):
            d = root / user / kind
            d.mkdir(parents=True)
            for i in range(count):
                draw_signature(seed).save(d / f"{i:02d}.png")
                seed += 1
    return root
