from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from alsig.synth import SynthConfig, generate, preset


@pytest.fixture(scope="session")
def tiny_ds():
    return generate(preset("tiny"))


@pytest.fixture(scope="session")
def small_ds():
    """Mid-size synthetic set for loop and harness tests."""
    return generate(
        SynthConfig(
            n_users=8,
            n_genuine_per_user=12,
            n_forgery_per_user=6,
            dim=10,
            intra_class_sigma=0.3,
            forgery_offset_sigma=0.5,
            forgery_sigma=0.3,
            inter_user_scale=1.5,
            seed=11,
        )
    )
