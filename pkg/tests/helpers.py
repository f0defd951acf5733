from __future__ import annotations

import numpy as np

from alsig.dataset import Dataset, Kind, SampleRecord


def make_dataset(X: np.ndarray, users, kinds=None, n_users=None) -> Dataset:
    """Dataset from a raw matrix; sample_id = row index."""
    users = list(users)
    kinds = kinds or [Kind.GENUINE] * len(users)
    records = [
        SampleRecord(i, users[i], kinds[i], np.asarray(X[i], dtype=np.float32))
        for i in range(len(users))
    ]
    return Dataset(records, n_users=n_users or max(users) + 1, dim=X.shape[1])


def random_instance(rng: np.random.Generator, n_max=12, d_max=4):
    """Small labeled problem with both classes present."""
    n = int(rng.integers(3, n_max + 1))
    d = int(rng.integers(1, d_max + 1))
    X = rng.normal(0.0, 1.0, (n, d))
    n_pos = int(rng.integers(1, n))
    y = np.array([1] * n_pos + [-1] * (n - n_pos))
    rng.shuffle(y)
    if (y > 0).sum() == 0:
        y[0] = 1
    if (y < 0).sum() == 0:
        y[0] = -1
    ds = make_dataset(X, users=[0 if v > 0 else 1 for v in y])
    return ds, list(range(n)), y.tolist()
