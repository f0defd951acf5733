"""Sample/user data model and deterministic per-user splitting.

A dataset holds fixed-dimension feature vectors, each tagged with an owning
user and a kind (genuine signature or skilled forgery). Splits carve out, for
one target user, the initial labeled sets, the unlabeled pool, and the held
out test samples. Every split decision is a pure function of
(dataset, target_user, recipe, seed).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionMismatch, InsufficientSamples
from .seeding import FORGERY_ASSIGNMENT, GENUINE_ASSIGNMENT, NEGATIVE_SUBSET, derive_rng


class Kind(str, Enum):
    GENUINE = "genuine"
    SKILLED_FORGERY = "skilled_forgery"


@dataclass(frozen=True, eq=False)
class SampleRecord:
    sample_id: int
    user_id: int
    kind: Kind
    features: np.ndarray  # float32, shape (dim,)


class Dataset:
    """Immutable container of samples with fast id/user lookups."""

    def __init__(self, records: list[SampleRecord], n_users: int, dim: int):
        if not records:
            raise ValueError("dataset must contain at least one record")
        if dim <= 0:
            raise ValueError("feature dimension must be positive")
        self.records = list(records)
        self.n_users = n_users
        self.dim = dim

        ids = np.array([r.sample_id for r in self.records], dtype=np.int64)
        if len(np.unique(ids)) != len(ids):
            raise ValueError("sample ids must be unique")
        self._ids = ids
        self._users = np.array([r.user_id for r in self.records], dtype=np.int64)
        if self._users.min() < 0 or self._users.max() >= n_users:
            raise ValueError("record references a user id outside [0, n_users)")
        self._genuine = np.array(
            [r.kind is Kind.GENUINE for r in self.records], dtype=bool
        )
        X = np.stack([r.features for r in self.records]).astype(np.float32, copy=False)
        if X.shape[1] != dim:
            raise DimensionMismatch(
                f"features have dimension {X.shape[1]}, dataset declares {dim}"
            )
        if not np.all(np.isfinite(X)):
            raise ValueError("all feature components must be finite")
        self._X = X
        self._row_of = {int(s): i for i, s in enumerate(ids)}

    def __len__(self) -> int:
        return len(self.records)

    def rows_for(self, sample_ids) -> np.ndarray:
        return np.array([self._row_of[int(s)] for s in sample_ids], dtype=np.int64)

    def features_for(self, sample_ids) -> np.ndarray:
        """Feature matrix for the given ids, upcast to float64 for numerics."""
        return self._X[self.rows_for(sample_ids)].astype(np.float64)

    def user_of(self, sample_id: int) -> int:
        return int(self._users[self._row_of[int(sample_id)]])

    def is_genuine(self, sample_id: int) -> bool:
        return bool(self._genuine[self._row_of[int(sample_id)]])

    def genuine_ids(self, user_id: int) -> list[int]:
        mask = (self._users == user_id) & self._genuine
        return sorted(int(s) for s in self._ids[mask])

    def forgery_ids(self, user_id: int) -> list[int]:
        mask = (self._users == user_id) & ~self._genuine
        return sorted(int(s) for s in self._ids[mask])

    def all_genuine_ids(self) -> list[int]:
        return sorted(int(s) for s in self._ids[self._genuine])


@dataclass(frozen=True)
class SplitSpec:
    """The four counts a split recipe needs; ProtocolConfig satisfies the same
    attribute contract."""

    n_initial_pos: int = 2
    n_negatives: int = 228
    n_test_genuine: int = 12
    n_test_forgery: int = 12


@dataclass(frozen=True)
class UserAssignment:
    """Per-user designation of initial labeled genuines and test samples,
    identical no matter which user is the split target."""

    user_id: int
    initial_ids: tuple[int, ...]
    test_genuine_ids: tuple[int, ...]
    test_forgery_ids: tuple[int, ...]


@dataclass(frozen=True)
class UserSplit:
    target_user: int
    initial_positive_ids: tuple[int, ...]
    initial_negative_ids: tuple[int, ...]
    unlabeled_pool_ids: tuple[int, ...]
    test_genuine_ids: tuple[int, ...]
    test_forgery_ids: tuple[int, ...]


def build_assignments(ds: Dataset, cfg, seed: int) -> dict[int, UserAssignment]:
    """Designate every user's initial labeled genuines and test samples.

    The genuine permutation of user u depends only on (seed, u), so the
    designations are globally consistent across all per-user split problems:
    user u's initial genuines serve as labeled negatives for every other
    target, and no user's test samples ever reach any pool.
    """
    out: dict[int, UserAssignment] = {}
    for user in range(ds.n_users):
        gen = ds.genuine_ids(user)
        if len(gen) < cfg.n_initial_pos:
            raise InsufficientSamples(
                f"user {user} has {len(gen)} genuine samples, "
                f"needs at least {cfg.n_initial_pos}"
            )
        perm = derive_rng(seed, user, GENUINE_ASSIGNMENT).permutation(len(gen))
        shuffled = [gen[i] for i in perm]
        initial = tuple(sorted(shuffled[: cfg.n_initial_pos]))
        # test genuines come from the remainder, capped by availability;
        # callers demanding a full test set check the target user themselves
        rest = shuffled[cfg.n_initial_pos :]
        test_gen = tuple(sorted(rest[: cfg.n_test_genuine]))

        forg = ds.forgery_ids(user)
        fperm = derive_rng(seed, user, FORGERY_ASSIGNMENT).permutation(len(forg))
        test_forg = tuple(
            sorted(forg[i] for i in fperm[: min(cfg.n_test_forgery, len(forg))])
        )
        out[user] = UserAssignment(user, initial, test_gen, test_forg)
    return out


def build_split(ds: Dataset, target_user: int, cfg, seed: int) -> UserSplit:
    """Deterministic per-user split.

    Positives: the target's designated initial genuines. Negatives: the
    designated initial genuines of every other user, subsampled to
    cfg.n_negatives when fewer are wanted than exist. Pool: all genuine
    samples not designated initial by anyone and not in any user's test set.
    """
    assignments = build_assignments(ds, cfg, seed)
    target = assignments[target_user]
    if len(target.test_genuine_ids) < cfg.n_test_genuine:
        raise InsufficientSamples(
            f"target user {target_user} has too few genuine samples for "
            f"{cfg.n_initial_pos} initial + {cfg.n_test_genuine} test"
        )
    if len(target.test_forgery_ids) < cfg.n_test_forgery:
        raise InsufficientSamples(
            f"target user {target_user} has {len(ds.forgery_ids(target_user))} "
            f"forgeries, needs {cfg.n_test_forgery}"
        )

    available_negatives = sorted(
        s
        for u, a in assignments.items()
        if u != target_user
        for s in a.initial_ids
    )
    if cfg.n_negatives < len(available_negatives):
        rng = derive_rng(seed, target_user, NEGATIVE_SUBSET)
        perm = rng.permutation(len(available_negatives))
        negatives = tuple(
            sorted(available_negatives[i] for i in perm[: cfg.n_negatives])
        )
    else:
        negatives = tuple(available_negatives)

    excluded = set()
    for a in assignments.values():
        excluded.update(a.initial_ids)
        excluded.update(a.test_genuine_ids)
    pool = tuple(s for s in ds.all_genuine_ids() if s not in excluded)

    return UserSplit(
        target_user=target_user,
        initial_positive_ids=target.initial_ids,
        initial_negative_ids=negatives,
        unlabeled_pool_ids=pool,
        test_genuine_ids=target.test_genuine_ids,
        test_forgery_ids=target.test_forgery_ids,
    )


def validate_split(ds: Dataset, split: UserSplit) -> None:
    """Raise AssertionError on any violated split invariant (test helper)."""
    groups = [
        split.initial_positive_ids,
        split.initial_negative_ids,
        split.unlabeled_pool_ids,
        split.test_genuine_ids,
        split.test_forgery_ids,
    ]
    total = sum(len(g) for g in groups)
    assert len(set().union(*map(set, groups))) == total, "id sets overlap"
    u = split.target_user
    assert all(ds.user_of(s) == u and ds.is_genuine(s) for s in split.initial_positive_ids)
    assert all(ds.user_of(s) != u and ds.is_genuine(s) for s in split.initial_negative_ids)
    assert all(ds.user_of(s) == u and ds.is_genuine(s) for s in split.test_genuine_ids)
    assert all(ds.user_of(s) == u and not ds.is_genuine(s) for s in split.test_forgery_ids)
    assert all(ds.is_genuine(s) for s in split.unlabeled_pool_ids)
