"""Margin-band query selection and the per-user active-learning loop.

The band is the pool region where |decision| <= 1. Selection strategies pick
one band member per round (distance to the hyperplane, binary entropy of the
calibrated probability, or average-pairwise-distance diversity over nearest
neighbors); a uniform-random baseline skips the band entirely. When the band
holds fewer than a third of the pool, entropy and knn widen it by halving the
SVM error penalty and retraining.
"""

from __future__ import annotations

import bisect
import dataclasses
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import svm
from .dataset import Dataset, UserSplit
from .errors import EmptyBand, EmptyPool, PoolTooSmall
from .seeding import LOOP_ROUND, derive_rng


class StrategyKind(str, Enum):
    DISTANCE = "distance"
    ENTROPY = "entropy"
    KNN = "knn"
    RANDOM = "random"


@dataclass(frozen=True)
class Strategy:
    kind: StrategyKind = StrategyKind.DISTANCE
    k: int = 5  # knn only

    def __post_init__(self):
        if self.kind is StrategyKind.KNN and self.k < 1:
            raise ValueError("k must be >= 1 for the knn strategy")


@dataclass
class ActiveState:
    """Mutable per-user loop state; id lists stay sorted so training order
    and tie-breaking are reproducible."""

    labeled_pos: list[int]
    labeled_neg: list[int]
    pool: list[int]
    queries: list[tuple[int, int, int]] = field(default_factory=list)
    current_c: float = 1000.0
    fallback_rounds: list[int] = field(default_factory=list)
    widen_log: list[dict] = field(default_factory=list)

    def labeled(self) -> tuple[list[int], list[int]]:
        pos = set(self.labeled_pos)
        ids = sorted(self.labeled_pos + self.labeled_neg)
        labels = [1 if s in pos else -1 for s in ids]
        return ids, labels


def margin_band(m: svm.SvmModel, pool, ds: Dataset) -> list[int]:
    """Pool ids whose |decision| <= 1, ascending by sample id."""
    pool = sorted(pool)
    if not pool:
        return []
    f = svm.decision_for_ids(m, pool, ds)
    return [s for s, v in zip(pool, f) if abs(v) <= 1.0]


@dataclass(frozen=True)
class WidenOutcome:
    model: svm.SvmModel
    band: list[int]
    c: float
    retrains: int
    hit_floor: bool


def widen_band(
    st: ActiveState,
    m: svm.SvmModel,
    ds: Dataset,
    cfg: svm.SvmConfig,
    c_floor: float = 1e-3,
) -> WidenOutcome:
    """Halve the penalty and retrain until the band covers a third of the
    pool or the floor is reached; the floor case keeps the widest band seen."""
    ids, labels = st.labeled()
    band = margin_band(m, st.pool, ds)
    best_model, best_band, best_c = m, band, st.current_c
    c = st.current_c
    retrains = 0
    while 3 * len(band) < len(st.pool) and c > c_floor:
        c = c / 2.0
        m = svm.train(ds, ids, labels, dataclasses.replace(cfg, c=c))
        band = margin_band(m, st.pool, ds)
        retrains += 1
        if len(band) > len(best_band):
            best_model, best_band, best_c = m, band, c
    if 3 * len(band) < len(st.pool):
        return WidenOutcome(best_model, best_band, best_c, retrains, True)
    return WidenOutcome(m, band, c, retrains, False)


def select_distance(m: svm.SvmModel, band, ds: Dataset) -> int:
    """Band id with the smallest |decision|; ties go to the smaller id."""
    band = sorted(band)
    if not band:
        raise EmptyBand("distance selection over an empty band")
    f = np.abs(svm.decision_for_ids(m, band, ds))
    return band[int(np.argmin(f))]


def binary_entropy(p) -> np.ndarray:
    """H(p) in nats with the 0 log 0 = 0 convention."""
    p = np.asarray(p, dtype=np.float64)
    out = np.zeros_like(p)
    inner = (p > 0) & (p < 1)
    q = p[inner]
    out[inner] = -(q * np.log(q) + (1.0 - q) * np.log(1.0 - q))
    return out


def select_entropy(m: svm.SvmModel, band, ds: Dataset) -> int:
    """Band id maximizing the entropy of the calibrated probability."""
    band = sorted(band)
    if not band:
        raise EmptyBand("entropy selection over an empty band")
    h = binary_entropy(svm.predict_proba_for_ids(m, band, ds))
    return band[int(np.argmax(h))]


def adis_scores(
    band, pool, ds: Dataset, k: int, mode: str = "pairwise"
) -> np.ndarray:
    """Diversity score per band member over {member} + its k nearest pool
    neighbors (Euclidean, self excluded, distance ties broken by id).

    pairwise: mean distance over all (k+1)k/2 unordered pairs of the group.
    hub: sum of member-to-neighbor distances scaled by 2/(k(k+1)).
    """
    band = sorted(band)
    pool = sorted(pool)
    if len(pool) < k + 1:
        raise PoolTooSmall(f"pool of {len(pool)} cannot supply k={k} neighbors")
    if mode not in ("pairwise", "hub"):
        raise ValueError(f"unknown adis mode {mode!r}")
    B = ds.features_for(band)
    P = ds.features_for(pool)
    pool_arr = np.asarray(pool, dtype=np.int64)
    d2 = (
        (B * B).sum(axis=1)[:, None]
        + (P * P).sum(axis=1)[None, :]
        - 2.0 * (B @ P.T)
    )
    np.maximum(d2, 0.0, out=d2)
    dist = np.sqrt(d2)

    scores = np.empty(len(band))
    n_pairs = k * (k + 1) // 2
    for idx, sid in enumerate(band):
        order = np.lexsort((pool_arr, dist[idx]))
        neighbors = [t for t in order if pool_arr[t] != sid][:k]
        if mode == "hub":
            scores[idx] = 2.0 / (k * (k + 1)) * float(dist[idx][neighbors].sum())
            continue
        pts = np.vstack([B[idx : idx + 1], P[neighbors]])
        diff = pts[:, None, :] - pts[None, :, :]
        pd = np.sqrt((diff * diff).sum(axis=-1))
        iu = np.triu_indices(k + 1, 1)
        scores[idx] = float(pd[iu].sum()) / n_pairs
    return scores


def select_knn(band, pool, ds: Dataset, k: int, mode: str = "pairwise") -> int:
    """Band id with the largest diversity score; ties go to the smaller id."""
    band = sorted(band)
    if not band:
        raise EmptyBand("knn selection over an empty band")
    scores = adis_scores(band, pool, ds, k, mode)
    return band[int(np.argmax(scores))]


def select_random(pool, rng) -> int:
    """Uniform draw from the pool; rng is a seed int or a numpy Generator."""
    pool = sorted(pool)
    if not pool:
        raise EmptyPool("random selection from an empty pool")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    return pool[int(rng.integers(len(pool)))]


@dataclass(frozen=True)
class LoopResult:
    model: svm.SvmModel
    state: ActiveState
    # checkpoints[b] is the model trained on the labels held after b queries,
    # so checkpoints[-1] is the final model (absent for batch selection)
    checkpoints: tuple[svm.SvmModel, ...]


def _widen_enabled(strategy: Strategy, widen: str) -> bool:
    if widen == "on":
        return True
    if widen == "off":
        return False
    if widen == "auto":
        return strategy.kind in (StrategyKind.ENTROPY, StrategyKind.KNN)
    raise ValueError(f"widen must be on/off/auto, got {widen!r}")


def run_al_loop(
    split: UserSplit,
    strategy: Strategy,
    budget: int,
    cfg: svm.SvmConfig,
    ds: Dataset,
    seed: int,
    widen: str = "auto",
    knn_batch: bool = True,
    adis_mode: str = "pairwise",
    c_floor: float = 1e-3,
) -> LoopResult:
    """Run the active-learning rounds for one user and return the final model.

    Each round trains at the state's current penalty, forms the band (widening
    it when the strategy calls for that), queries one sample, asks the oracle
    (positive iff the sample is a genuine of the target user), and retrains.
    An empty band falls back to a logged random draw. The knn strategy in
    batch mode instead takes the top `budget` diversity scores in one round.
    """
    if budget < 0:
        raise ValueError("budget must be >= 0")
    st = ActiveState(
        labeled_pos=sorted(split.initial_positive_ids),
        labeled_neg=sorted(split.initial_negative_ids),
        pool=sorted(split.unlabeled_pool_ids),
        current_c=cfg.c,
    )
    widen_on = _widen_enabled(strategy, widen)

    def train_current() -> svm.SvmModel:
        ids, labels = st.labeled()
        return svm.train(ds, ids, labels, dataclasses.replace(cfg, c=st.current_c))

    def oracle(sid: int) -> int:
        return 1 if ds.user_of(sid) == split.target_user and ds.is_genuine(sid) else -1

    def commit(round_no: int, sid: int) -> None:
        label = oracle(sid)
        st.pool.remove(sid)
        bisect.insort(st.labeled_pos if label > 0 else st.labeled_neg, sid)
        st.queries.append((round_no, sid, label))

    model = train_current()
    checkpoints = [model]

    if strategy.kind is StrategyKind.KNN and knn_batch and budget > 0 and st.pool:
        picked = _knn_batch_select(
            st, model, ds, cfg, strategy.k, budget, widen_on, adis_mode, c_floor, seed
        )
        for sid in picked:
            commit(1, sid)
        model = train_current()
        checkpoints.append(model)
        return LoopResult(model, st, tuple(checkpoints))

    for r in range(1, budget + 1):
        if not st.pool:
            break
        if strategy.kind is StrategyKind.RANDOM:
            sid = select_random(st.pool, derive_rng(seed, LOOP_ROUND, r))
        else:
            selection_model = model
            band = margin_band(selection_model, st.pool, ds)
            if widen_on and 3 * len(band) < len(st.pool):
                outcome = widen_band(st, selection_model, ds, cfg, c_floor)
                selection_model, band = outcome.model, outcome.band
                st.current_c = outcome.c
                st.widen_log.append(
                    {
                        "round": r,
                        "retrains": outcome.retrains,
                        "c": outcome.c,
                        "hit_floor": outcome.hit_floor,
                    }
                )
            if not band:
                sid = select_random(st.pool, derive_rng(seed, LOOP_ROUND, r))
                st.fallback_rounds.append(r)
            elif strategy.kind is StrategyKind.DISTANCE:
                sid = select_distance(selection_model, band, ds)
            elif strategy.kind is StrategyKind.ENTROPY:
                ids, labels = st.labeled()
                calibrated = svm.fit_platt(selection_model, ds, ids, labels)
                sid = select_entropy(calibrated, band, ds)
            else:  # per-round knn
                sid = select_knn(band, st.pool, ds, strategy.k, adis_mode)
        commit(r, sid)
        model = train_current()
        checkpoints.append(model)

    return LoopResult(model, st, tuple(checkpoints))


def _knn_batch_select(
    st, model, ds, cfg, k, budget, widen_on, adis_mode, c_floor, seed
) -> list[int]:
    band = margin_band(model, st.pool, ds)
    if widen_on and 3 * len(band) < len(st.pool):
        outcome = widen_band(st, model, ds, cfg, c_floor)
        band = outcome.band
        st.current_c = outcome.c
        st.widen_log.append(
            {
                "round": 1,
                "retrains": outcome.retrains,
                "c": outcome.c,
                "hit_floor": outcome.hit_floor,
            }
        )
    picked: list[int] = []
    if band:
        scores = adis_scores(band, st.pool, ds, k, adis_mode)
        order = np.lexsort((np.asarray(sorted(band)), -scores))
        picked = [sorted(band)[i] for i in order[: min(budget, len(band))]]
    # fill any shortfall with logged random draws
    remaining = [s for s in st.pool if s not in set(picked)]
    slot = len(picked)
    while len(picked) < budget and remaining:
        slot += 1
        sid = select_random(remaining, derive_rng(seed, LOOP_ROUND, slot))
        picked.append(sid)
        remaining.remove(sid)
        st.fallback_rounds.append(slot)
    return picked
