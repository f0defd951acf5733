"""Experiment orchestration: per-user splits, AL loops, evaluation, sweeps.

Users x seed-repeats form an embarrassingly parallel job set; results are
merged by (repeat, user, budget) key so the worker count never changes a
report. The final classifier labels a test sample genuine iff its decision
value is strictly positive.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from multiprocessing import get_context

import numpy as np

from . import svm
from .active import LoopResult, Strategy, StrategyKind, run_al_loop
from .dataset import Dataset, UserSplit, build_assignments, build_split
from .metrics import (
    ConfusionCounts,
    accuracy,
    degenerate_metrics,
    f1,
    precision,
    query_composition,
    recall,
)
from .seeding import derive_seed

AGGREGATE_METRICS = ("accuracy", "precision", "recall", "f1", "genuine_fraction")


@dataclass(frozen=True)
class ProtocolConfig:
    n_initial_pos: int = 2
    n_negatives: int = 228
    n_test_genuine: int = 12
    n_test_forgery: int = 12
    budget: int = 5
    strategy: Strategy = Strategy()
    svm: svm.SvmConfig = svm.SvmConfig()
    feature_variant: str = "synthetic"
    base_seed: int = 0
    n_seed_repeats: int = 1
    widen: str = "auto"  # on | off | auto (strategy default)
    knn_batch: bool = True
    adis_mode: str = "pairwise"
    c_floor: float = 1e-3

    def __post_init__(self):
        if min(self.n_initial_pos, self.n_test_genuine, self.n_test_forgery) < 1:
            raise ValueError("positive/test counts must be >= 1")
        if self.n_negatives < 1 or self.budget < 0 or self.n_seed_repeats < 1:
            raise ValueError("invalid negatives/budget/repeats")


@dataclass(frozen=True)
class UserRow:
    user_id: int
    seed_repeat: int
    budget: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    genuine_fraction: float
    n_queries: int
    fallback_rounds: int
    final_c: float
    supervised: bool
    degenerate: tuple[str, ...]
    queries: tuple[tuple[int, int, int], ...]


@dataclass(frozen=True)
class ExperimentReport:
    config: dict
    rows: tuple[UserRow, ...]
    aggregates: dict
    wall_time_s: float


def config_dict(cfg: ProtocolConfig) -> dict:
    """Serializable config echo embedded in every report."""
    return {
        "n_initial_pos": cfg.n_initial_pos,
        "n_negatives": cfg.n_negatives,
        "n_test_genuine": cfg.n_test_genuine,
        "n_test_forgery": cfg.n_test_forgery,
        "budget": cfg.budget,
        "strategy": {"kind": cfg.strategy.kind.value, "k": cfg.strategy.k},
        "svm": {
            "c": cfg.svm.c,
            "kernel": {"kind": cfg.svm.kernel.kind, "gamma": cfg.svm.kernel.gamma},
            "class_balance": cfg.svm.class_balance,
            "tol": cfg.svm.tol,
            "max_passes": cfg.svm.max_passes,
        },
        "feature_variant": cfg.feature_variant,
        "base_seed": cfg.base_seed,
        "n_seed_repeats": cfg.n_seed_repeats,
        "widen": cfg.widen,
        "knn_batch": cfg.knn_batch,
        "adis_mode": cfg.adis_mode,
        "c_floor": cfg.c_floor,
    }


def evaluate_model(m: svm.SvmModel, ds: Dataset, split: UserSplit) -> ConfusionCounts:
    fg = svm.decision_for_ids(m, split.test_genuine_ids, ds)
    ff = svm.decision_for_ids(m, split.test_forgery_ids, ds)
    tp = int((fg > 0).sum())
    fp = int((ff > 0).sum())
    return ConfusionCounts(
        tp=tp, fp=fp, tn=len(split.test_forgery_ids) - fp, fn=len(split.test_genuine_ids) - tp
    )


def _row_from_counts(
    counts: ConfusionCounts,
    user: int,
    rep: int,
    budget: int,
    queries,
    fallback_rounds: int,
    final_c: float,
    ds: Dataset,
    target_user: int,
    supervised: bool = False,
) -> UserRow:
    queries = tuple(queries)
    degenerate = set(degenerate_metrics(counts))
    if not queries:
        degenerate.add("genuine_fraction")
    return UserRow(
        user_id=user,
        seed_repeat=rep,
        budget=budget,
        accuracy=accuracy(counts),
        precision=precision(counts),
        recall=recall(counts),
        f1=f1(counts),
        genuine_fraction=query_composition(queries, ds, target_user),
        n_queries=len(queries),
        fallback_rounds=fallback_rounds,
        final_c=final_c,
        supervised=supervised,
        degenerate=tuple(sorted(degenerate)),
        queries=queries,
    )


def _c_after_round(result: LoopResult, cfg: ProtocolConfig, budget: int) -> float:
    c = cfg.svm.c
    for event in result.state.widen_log:
        if event["round"] <= budget:
            c = event["c"]
    return c


def _user_budget_rows(
    ds: Dataset, cfg: ProtocolConfig, user: int, rep: int, budgets: list[int]
) -> list[UserRow]:
    """Rows for one (user, repeat) across budgets.

    Sequential strategies run once at the largest budget and read the smaller
    budgets off the per-round checkpoints, which the prefix property makes
    identical to separate runs. Batch knn reruns per budget.
    """
    rep_seed = derive_seed(cfg.base_seed, rep)
    split = build_split(ds, user, cfg, seed=rep_seed)
    loop_seed = derive_seed(rep_seed, user)
    batch = cfg.strategy.kind is StrategyKind.KNN and cfg.knn_batch

    rows = []
    if batch:
        for b in sorted(budgets):
            result = run_al_loop(
                split, cfg.strategy, b, cfg.svm, ds, loop_seed,
                widen=cfg.widen, knn_batch=True, adis_mode=cfg.adis_mode,
                c_floor=cfg.c_floor,
            )
            rows.append(
                _row_from_counts(
                    evaluate_model(result.model, ds, split),
                    user, rep, b, result.state.queries,
                    len(result.state.fallback_rounds),
                    result.state.current_c, ds, split.target_user,
                )
            )
        return rows

    top = max(budgets)
    result = run_al_loop(
        split, cfg.strategy, top, cfg.svm, ds, loop_seed,
        widen=cfg.widen, knn_batch=cfg.knn_batch, adis_mode=cfg.adis_mode,
        c_floor=cfg.c_floor,
    )
    for b in sorted(budgets):
        # pool exhaustion can end the loop early; reuse the last checkpoint
        idx = min(b, len(result.checkpoints) - 1)
        model = result.checkpoints[idx]
        queries = result.state.queries[:idx]
        fallbacks = sum(1 for r in result.state.fallback_rounds if r <= idx)
        rows.append(
            _row_from_counts(
                evaluate_model(model, ds, split),
                user, rep, b, queries, fallbacks,
                _c_after_round(result, cfg, idx), ds, split.target_user,
            )
        )
    return rows


def _supervised_row(ds: Dataset, cfg: ProtocolConfig, user: int, rep: int) -> UserRow:
    rep_seed = derive_seed(cfg.base_seed, rep)
    split = build_split(ds, user, cfg, seed=rep_seed)
    assignments = build_assignments(ds, cfg, seed=rep_seed)
    test_genuine_all = set()
    for a in assignments.values():
        test_genuine_all.update(a.test_genuine_ids)
    pos = [s for s in ds.genuine_ids(user) if s not in test_genuine_all]
    neg = [
        s
        for s in ds.all_genuine_ids()
        if ds.user_of(s) != user and s not in test_genuine_all
    ]
    ids = sorted(pos + neg)
    pos_set = set(pos)
    labels = [1 if s in pos_set else -1 for s in ids]
    model = svm.train(ds, ids, labels, cfg.svm)
    return _row_from_counts(
        evaluate_model(model, ds, split),
        user, rep, cfg.budget, (), 0, cfg.svm.c, ds, user, supervised=True,
    )


# worker-process state, set once per worker by the pool initializer
_WORKER_DS: Dataset | None = None


def _init_worker(ds: Dataset) -> None:
    global _WORKER_DS
    _WORKER_DS = ds


def _worker_task(args) -> list[UserRow]:
    cfg, user, rep, budgets, supervised = args
    try:
        if supervised:
            return [_supervised_row(_WORKER_DS, cfg, user, rep)]
        return _user_budget_rows(_WORKER_DS, cfg, user, rep, budgets)
    except Exception as exc:
        raise RuntimeError(f"user {user} (repeat {rep}) failed: {exc}") from exc


def _run_rows(
    ds: Dataset,
    cfg: ProtocolConfig,
    budgets: list[int],
    workers: int,
    supervised: bool,
) -> list[UserRow]:
    tasks = [
        (cfg, user, rep, budgets, supervised)
        for rep in range(cfg.n_seed_repeats)
        for user in range(ds.n_users)
    ]
    if workers <= 1:
        _init_worker(ds)
        chunks = [_worker_task(t) for t in tasks]
    else:
        ctx = get_context(os.environ.get("ALSIG_MP_START", "fork"))
        with ProcessPoolExecutor(
            max_workers=workers,
            mp_context=ctx,
            initializer=_init_worker,
            initargs=(ds,),
        ) as pool:
            chunks = list(pool.map(_worker_task, tasks, chunksize=8))
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (r.seed_repeat, r.user_id, r.budget))
    return rows


def aggregate(rows) -> dict:
    out = {}
    for name in AGGREGATE_METRICS:
        vals = np.array([getattr(r, name) for r in rows], dtype=np.float64)
        out[name] = {"mean": float(vals.mean()), "std": float(vals.std())}
    return out


def run_experiment(ds: Dataset, cfg: ProtocolConfig, workers: int = 1) -> ExperimentReport:
    """Full protocol at cfg.budget for every user x repeat."""
    t0 = time.perf_counter()
    rows = _run_rows(ds, cfg, [cfg.budget], workers, supervised=False)
    return ExperimentReport(
        config=config_dict(cfg),
        rows=tuple(rows),
        aggregates=aggregate(rows),
        wall_time_s=time.perf_counter() - t0,
    )


def run_supervised_baseline(
    ds: Dataset, cfg: ProtocolConfig, workers: int = 1
) -> ExperimentReport:
    """Every non-test genuine labeled: the ceiling the loop economizes against."""
    t0 = time.perf_counter()
    rows = _run_rows(ds, cfg, [cfg.budget], workers, supervised=True)
    config = dict(config_dict(cfg), supervised=True)
    return ExperimentReport(
        config=config,
        rows=tuple(rows),
        aggregates=aggregate(rows),
        wall_time_s=time.perf_counter() - t0,
    )


def run_budget_sweep(
    ds: Dataset, cfg: ProtocolConfig, budgets, workers: int = 1
) -> dict[int, ExperimentReport]:
    """One report per budget, sharing loop work across budgets when the
    strategy permits (equivalent to separate runs; see the prefix tests)."""
    budgets = sorted(set(int(b) for b in budgets))
    if not budgets:
        raise ValueError("budgets must be non-empty")
    t0 = time.perf_counter()
    rows = _run_rows(ds, cfg, budgets, workers, supervised=False)
    wall = time.perf_counter() - t0
    out = {}
    for b in budgets:
        sub = [r for r in rows if r.budget == b]
        out[b] = ExperimentReport(
            config=dict(config_dict(cfg), budget=b),
            rows=tuple(sub),
            aggregates=aggregate(sub),
            wall_time_s=wall,
        )
    return out
