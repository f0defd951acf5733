"""Verification metrics and query-composition statistics.

Positive class is always the target user's genuine signatures. The 0/0 cases
return 0.0 and are reported through degenerate_metrics() instead of raising,
so aggregate means never crash on edge users.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def precision(c: ConfusionCounts) -> float:
    denom = c.tp + c.fp
    return c.tp / denom if denom else 0.0


def recall(c: ConfusionCounts) -> float:
    denom = c.tp + c.fn
    return c.tp / denom if denom else 0.0


def f1(c: ConfusionCounts) -> float:
    p, r = precision(c), recall(c)
    return 2.0 * r * p / (r + p) if (r + p) else 0.0


def accuracy(c: ConfusionCounts) -> float:
    return (c.tp + c.tn) / c.total if c.total else 0.0


def degenerate_metrics(c: ConfusionCounts) -> frozenset[str]:
    """Which metrics hit a 0/0 denominator and were pinned to 0."""
    out = set()
    if c.tp + c.fp == 0:
        out.add("precision")
    if c.tp + c.fn == 0:
        out.add("recall")
    if precision(c) + recall(c) == 0:
        out.add("f1")
    if c.total == 0:
        out.add("accuracy")
    return frozenset(out)


def query_composition(queries, ds, target_user: int) -> float:
    """Fraction of logged queries that are the target user's genuines.

    queries: iterable of (round, sample_id, oracle_label) records. Returns 0
    for an empty log; callers flag that case via the query count.
    """
    queries = list(queries)
    if not queries:
        return 0.0
    hits = sum(
        1
        for _, sid, _ in queries
        if ds.user_of(sid) == target_user and ds.is_genuine(sid)
    )
    return hits / len(queries)
