#!/usr/bin/env python3
"""Benchmark the compiled SMO core against the pure-Python fallback.

Problems mirror what the experiment harness actually trains: the per-round
AL problem (2+5 positives vs 228 negatives) and the fully supervised one
(~1725 samples), both RBF at C=1000 with class balancing.

Usage: python benchmarks/bench_smo.py [--repeats 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from alsig import smo_py, svm
from alsig.dataset import SplitSpec, build_split
from alsig.synth import generate, preset


def build_problem(n_pos: int, n_neg: int):
    ds = generate(preset("utsig-like"))
    split = build_split(ds, 0, SplitSpec(n_negatives=n_neg), seed=0)
    pos = list(split.initial_positive_ids)
    pool_own = [s for s in split.unlabeled_pool_ids if ds.user_of(s) == 0]
    pos += pool_own[: max(0, n_pos - len(pos))]
    neg = list(split.initial_negative_ids)
    if n_neg > len(neg):
        extra = [s for s in split.unlabeled_pool_ids if ds.user_of(s) != 0]
        neg += extra[: n_neg - len(neg)]
    ids = sorted(pos + neg)
    pos_set = set(pos)
    y = np.array([1.0 if s in pos_set else -1.0 for s in ids])
    X = ds.features_for(ids)
    spec = svm.resolve_gamma(svm.KernelSpec("rbf"), X)
    K = svm.gram(X, spec)
    Q = np.ascontiguousarray((y[:, None] * y[None, :]) * K)
    cfg = svm.SvmConfig(c=1000.0)
    cp, cn = svm.class_penalties(cfg, int((y > 0).sum()), int((y < 0).sum()))
    C = np.where(y > 0, cp, cn)
    return Q, y, C


def bench(solver, Q, y, C, repeats: int):
    times = []
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = solver(Q, y, C, 1e-3, 2000 * Q.shape[0])
        times.append(time.perf_counter() - t0)
    return min(times), result


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    if svm._smo is None:
        raise SystemExit("compiled extension not built; nothing to compare")

    cases = [
        ("al-round (7 pos / 228 neg)", build_problem(7, 228)),
        ("supervised (15 pos / 1710 neg)", build_problem(15, 1710)),
    ]
    print(f"{'problem':<32} {'n':>5} {'compiled':>10} {'pure':>10} {'speedup':>8}")
    for name, (Q, y, C) in cases:
        t_c, res_c = bench(svm._smo.solve, Q, y, C, args.repeats)
        t_p, res_p = bench(smo_py.solve, Q, y, C, max(1, args.repeats // 2))
        a_c, rho_c, it_c, _ = res_c
        a_p, rho_p, it_p, _ = res_p
        agree = np.array_equal(a_c, a_p) and rho_c == rho_p and it_c == it_p
        print(
            f"{name:<32} {Q.shape[0]:>5} {t_c * 1e3:>8.1f}ms {t_p * 1e3:>8.1f}ms "
            f"{t_p / t_c:>7.1f}x  ({it_c} iters, bit-identical: {agree})"
        )
        if not agree:
            raise SystemExit("backends disagree; investigate before trusting timings")


if __name__ == "__main__":
    main()
