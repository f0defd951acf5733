"""Command-line surface: synth, run, sweep, report.

All randomness is controlled by --seed/--base-seed/--seeds; output files are
deterministic functions of inputs and flags (wall-time fields aside). Config
precedence for `run`: explicit flag > config file > built-in default.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from . import harness, storage, synth
from .active import Strategy, StrategyKind
from .errors import AlsigError
from .svm import KernelSpec, SvmConfig

RUN_DEFAULTS = {
    "strategy": "distance",
    "budget": 5,
    "negatives": 228,
    "c": 1000.0,
    "kernel": "rbf",
    "gamma": None,
    "k": 5,
    "widen": "auto",
    "seeds": 1,
    "base_seed": 0,
    "initial_pos": 2,
    "test_genuine": 12,
    "test_forgery": 12,
    "knn_batch": True,
    "adis_mode": "pairwise",
    "c_floor": 1e-3,
    "supervised": False,
}


def resolve_workers(requested: int | None) -> int:
    workers = requested if requested else min(os.cpu_count() or 1, 4)
    cap = os.environ.get("ALSIG_MAX_WORKERS")
    if cap:
        workers = min(workers, max(1, int(cap)))
    return max(1, workers)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="alsig")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="generate a synthetic feature bundle")
    sp.add_argument("--preset", choices=sorted(synth.PRESETS))
    sp.add_argument("--users", type=int)
    sp.add_argument("--dim", type=int)
    sp.add_argument("--genuine", type=int, help="genuine samples per user")
    sp.add_argument("--forgeries", type=int, help="skilled forgeries per user")
    sp.add_argument("--intra-sigma", type=float)
    sp.add_argument("--forgery-offset-sigma", type=float)
    sp.add_argument("--forgery-sigma", type=float)
    sp.add_argument("--inter-scale", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", required=True)

    rp = sub.add_parser("run", help="run the protocol and write a report")
    rp.add_argument("--features", required=True, help="feature bundle directory")
    rp.add_argument("--config", help="JSON file with defaults for the flags below")
    rp.add_argument("--strategy", choices=[k.value for k in StrategyKind])
    rp.add_argument("--budget", type=int, metavar="0..5")
    rp.add_argument("--negatives", type=int)
    rp.add_argument("--c", type=float)
    rp.add_argument("--kernel", choices=["rbf", "linear"])
    rp.add_argument("--gamma", type=float)
    rp.add_argument("--k", type=int, help="neighbor count for the knn strategy")
    rp.add_argument("--widen", choices=["on", "off", "auto"])
    rp.add_argument("--seeds", type=int, help="seed repeats to average over")
    rp.add_argument("--base-seed", type=int)
    rp.add_argument("--initial-pos", type=int)
    rp.add_argument("--test-genuine", type=int)
    rp.add_argument("--test-forgery", type=int)
    rp.add_argument("--supervised", action="store_true", default=None,
                    help="run the fully supervised baseline instead of AL")
    rp.add_argument("--workers", type=int)
    rp.add_argument("--out", required=True)

    wp = sub.add_parser("sweep", help="budget x strategy x negatives grid")
    wp.add_argument("--features", required=True)
    wp.add_argument("--config", required=True, help="sweep grid JSON")
    wp.add_argument("--workers", type=int)
    wp.add_argument("--out", required=True, help="output directory")

    tp = sub.add_parser("report", help="render report JSON (or a sweep dir)")
    tp.add_argument("--in", dest="path", required=True)
    tp.add_argument("--format", choices=["csv", "table"], default="table")
    return p


def _cmd_synth(args) -> int:
    if args.preset:
        cfg = synth.preset(args.preset, seed=args.seed)
        tag = f"synthetic:{args.preset}"
    else:
        if args.users is None or args.dim is None:
            raise AlsigError("synth needs --preset or at least --users and --dim")
        base = synth.SynthConfig()
        cfg = synth.SynthConfig(
            n_users=args.users,
            n_genuine_per_user=args.genuine or base.n_genuine_per_user,
            n_forgery_per_user=(
                args.forgeries if args.forgeries is not None else base.n_forgery_per_user
            ),
            dim=args.dim,
            intra_class_sigma=(
                args.intra_sigma if args.intra_sigma is not None else base.intra_class_sigma
            ),
            forgery_offset_sigma=(
                args.forgery_offset_sigma
                if args.forgery_offset_sigma is not None
                else base.forgery_offset_sigma
            ),
            forgery_sigma=(
                args.forgery_sigma if args.forgery_sigma is not None else base.forgery_sigma
            ),
            inter_user_scale=(
                args.inter_scale if args.inter_scale is not None else base.inter_user_scale
            ),
            seed=args.seed if args.seed is not None else base.seed,
        )
        tag = "synthetic:custom"
    ds = synth.generate(cfg)
    storage.write_bundle(ds, args.out, source_tag=tag)
    print(f"wrote {len(ds)} samples ({ds.n_users} users, dim {ds.dim}) to {args.out}")
    return 0


def _merged_run_options(args) -> dict:
    opts = dict(RUN_DEFAULTS)
    if args.config:
        file_opts = json.loads(Path(args.config).read_text(encoding="utf-8"))
        unknown = set(file_opts) - set(RUN_DEFAULTS)
        if unknown:
            raise AlsigError(f"unknown config keys: {sorted(unknown)}")
        opts.update(file_opts)
    for key in RUN_DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            opts[key] = flag
    return opts


def _protocol_config(opts: dict, feature_variant: str) -> harness.ProtocolConfig:
    return harness.ProtocolConfig(
        n_initial_pos=opts["initial_pos"],
        n_negatives=opts["negatives"],
        n_test_genuine=opts["test_genuine"],
        n_test_forgery=opts["test_forgery"],
        budget=opts["budget"],
        strategy=Strategy(StrategyKind(opts["strategy"]), k=opts["k"]),
        svm=SvmConfig(c=opts["c"], kernel=KernelSpec(opts["kernel"], opts["gamma"])),
        feature_variant=feature_variant,
        base_seed=opts["base_seed"],
        n_seed_repeats=opts["seeds"],
        widen=opts["widen"],
        knn_batch=opts["knn_batch"],
        adis_mode=opts["adis_mode"],
        c_floor=opts["c_floor"],
    )


def _bundle_variant(features_dir: str) -> str:
    rows = storage.read_manifest(features_dir)
    return rows[0][3] if rows and rows[0][3] else "unknown"


def _cmd_run(args) -> int:
    opts = _merged_run_options(args)
    ds = storage.read_bundle(args.features)
    cfg = _protocol_config(opts, _bundle_variant(args.features))
    workers = resolve_workers(args.workers)
    if opts["supervised"]:
        report = harness.run_supervised_baseline(ds, cfg, workers=workers)
    else:
        report = harness.run_experiment(ds, cfg, workers=workers)
    storage.write_report(report, args.out)
    agg = report.aggregates
    print(
        f"wrote {args.out}: accuracy {agg['accuracy']['mean']:.4f}, "
        f"f1 {agg['f1']['mean']:.4f} over {len(report.rows)} rows"
    )
    return 0


SWEEP_DEFAULTS = {
    "budgets": [1, 2, 3, 4, 5],
    "strategies": ["distance"],
    "negatives": [228],
    "include_supervised": False,
}


def _cmd_sweep(args) -> int:
    grid = json.loads(Path(args.config).read_text(encoding="utf-8"))
    budgets = grid.pop("budgets", SWEEP_DEFAULTS["budgets"])
    strategies = grid.pop("strategies", SWEEP_DEFAULTS["strategies"])
    negatives = grid.pop("negatives", SWEEP_DEFAULTS["negatives"])
    include_supervised = grid.pop("include_supervised", False)
    unknown = set(grid) - set(RUN_DEFAULTS)
    if unknown:
        raise AlsigError(f"unknown sweep config keys: {sorted(unknown)}")

    ds = storage.read_bundle(args.features)
    variant = _bundle_variant(args.features)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = resolve_workers(args.workers)

    cells: dict[tuple[str, int, int], dict] = {}
    for strat in strategies:
        for neg in negatives:
            opts = dict(RUN_DEFAULTS, **grid, strategy=strat, negatives=neg)
            cfg = _protocol_config(opts, variant)
            per_budget = harness.run_budget_sweep(ds, cfg, budgets, workers=workers)
            for b, rep in per_budget.items():
                name = f"report_{strat}_n{neg}_b{b}.json"
                storage.write_report(rep, out_dir / name)
                cells[(strat, neg, b)] = rep.aggregates
                print(f"wrote {out_dir / name}")

    sup_agg = None
    if include_supervised:
        opts = dict(RUN_DEFAULTS, **grid,
                    negatives=max(negatives), budget=max(budgets))
        cfg = _protocol_config(opts, variant)
        rep = harness.run_supervised_baseline(ds, cfg, workers=workers)
        storage.write_report(rep, out_dir / "report_supervised.json")
        sup_agg = rep.aggregates
        print(f"wrote {out_dir / 'report_supervised.json'}")

    combined = out_dir / "combined.csv"
    with combined.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        header = ["budget"]
        for strat in strategies:
            for neg in negatives:
                header += [f"{strat}_n{neg}_accuracy", f"{strat}_n{neg}_f1"]
        if sup_agg:
            header += ["supervised_accuracy", "supervised_f1"]
        w.writerow(header)
        for b in sorted(budgets):
            row = [b]
            for strat in strategies:
                for neg in negatives:
                    agg = cells[(strat, neg, b)]
                    row += [f"{agg['accuracy']['mean']:.6f}", f"{agg['f1']['mean']:.6f}"]
            if sup_agg:
                row += [
                    f"{sup_agg['accuracy']['mean']:.6f}",
                    f"{sup_agg['f1']['mean']:.6f}",
                ]
            w.writerow(row)
    print(f"wrote {combined}")
    return 0


_REPORT_COLUMNS = [
    "strategy", "negatives", "budget", "seeds", "supervised",
    "accuracy_mean", "accuracy_std", "precision_mean", "recall_mean",
    "f1_mean", "f1_std", "genuine_fraction_mean",
]


def _report_line(data: dict) -> dict:
    cfg, agg = data["config"], data["aggregates"]
    return {
        "strategy": cfg["strategy"]["kind"],
        "negatives": cfg["n_negatives"],
        "budget": cfg["budget"],
        "seeds": cfg["n_seed_repeats"],
        "supervised": bool(cfg.get("supervised", False)),
        "accuracy_mean": f"{agg['accuracy']['mean']:.6f}",
        "accuracy_std": f"{agg['accuracy']['std']:.6f}",
        "precision_mean": f"{agg['precision']['mean']:.6f}",
        "recall_mean": f"{agg['recall']['mean']:.6f}",
        "f1_mean": f"{agg['f1']['mean']:.6f}",
        "f1_std": f"{agg['f1']['std']:.6f}",
        "genuine_fraction_mean": f"{agg['genuine_fraction']['mean']:.6f}",
    }


def render_report(path, fmt: str) -> str:
    """CSV or aligned-table view of one report or of a sweep directory."""
    p = Path(path)
    if p.is_dir():
        files = sorted(p.glob("report_*.json"))
        if not files:
            raise AlsigError(f"no report_*.json files under {p}")
        lines = [_report_line(storage.read_report(f)) for f in files]
        lines.sort(key=lambda l: (l["supervised"], l["strategy"], l["negatives"], l["budget"]))
    else:
        lines = [_report_line(storage.read_report(p))]

    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=_REPORT_COLUMNS)
        w.writeheader()
        w.writerows(lines)
        return buf.getvalue()
    widths = {c: max(len(c), *(len(str(l[c])) for l in lines)) for c in _REPORT_COLUMNS}
    rows = ["  ".join(c.rjust(widths[c]) for c in _REPORT_COLUMNS)]
    for l in lines:
        rows.append("  ".join(str(l[c]).rjust(widths[c]) for c in _REPORT_COLUMNS))
    return "\n".join(rows) + "\n"


def _cmd_report(args) -> int:
    sys.stdout.write(render_report(args.path, args.format))
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "synth": _cmd_synth,
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except (AlsigError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
