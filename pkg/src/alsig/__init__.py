"""Pool-based active learning for writer-dependent signature verification.

Per user, a kernel SVM separates genuine signatures from other users'
genuines; margin-band query selection picks which pool samples to label next.
"""

from .active import (
    ActiveState,
    Strategy,
    StrategyKind,
    margin_band,
    run_al_loop,
    select_distance,
    select_entropy,
    select_knn,
    select_random,
    widen_band,
)
from .dataset import Dataset, Kind, SampleRecord, SplitSpec, UserSplit, build_split
from .harness import (
    ExperimentReport,
    ProtocolConfig,
    run_budget_sweep,
    run_experiment,
    run_supervised_baseline,
)
from .metrics import ConfusionCounts, accuracy, f1, precision, query_composition, recall
from .storage import read_bundle, write_bundle, write_report
from .svm import KernelSpec, SvmConfig, SvmModel, decision, fit_platt, predict_proba, train
from .synth import PRESETS, SynthConfig, generate

__version__ = "0.1.0"

__all__ = [
    "ActiveState", "ConfusionCounts", "Dataset", "ExperimentReport",
    "KernelSpec", "Kind", "PRESETS", "ProtocolConfig", "SampleRecord",
    "SplitSpec", "Strategy", "StrategyKind", "SvmConfig", "SvmModel",
    "SynthConfig", "UserSplit", "accuracy", "build_split", "decision", "f1",
    "fit_platt", "generate", "margin_band", "precision", "predict_proba",
    "query_composition", "read_bundle", "recall", "run_al_loop",
    "run_budget_sweep", "run_experiment", "run_supervised_baseline",
    "select_distance", "select_entropy", "select_knn", "select_random",
    "train", "widen_band", "write_bundle", "write_report",
]
