"""Soft-margin binary kernel SVM trained by SMO, with sigmoid calibration.

The solver core is the compiled extension when available (see _smo.pyx) and
the pure-Python twin otherwise; set ALSIG_PURE_SMO=1 to force the fallback.
Label convention throughout: the target user's genuines are +1, random
forgeries are -1.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass

import numpy as np

from . import smo_py
from .dataset import Dataset
from .errors import DimensionMismatch, NonFinite, SingleClass, Uncalibrated

try:
    from . import _smo
except ImportError:  # extension not built
    _smo = None


def solver_backend() -> str:
    """Name of the SMO implementation the next train() call will use."""
    if _smo is None or os.environ.get("ALSIG_PURE_SMO") == "1":
        return "python"
    return "compiled"


def _solve(Q, y, C, tol, max_iter):
    if solver_backend() == "compiled":
        return _smo.solve(Q, y, C, tol, max_iter)
    return smo_py.solve(Q, y, C, tol, max_iter)


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "rbf"  # "linear" or "rbf"
    gamma: float | None = None  # rbf only; None = 1/(d * var) at fit time

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive")


@dataclass(frozen=True)
class SvmConfig:
    c: float = 1000.0
    kernel: KernelSpec = KernelSpec()
    class_balance: bool = True
    tol: float = 1e-3
    max_passes: int = 2000  # iteration cap is max_passes * n_samples

    def __post_init__(self):
        if self.c <= 0 or self.tol <= 0 or self.max_passes <= 0:
            raise ValueError("c, tol and max_passes must be positive")


@dataclass(frozen=True)
class PlattScaling:
    a: float
    b: float
    degenerate: bool = False


@dataclass(frozen=True, eq=False)
class SvmModel:
    support_ids: np.ndarray  # int64, ascending
    dual_coeffs: np.ndarray  # alpha_i * y_i for each support vector
    bias: float
    kernel: KernelSpec  # gamma always resolved to a number for rbf
    platt: PlattScaling | None
    c_pos: float
    c_neg: float
    tol: float
    n_iter: int
    kkt_violation: float
    objective: float


def resolve_gamma(kernel: KernelSpec, X: np.ndarray) -> KernelSpec:
    if kernel.kind != "rbf" or kernel.gamma is not None:
        return kernel
    var = float(X.var())
    gamma = 1.0 / (X.shape[1] * var) if var > 0 else 1.0
    return KernelSpec("rbf", gamma)


def gram(X: np.ndarray, kernel: KernelSpec) -> np.ndarray:
    return cross_kernel(X, X, kernel)


def cross_kernel(A: np.ndarray, B: np.ndarray, kernel: KernelSpec) -> np.ndarray:
    if kernel.kind == "linear":
        return A @ B.T
    if kernel.gamma is None:
        raise ValueError("rbf kernel gamma not resolved")
    d2 = (
        (A * A).sum(axis=1)[:, None]
        + (B * B).sum(axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-kernel.gamma * d2)


def class_penalties(cfg: SvmConfig, n_pos: int, n_neg: int) -> tuple[float, float]:
    """Per-class box bounds; balanced mode scales inversely with class size."""
    if not cfg.class_balance:
        return cfg.c, cfg.c
    n = n_pos + n_neg
    return cfg.c * n / (2.0 * n_pos), cfg.c * n / (2.0 * n_neg)


def train(
    ds: Dataset,
    ids,
    labels,
    cfg: SvmConfig,
    seed: int = 0,
) -> SvmModel:
    """Fit the soft-margin dual on the given labeled samples.

    The solver is deterministic (maximal-violating-pair selection), so seed
    is accepted for interface stability but never consumed.
    """
    ids = np.asarray(list(ids), dtype=np.int64)
    y = np.asarray(list(labels), dtype=np.float64)
    if ids.shape[0] != y.shape[0]:
        raise ValueError("ids and labels must have equal length")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be +1 or -1")
    n_pos = int((y > 0).sum())
    n_neg = int((y < 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("training set must contain both classes")

    X = ds.features_for(ids)
    if not np.all(np.isfinite(X)):
        raise NonFinite("training features contain NaN or infinity")

    kernel = resolve_gamma(cfg.kernel, X)
    K = gram(X, kernel)
    Q = np.ascontiguousarray((y[:, None] * y[None, :]) * K)
    c_pos, c_neg = class_penalties(cfg, n_pos, n_neg)
    Cvec = np.where(y > 0, c_pos, c_neg)

    max_iter = cfg.max_passes * ids.shape[0]
    alpha, rho, n_iter, violation = _solve(Q, y, Cvec, cfg.tol, max_iter)
    _repair_equality(alpha, y, Cvec)

    objective = float(alpha.sum() - 0.5 * (alpha @ Q @ alpha))
    sv = alpha > 0.0
    return SvmModel(
        support_ids=ids[sv].copy(),
        dual_coeffs=(alpha[sv] * y[sv]).copy(),
        bias=-rho,
        kernel=kernel,
        platt=None,
        c_pos=c_pos,
        c_neg=c_neg,
        tol=cfg.tol,
        n_iter=int(n_iter),
        kkt_violation=float(violation),
        objective=objective,
    )


def _repair_equality(alpha: np.ndarray, y: np.ndarray, Cvec: np.ndarray) -> None:
    """Cancel the tiny sum(alpha*y) drift the pair updates accumulate by
    adjusting free coordinates inside their box."""
    resid = math.fsum(float(a) * float(s) for a, s in zip(alpha, y))
    if resid == 0.0:
        return
    free = [t for t in range(alpha.shape[0]) if 0.0 < alpha[t] < Cvec[t]]
    free.sort(key=lambda t: min(alpha[t], Cvec[t] - alpha[t]), reverse=True)
    for t in free:
        if resid == 0.0:
            break
        new = min(max(float(alpha[t]) - float(y[t]) * resid, 0.0), float(Cvec[t]))
        resid += float(y[t]) * (new - float(alpha[t]))
        alpha[t] = new


def decision_matrix(m: SvmModel, X: np.ndarray, ds: Dataset) -> np.ndarray:
    """Decision values for feature rows X."""
    if X.ndim != 2 or X.shape[1] != ds.dim:
        raise DimensionMismatch(
            f"feature matrix has dimension {X.shape[-1]}, dataset has {ds.dim}"
        )
    sv = ds.features_for(m.support_ids)
    return cross_kernel(np.asarray(X, dtype=np.float64), sv, m.kernel) @ m.dual_coeffs + m.bias


def decision(m: SvmModel, x: np.ndarray, ds: Dataset) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != ds.dim:
        raise DimensionMismatch(
            f"feature vector has dimension {x.shape[-1] if x.ndim else 0}, "
            f"dataset has {ds.dim}"
        )
    return float(decision_matrix(m, x[None, :], ds)[0])


def decision_for_ids(m: SvmModel, ids, ds: Dataset) -> np.ndarray:
    return decision_matrix(m, ds.features_for(ids), ds)


def fit_platt(m: SvmModel, ds: Dataset, ids, labels) -> SvmModel:
    """Return a copy of the model with the probability sigmoid fitted on the
    given labeled decision values."""
    y = np.asarray(list(labels), dtype=np.float64)
    if (y > 0).sum() == 0 or (y < 0).sum() == 0:
        raise SingleClass("calibration needs both classes")
    f = decision_for_ids(m, ids, ds)
    a, b, degenerate = _fit_sigmoid(f, y > 0)
    return dataclasses.replace(m, platt=PlattScaling(a, b, degenerate))


def _sigmoid_prob(f, a: float, b: float):
    """P(+1 | f) = 1 / (1 + exp(a*f + b)), computed stably."""
    z = a * np.asarray(f, dtype=np.float64) + b
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = np.exp(-z[pos]) / (1.0 + np.exp(-z[pos]))
    out[~pos] = 1.0 / (1.0 + np.exp(z[~pos]))
    return out


def platt_targets(n_pos: int, n_neg: int) -> tuple[float, float]:
    """Smoothed calibration targets (t+, t-) for the sigmoid fit."""
    return (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0)


def _fit_sigmoid(f: np.ndarray, positive: np.ndarray) -> tuple[float, float, bool]:
    """Damped-Newton fit of the two-parameter sigmoid against smoothed
    targets."""
    n_pos = int(positive.sum())
    n_neg = int(positive.shape[0] - n_pos)
    if float(np.ptp(f)) < 1e-12:
        # all decision values equal: fall back to the class prior
        return 0.0, math.log(n_neg / n_pos), True

    t_hi, t_lo = platt_targets(n_pos, n_neg)
    t = np.where(positive, t_hi, t_lo)
    a = 0.0
    b = math.log((n_neg + 1.0) / (n_pos + 1.0))
    sigma = 1e-12
    min_step = 1e-10

    def objective(aa, bb):
        z = aa * f + bb
        # cross-entropy written to avoid overflow on either sign of z
        return float(
            np.sum(np.where(z >= 0, t * z + np.log1p(np.exp(-np.abs(z))),
                            (t - 1.0) * z + np.log1p(np.exp(-np.abs(z)))))
        )

    fval = objective(a, b)
    for _ in range(100):
        p = _sigmoid_prob(f, a, b)
        d2 = p * (1.0 - p)
        h11 = float((f * f * d2).sum()) + sigma
        h22 = float(d2.sum()) + sigma
        h21 = float((f * d2).sum())
        d1 = t - p
        g1 = float((f * d1).sum())
        g2 = float(d1.sum())
        if abs(g1) < 1e-5 and abs(g2) < 1e-5:
            break
        det = h11 * h22 - h21 * h21
        da = -(h22 * g1 - h21 * g2) / det
        db = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * da + g2 * db
        step = 1.0
        while step >= min_step:
            na, nb = a + step * da, b + step * db
            nf = objective(na, nb)
            if nf < fval + 1e-4 * step * gd:
                a, b, fval = na, nb, nf
                break
            step /= 2.0
        else:
            break
    return a, b, False


def predict_proba(m: SvmModel, x: np.ndarray, ds: Dataset) -> float:
    if m.platt is None:
        raise Uncalibrated("model has no fitted sigmoid")
    return float(_sigmoid_prob(decision(m, x, ds), m.platt.a, m.platt.b))


def predict_proba_for_ids(m: SvmModel, ids, ds: Dataset) -> np.ndarray:
    if m.platt is None:
        raise Uncalibrated("model has no fitted sigmoid")
    return _sigmoid_prob(decision_for_ids(m, ids, ds), m.platt.a, m.platt.b)
