"""Pure-Python SMO solver, the fallback for the compiled core.

Both implementations run the identical maximal-violating-pair algorithm with
the identical floating-point operation order (the extension is compiled with
FP contraction off), so they produce the same alphas bit for bit. Keep edits
to the update rules mirrored in _smo.pyx.
"""

from __future__ import annotations

import numpy as np

TAU = 1e-12


def solve(
    Q: np.ndarray, y: np.ndarray, C: np.ndarray, tol: float, max_iter: int
) -> tuple[np.ndarray, float, int, float]:
    """Maximize the soft-margin dual by coordinate-pair ascent.

    Q is the label-signed kernel matrix Q[i, j] = y_i * y_j * K(x_i, x_j),
    float64 C-contiguous. Working pairs are chosen by maximal KKT violation;
    convergence when the violation drops below tol. Returns
    (alpha, rho, iterations, violation); the decision bias is b = -rho.
    """
    n = Q.shape[0]
    alpha = np.zeros(n, dtype=np.float64)
    G = np.full(n, -1.0, dtype=np.float64)
    pos = y > 0
    it = 0
    violation = 0.0

    while it < max_iter:
        score = -y * G
        up = (pos & (alpha < C)) | (~pos & (alpha > 0.0))
        low = (pos & (alpha > 0.0)) | (~pos & (alpha < C))
        if not up.any() or not low.any():
            violation = 0.0
            break
        su = np.where(up, score, -np.inf)
        sl = np.where(low, score, np.inf)
        i = int(np.argmax(su))
        j = int(np.argmin(sl))
        violation = float(su[i] - sl[j])
        if violation < tol:
            break

        ai, aj = float(alpha[i]), float(alpha[j])
        ci, cj = float(C[i]), float(C[j])
        gi, gj = float(G[i]), float(G[j])
        old_ai, old_aj = ai, aj
        if y[i] != y[j]:
            quad = float(Q[i, i]) + float(Q[j, j]) + 2.0 * float(Q[i, j])
            if quad <= 0.0:
                quad = TAU
            delta = (-gi - gj) / quad
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0.0:
                if aj < 0.0:
                    aj = 0.0
                    ai = diff
            else:
                if ai < 0.0:
                    ai = 0.0
                    aj = -diff
            if diff > ci - cj:
                if ai > ci:
                    ai = ci
                    aj = ci - diff
            else:
                if aj > cj:
                    aj = cj
                    ai = cj + diff
        else:
            quad = float(Q[i, i]) + float(Q[j, j]) - 2.0 * float(Q[i, j])
            if quad <= 0.0:
                quad = TAU
            delta = (gi - gj) / quad
            s = ai + aj
            ai -= delta
            aj += delta
            if s > ci:
                if ai > ci:
                    ai = ci
                    aj = s - ci
            else:
                if aj < 0.0:
                    aj = 0.0
                    ai = s
            if s > cj:
                if aj > cj:
                    aj = cj
                    ai = s - cj
            else:
                if ai < 0.0:
                    ai = 0.0
                    aj = s
        alpha[i] = ai
        alpha[j] = aj
        G += Q[i] * (ai - old_ai) + Q[j] * (aj - old_aj)
        it += 1

    rho = _rho(alpha, G, y, C)
    return alpha, rho, it, violation


def _rho(alpha, G, y, C) -> float:
    """Bias offset from the converged gradient (ascending-order accumulation
    to stay bit-identical with the compiled loop)."""
    ub = np.inf
    lb = -np.inf
    sum_free = 0.0
    n_free = 0
    for t in range(alpha.shape[0]):
        yg = float(y[t]) * float(G[t])
        if alpha[t] >= C[t]:
            if y[t] < 0.0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0.0:
            if y[t] > 0.0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            n_free += 1
            sum_free += yg
    if n_free > 0:
        return sum_free / n_free
    return (ub + lb) / 2.0
