# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled SMO core. Mirrors smo_py.solve operation for operation; keep the
two in sync (the equivalence test asserts bit-identical alphas)."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF TAU = 1e-12


def solve(double[:, ::1] Q, double[::1] y, double[::1] C, double tol, long max_iter):
    cdef Py_ssize_t n = Q.shape[0]
    alpha_arr = np.zeros(n, dtype=np.float64)
    grad_arr = np.full(n, -1.0, dtype=np.float64)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] G = grad_arr

    cdef Py_ssize_t it = 0, t, i, j
    cdef double violation = 0.0
    cdef double s_t, gmax, gmin
    cdef double ai, aj, ci, cj, gi, gj, old_ai, old_aj
    cdef double quad, delta, diff, ssum, da_i, da_j, t1, t2
    cdef bint found_i, found_j

    while it < max_iter:
        # maximal violating pair: first occurrence wins ties, matching argmax
        gmax = -np.inf
        gmin = np.inf
        found_i = False
        found_j = False
        i = 0
        j = 0
        for t in range(n):
            s_t = -y[t] * G[t]
            if (y[t] > 0.0 and alpha[t] < C[t]) or (y[t] <= 0.0 and alpha[t] > 0.0):
                if s_t > gmax or not found_i:
                    gmax = s_t
                    i = t
                    found_i = True
            if (y[t] > 0.0 and alpha[t] > 0.0) or (y[t] <= 0.0 and alpha[t] < C[t]):
                if s_t < gmin or not found_j:
                    gmin = s_t
                    j = t
                    found_j = True
        if not found_i or not found_j:
            violation = 0.0
            break
        violation = gmax - gmin
        if violation < tol:
            break

        ai = alpha[i]
        aj = alpha[j]
        ci = C[i]
        cj = C[j]
        gi = G[i]
        gj = G[j]
        old_ai = ai
        old_aj = aj
        if y[i] != y[j]:
            quad = Q[i, i] + Q[j, j] + 2.0 * Q[i, j]
            if quad <= 0.0:
                quad = TAU
            delta = (-gi - gj) / quad
            diff = ai - aj
            ai = ai + delta
            aj = aj + delta
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
            quad = Q[i, i] + Q[j, j] - 2.0 * Q[i, j]
            if quad <= 0.0:
                quad = TAU
            delta = (gi - gj) / quad
            ssum = ai + aj
            ai = ai - delta
            aj = aj + delta
            if ssum > ci:
                if ai > ci:
                    ai = ci
                    aj = ssum - ci
            else:
                if aj < 0.0:
                    aj = 0.0
                    ai = ssum
            if ssum > cj:
                if aj > cj:
                    aj = cj
                    ai = ssum - cj
            else:
                if ai < 0.0:
                    ai = 0.0
                    aj = ssum
        alpha[i] = ai
        alpha[j] = aj
        da_i = ai - old_ai
        da_j = aj - old_aj
        for t in range(n):
            t1 = Q[i, t] * da_i
            t2 = Q[j, t] * da_j
            G[t] = G[t] + (t1 + t2)
        it += 1

    cdef double ub = np.inf
    cdef double lb = -np.inf
    cdef double sum_free = 0.0
    cdef Py_ssize_t n_free = 0
    cdef double yg, rho
    for t in range(n):
        yg = y[t] * G[t]
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
        rho = sum_free / n_free
    else:
        rho = (ub + lb) / 2.0
    return alpha_arr, rho, it, violation
