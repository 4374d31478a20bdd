"""Compiled kernels: the training loop behind :func:`nnsieve.trainer.fit` and the total-variation integrand."""
import math

import numpy as np
from numba import carray, cfunc, njit, types
from scipy import LowLevelCallable

DIMINISHING = 0
CONSTANT = 1


@njit(cache=True)
def _sigmoid(z):
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@njit(cache=True)
def _forward(x, y, alpha0, alpha, gamma0, gamma, S, res):
    n, d = x.shape
    r = alpha.shape[0]
    total = 0.0
    for i in range(n):
        f = alpha0
        for j in range(r):
            z = gamma0[j]
            for l in range(d):
                z += gamma[j, l] * x[i, l]
            s = _sigmoid(z)
            S[i, j] = s
            f += alpha[j] * s
        e = f - y[i]
        res[i] = e
        total += e * e
    return total / n


@njit(cache=True)
def _l1(alpha0, alpha):
    t = abs(alpha0)
    for j in range(alpha.shape[0]):
        t += abs(alpha[j])
    return t


@njit(cache=True)
def _sign(v):
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 0.0


@njit(cache=True)
def run(x, y, alpha0, alpha, gamma0, gamma, V, iterations, step_rule, alpha_scale, gamma_lr, eta):
    """Mixed subgradient / gradient iteration with best-feasible tracking.

    ``alpha``, ``gamma0`` and ``gamma`` are updated in place and end at the
    last iterate. Returns (best_alpha0, best_alpha, best_gamma0, best_gamma,
    best_loss, trace, feasible_trace, updates_done, last_alpha0).
    """
    n, d = x.shape
    r = alpha.shape[0]
    S = np.empty((n, r))
    res = np.empty(n)
    g_alpha = np.empty(r)
    g_gamma0 = np.empty(r)
    g_gamma = np.empty((r, d))

    trace = np.empty(iterations + 1)
    feas_trace = np.zeros(iterations + 1, dtype=np.bool_)

    best_loss = np.inf
    best_alpha0 = alpha0
    best_alpha = alpha.copy()
    best_gamma0 = gamma0.copy()
    best_gamma = gamma.copy()

    k = 0
    while True:
        cur = _forward(x, y, alpha0, alpha, gamma0, gamma, S, res)
        feasible = _l1(alpha0, alpha) <= V
        trace[k] = cur
        feas_trace[k] = feasible
        if feasible and cur < best_loss:
            best_loss = cur
            best_alpha0 = alpha0
            best_alpha[:] = alpha
            best_gamma0[:] = gamma0
            best_gamma[:, :] = gamma
        if k == iterations:
            break
        if eta > 0.0 and k > 0 and feasible and abs(trace[k - 1] - cur) < eta:
            break

        g_alpha0 = 0.0
        g_alpha[:] = 0.0
        g_gamma0[:] = 0.0
        g_gamma[:, :] = 0.0
        for i in range(n):
            c = 2.0 * res[i] / n
            g_alpha0 += c
            for j in range(r):
                s = S[i, j]
                g_alpha[j] += c * s
                t = c * alpha[j] * s * (1.0 - s)
                g_gamma0[j] += t
                for l in range(d):
                    g_gamma[j, l] += t * x[i, l]

        if step_rule == DIMINISHING:
            delta = alpha_scale / math.log(math.e + k)
        else:
            delta = alpha_scale
        if feasible:
            alpha0 -= delta * g_alpha0
            for j in range(r):
                alpha[j] -= delta * g_alpha[j]
        else:
            alpha0 -= delta * _sign(alpha0)
            for j in range(r):
                alpha[j] -= delta * _sign(alpha[j])
        for j in range(r):
            gamma0[j] -= gamma_lr * g_gamma0[j]
            for l in range(d):
                gamma[j, l] -= gamma_lr * g_gamma[j, l]
        k += 1

    return (best_alpha0, best_alpha, best_gamma0, best_gamma, best_loss,
            trace[: k + 1].copy(), feas_trace[: k + 1].copy(), k, alpha0)


@cfunc(types.double(types.intc, types.CPointer(types.double)), cache=True)
def _abs_slope(n, xx):
    # scipy quad callback: xx = (x, r, alpha[r], gamma0[r], gamma[r]) for d = 1
    v = carray(xx, n)
    x = v[0]
    r = int(v[1])
    total = 0.0
    for j in range(r):
        g = v[2 + 2 * r + j]
        s = _sigmoid(g * x + v[2 + r + j])
        total += v[2 + j] * g * s * (1.0 - s)
    return abs(total)


abs_slope = LowLevelCallable(_abs_slope.ctypes)
