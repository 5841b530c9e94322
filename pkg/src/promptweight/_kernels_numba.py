"""Numba-jitted twins of the kernels in :mod:`promptweight._kernels_numpy`."""

import numpy as np
from numba import njit

PROB_EPS = 1e-12


@njit(cache=True)
def softmax_rows(scores):
    n, k = scores.shape
    out = np.empty((n, k))
    for i in range(n):
        m = scores[i, 0]
        for j in range(1, k):
            if scores[i, j] > m:
                m = scores[i, j]
        total = 0.0
        for j in range(k):
            v = np.exp(scores[i, j] - m)
            out[i, j] = v
            total += v
        for j in range(k):
            out[i, j] /= total
    return out


@njit(cache=True)
def row_entropies(p):
    n, k = p.shape
    out = np.empty(n)
    for i in range(n):
        acc = 0.0
        for j in range(k):
            v = p[i, j]
            if v < PROB_EPS:
                v = PROB_EPS
            acc -= p[i, j] * np.log(v)
        out[i] = acc
    return out


@njit(cache=True)
def row_cross_entropies(p, q):
    n, k = p.shape
    out = np.empty(n)
    for i in range(n):
        acc = 0.0
        for j in range(k):
            v = q[i, j]
            if v < PROB_EPS:
                v = PROB_EPS
            acc -= p[i, j] * np.log(v)
        out[i] = acc
    return out


@njit(cache=True)
def weighted_logits_flat(l_flat, weights):
    m, n_t = l_flat.shape
    out = np.empty(m)
    for r in range(m):
        acc = 0.0
        for j in range(n_t):
            acc += l_flat[r, j] * weights[j]
        out[r] = acc
    return out


@njit(cache=True)
def contribution_scores_flat(l_flat, p, log_p, log_p_hat, lambda_zs):
    n_s, n_c = p.shape
    n_t = l_flat.shape[1]
    out = np.zeros(n_t)
    for i in range(n_s):
        ent = 0.0
        anchor_mean = 0.0
        for k in range(n_c):
            ent -= p[i, k] * log_p[i, k]
            anchor_mean += p[i, k] * log_p_hat[i, k]
        for k in range(n_c):
            w = p[i, k] * ((log_p[i, k] + ent) + lambda_zs * (log_p_hat[i, k] - anchor_mean))
            row = i * n_c + k
            for j in range(n_t):
                out[j] += w * l_flat[row, j]
    return out


@njit(cache=True)
def xoshiro_fill(state, out):
    s0 = state[0]
    s1 = state[1]
    s2 = state[2]
    s3 = state[3]
    c5 = np.uint64(5)
    c7 = np.uint64(7)
    c9 = np.uint64(9)
    c17 = np.uint64(17)
    c19 = np.uint64(19)
    c45 = np.uint64(45)
    c57 = np.uint64(57)
    for i in range(out.shape[0]):
        r = s1 * c5
        r = ((r << c7) | (r >> c57)) * c9
        t = s1 << c17
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = (s3 << c45) | (s3 >> c19)
        out[i] = r
    state[0] = s0
    state[1] = s1
    state[2] = s2
    state[3] = s3
