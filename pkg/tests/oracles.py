"""Slow, independent reference computations used as test oracles.

Everything here works from dense masks and explicit Python loops so it shares
no code path with the blocked numpy implementation under test.
"""

import math

import numpy as np


def naive_forward(weights, masks, x):
    """Returns (preacts, acts, gates) as python lists of 1-D arrays."""
    L = len(weights) - 1
    g = [float(v) for v in x]
    acts, pre, gates = [list(g)], [], []
    for h in range(L + 1):
        W, M = weights[h], masks[h]
        f = []
        for i in range(W.shape[0]):
            s = 0.0
            for j in range(W.shape[1]):
                s += W[i, j] * M[i, j] * g[j]
            f.append(s)
        pre.append(np.array(f))
        if h < L:
            d = W.shape[0]
            gates.append(np.array([1.0 if v > 0 else 0.0 for v in f]))
            g = [math.sqrt(2.0 / d) * max(v, 0.0) for v in f]
            acts.append(list(g))
    return pre, [np.array(a) for a in acts], gates


def naive_backward(weights, masks, gates):
    L = len(weights) - 1
    b = [1.0]
    back = [np.array(b)]
    for h in range(L, 0, -1):
        W, M = weights[h], masks[h]
        d = W.shape[1]
        nb = []
        for j in range(d):
            s = 0.0
            for i in range(W.shape[0]):
                s += W[i, j] * M[i, j] * b[i]
            nb.append(math.sqrt(2.0 / d) * gates[h - 1][j] * s)
        b = nb
        back.append(np.array(b))
    return back[::-1]


def naive_output(weights, masks, x):
    return float(naive_forward(weights, masks, x)[0][-1][0])


def finite_difference_gradient(weights, masks, x, h, step=1e-5):
    """Central differences of the output w.r.t. every entry of W^(h) (1-based h)."""
    W = weights[h - 1]
    grad = np.zeros_like(W)
    for i in range(W.shape[0]):
        for j in range(W.shape[1]):
            plus = [w.copy() for w in weights]
            minus = [w.copy() for w in weights]
            plus[h - 1][i, j] += step
            minus[h - 1][i, j] -= step
            grad[i, j] = (naive_output(plus, masks, x) - naive_output(minus, masks, x)) / (2 * step)
    return grad


def naive_pseudo(weights, masks, alpha, x, h, j):
    """Pseudo-network of layer h (1-based), column j, by loops; returns (g_seq, output)."""
    pre, acts, gates = naive_forward(weights, masks, x)
    L = len(weights) - 1
    M = masks[h - 1]
    g_prev = acts[h - 1]
    d_h = M.shape[0]
    g = []
    for i in range(d_h):
        norm = float(sum((g_prev[k] * M[i, k]) ** 2 for k in range(M.shape[1])))
        coef = float(M[i, j]) * math.sqrt(alpha) / norm if M[i, j] != 0 else 0.0  # python floats raise on 0
        g.append(math.sqrt(2.0 / d_h) * gates[h - 1][i] * coef * pre[h - 1][i])
    seq = [np.array(g)]
    for hp in range(h + 1, L + 2):
        W, Mp = weights[hp - 1], masks[hp - 1]
        f = [sum(W[i, k] * Mp[i, k] * g[k] for k in range(W.shape[1])) for i in range(W.shape[0])]
        if hp == L + 1:
            return seq, f[0]
        d = W.shape[0]
        g = [math.sqrt(2.0 / d) * gates[hp - 1][i] * f[i] for i in range(d)]
        seq.append(np.array(g))
    raise AssertionError("unreachable")


def mc_relu_moments(cov, n, rng, chunk=2_000_000):
    """Monte-Carlo estimates and standard errors of (2E[relu u relu v], 2E[step u step v])."""
    w, V = np.linalg.eigh(np.asarray(cov, dtype=np.float64))
    root = np.sqrt(np.clip(w, 0, None))
    s1 = np.zeros(2)
    s2 = np.zeros(2)
    done = 0
    while done < n:
        m = min(chunk, n - done)
        z = rng.standard_normal((m, 2))
        uv = (z * root) @ V.T
        u, v = uv[:, 0], uv[:, 1]
        a = 2.0 * np.maximum(u, 0) * np.maximum(v, 0)
        b = 2.0 * ((u > 0) & (v > 0))
        s1 += [a.sum(), b.sum()]
        s2 += [(a * a).sum(), (b * b).sum()]
        done += m
    mean = s1 / n
    var = s2 / n - mean**2
    return mean, np.sqrt(var / n)
