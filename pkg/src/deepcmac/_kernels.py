"""Compiled inner loops: one pass over a sample record with online updates.

These mirror :func:`deepcmac.dcmac.train_step` and the filter steps in
:mod:`deepcmac.baselines` operation for operation; the tests hold them to
the pure-numpy versions.  Parameters are updated in place.
"""
import numba as nb
import numpy as np


@nb.njit(cache=True)
def stack_epoch(means, sigmas, weights, dims, X, D, rate_m, rate_s, rate_w, floor, out):
    """Online pass of a CMAC stack over ``X`` (K, N) against ``D`` (K, M).

    Layer ``l`` lives in the zero-padded slices ``means[l]``, ``sigmas[l]``
    (R_max, N_max) and ``weights[l]`` (R_max, M_max); ``dims[l]`` holds its
    (input_dim, n_fields, output_dim).  ``rate_*`` are per-layer arrays.
    A-priori outputs go to ``out``.  Returns the summed squared error.
    """
    L = means.shape[0]
    K = X.shape[0]
    width = max(means.shape[2], weights.shape[2])
    acts = np.zeros((L + 1, width))
    fields = np.zeros((L, means.shape[1]))
    up = np.zeros(width)
    d_in = np.zeros(width)
    M = dims[L - 1, 2]
    total = 0.0
    for k in range(K):
        for i in range(X.shape[1]):
            acts[0, i] = X[k, i]
        for l in range(L):
            N = dims[l, 0]
            R = dims[l, 1]
            Mo = dims[l, 2]
            for j in range(R):
                bj = 1.0
                for i in range(N):
                    d = acts[l, i] - means[l, j, i]
                    s = sigmas[l, j, i]
                    bj *= np.exp(-(d * d) / (s * s))
                fields[l, j] = bj
            for t in range(Mo):
                acc = 0.0
                for j in range(R):
                    acc += fields[l, j] * weights[l, j, t]
                acts[l + 1, t] = acc
        for t in range(M):
            e = D[k, t] - acts[L, t]
            out[k, t] = acts[L, t]
            total += e * e
            up[t] = -e
        for l in range(L - 1, -1, -1):
            N = dims[l, 0]
            R = dims[l, 1]
            Mo = dims[l, 2]
            for i in range(N):
                d_in[i] = 0.0
            for j in range(R):
                gb = 0.0
                for t in range(Mo):
                    gb += weights[l, j, t] * up[t]
                bj = fields[l, j]
                coef = gb * bj
                for i in range(N):
                    diff = acts[l, i] - means[l, j, i]
                    sj = sigmas[l, j, i]
                    s2 = sj * sj
                    g_m = coef * 2.0 * diff / s2
                    g_s = coef * 2.0 * (diff * diff) / (s2 * sj)
                    d_in[i] -= g_m
                    means[l, j, i] = means[l, j, i] - rate_m[l] * g_m
                    ns = sj - rate_s[l] * g_s
                    sigmas[l, j, i] = ns if ns > floor else floor
                for t in range(Mo):
                    weights[l, j, t] = weights[l, j, t] - rate_w[l] * (bj * up[t])
            for i in range(N):
                up[i] = d_in[i]
    return total


@nb.njit(cache=True)
def volterra_epoch(linear, quad, delay, x, d, mu, use_quad, out):
    """Online pass of a (second-order) Volterra/LMS filter.

    ``delay`` holds ``[x_k, x_{k-1}, ...]`` and persists between calls.
    ``quad`` is only read and adapted on its upper triangle when
    ``use_quad`` is set; otherwise this is plain LMS.
    """
    P = linear.shape[0]
    total = 0.0
    for k in range(x.shape[0]):
        for i in range(P - 1, 0, -1):
            delay[i] = delay[i - 1]
        delay[0] = x[k]
        y = 0.0
        for i in range(P):
            y += linear[i] * delay[i]
        if use_quad:
            for i in range(P):
                for j in range(i, P):
                    y += quad[i, j] * (delay[i] * delay[j])
        e = d[k] - y
        out[k] = y
        total += e * e
        for i in range(P):
            linear[i] = linear[i] + mu * e * delay[i]
        if use_quad:
            for i in range(P):
                for j in range(i, P):
                    quad[i, j] = quad[i, j] + mu * e * (delay[i] * delay[j])
    return total
