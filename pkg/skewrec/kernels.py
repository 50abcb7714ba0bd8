"""Skewrec Kernels Module

Compiled inner loop of asynchronous stochastic gradient ascent.  The loop
runs without the GIL so several worker threads can update the shared
embedding matrices at once; element writes are plain float64 stores.
"""
import math

from numba import njit


@njit(nogil=True, cache=True)
def sigmoid(t):
    if t >= 0.0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


@njit(nogil=True, cache=True)
def log_sigmoid(t):
    if t >= 0.0:
        return -math.log1p(math.exp(-t))
    return t - math.log1p(math.exp(t))


@njit(nogil=True, cache=True)
def pair_gradient(xhat, xi, omega, eta, clip):
    z = (xhat - xi) / omega
    s = sigmoid(-(z ** eta))
    if s == 0.0:
        return 0.0
    g = s * eta * z ** (eta - 1) / omega
    if g > clip:
        return clip
    if g < 0.0:
        return 0.0
    return g


@njit(nogil=True, cache=True)
def apply_triples(user_vecs, item_vecs, users, pos, neg,
                  xi, omega, eta, beta, lam, clip):
    """Run one SGA step per triple, in order.

    Return Value:
    Tuple of (index of the first triple that produced a non-finite value or
    -1, summed log-likelihood of the triples before their update).
    """
    d = user_vecs.shape[1]
    loglik = 0.0
    for n in range(users.shape[0]):
        u = users[n]
        i = pos[n]
        j = neg[n]
        xhat = 0.0
        for k in range(d):
            xhat += user_vecs[u, k] * (item_vecs[i, k] - item_vecs[j, k])
        loglik += log_sigmoid(((xhat - xi) / omega) ** eta)
        g = pair_gradient(xhat, xi, omega, eta, clip)
        for k in range(d):
            wu = user_vecs[u, k]
            hi = item_vecs[i, k]
            hj = item_vecs[j, k]
            nu = wu + beta * (g * (hi - hj) - lam * wu)
            ni = hi + beta * (g * wu - lam * hi)
            nj = hj + beta * (-g * wu - lam * hj)
            if not (math.isfinite(nu) and math.isfinite(ni) and math.isfinite(nj)):
                return n, loglik
            user_vecs[u, k] = nu
            item_vecs[i, k] = ni
            item_vecs[j, k] = nj
    return -1, loglik
