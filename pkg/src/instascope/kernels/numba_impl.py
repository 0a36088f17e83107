"""Numba-compiled twins of the kernels in ``numpy_impl``.

Loop formulations that numba turns into tight machine code. Numerical
results agree with the numpy path to rounding error (summation order
differs), not bit-for-bit; pick one backend per run.
"""

import numpy as np
from numba import njit

BACKEND = "numba"


@njit(cache=True)
def _tosz_flat(x):
    out = np.empty_like(x)
    for i in range(x.size):
        v = x[i]
        if v > 0.0:
            h = np.log(v)
            out[i] = np.exp(h + 0.049 * (np.sin(10.0 * h) + np.sin(7.9 * h)))
        elif v < 0.0:
            h = np.log(-v)
            out[i] = -np.exp(h + 0.049 * (np.sin(5.5 * h) + np.sin(3.1 * h)))
        else:
            out[i] = 0.0
    return out


def tosz(x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    return _tosz_flat(x.ravel()).reshape(x.shape)


@njit(cache=True)
def _tasy_2d(x, beta, dim):
    n = x.shape[0]
    out = np.empty_like(x)
    for i in range(n):
        for j in range(dim):
            v = x[i, j]
            if v > 0.0:
                if dim > 1:
                    grade = j / (dim - 1.0)
                else:
                    grade = 0.0
                out[i, j] = v ** (1.0 + beta * grade * np.sqrt(v))
            else:
                out[i, j] = v
    return out


def tasy(x, beta, dim):
    x = np.ascontiguousarray(x, dtype=np.float64)
    return _tasy_2d(x, float(beta), int(dim))


@njit(cache=True)
def _pairwise(x):
    n, d = x.shape
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            s = 0.0
            for k in range(d):
                diff = x[i, k] - x[j, k]
                s += diff * diff
            r = np.sqrt(s)
            out[i, j] = r
            out[j, i] = r
    return out


def pairwise_distances(x):
    return _pairwise(np.ascontiguousarray(x, dtype=np.float64))


@njit(cache=True)
def _nearest_and_better(dist, y):
    n = y.size
    nn = np.empty(n)
    nb = np.empty(n)
    for i in range(n):
        dn = np.inf
        db = np.inf
        for j in range(n):
            if j == i:
                continue
            dij = dist[i, j]
            if dij < dn:
                dn = dij
            if y[j] < y[i] and dij < db:
                db = dij
        nn[i] = dn
        nb[i] = db
    return nn, nb


def nearest_and_better(dist, y):
    return _nearest_and_better(
        np.ascontiguousarray(dist, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.float64),
    )


@njit(cache=True)
def _nn_tour_order(dist):
    n = dist.shape[0]
    order = np.empty(n, dtype=np.int64)
    visited = np.zeros(n, dtype=np.bool_)
    current = 0
    order[0] = 0
    visited[0] = True
    for k in range(1, n):
        best = -1
        bestd = np.inf
        for j in range(n):
            if not visited[j] and dist[current, j] < bestd:
                bestd = dist[current, j]
                best = j
        order[k] = best
        visited[best] = True
        current = best
    return order


def nn_tour_order(dist):
    return _nn_tour_order(np.ascontiguousarray(dist, dtype=np.float64))


@njit(cache=True)
def _kde(values, grid, bandwidth):
    m = grid.size
    n = values.size
    out = np.empty(m)
    norm = n * bandwidth * np.sqrt(2.0 * np.pi)
    for i in range(m):
        s = 0.0
        for j in range(n):
            z = (grid[i] - values[j]) / bandwidth
            s += np.exp(-0.5 * z * z)
        out[i] = s / norm
    return out


def kde_gaussian(values, grid, bandwidth):
    return _kde(
        np.ascontiguousarray(values, dtype=np.float64),
        np.ascontiguousarray(grid, dtype=np.float64),
        float(bandwidth),
    )
