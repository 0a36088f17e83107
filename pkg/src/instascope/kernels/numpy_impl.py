"""Pure-numpy implementations of the hot numeric kernels.

Each function here has a loop-style twin in ``numba_impl``; the active set
is chosen at import time in ``instascope.kernels``. Keep signatures and
semantics in lockstep between the two modules.
"""

import numpy as np

BACKEND = "numpy"


def tosz(x):
    """Oscillation warp, elementwise: irregular log-scale perturbation.

    Zero is a fixed point; the sign of each entry is preserved.
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    pos = x > 0.0
    neg = x < 0.0
    xp = np.log(x[pos])
    out[pos] = np.exp(xp + 0.049 * (np.sin(10.0 * xp) + np.sin(7.9 * xp)))
    xn = np.log(-x[neg])
    out[neg] = -np.exp(xn + 0.049 * (np.sin(5.5 * xn) + np.sin(3.1 * xn)))
    return out


def tasy(x, beta, dim):
    """Asymmetry warp on an (n, dim) batch: positive entries are raised to
    a coordinate-graded power, non-positive entries pass through.

    For dim == 1 the grading exponent is defined as 0.
    """
    x = np.asarray(x, dtype=np.float64)
    if dim > 1:
        grade = np.arange(dim, dtype=np.float64) / (dim - 1.0)
    else:
        grade = np.zeros(dim)
    expo = 1.0 + beta * grade * np.sqrt(np.maximum(x, 0.0))
    return np.where(x > 0.0, np.power(np.maximum(x, 0.0), expo), x)


def pairwise_distances(x):
    """Full symmetric Euclidean distance matrix of the rows of x."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    d = np.zeros((n, n))
    # chunk the broadcast so memory stays bounded for large designs
    step = max(1, int(2_000_000 / max(1, n * x.shape[1])))
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        diff = x[lo:hi, None, :] - x[None, :, :]
        d[lo:hi] = np.sqrt(np.sum(diff * diff, axis=2))
    return d


def nearest_and_better(dist, y):
    """Per point: distance to its nearest neighbor and to the nearest
    strictly better point (np.inf when no better point exists)."""
    dist = np.asarray(dist, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    masked = dist.copy()
    np.fill_diagonal(masked, np.inf)
    nn = masked.min(axis=1)
    better = y[None, :] < y[:, None]
    nb = np.where(better, dist, np.inf).min(axis=1)
    return nn, nb


def nn_tour_order(dist):
    """Greedy nearest-neighbor tour order over a distance matrix,
    starting at index 0; distance ties resolve to the lowest index."""
    dist = np.asarray(dist, dtype=np.float64)
    n = dist.shape[0]
    order = np.empty(n, dtype=np.int64)
    visited = np.zeros(n, dtype=bool)
    current = 0
    order[0] = 0
    visited[0] = True
    for k in range(1, n):
        row = np.where(visited, np.inf, dist[current])
        current = int(np.argmin(row))
        order[k] = current
        visited[current] = True
    return order


def kde_gaussian(values, grid, bandwidth):
    """Gaussian kernel density estimate of ``values`` on ``grid``."""
    values = np.asarray(values, dtype=np.float64)
    grid = np.asarray(grid, dtype=np.float64)
    z = (grid[:, None] - values[None, :]) / bandwidth
    dens = np.exp(-0.5 * z * z).sum(axis=1)
    dens /= values.size * bandwidth * np.sqrt(2.0 * np.pi)
    return dens
