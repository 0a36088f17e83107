"""Coordinate warps and matrix builders used by the problem suite.

``t_osz`` and ``t_asy`` delegate to the active kernel backend; the rest
is plain numpy.
"""

import logging

import numpy as np

from . import kernels
from .rng import stream

log = logging.getLogger(__name__)


def t_osz(v):
    """Oscillation warp, elementwise. t_osz(0) = 0; sign is preserved."""
    return kernels.tosz(np.asarray(v, dtype=np.float64))


def t_asy(v, beta: float):
    """Asymmetry warp on a vector or (n, d) batch.

    Positive entries get a coordinate-graded power; others pass through.
    The grading for a single coordinate (d = 1) is defined as 0.
    """
    v = np.asarray(v, dtype=np.float64)
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if v.ndim == 1:
        return kernels.tasy(v[None, :], beta, v.shape[0])[0]
    return kernels.tasy(v, beta, v.shape[1])


def lambda_alpha(dim: int, alpha: float) -> np.ndarray:
    """Conditioning matrix: diagonal alpha**(0.5 * (i-1)/(d-1)), i = 1..d."""
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    return np.diag(lambda_alpha_diag(dim, alpha))


def lambda_alpha_diag(dim: int, alpha: float) -> np.ndarray:
    if dim > 1:
        grade = np.arange(dim, dtype=np.float64) / (dim - 1.0)
    else:
        grade = np.zeros(1)
    return np.power(alpha, 0.5 * grade)


def f_pen(x) -> np.ndarray:
    """Boundary penalty: sum of squared excursions beyond [-5, 5] per row."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    out = np.maximum(0.0, np.abs(x) - 5.0)
    return np.sum(out * out, axis=1)


def rotation_from_seed(dim: int, seed: int) -> np.ndarray:
    """Orthogonal d x d matrix from seeded standard-normal draws.

    Row-wise Gram-Schmidt on a normal matrix. A rank-deficient draw
    (probability ~0) is regenerated from seed+1 and logged.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    attempt = int(seed)
    while True:
        rng = stream(attempt)
        b = rng.standard_normal((dim, dim))
        ok = True
        for i in range(dim):
            for j in range(i):
                b[i] -= np.dot(b[i], b[j]) * b[j]
            norm = np.sqrt(np.sum(b[i] * b[i]))
            if norm < 1e-12:
                ok = False
                break
            b[i] /= norm
        if ok:
            return b
        log.warning("degenerate rotation draw at seed %d, retrying with %d", attempt, attempt + 1)
        attempt += 1
