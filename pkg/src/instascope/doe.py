"""Seeded Latin Hypercube designs, objective evaluation, and 2d grids.

Designs depend only on (n, dim, seed), never on the instance, so the
same seed gives the same sample matrix for every problem — objective
vectors are then directly comparable across instances.
"""

from dataclasses import dataclass

import numpy as np

from .io import write_csv
from .suite import LOWER, UPPER, ProblemId, ProblemInstance, evaluate


@dataclass(frozen=True)
class Doe:
    """A design of experiments: sample matrix, objective values, provenance."""

    X: np.ndarray
    y: np.ndarray
    seed: int
    instance: ProblemId


def lhs_sample(n: int, dim: int, seed: int, lower: float, upper: float) -> np.ndarray:
    """Jittered Latin Hypercube sample: per column, a seeded permutation
    of the n strata with one uniform draw inside each stratum."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if not lower < upper:
        raise ValueError(f"invalid bounds: lower={lower} upper={upper}")
    rng = np.random.default_rng(seed)
    out = np.empty((n, dim))
    width = upper - lower
    for j in range(dim):
        strata = rng.permutation(n)
        jitter = rng.random(n)
        out[:, j] = lower + width * (strata + jitter) / n
    return out


def build_doe(inst: ProblemInstance, n: int, seed: int) -> Doe:
    """Evaluate the seeded design on one instance."""
    X = lhs_sample(n, inst.id.dim, seed, LOWER, UPPER)
    y = evaluate(inst, X)
    X.setflags(write=False)
    y.setflags(write=False)
    return Doe(X=X, y=y, seed=int(seed), instance=inst.id)


def grid2d(resolution: int, lower: float, upper: float) -> np.ndarray:
    """resolution**2 lattice points over [lower, upper]^2, row-major with
    the first coordinate varying fastest."""
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    axis = np.linspace(lower, upper, resolution)
    x2, x1 = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([x1.ravel(), x2.ravel()])


def export_doe(doe: Doe, path):
    """CSV with coordinate columns x1..xd then the objective column y."""
    dim = doe.X.shape[1]
    header = [f"x{i + 1}" for i in range(dim)] + ["y"]
    rows = np.column_stack([doe.X, doe.y])
    write_csv(path, header, ([float(v) for v in row] for row in rows))
