"""The 24-function noiseless benchmark suite with seeded instance generation.

An instance is fully determined by (fid, iid, dim): the optimum location
and value, rotation matrices and per-function constants are all derived
from splittable streams of a 64-bit generator seeded with
``fid + 10000 * iid``. Evaluation accepts single points or (n, d)
batches and is pure; points outside [-5, 5]^d are legal and handled by
each function's boundary-penalty term.

Bit compatibility with other generator implementations is not a goal;
the contract is statistical (uniform optimum law on [-4, 4]^d for most
functions, documented overrides for the rest) plus full determinism.
"""

from dataclasses import dataclass, field

import numpy as np

from .io import write_csv
from .rng import STREAM_FOPT, STREAM_PARAMS, STREAM_ROT_Q, STREAM_ROT_R, derive_seed, stream
from .transforms import f_pen, lambda_alpha_diag, rotation_from_seed, t_asy, t_osz

LOWER, UPPER = -5.0, 5.0

FUNCTION_NAMES = {
    1: "sphere",
    2: "separable ellipsoid",
    3: "separable Rastrigin",
    4: "Bueche-Rastrigin",
    5: "linear slope",
    6: "attractive sector",
    7: "step ellipsoid",
    8: "Rosenbrock",
    9: "rotated Rosenbrock",
    10: "rotated ellipsoid",
    11: "discus",
    12: "bent cigar",
    13: "sharp ridge",
    14: "sum of different powers",
    15: "rotated Rastrigin",
    16: "Weierstrass",
    17: "Schaffers F7",
    18: "ill-conditioned Schaffers F7",
    19: "composite Griewank-Rosenbrock",
    20: "Schwefel",
    21: "Gallagher 101 peaks",
    22: "Gallagher 21 peaks",
    23: "Katsuura",
    24: "Lunacek bi-Rastrigin",
}

# functions drawing a first / second rotation matrix; others keep identity
_NEEDS_R = {6, 7, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 21, 22, 23, 24}
_NEEDS_Q = {6, 7, 13, 15, 16, 17, 18, 23, 24}

# functions whose optimum does not follow the uniform [-4, 4]^d draw
XOPT_OVERRIDE_FIDS = {4, 5, 8, 9, 19, 20, 24}

# ordered transformation steps per function, for documentation and the
# serialization contract (the evaluators hard-code the same order)
TRANSFORM_CHAINS = {
    1: ("translate", "sum_of_squares"),
    2: ("translate", "t_osz", "conditioned_square_sum"),
    3: ("translate", "t_osz", "t_asy(0.2)", "lambda(10)", "rastrigin_core"),
    4: ("translate", "t_osz", "odd_even_scaling", "rastrigin_core", "penalty(100)"),
    5: ("corner_optimum", "domain_clamp", "signed_linear_sum"),
    6: ("translate", "rot_R", "lambda(10)", "rot_Q", "sector_weights",
        "t_osz_scalar", "power(0.9)"),
    7: ("translate", "rot_R", "lambda(10)", "coordinate_rounding", "rot_Q",
        "conditioned_square_sum", "penalty(1)"),
    8: ("scale(max(1,sqrt(d)/8))", "translate", "shift(+1)", "rosenbrock_core"),
    9: ("rot_R", "scale(max(1,sqrt(d)/8))", "shift(+0.5)", "rosenbrock_core"),
    10: ("translate", "rot_R", "t_osz", "conditioned_square_sum"),
    11: ("translate", "rot_R", "t_osz", "discus_core"),
    12: ("translate", "rot_R", "t_asy(0.5)", "rot_R", "cigar_core"),
    13: ("translate", "rot_R", "lambda(10)", "rot_Q", "ridge_core"),
    14: ("translate", "rot_R", "graded_power_sum"),
    15: ("translate", "rot_R", "t_osz", "t_asy(0.2)", "rot_Q", "lambda(10)",
         "rot_R", "rastrigin_core"),
    16: ("translate", "rot_R", "t_osz", "rot_Q", "lambda(0.01)", "rot_R",
         "weierstrass_core", "penalty(10/d)"),
    17: ("translate", "rot_R", "t_asy(0.5)", "rot_Q", "lambda(10)",
         "schaffers_core", "penalty(10)"),
    18: ("translate", "rot_R", "t_asy(0.5)", "rot_Q", "lambda(1000)",
         "schaffers_core", "penalty(10)"),
    19: ("rot_R", "scale(max(1,sqrt(d)/8))", "shift(+0.5)",
         "griewank_rosenbrock_core"),
    20: ("sign_fold", "tridiagonal_shift", "lambda(10)", "scale(100)",
         "schwefel_core", "penalty(100, z/100)"),
    21: ("rot_R", "peak_table(101)", "t_osz_scalar", "square", "penalty(1)"),
    22: ("rot_R", "peak_table(21)", "t_osz_scalar", "square", "penalty(1)"),
    23: ("translate", "rot_R", "lambda(100)", "rot_Q", "katsuura_core",
         "penalty(1)"),
    24: ("sign_fold", "shift(-mu0)", "rot_R", "lambda(100)", "rot_Q",
         "bi_rastrigin_core", "penalty(1e4)"),
}


@dataclass(frozen=True)
class ProblemId:
    """Identifier of one suite instance: function, instance index, dimension."""

    fid: int
    iid: int
    dim: int

    def __post_init__(self):
        derive_seed(self.fid, self.iid)  # validates fid and iid ranges
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 2:
            raise ValueError(f"dim must be an integer >= 2, got {self.dim}")
        object.__setattr__(self, "fid", int(self.fid))
        object.__setattr__(self, "iid", int(self.iid))
        object.__setattr__(self, "dim", int(self.dim))


@dataclass(frozen=True)
class ProblemInstance:
    """A fully materialized instance: optimum, rotations, constants."""

    id: ProblemId
    xopt: np.ndarray
    fopt: float
    rot_r: np.ndarray
    rot_q: np.ndarray
    params: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.id.dim


def _readonly(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def _default_xopt(rng, dim):
    # uniform in [-4, 4]^d, rounded to 4 decimals, exact zeros displaced
    x = np.round(rng.uniform(-4.0, 4.0, dim), 4)
    x[x == 0.0] = -1e-5
    return x


def _signs(rng, dim):
    u = rng.uniform(-1.0, 1.0, dim)
    return np.where(u >= 0.0, 1.0, -1.0)


def create_instance(pid: ProblemId) -> ProblemInstance:
    """Materialize the instance identified by ``pid`` (deterministic)."""
    if not isinstance(pid, ProblemId):
        pid = ProblemId(*pid)
    fid, dim = pid.fid, pid.dim
    rseed = derive_seed(pid.fid, pid.iid)

    rot_r = rotation_from_seed(dim, rseed + STREAM_ROT_R) if fid in _NEEDS_R else np.eye(dim)
    rot_q = rotation_from_seed(dim, rseed + STREAM_ROT_Q) if fid in _NEEDS_Q else np.eye(dim)
    fopt = float(np.clip(np.round(stream(rseed, STREAM_FOPT).standard_cauchy(), 2),
                         -1000.0, 1000.0))

    xopt_rng = stream(rseed)  # STREAM_XOPT
    params = {}
    grade = (np.arange(dim) / (dim - 1.0)) if dim > 1 else np.zeros(1)

    if fid in (1, 2, 10, 11, 14):
        xopt = _default_xopt(xopt_rng, dim)
    elif fid == 13:
        xopt = _default_xopt(xopt_rng, dim)
        params["lin"] = rot_q @ np.diag(lambda_alpha_diag(dim, 10.0)) @ rot_r
    elif fid == 23:
        xopt = _default_xopt(xopt_rng, dim)
        params["lin"] = rot_q @ np.diag(lambda_alpha_diag(dim, 100.0)) @ rot_r
    elif fid in (3, 15):
        xopt = _default_xopt(xopt_rng, dim)
        params["lam"] = lambda_alpha_diag(dim, 10.0)
    elif fid == 4:
        xopt = _default_xopt(xopt_rng, dim)
        xopt[0::2] = np.abs(xopt[0::2])  # odd coordinates (1-based) folded positive
    elif fid == 5:
        s = _signs(xopt_rng, dim)
        xopt = 5.0 * s
        params["slope"] = s * np.power(10.0, grade)
    elif fid == 6:
        xopt = _default_xopt(xopt_rng, dim)
        params["lin"] = rot_q @ np.diag(lambda_alpha_diag(dim, 10.0)) @ rot_r
    elif fid == 7:
        xopt = _default_xopt(xopt_rng, dim)
        params["pre"] = np.diag(lambda_alpha_diag(dim, 10.0)) @ rot_r
        params["scales"] = np.power(100.0, grade)
    elif fid == 8:
        xopt = 0.75 * _default_xopt(xopt_rng, dim)
        params["scale"] = np.array([max(1.0, np.sqrt(dim) / 8.0)])
    elif fid in (9, 19):
        scale = max(1.0, np.sqrt(dim) / 8.0)
        xopt = rot_r.T @ (0.5 * np.ones(dim)) / scale
        params["scale"] = np.array([scale])
    elif fid == 12:
        xopt = _default_xopt(xopt_rng, dim)
    elif fid == 16:
        xopt = _default_xopt(xopt_rng, dim)
        params["lin"] = rot_r @ np.diag(lambda_alpha_diag(dim, 0.01)) @ rot_q
        k = np.arange(12, dtype=np.float64)
        params["ak"] = np.power(0.5, k)
        params["bk"] = np.power(3.0, k)
    elif fid in (17, 18):
        xopt = _default_xopt(xopt_rng, dim)
        alpha = 10.0 if fid == 17 else 1000.0
        params["post"] = np.diag(lambda_alpha_diag(dim, alpha)) @ rot_q
    elif fid == 20:
        s = _signs(xopt_rng, dim)
        xopt = 0.5 * 4.2096874633 * s
        params["signs"] = s
        params["lam"] = lambda_alpha_diag(dim, 10.0)
    elif fid in (21, 22):
        n_peaks = 101 if fid == 21 else 21
        shrink = 1.0 if fid == 21 else 0.98
        top_cond = np.sqrt(1000.0) if fid == 21 else 1000.0
        prng = stream(rseed, STREAM_PARAMS)
        conds = np.concatenate(
            [[top_cond], np.power(1000.0, prng.permutation(n_peaks - 1) / (n_peaks - 2))]
        )
        inv_cov = np.empty((n_peaks, dim))
        for i in range(n_peaks):
            diag = np.power(conds[i], grade - 0.5)
            inv_cov[i] = diag[prng.permutation(dim)]
        locations = shrink * prng.uniform(-5.0, 5.0, (n_peaks, dim))
        locations[0] *= 0.8  # keep the global peak away from the boundary
        xopt = locations[0]
        params["peaks"] = locations @ rot_r.T  # peak table in rotated space
        params["inv_cov"] = inv_cov
        params["weights"] = np.concatenate([[10.0], np.linspace(1.1, 9.1, n_peaks - 1)])
    elif fid == 24:
        s = _signs(xopt_rng, dim)
        mu0 = 2.5
        xopt = 0.5 * mu0 * s
        params["fold"] = 2.0 * s
        params["lin"] = rot_q @ np.diag(lambda_alpha_diag(dim, 100.0)) @ rot_r
    else:  # pragma: no cover - fid validated by ProblemId
        raise ValueError(f"unsupported fid {fid}")

    return ProblemInstance(
        id=pid,
        xopt=_readonly(xopt),
        fopt=fopt,
        rot_r=_readonly(rot_r),
        rot_q=_readonly(rot_q),
        params={k: _readonly(v) for k, v in params.items()},
    )


def evaluate(inst: ProblemInstance, x):
    """Objective value at ``x`` (1-d point or (n, d) batch). Pure."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.ndim != 2 or pts.shape[1] != inst.id.dim:
        raise ValueError(f"expected points of dimension {inst.id.dim}, got shape {x.shape}")
    vals = _EVALUATORS[inst.id.fid](inst, pts) + inst.fopt
    return float(vals[0]) if single else vals


def precision(inst: ProblemInstance, x):
    """Objective value minus the instance optimum value."""
    out = evaluate(inst, x) - inst.fopt
    return out


# ---------------------------------------------------------------------------
# evaluators: core + boundary penalty, before the fopt shift. X is (n, d).

def _f1(inst, X):
    Z = X - inst.xopt
    return np.sum(Z * Z, axis=1)


def _f2(inst, X):
    Z = t_osz(X - inst.xopt)
    d = inst.dim
    grade = (np.arange(d) / (d - 1.0)) if d > 1 else np.zeros(1)
    return np.sum(np.power(10.0, 6.0 * grade) * Z * Z, axis=1)


def _rastrigin_core(Z):
    d = Z.shape[1]
    return 10.0 * (d - np.sum(np.cos(2.0 * np.pi * Z), axis=1)) + np.sum(Z * Z, axis=1)


def _f3(inst, X):
    Z = t_asy(t_osz(X - inst.xopt), 0.2) * inst.params["lam"]
    return _rastrigin_core(Z)


def _f4(inst, X):
    d = inst.dim
    Z = t_osz(X - inst.xopt)
    grade = (np.arange(d) / (d - 1.0)) if d > 1 else np.zeros(1)
    s = np.broadcast_to(np.power(10.0, 0.5 * grade), Z.shape).copy()
    odd = np.zeros(d, dtype=bool)
    odd[0::2] = True
    s[(Z > 0.0) & odd] *= 10.0
    return _rastrigin_core(s * Z) + 100.0 * f_pen(X)


def _f5(inst, X):
    slope = inst.params["slope"]
    Z = np.where(X * inst.xopt < 25.0, X, inst.xopt)
    return np.sum(5.0 * np.abs(slope) - slope * Z, axis=1)


def _f6(inst, X):
    Z = (X - inst.xopt) @ inst.params["lin"].T
    s = np.where(Z * inst.xopt > 0.0, 100.0, 1.0)
    return np.power(t_osz(np.sum((s * Z) ** 2, axis=1)), 0.9)


def _f7(inst, X):
    Zhat = (X - inst.xopt) @ inst.params["pre"].T
    z1 = np.abs(Zhat[:, 0])
    Ztil = np.where(np.abs(Zhat) > 0.5,
                    np.floor(0.5 + Zhat),
                    np.floor(0.5 + 10.0 * Zhat) / 10.0)
    Z = Ztil @ inst.rot_q.T
    core = 0.1 * np.maximum(1e-4 * z1, np.sum(inst.params["scales"] * Z * Z, axis=1))
    return core + f_pen(X)


def _rosenbrock_core(Z):
    return (np.sum(100.0 * (Z[:, :-1] ** 2 - Z[:, 1:]) ** 2, axis=1)
            + np.sum((Z[:, :-1] - 1.0) ** 2, axis=1))


def _f8(inst, X):
    Z = inst.params["scale"][0] * (X - inst.xopt) + 1.0
    return _rosenbrock_core(Z)


def _f9(inst, X):
    Z = inst.params["scale"][0] * (X @ inst.rot_r.T) + 0.5
    return _rosenbrock_core(Z)


def _f10(inst, X):
    Z = t_osz((X - inst.xopt) @ inst.rot_r.T)
    d = inst.dim
    grade = (np.arange(d) / (d - 1.0)) if d > 1 else np.zeros(1)
    return np.sum(np.power(10.0, 6.0 * grade) * Z * Z, axis=1)


def _f11(inst, X):
    Z = t_osz((X - inst.xopt) @ inst.rot_r.T)
    return 1e6 * Z[:, 0] ** 2 + np.sum(Z[:, 1:] ** 2, axis=1)


def _f12(inst, X):
    Z = t_asy((X - inst.xopt) @ inst.rot_r.T, 0.5) @ inst.rot_r.T
    return Z[:, 0] ** 2 + 1e6 * np.sum(Z[:, 1:] ** 2, axis=1)


def _f13(inst, X):
    Z = (X - inst.xopt) @ inst.params["lin"].T
    return Z[:, 0] ** 2 + 100.0 * np.sqrt(np.sum(Z[:, 1:] ** 2, axis=1))


def _f14(inst, X):
    Z = (X - inst.xopt) @ inst.rot_r.T
    d = inst.dim
    grade = (np.arange(d) / (d - 1.0)) if d > 1 else np.zeros(1)
    return np.sqrt(np.sum(np.power(np.abs(Z), 2.0 + 4.0 * grade), axis=1))


def _f15(inst, X):
    W = t_asy(t_osz((X - inst.xopt) @ inst.rot_r.T), 0.2)
    lin = inst.rot_r @ np.diag(inst.params["lam"]) @ inst.rot_q
    return _rastrigin_core(W @ lin.T)


def _f16(inst, X):
    d = inst.dim
    W = t_osz((X - inst.xopt) @ inst.rot_r.T)
    Z = W @ inst.params["lin"].T
    ak, bk = inst.params["ak"], inst.params["bk"]
    inner = np.sum(ak * np.cos(2.0 * np.pi * bk * (Z[:, :, None] + 0.5)), axis=(1, 2)) / d
    f0 = np.sum(ak * np.cos(2.0 * np.pi * bk * 0.5))
    return 10.0 * (inner - f0) ** 3 + (10.0 / d) * f_pen(X)


def _schaffers(inst, X):
    Z = t_asy((X - inst.xopt) @ inst.rot_r.T, 0.5) @ inst.params["post"].T
    s = np.sqrt(Z[:, :-1] ** 2 + Z[:, 1:] ** 2)
    d = inst.dim
    core = (np.sum(np.sqrt(s) * (1.0 + np.sin(50.0 * np.power(s, 0.2)) ** 2), axis=1)
            / (d - 1.0)) ** 2
    return core + 10.0 * f_pen(X)


def _f19(inst, X):
    Z = inst.params["scale"][0] * (X @ inst.rot_r.T) + 0.5
    s = 100.0 * (Z[:, :-1] ** 2 - Z[:, 1:]) ** 2 + (Z[:, :-1] - 1.0) ** 2
    d = inst.dim
    return 10.0 * np.sum(s / 4000.0 - np.cos(s), axis=1) / (d - 1.0) + 10.0


def _f20(inst, X):
    signs = inst.params["signs"]
    xa = 2.0 * np.abs(inst.xopt)
    Xhat = 2.0 * signs * X
    Zhat = Xhat.copy()
    Zhat[:, 1:] += 0.25 * (Xhat[:, :-1] - xa[:-1])
    Z = 100.0 * (inst.params["lam"] * (Zhat - xa) + xa)
    core = (4.189828872724339
            - np.sum(Z * np.sin(np.sqrt(np.abs(Z))), axis=1) / (100.0 * inst.dim))
    return core + 100.0 * f_pen(Z / 100.0)


def _gallagher(inst, X):
    peaks = inst.params["peaks"]
    inv_cov = inst.params["inv_cov"]
    w = inst.params["weights"]
    U = X @ inst.rot_r.T
    diff = U[:, None, :] - peaks[None, :, :]
    q = np.sum(diff * diff * inv_cov[None, :, :], axis=2)
    vals = w * np.exp(-q / (2.0 * inst.dim))
    return t_osz(10.0 - vals.max(axis=1)) ** 2 + f_pen(X)


def _f23(inst, X):
    d = inst.dim
    Z = (X - inst.xopt) @ inst.params["lin"].T
    powers = np.power(2.0, np.arange(1, 33, dtype=np.float64))
    A = Z[:, :, None] * powers
    s = np.sum(np.abs(A - np.round(A)) / powers, axis=2)
    prod = np.prod(1.0 + np.arange(1, d + 1) * s, axis=1)
    return (10.0 / d**2) * (np.power(prod, 10.0 / d**1.2) - 1.0) + f_pen(X)


def _f24(inst, X):
    d = inst.dim
    mu0 = 2.5
    s_par = 1.0 - 1.0 / (2.0 * np.sqrt(d + 20.0) - 8.2)
    mu1 = -np.sqrt((mu0**2 - 1.0) / s_par)
    Xhat = inst.params["fold"] * X
    s1 = np.sum((Xhat - mu0) ** 2, axis=1)
    s2 = 1.0 * d + s_par * np.sum((Xhat - mu1) ** 2, axis=1)
    Z = (Xhat - mu0) @ inst.params["lin"].T
    core = np.minimum(s1, s2) + 10.0 * (d - np.sum(np.cos(2.0 * np.pi * Z), axis=1))
    return core + 1e4 * f_pen(X)


_EVALUATORS = {
    1: _f1, 2: _f2, 3: _f3, 4: _f4, 5: _f5, 6: _f6, 7: _f7, 8: _f8, 9: _f9,
    10: _f10, 11: _f11, 12: _f12, 13: _f13, 14: _f14, 15: _f15, 16: _f16,
    17: _schaffers, 18: _schaffers, 19: _f19, 20: _f20, 21: _gallagher,
    22: _gallagher, 23: _f23, 24: _f24,
}


# ---------------------------------------------------------------------------
# serialization and export

def instance_to_dict(inst: ProblemInstance) -> dict:
    """JSON-compatible dictionary reproducing the instance exactly."""
    return {
        "fid": inst.id.fid,
        "iid": inst.id.iid,
        "dim": inst.id.dim,
        "xopt": inst.xopt.tolist(),
        "fopt": inst.fopt,
        "rot_r": inst.rot_r.tolist(),
        "rot_q": inst.rot_q.tolist(),
        "params": {k: v.tolist() for k, v in inst.params.items()},
    }


def instance_from_dict(data: dict) -> ProblemInstance:
    pid = ProblemId(data["fid"], data["iid"], data["dim"])
    return ProblemInstance(
        id=pid,
        xopt=_readonly(np.array(data["xopt"], dtype=np.float64)),
        fopt=float(data["fopt"]),
        rot_r=_readonly(np.array(data["rot_r"], dtype=np.float64)),
        rot_q=_readonly(np.array(data["rot_q"], dtype=np.float64)),
        params={k: _readonly(np.array(v, dtype=np.float64))
                for k, v in data["params"].items()},
    )


def export_manifest(instances, path):
    """Write the instance manifest: fid, iid, dim, fopt, xopt_1..xopt_d."""
    instances = list(instances)
    if not instances:
        raise ValueError("no instances to export")
    dim = max(inst.id.dim for inst in instances)
    header = ["fid", "iid", "dim", "fopt"] + [f"xopt_{i + 1}" for i in range(dim)]
    rows = []
    for inst in instances:
        pad = [None] * (dim - inst.id.dim)
        rows.append([inst.id.fid, inst.id.iid, inst.id.dim, inst.fopt]
                    + [float(v) for v in inst.xopt] + pad)
    write_csv(path, header, rows)
