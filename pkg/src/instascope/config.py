"""Experiment configuration: defaults, profiles, file parsing, hashing.

Precedence, lowest to highest: built-in defaults (full study scale),
profile preset, config file, command-line flags. The config file is
flat ``key = value`` text; '#' starts a comment, lists are
comma-separated.
"""

import hashlib
from dataclasses import asdict, dataclass, fields

EXPERIMENTS = ("ela-dist", "repr", "ecdf", "perf", "optima", "avggrid")

# experiments whose desk-scale dimension differs (feature studies run in
# 5d, optimum-location and performance studies in 2d)
_DESK_DIM = {"ela-dist": 5, "repr": 5, "ecdf": 5, "perf": 2, "optima": 2, "avggrid": 2}

DESK_FIDS = (1, 2, 3, 5, 8, 12, 17, 21)

DEFAULT_ECDF_FEATURES = (
    "ela_meta.lin_simple.intercept",
    "ela_distr.skewness",
    "ela_meta.quad_simple.adj_r2",
)


class ConfigError(ValueError):
    """Invalid configuration input; maps to CLI exit code 1."""


@dataclass
class ExperimentConfig:
    experiment: str
    fids: tuple = tuple(range(1, 25))
    iids: int = 500
    dim: int = 5
    doe_count: int = 100
    doe_size: int = 1000
    runs: int = 50
    budget: int = 10000
    alpha: float = 0.01
    base_seed: int = 1
    output_dir: str = "instascope_out"
    workers: int = 1
    algorithms: tuple = ("RS", "OnePlusOneES", "DE", "PSO", "SPSA")
    doe_seeds: tuple = ()  # empty means 1..doe_count
    ecdf_features: tuple = DEFAULT_ECDF_FEATURES
    grid_resolution: int = 101

    def resolved_doe_seeds(self):
        return tuple(self.doe_seeds) or tuple(range(1, self.doe_count + 1))

    def report_budgets(self):
        """Budgets at which performance matrices are emitted."""
        marks = {b for b in (1000, 10000) if b <= self.budget}
        marks.add(self.budget)
        return sorted(marks)

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not self.fids or any(not 1 <= f <= 24 for f in self.fids):
            raise ConfigError("fids must be a nonempty subset of 1..24")
        for name in ("iids", "dim", "doe_count", "doe_size", "runs", "budget",
                     "workers", "grid_resolution"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.dim < 2:
            raise ConfigError("dim must be >= 2")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must be in (0, 1)")
        bad = [a for a in self.algorithms
               if a not in ("RS", "OnePlusOneES", "DE", "PSO", "SPSA")]
        if bad:
            raise ConfigError(f"unknown algorithms: {bad}")
        return self

    def config_hash(self) -> str:
        """Hash of everything that determines output content.

        workers and output_dir are excluded: they change scheduling and
        location, never bytes.
        """
        payload = asdict(self)
        payload.pop("workers")
        payload.pop("output_dir")
        canon = "\n".join(f"{k}={payload[k]!r}" for k in sorted(payload))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


PROFILES = {
    "paper": {},  # the dataclass defaults already mirror the full study
    "desk": {
        "fids": DESK_FIDS,
        "iids": 50,
        "doe_count": 30,
        "doe_size": 250,
        "runs": 30,
        "budget": 1000,
    },
}

_LIST_FIELDS = {"fids", "algorithms", "doe_seeds", "ecdf_features"}
_INT_FIELDS = {"iids", "dim", "doe_count", "doe_size", "runs", "budget",
               "base_seed", "workers", "grid_resolution"}
_FLOAT_FIELDS = {"alpha"}
_STR_FIELDS = {"experiment", "output_dir"}


def _parse_value(key, raw):
    raw = raw.strip()
    if key in _LIST_FIELDS:
        items = [v.strip() for v in raw.split(",") if v.strip()]
        if key == "fids":
            return tuple(int(v) for v in items)
        if key == "doe_seeds":
            return tuple(int(v) for v in items)
        return tuple(items)
    if key in _INT_FIELDS:
        return int(raw)
    if key in _FLOAT_FIELDS:
        return float(raw)
    if key in _STR_FIELDS:
        return raw
    raise ConfigError(f"unknown config key {key!r}")


def parse_config_file(path) -> dict:
    """Read flat ``key = value`` lines into an override dictionary."""
    overrides = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = text.split("=", 1)
        key = key.strip()
        try:
            overrides[key] = _parse_value(key, raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    return overrides


def build_config(experiment: str, profile=None, config_file=None,
                 **flag_overrides) -> ExperimentConfig:
    """Resolve the configuration for one experiment invocation."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    values = {"experiment": experiment}
    if profile is not None:
        if profile not in PROFILES:
            raise ConfigError(f"unknown profile {profile!r}")
        values.update(PROFILES[profile])
        if profile == "desk":
            values["dim"] = _DESK_DIM[experiment]
    if config_file is not None:
        overrides = parse_config_file(config_file)
        overrides.pop("experiment", None)
        values.update(overrides)
    known = {f.name for f in fields(ExperimentConfig)}
    for key, value in flag_overrides.items():
        if value is None:
            continue
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = value
    return ExperimentConfig(**values).validate()
