"""Experiment pipelines: compute, cache, aggregate, and emit plot-ready CSV.

Each experiment resolves to independent work units — (fid, iid) for
feature studies, (algorithm, fid, iid) for performance — that are seeded
in isolation, cached as JSON under ``<out>/cache``, and aggregated in a
fixed order, so re-runs skip finished units, worker count never changes
results, and identical configurations produce byte-identical artifacts.
"""

import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig
from .doe import build_doe, grid2d
from .ela import (
    CATALOGUE_VERSION,
    FEATURE_CATALOGUE,
    FeatureVector,
    compute_all,
    drop_degenerate,
    export_feature_matrix,
)
from .io import append_block, read_json, write_csv, write_json
from .kernels import BACKEND
from .optim import ALGORITHMS, _RUNNERS, RunRecord, export_runs
from .rng import run_seed as derive_run_seed
from .stats import ecdf, ks_uniform, normality_test, pairwise_family
from .suite import ProblemId, create_instance, evaluate, export_manifest

FIRST_FIVE = 5  # instances highlighted by the representativeness study


@dataclass
class ExperimentResult:
    outputs: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 2 if self.failures else 0


# ---------------------------------------------------------------------------
# shared plumbing

def _out_dir(config: ExperimentConfig) -> str:
    path = os.path.abspath(config.output_dir)
    os.makedirs(os.path.join(path, "cache"), exist_ok=True)
    return path


def _meta_path(out: str, config: ExperimentConfig) -> str:
    return os.path.join(out, f"{config.experiment}_meta.json")


def _check_resume(out: str, config: ExperimentConfig):
    """An existing output directory must match the current configuration."""
    path = _meta_path(out, config)
    if os.path.exists(path):
        meta = read_json(path)
        if meta.get("config_hash") != config.config_hash():
            raise ConfigError(
                "output directory holds results for a different configuration; "
                "use a fresh --out directory"
            )


def _write_meta(out: str, config: ExperimentConfig, status: str, failures,
                extra=None):
    meta = {
        "experiment": config.experiment,
        "config": {k: list(v) if isinstance(v, tuple) else v
                   for k, v in vars(config).items()},
        "config_hash": config.config_hash(),
        "catalogue_version": CATALOGUE_VERSION,
        "artifact_version": __version__,
        "kernel_backend": BACKEND,
        "status": status,
        "failed_units": [list(f) for f in failures],
    }
    if extra:
        meta.update(extra)
    write_json(_meta_path(out, config), meta)


def _map_units(func, args_list, workers: int):
    if workers <= 1 or len(args_list) <= 1:
        return [func(a) for a in args_list]
    chunk = max(1, len(args_list) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, args_list, chunksize=chunk))


# ---------------------------------------------------------------------------
# feature units: one (fid, iid) computes the doe_count x catalogue matrix

def _ela_unit(args):
    fid, iid, dim, doe_size, doe_seeds = args
    try:
        inst = create_instance(ProblemId(fid, iid, dim))
        rows, reasons = [], {}
        for seed in doe_seeds:
            fv = compute_all(build_doe(inst, doe_size, seed))
            rows.append([None if fv.is_missing(name) else fv.values[name]
                         for name in FEATURE_CATALOGUE])
            if fv.missing:
                reasons[str(seed)] = dict(fv.missing)
        return ("ok", {"fid": fid, "iid": iid, "rows": rows, "reasons": reasons})
    except Exception as exc:  # noqa: BLE001 - unit isolation
        return ("error", {"fid": fid, "iid": iid,
                          "message": f"{type(exc).__name__}: {exc}"})


def _ela_cache_path(out, config, fid, iid):
    return os.path.join(out, "cache",
                        f"ela_f{fid:02d}_i{iid:04d}_d{config.dim}.json")


def _ensure_feature_units(out: str, config: ExperimentConfig):
    """Compute or load every (fid, iid) feature matrix; returns
    ({(fid, iid): unit dict}, failures)."""
    doe_seeds = config.resolved_doe_seeds()
    pending = []
    for fid in config.fids:
        for iid in range(1, config.iids + 1):
            if not os.path.exists(_ela_cache_path(out, config, fid, iid)):
                pending.append((fid, iid, config.dim, config.doe_size, doe_seeds))
    failures = []
    for status, payload in _map_units(_ela_unit, pending, config.workers):
        if status == "ok":
            write_json(_ela_cache_path(out, config, payload["fid"], payload["iid"]),
                       payload)
        else:
            failures.append((f"f{payload['fid']}-i{payload['iid']}",
                             payload["message"]))
    units = {}
    for fid in config.fids:
        for iid in range(1, config.iids + 1):
            path = _ela_cache_path(out, config, fid, iid)
            if os.path.exists(path):
                units[(fid, iid)] = read_json(path)
    return units, failures


def _feature_groups(units, config, fid, feature_index):
    """Per-instance arrays of one feature's values across DoE seeds,
    missing entries dropped. Instances without a unit yield empty arrays."""
    groups = []
    for iid in range(1, config.iids + 1):
        unit = units.get((fid, iid))
        if unit is None:
            groups.append(np.empty(0))
            continue
        vals = [row[feature_index] for row in unit["rows"]
                if row[feature_index] is not None]
        groups.append(np.asarray(vals, dtype=np.float64))
    return groups


def _pairflags_path(out, config, fid):
    return os.path.join(out, "cache", f"pairflags_f{fid:02d}_d{config.dim}.npz")


def _ensure_pair_flags(out, config, units):
    """KS + BH over all instance pairs, per (fid, feature); cached per fid.

    Returns {fid: dict(flags, valid, rates)} where flags/valid are
    (n_features, n_pairs) and rates is the per-feature rejection rate
    (NaN when no pair of that feature could be tested).
    """
    n_pairs = config.iids * (config.iids - 1) // 2
    pair_index = {p: k for k, p in
                  enumerate(itertools.combinations(range(config.iids), 2))}
    result = {}
    for fid in config.fids:
        path = _pairflags_path(out, config, fid)
        if os.path.exists(path):
            with np.load(path) as data:
                result[fid] = {"flags": data["flags"], "valid": data["valid"],
                               "rates": data["rates"]}
            continue
        flags = np.zeros((len(FEATURE_CATALOGUE), n_pairs), dtype=bool)
        valid = np.zeros_like(flags)
        rates = np.full(len(FEATURE_CATALOGUE), np.nan)
        for fi in range(len(FEATURE_CATALOGUE)):
            groups = _feature_groups(units, config, fid, fi)
            try:
                family = pairwise_family(groups, test="KS", alpha=config.alpha)
            except ValueError:
                continue
            for pair, flag in zip(family.pairs, family.flags):
                k = pair_index[pair]
                valid[fi, k] = True
                flags[fi, k] = flag
            rates[fi] = family.rejection_rate().rate
        np.savez_compressed(path, flags=flags, valid=valid, rates=rates)
        result[fid] = {"flags": flags, "valid": valid, "rates": rates}
    return result


def _unit_entries(units, config):
    """Cache dictionaries -> export entries with FeatureVector objects."""
    entries = []
    doe_seeds = config.resolved_doe_seeds()
    for fid in config.fids:
        for iid in range(1, config.iids + 1):
            unit = units.get((fid, iid))
            if unit is None:
                continue
            for row, seed in zip(unit["rows"], doe_seeds):
                fv = FeatureVector()
                reasons = unit["reasons"].get(str(seed), {})
                for name, value in zip(FEATURE_CATALOGUE, row):
                    if value is None:
                        fv.set_missing(name, reasons.get(name, "unspecified"))
                    else:
                        fv.set(name, value)
                entries.append((fid, iid, config.dim, seed, fv))
    return entries


# ---------------------------------------------------------------------------
# experiments

def exp_ela_dist(config: ExperimentConfig) -> ExperimentResult:
    """Feature-distribution comparison: KS + BH rejection-rate heatmap
    (functions x features) plus the raw feature matrix."""
    out = _out_dir(config)
    _check_resume(out, config)
    _write_meta(out, config, "running", [])
    units, failures = _ensure_feature_units(out, config)
    flags = _ensure_pair_flags(out, config, units)

    header = ["fid"] + list(FEATURE_CATALOGUE) + ["mean"]
    rows = []
    for fid in config.fids:
        rates = flags[fid]["rates"]
        cells = [None if np.isnan(r) else float(r) for r in rates]
        known = [c for c in cells if c is not None]
        rows.append([fid] + cells + [float(np.mean(known)) if known else None])
    col_means = []
    for fi in range(len(FEATURE_CATALOGUE)):
        vals = [flags[fid]["rates"][fi] for fid in config.fids
                if not np.isnan(flags[fid]["rates"][fi])]
        col_means.append(float(np.mean(vals)) if vals else None)
    overall = [c for c in col_means if c is not None]
    rows.append(["mean"] + col_means + [float(np.mean(overall)) if overall else None])
    heatmap = os.path.join(out, "ela_dist_heatmap.csv")
    write_csv(heatmap, header, rows)

    entries = _unit_entries(units, config)
    matrix = os.path.join(out, "features.csv")
    missing = os.path.join(out, "features_missing.csv")
    export_feature_matrix(entries, matrix, missing)

    extra = {}
    vectors = [fv for *_ids, fv in entries]
    if len(vectors) >= 2:
        kept, dropped = drop_degenerate(vectors)
        extra = {"degenerate_features": dropped, "informative_features": len(kept)}

    _write_meta(out, config, "complete", failures, extra)
    result = ExperimentResult(outputs=[heatmap, matrix, missing], failures=failures)
    return result


def exp_repr(config: ExperimentConfig) -> ExperimentResult:
    """Per-instance mean one-vs-rest rejection fraction (representativeness
    of low instance numbers), with per-function boxplot summaries."""
    out = _out_dir(config)
    _check_resume(out, config)
    _write_meta(out, config, "running", [])
    units, failures = _ensure_feature_units(out, config)
    flags = _ensure_pair_flags(out, config, units)
    pairs = list(itertools.combinations(range(config.iids), 2))

    inst_rows = []
    box_rows = []
    feature_counts = {}
    for fid in config.fids:
        fl, va = flags[fid]["flags"], flags[fid]["valid"]
        num = np.zeros((len(FEATURE_CATALOGUE), config.iids))
        den = np.zeros_like(num)
        for k, (i, j) in enumerate(pairs):
            den[:, i] += va[:, k]
            den[:, j] += va[:, k]
            num[:, i] += fl[:, k]
            num[:, j] += fl[:, k]
        with np.errstate(invalid="ignore"):
            frac = np.where(den > 0, num / np.maximum(den, 1), np.nan)
        means = np.nanmean(frac, axis=0)
        used = np.sum(den > 0, axis=0)
        feature_counts[str(fid)] = {"min": int(used.min()), "max": int(used.max())}
        for idx in range(config.iids):
            inst_rows.append([fid, idx + 1, float(means[idx]),
                              int(idx < FIRST_FIVE)])
        q1, med, q3 = np.percentile(means, [25.0, 50.0, 75.0])
        iqr = q3 - q1
        inside = means[(means >= q1 - 1.5 * iqr) & (means <= q3 + 1.5 * iqr)]
        box_rows.append([fid, float(q1), float(med), float(q3),
                         float(inside.min()), float(inside.max())])

    inst_path = os.path.join(out, "repr_instances.csv")
    write_csv(inst_path, ["fid", "iid", "mean_rejection_fraction", "is_first_five"],
              inst_rows)
    box_path = os.path.join(out, "repr_boxplot.csv")
    write_csv(box_path, ["fid", "q1", "median", "q3", "whisker_lo", "whisker_hi"],
              box_rows)
    _write_meta(out, config, "complete", failures,
                {"features_used_per_instance": feature_counts})
    return ExperimentResult(outputs=[inst_path, box_path], failures=failures)


def exp_ecdf(config: ExperimentConfig) -> ExperimentResult:
    """ECDF step points of selected features for instances 1-5 against the
    pooled remaining instances, with a normality flag per curve."""
    unknown = [f for f in config.ecdf_features if f not in FEATURE_CATALOGUE]
    if unknown:
        raise ConfigError(f"unknown ecdf features: {unknown}")
    if config.iids <= FIRST_FIVE:
        raise ConfigError(f"ecdf needs iids > {FIRST_FIVE}")
    out = _out_dir(config)
    _check_resume(out, config)
    _write_meta(out, config, "running", [])
    units, failures = _ensure_feature_units(out, config)

    curve_rows = []
    normality_rows = []
    for fid in config.fids:
        for feature in config.ecdf_features:
            fi = FEATURE_CATALOGUE.index(feature)
            groups = _feature_groups(units, config, fid, fi)
            curves = [(str(iid + 1), groups[iid]) for iid in range(FIRST_FIVE)]
            rest = [groups[i] for i in range(FIRST_FIVE, config.iids)]
            curves.append(("rest", np.concatenate(rest) if rest else np.empty(0)))
            for label, values in curves:
                if values.size == 0:
                    continue
                for value, frac in ecdf(values):
                    curve_rows.append([fid, feature, label, value, frac])
                if values.size >= 20:
                    rec = normality_test(values)
                    normality_rows.append([fid, feature, label, values.size,
                                           rec.statistic, rec.p_value,
                                           int(rec.p_value > config.alpha)])
                else:
                    normality_rows.append([fid, feature, label, values.size,
                                           None, None, None])

    curves_path = os.path.join(out, "ecdf_curves.csv")
    write_csv(curves_path, ["fid", "feature", "curve", "value", "cum_fraction"],
              curve_rows)
    norm_path = os.path.join(out, "ecdf_normality.csv")
    write_csv(norm_path,
              ["fid", "feature", "curve", "n", "jb_stat", "p_value",
               "normal_at_alpha"],
              normality_rows)
    _write_meta(out, config, "complete", failures)
    return ExperimentResult(outputs=[curves_path, norm_path], failures=failures)


# ---------------------------------------------------------------------------
# performance

def _perf_unit(args):
    alg, fid, iid, dim, runs, budget, base_seed = args
    try:
        inst = create_instance(ProblemId(fid, iid, dim))
        runner = _RUNNERS[alg]
        checkpoints = []
        for run in range(runs):
            seed = derive_run_seed(base_seed, ALGORITHMS.index(alg), fid, iid, run)
            rec = runner(inst, budget, seed)
            checkpoints.append({"run_seed": seed,
                                "marks": [[b, p] for b, p in rec.checkpoints]})
        return ("ok", {"alg": alg, "fid": fid, "iid": iid,
                       "checkpoints": checkpoints})
    except Exception as exc:  # noqa: BLE001 - unit isolation
        return ("error", {"alg": alg, "fid": fid, "iid": iid,
                          "message": f"{type(exc).__name__}: {exc}"})


def _perf_cache_path(out, config, alg, fid, iid):
    return os.path.join(out, "cache",
                        f"perf_{alg}_f{fid:02d}_i{iid:04d}_d{config.dim}.json")


def exp_perf(config: ExperimentConfig) -> ExperimentResult:
    """Fixed-budget performance comparison across instances: rank tests
    with BH correction, pairwise and one-vs-rest, per requested budget."""
    out = _out_dir(config)
    _check_resume(out, config)
    _write_meta(out, config, "running", [])

    pending = []
    for alg in config.algorithms:
        for fid in config.fids:
            for iid in range(1, config.iids + 1):
                if not os.path.exists(_perf_cache_path(out, config, alg, fid, iid)):
                    pending.append((alg, fid, iid, config.dim, config.runs,
                                    config.budget, config.base_seed))
    failures = []
    for status, payload in _map_units(_perf_unit, pending, config.workers):
        if status == "ok":
            write_json(_perf_cache_path(out, config, payload["alg"],
                                        payload["fid"], payload["iid"]), payload)
        else:
            failures.append((f"{payload['alg']}-f{payload['fid']}-i{payload['iid']}",
                             payload["message"]))

    records = []
    units = {}
    for alg in config.algorithms:
        for fid in config.fids:
            for iid in range(1, config.iids + 1):
                path = _perf_cache_path(out, config, alg, fid, iid)
                if not os.path.exists(path):
                    continue
                unit = read_json(path)
                units[(alg, fid, iid)] = unit
                for entry in unit["checkpoints"]:
                    records.append(RunRecord(
                        algorithm=alg, instance=ProblemId(fid, iid, config.dim),
                        run_seed=entry["run_seed"],
                        checkpoints=tuple((int(b), float(p))
                                          for b, p in entry["marks"])))

    outputs = []
    runs_path = os.path.join(out, "runs.csv")
    export_runs(records, runs_path, config.dim)
    outputs.append(runs_path)

    for budget in config.report_budgets():
        pair_rows, ova_rows, inst_rows = [], [], []
        pair_cols = {fid: [] for fid in config.fids}
        ova_cols = {fid: [] for fid in config.fids}
        for alg in config.algorithms:
            pair_cells, ova_cells = [], []
            for fid in config.fids:
                groups = []
                for iid in range(1, config.iids + 1):
                    unit = units.get((alg, fid, iid))
                    if unit is None:
                        groups.append(np.empty(0))
                        continue
                    finals = []
                    for entry in unit["checkpoints"]:
                        best = None
                        for b, p in entry["marks"]:
                            if b <= budget:
                                best = p
                        if best is not None:
                            finals.append(best)
                    groups.append(np.asarray(finals))
                try:
                    family = pairwise_family(groups, test="MWU", alpha=config.alpha)
                except ValueError:
                    pair_cells.append(None)
                    ova_cells.append(None)
                    continue
                pair_cells.append(family.rejection_rate().rate)
                fractions = family.per_group_fractions()
                ova_cells.append(float(np.mean([s.rate for s in fractions])))
                for iid0, summary in enumerate(fractions):
                    inst_rows.append([alg, fid, iid0 + 1, summary.rate])
            for fid, cell in zip(config.fids, pair_cells):
                pair_cols[fid].append(cell)
            for fid, cell in zip(config.fids, ova_cells):
                ova_cols[fid].append(cell)
            known = [c for c in pair_cells if c is not None]
            pair_rows.append([alg] + pair_cells
                             + [float(np.mean(known)) if known else None])
            known = [c for c in ova_cells if c is not None]
            ova_rows.append([alg] + ova_cells
                            + [float(np.mean(known)) if known else None])

        header = ["algorithm"] + [f"f{fid}" for fid in config.fids] + ["mean"]
        for rows, cols, tag in ((pair_rows, pair_cols, "pairwise"),
                                (ova_rows, ova_cols, "onevsall")):
            means = []
            for fid in config.fids:
                known = [c for c in cols[fid] if c is not None]
                means.append(float(np.mean(known)) if known else None)
            overall = [m for m in means if m is not None]
            rows.append(["mean"] + means
                        + [float(np.mean(overall)) if overall else None])
            path = os.path.join(out, f"perf_{tag}_b{budget}.csv")
            write_csv(path, header, rows)
            outputs.append(path)
        inst_path = os.path.join(out, f"perf_onevsall_instances_b{budget}.csv")
        write_csv(inst_path, ["algorithm", "fid", "iid", "rejection_fraction"],
                  inst_rows)
        outputs.append(inst_path)

    _write_meta(out, config, "complete", failures)
    return ExperimentResult(outputs=outputs, failures=failures)


# ---------------------------------------------------------------------------
# global properties

def exp_optima(config: ExperimentConfig) -> ExperimentResult:
    """Optimum-location manifest plus per-coordinate uniformity statistics."""
    out = _out_dir(config)
    _check_resume(out, config)
    _write_meta(out, config, "running", [])
    instances = []
    for fid in config.fids:
        for iid in range(1, config.iids + 1):
            instances.append(create_instance(ProblemId(fid, iid, config.dim)))
    path = os.path.join(out, "optima_manifest.csv")
    export_manifest(instances, path)

    summary_rows = []
    for fid in config.fids:
        coords = np.array([inst.xopt for inst in instances if inst.id.fid == fid])
        for c in range(config.dim):
            rec = ks_uniform(coords[:, c], -4.0, 4.0)
            summary_rows.append([fid, c + 1, rec.n1, rec.statistic, rec.p_value])
    append_block(path, ["fid", "coordinate", "n", "ks_stat", "p_value"],
                 summary_rows)
    _write_meta(out, config, "complete", [])
    return ExperimentResult(outputs=[path], failures=[])


def _avggrid_cache_path(out, config, fid):
    return os.path.join(out, "cache", f"avggrid_f{fid:02d}.json")


def exp_avggrid(config: ExperimentConfig) -> ExperimentResult:
    """Log-average precision over a 2d grid, aggregated across instances."""
    if config.dim != 2:
        raise ConfigError("avggrid requires dim = 2")
    out = _out_dir(config)
    _check_resume(out, config)
    _write_meta(out, config, "running", [])
    res = config.grid_resolution
    grid = grid2d(res, -5.0, 5.0)
    rows = []
    for fid in config.fids:
        cache = _avggrid_cache_path(out, config, fid)
        if os.path.exists(cache):
            mean_prec = np.asarray(read_json(cache)["mean_precision"])
        else:
            total = np.zeros(grid.shape[0])
            for iid in range(1, config.iids + 1):
                inst = create_instance(ProblemId(fid, iid, 2))
                total += evaluate(inst, grid) - inst.fopt
            mean_prec = total / config.iids
            write_json(cache, {"mean_precision": mean_prec.tolist()})
        logged = np.log10(np.maximum(mean_prec, 1e-16))
        for point, value in zip(grid, logged):
            rows.append([fid, float(point[0]), float(point[1]), float(value)])
    path = os.path.join(out, "avggrid.csv")
    write_csv(path, ["fid", "x1", "x2", "log10_mean_precision"], rows)
    _write_meta(out, config, "complete", [])
    return ExperimentResult(outputs=[path], failures=[])


EXPERIMENT_RUNNERS = {
    "ela-dist": exp_ela_dist,
    "repr": exp_repr,
    "ecdf": exp_ecdf,
    "perf": exp_perf,
    "optima": exp_optima,
    "avggrid": exp_avggrid,
}


def run(config: ExperimentConfig) -> ExperimentResult:
    return EXPERIMENT_RUNNERS[config.experiment](config)
