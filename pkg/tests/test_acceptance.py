"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one `ACCEPTANCE <n> <name>: PASS/FAIL` line (visible
with ``pytest -s`` or in the captured-output summary). The desk-scale
fixtures run the real experiment pipelines once per session;
``INSTASCOPE_TEST_WORKERS`` (default 2) sizes their worker pool.
"""

import csv
import itertools
import os

import numpy as np
import pytest

import instascope.optim as optim
from instascope.config import build_config
from instascope.doe import Doe, build_doe, lhs_sample
from instascope.ela import FEATURE_CATALOGUE, compute_all
from instascope.experiments import exp_avggrid, exp_ela_dist, exp_perf, exp_repr
from instascope.optim import planned_run_count, run_experiment
from instascope.stats import (
    benjamini_hochberg,
    ecdf,
    ks_two_sample,
    ks_uniform,
    mann_whitney_u,
    pair_count,
)
from instascope.suite import ProblemId, create_instance, instance_to_dict, precision
from oracles import (
    bh_reject_bruteforce,
    ks_statistic_bruteforce,
    mwu_exact_bruteforce,
    random_small_case,
)

WORKERS = int(os.environ.get("INSTASCOPE_TEST_WORKERS", "2"))


def report(number, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"\nACCEPTANCE {number} {name}: {status}  {detail}")
    return ok


@pytest.fixture(scope="module")
def desk_features(tmp_path_factory):
    out = tmp_path_factory.mktemp("desk_features")
    config = build_config("ela-dist", profile="desk", output_dir=str(out),
                          workers=WORKERS)
    result = exp_ela_dist(config)
    assert result.failures == []
    return config, result


@pytest.fixture(scope="module")
def desk_perf(tmp_path_factory):
    out = tmp_path_factory.mktemp("desk_perf")
    config = build_config("perf", profile="desk", fids=(1,), output_dir=str(out),
                          workers=WORKERS, algorithms=("RS", "SPSA"))
    result = exp_perf(config)
    assert result.failures == []
    return config, result


def read_heatmap(path):
    rows = list(csv.reader(open(path, encoding="utf-8")))
    header = rows[0]
    data = {row[0]: row[1:] for row in rows[1:]}
    return header[1:], data


def test_criterion_1_combinatorics():
    pairs_ok = pair_count(500) == 124_750
    pairs_ok &= sum(1 for _ in itertools.combinations(range(500), 2)) == 124_750
    runs_ok = planned_run_count(8, 24, 500, 50) == 4_800_000
    dry = run_experiment(["RS"] * 8, list(range(1, 25)),
                         list(range(1, 501)), dim=5, runs=50, budget=10_000,
                         base_seed=0, dry_run=True)
    runs_ok &= dry == 4_800_000
    ok = report(1, "combinatorics identities", pairs_ok and runs_ok,
                f"pairs(500)={pair_count(500)}, dry-run count={dry}")
    assert ok


def test_criterion_2_statistical_oracles():
    rng = np.random.default_rng(20240917)
    ks_worst = 0.0
    mwu_exact_equal = True
    bh_sets_equal = True
    for _ in range(200):
        a, b = random_small_case(rng, max_size=12)
        if a.size >= 5 and b.size >= 5:
            d = ks_two_sample(a, b).statistic
            ks_worst = max(ks_worst, abs(d - ks_statistic_bruteforce(a, b)))
        rec = mann_whitney_u(a, b)
        u_oracle, p_oracle = mwu_exact_bruteforce(a, b)
        if rec.statistic != u_oracle or rec.p_value != p_oracle:
            mwu_exact_equal = False
        m = int(rng.integers(1, 30))
        pvals = np.round(rng.random(m), 4).tolist()
        alpha = float(rng.choice([0.01, 0.05]))
        flags, _ = benjamini_hochberg(pvals, alpha)
        if flags != bh_reject_bruteforce(pvals, alpha):
            bh_sets_equal = False
    ok = report(2, "statistical oracle suite",
                ks_worst < 1e-12 and mwu_exact_equal and bh_sets_equal,
                f"KS max |D - oracle| = {ks_worst:.2e}, exact MWU bit-equal: "
                f"{mwu_exact_equal}, BH sets identical: {bh_sets_equal}")
    assert ok


def test_criterion_3_suite_correctness():
    worst_precision = 0.0
    worst_ortho = 0.0
    deterministic = True
    for fid in range(1, 25):
        for iid in range(1, 101):
            for dim in (2, 5):
                inst = create_instance(ProblemId(fid, iid, dim))
                worst_precision = max(worst_precision,
                                      abs(precision(inst, inst.xopt)))
                eye = np.eye(dim)
                for mat in (inst.rot_r, inst.rot_q):
                    worst_ortho = max(worst_ortho,
                                      float(np.max(np.abs(mat @ mat.T - eye))))
                if iid <= 10:  # repeated creation, full content comparison
                    again = create_instance(ProblemId(fid, iid, dim))
                    if instance_to_dict(inst) != instance_to_dict(again):
                        deterministic = False
    ok = report(3, "suite correctness",
                worst_precision < 1e-9 and worst_ortho < 1e-10 and deterministic,
                f"max |precision(xopt)| = {worst_precision:.2e}, max orthogonality "
                f"defect = {worst_ortho:.2e}, deterministic: {deterministic}")
    assert ok


def test_criterion_4_optimum_location_laws():
    # F1 uniformity with the nominal false-positive allowance over batches
    rejections = 0
    tests_run = 0
    batch_start = 1
    coords = np.array([create_instance(ProblemId(1, iid, 2)).xopt
                       for iid in range(batch_start, batch_start + 500)])
    first_batch_ps = [ks_uniform(coords[:, c], -4.0, 4.0).p_value for c in range(2)]
    tests_run += 2
    rejections += sum(p <= 0.01 for p in first_batch_ps)
    if rejections:
        for batch_start in (501, 1001):
            coords = np.array([create_instance(ProblemId(1, iid, 2)).xopt
                               for iid in range(batch_start, batch_start + 500)])
            for c in range(2):
                tests_run += 1
                rejections += ks_uniform(coords[:, c], -4.0, 4.0).p_value <= 0.01
    uniform_ok = rejections <= max(1, round(0.01 * tests_run))

    f5_ok = all(np.all(np.abs(create_instance(ProblemId(5, iid, 2)).xopt) == 5.0)
                for iid in range(1, 501))
    f8 = np.array([create_instance(ProblemId(8, iid, 2)).xopt
                   for iid in range(1, 501)])
    f8_ok = np.all(np.abs(f8) < 4.0)
    ok = report(4, "optimum-location laws", uniform_ok and f5_ok and f8_ok,
                f"F1 KS p (batch 1) = {[round(p, 3) for p in first_batch_ps]}, "
                f"F5 corners: {f5_ok}, F8 box max |coord| = {np.abs(f8).max():.3f}")
    assert ok


def test_criterion_5a_shared_design_features_never_reject(desk_features):
    config, result = desk_features
    features, rows = read_heatmap(result.outputs[0])
    x_only = [f for f in features if f.startswith("pca.") and f.endswith("_x")]
    rates = [float(rows[str(fid)][features.index(f)])
             for fid in config.fids for f in x_only]
    ok = report("5a", "identical-design feature rejections",
                all(r == 0.0 for r in rates),
                f"{len(x_only)} features x {len(config.fids)} functions, "
                f"max rate = {max(rates)}")
    assert ok


def test_criterion_5b_intercept_rejects_on_f1(desk_features):
    _, result = desk_features
    features, rows = read_heatmap(result.outputs[0])
    rate = float(rows["1"][features.index("ela_meta.lin_simple.intercept")])
    ok = report("5b", "linear-model intercept instance-sensitivity on F1",
                rate > 0.5, f"rejection rate = {rate:.3f} (> 0.5 required)")
    assert ok


def test_criterion_5c_function_level_contrast(desk_features):
    _, result = desk_features
    features, rows = read_heatmap(result.outputs[0])
    f5_mean = float(rows["5"][-1])
    f1_mean = float(rows["1"][-1])
    ok = report("5c", "function-level rejection contrast",
                f5_mean < 0.10 and f1_mean > 0.25,
                f"F5 mean = {f5_mean:.4f} (< 0.10 required), "
                f"F1 mean = {f1_mean:.4f} (> 0.25 required)")
    assert ok


def test_criterion_6_representativeness(desk_features):
    config, _ = desk_features
    repr_config = build_config("repr", profile="desk",
                               output_dir=config.output_dir, workers=WORKERS)
    result = exp_repr(repr_config)
    rows = list(csv.reader(open(result.outputs[0], encoding="utf-8")))[1:]
    by_fid = {}
    for fid, iid, frac, _first in rows:
        by_fid.setdefault(int(fid), {})[int(iid)] = float(frac)
    exceedances = {iid: 0 for iid in range(1, 6)}
    for fid, fractions in by_fid.items():
        p99 = np.quantile(list(fractions.values()), 0.99)
        for iid in range(1, 6):
            if fractions[iid] > p99:
                exceedances[iid] += 1
    ok = report(6, "representativeness of instances 1-5",
                all(count <= 1 for count in exceedances.values()),
                f"p99 exceedances per instance over {len(by_fid)} functions: "
                f"{exceedances}")
    assert ok


def test_criterion_7_performance_invariance(desk_perf):
    config, result = desk_perf
    path = [p for p in result.outputs
            if p.endswith("perf_onevsall_b1000.csv")][0]
    rows = {r[0]: r for r in csv.reader(open(path, encoding="utf-8"))}
    rs_rate = float(rows["RS"][1])
    spsa_rate = float(rows["SPSA"][1])
    ok = report(7, "performance invariance",
                rs_rate <= 0.02 and spsa_rate > rs_rate,
                f"RS one-vs-all fraction = {rs_rate:.4f} (<= 0.02), "
                f"SPSA = {spsa_rate:.4f} (> RS required)")
    assert ok


def test_criterion_8_average_fitness_skew(tmp_path):
    config = build_config("avggrid", profile="desk", fids=(1,),
                          output_dir=str(tmp_path / "grid"), workers=1)
    result = exp_avggrid(config)
    values = {}
    for row in list(csv.reader(open(result.outputs[0], encoding="utf-8")))[1:]:
        values[(float(row[1]), float(row[2]))] = float(row[3])
    center = values[(0.0, 0.0)]
    corners = [values[(a, b)] for a in (-5.0, 5.0) for b in (-5.0, 5.0)]
    ok = report(8, "average-fitness skew towards the center",
                center < min(corners),
                f"center = {center:.3f}, min corner = {min(corners):.3f}")
    assert ok


def test_criterion_9_module_invariants():
    details = []

    # monotone best-so-far and budget discipline for every optimizer
    inst = create_instance(ProblemId(3, 2, 2))
    monotone = True
    for runner in (optim.random_search, optim.one_plus_one_es,
                   optim.differential_evolution, optim.pso, optim.spsa):
        rec = runner(inst, 400, seed=5)
        precisions = [p for _, p in rec.checkpoints]
        monotone &= all(a >= b for a, b in zip(precisions, precisions[1:]))
        monotone &= rec.checkpoints[-1][0] <= 400
    details.append(f"monotone best-so-far: {monotone}")

    # box discipline, audited at the evaluation chokepoint
    in_box = {"ok": True}
    original = optim._evaluate

    def audit(instance, X):
        pts = np.atleast_2d(X)
        if not np.all((pts >= -5.0) & (pts <= 5.0)):
            in_box["ok"] = False
        return original(instance, X)

    optim._evaluate = audit
    try:
        for runner in (optim.random_search, optim.one_plus_one_es,
                       optim.differential_evolution, optim.pso, optim.spsa):
            runner(inst, 300, seed=9)
    finally:
        optim._evaluate = original
    details.append(f"box discipline: {in_box['ok']}")

    # rank invariance of nearest-better and level-set features
    doe = build_doe(create_instance(ProblemId(8, 1, 2)), 150, 3)
    shifted = Doe(X=doe.X, y=2.0 * doe.y + 7.0, seed=doe.seed,
                  instance=doe.instance)
    a, b = compute_all(doe), compute_all(shifted)
    rank_ok = True
    for name in FEATURE_CATALOGUE:
        if name.startswith(("nbc.", "ela_level.")):
            va, vb = a.values[name], b.values[name]
            if not (np.isnan(va) and np.isnan(vb)) and abs(va - vb) > 1e-12 * max(1, abs(va)):
                rank_ok = False
    details.append(f"rank invariance: {rank_ok}")

    # Latin hypercube stratification
    X = lhs_sample(100, 3, 21, -5.0, 5.0)
    edges = np.linspace(-5.0, 5.0, 101)
    lhs_ok = all(np.array_equal(np.histogram(X[:, j], bins=edges)[0], np.ones(100))
                 for j in range(3))
    details.append(f"LHS stratification: {lhs_ok}")

    # ECDF step contract
    rng = np.random.default_rng(33)
    ecdf_ok = True
    for _ in range(20):
        steps = ecdf(rng.standard_normal(int(rng.integers(1, 50))))
        values = [v for v, _ in steps]
        fracs = [f for _, f in steps]
        ecdf_ok &= steps[-1][1] == 1.0
        ecdf_ok &= values == sorted(values) and fracs == sorted(fracs)
    details.append(f"ECDF contract: {ecdf_ok}")

    ok = report(9, "module invariant suites",
                monotone and in_box["ok"] and rank_ok and lhs_ok and ecdf_ok,
                "; ".join(details))
    assert ok
