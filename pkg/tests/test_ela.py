import math

import numpy as np
import pytest

from instascope.doe import Doe, build_doe, lhs_sample
from instascope.ela import (
    FEATURE_CATALOGUE,
    compute_all,
    disp_features,
    drop_degenerate,
    ela_distr,
    ela_level,
    ela_meta,
    export_feature_matrix,
    ic_features,
    nbc_features,
    pca_features,
)
from instascope.suite import ProblemId, create_instance


def make_doe(X, y, seed=1, pid=ProblemId(1, 1, 2)):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return Doe(X=X, y=y, seed=seed, instance=pid)


def line_doe(y, seed=1):
    """Collinear, equidistant points with prescribed objective values."""
    n = len(y)
    X = np.column_stack([np.arange(n, dtype=float), np.zeros(n)])
    return make_doe(X, y, seed=seed)


def assert_fv_equal(a, b):
    assert a.values.keys() == b.values.keys()
    for name in a.values:
        va, vb = a.values[name], b.values[name]
        assert (math.isnan(va) and math.isnan(vb)) or va == vb, name
    assert a.missing == b.missing


class TestDistr:
    def test_symmetric_zero_skewness(self):
        doe = line_doe(list(range(12)))
        fv = ela_distr(make_doe(doe.X, [1, 2, 3] * 4))
        assert fv.values["ela_distr.skewness"] == pytest.approx(0.0, abs=1e-12)

    def test_two_point_kurtosis(self):
        # fourth moment / variance^2 = 1, minus 3
        doe = line_doe([0.0, 0.0, 1.0, 1.0] * 3)
        fv = ela_distr(doe)
        assert fv.values["ela_distr.kurtosis"] == pytest.approx(-2.0, abs=1e-12)

    def test_single_gaussian_one_peak(self):
        rng = np.random.default_rng(0)
        doe = line_doe(rng.standard_normal(200) * 0.1)
        assert ela_distr(doe).values["ela_distr.number_of_peaks"] == 1

    def test_two_well_separated_modes(self):
        rng = np.random.default_rng(1)
        y = np.concatenate([rng.standard_normal(100), rng.standard_normal(100) + 30.0])
        X = np.column_stack([np.arange(200.0), np.zeros(200)])
        assert ela_distr(make_doe(X, y)).values["ela_distr.number_of_peaks"] == 2

    def test_zero_variance_missing(self):
        fv = ela_distr(line_doe([3.0] * 20))
        assert fv.is_missing("ela_distr.skewness")
        assert fv.is_missing("ela_distr.kurtosis")
        assert fv.missing["ela_distr.skewness"] == "zero_variance"


class TestMeta:
    def test_exact_linear(self):
        rng = np.random.default_rng(2)
        X = rng.uniform(-5, 5, (60, 2))
        y = 2.0 + 3.0 * X[:, 0]
        fv = ela_meta(make_doe(X, y))
        assert fv.values["ela_meta.lin_simple.intercept"] == pytest.approx(2.0, abs=1e-9)
        assert fv.values["ela_meta.lin_simple.adj_r2"] == pytest.approx(1.0, abs=1e-12)
        assert fv.values["ela_meta.lin_simple.coef.max"] == pytest.approx(3.0, abs=1e-9)

    def test_sphere_quadratic_exact(self):
        inst = create_instance(ProblemId(1, 1, 5))
        fv = ela_meta(build_doe(inst, 400, 3))
        assert fv.values["ela_meta.quad_simple.adj_r2"] == pytest.approx(1.0, abs=1e-6)
        assert fv.values["ela_meta.quad_simple.cond"] == pytest.approx(1.0, abs=1e-6)

    def test_constant_objective_missing(self):
        rng = np.random.default_rng(3)
        fv = ela_meta(make_doe(rng.uniform(0, 1, (30, 2)), np.full(30, 7.0)))
        assert fv.is_missing("ela_meta.lin_simple.adj_r2")

    def test_too_small_design_rejected(self):
        with pytest.raises(ValueError):
            ela_meta(make_doe(np.zeros((6, 2)), np.zeros(6)))


class TestLevel:
    def test_linearly_separable(self):
        rng = np.random.default_rng(4)
        X = np.column_stack([np.linspace(0, 1, 120), rng.uniform(0, 1, 120)])
        fv = ela_level(make_doe(X, X[:, 0].copy()), quantiles=(0.5,))
        assert fv.values["ela_level.mmce_lda_50"] == pytest.approx(0.0, abs=0.02)

    def test_random_labels_near_half(self):
        # i.i.d. noise: misclassification hovers at chance level
        rng = np.random.default_rng(5)
        errors = []
        for trial in range(100):
            X = rng.uniform(0, 1, (100, 2))
            y = rng.standard_normal(100)
            fv = ela_level(make_doe(X, y, seed=trial), quantiles=(0.5,))
            errors.append(fv.values["ela_level.mmce_lda_50"])
        assert np.mean(errors) == pytest.approx(0.5, abs=0.1)

    def test_sphere_quadratic_beats_linear(self):
        # spherical level sets: the quadratic boundary wins on most seeds
        inst = create_instance(ProblemId(1, 1, 2))
        wins = 0
        for seed in range(1, 31):
            fv = ela_level(build_doe(inst, 120, seed), quantiles=(0.25,))
            if fv.values["ela_level.mmce_qda_25"] < fv.values["ela_level.mmce_lda_25"]:
                wins += 1
        assert wins > 15

    def test_too_small_rejected(self):
        with pytest.raises(ValueError):
            ela_level(make_doe(np.zeros((50, 2)), np.arange(50.0)))


class TestPca:
    def test_isotropic_first_component(self):
        rng = np.random.default_rng(6)
        X = rng.standard_normal((4000, 2))
        fv = pca_features(make_doe(X, rng.standard_normal(4000)))
        assert fv.values["pca.expl_var_PC1.cov_x"] == pytest.approx(0.5, abs=0.05)

    def test_constant_objective(self):
        rng = np.random.default_rng(7)
        X = rng.uniform(0, 1, (50, 3))
        fv = pca_features(make_doe(X, np.full(50, 2.0)))
        # correlation with a zero-variance column is undefined
        assert fv.is_missing("pca.expl_var.cor_init")
        # covariance augmented by a zero-variance column keeps its spectrum
        assert not fv.is_missing("pca.expl_var.cov_init")

    def test_x_only_features_shared_across_instances(self):
        a = compute_all(build_doe(create_instance(ProblemId(1, 1, 2)), 80, 9))
        b = compute_all(build_doe(create_instance(ProblemId(1, 2, 2)), 80, 9))
        for name in ("pca.expl_var.cov_x", "pca.expl_var.cor_x",
                     "pca.expl_var_PC1.cov_x", "pca.expl_var_PC1.cor_x"):
            assert a.values[name] == b.values[name]


class TestNbc:
    def test_collinear_monotone_hand_oracle(self):
        # equidistant points on a line with increasing y: every nearest
        # neighbor and nearest better distance equals the spacing, the
        # best point inheriting the max over the others
        fv = nbc_features(line_doe(list(range(12))))
        assert fv.values["nbc.nn_nb.mean_ratio"] == pytest.approx(1.0, abs=1e-12)
        assert fv.values["nbc.dist_ratio.coeff_var"] == pytest.approx(0.0, abs=1e-12)
        assert fv.is_missing("nbc.nn_nb.sd_ratio")  # sd(nb) = 0
        assert fv.is_missing("nbc.nn_nb.cor")

    def test_all_tied_objectives_missing(self):
        fv = nbc_features(line_doe([5.0] * 12))
        assert all(fv.is_missing(n) for n in fv.values if n.startswith("nbc."))
        assert fv.missing["nbc.nn_nb.mean_ratio"] == "all_objectives_tied"

    def test_positive_scaling_invariance(self):
        rng = np.random.default_rng(8)
        X = rng.uniform(-5, 5, (40, 3))
        y = rng.standard_normal(40)
        a = nbc_features(make_doe(X, y))
        b = nbc_features(make_doe(X, 3.0 * y + 1.0))
        assert_fv_equal(a, b)


class TestDisp:
    def test_noise_ratio_near_one(self):
        rng = np.random.default_rng(9)
        ratios = []
        for _ in range(100):
            X = rng.uniform(-5, 5, (60, 2))
            y = rng.standard_normal(60)
            fv = disp_features(make_doe(X, y), quantiles=(0.25,))
            ratios.append(fv.values["disp.ratio_mean_25"])
        assert np.mean(ratios) == pytest.approx(1.0, abs=0.1)

    def test_sphere_best_points_cluster(self):
        inst = create_instance(ProblemId(1, 2, 2))
        for seed in range(1, 31):
            fv = disp_features(build_doe(inst, 250, seed), quantiles=(0.05,))
            assert fv.values["disp.ratio_mean_05"] < 1.0

    def test_full_quantile_identity(self):
        rng = np.random.default_rng(10)
        doe = make_doe(rng.uniform(0, 1, (30, 2)), rng.standard_normal(30))
        fv = disp_features(doe, quantiles=(1.0,))
        assert fv.values["disp.ratio_mean_100"] == 1.0
        assert fv.values["disp.diff_mean_100"] == 0.0

    def test_tiny_quantile_missing(self):
        rng = np.random.default_rng(11)
        doe = make_doe(rng.uniform(0, 1, (20, 2)), rng.standard_normal(20))
        fv = disp_features(doe, quantiles=(0.02,))
        assert fv.is_missing("disp.ratio_mean_02")
        assert fv.missing["disp.ratio_mean_02"] == "subset_too_small"


class TestIc:
    def test_constant_objective(self):
        fv = ic_features(line_doe([2.0] * 15))
        assert fv.values["ic.h_max"] == 0.0
        assert fv.values["ic.m0"] == 0.0
        assert fv.is_missing("ic.eps_s")

    def test_monotone_tour_no_information(self):
        fv = ic_features(line_doe(list(range(15))))
        assert fv.values["ic.h_max"] == 0.0
        assert fv.values["ic.m0"] == 0.0

    def test_alternating_maximal_alternation(self):
        fv = ic_features(line_doe([0.0, 1.0] * 6))
        assert fv.values["ic.m0"] == 1.0
        # only the two alternating symbol pairs occur, in equal shares
        assert fv.values["ic.h_max"] == pytest.approx(math.log(2) / math.log(6))

    def test_rank_invariance(self):
        rng = np.random.default_rng(12)
        X = rng.uniform(-5, 5, (50, 2))
        y = rng.standard_normal(50)
        a = ic_features(make_doe(X, y))
        b = ic_features(make_doe(X, 2.0 * y + 7.0))
        # the tour is distance-based; symbols rescale with y but the
        # alternation fraction at threshold zero is rank-invariant
        assert a.values["ic.m0"] == b.values["ic.m0"]


class TestComputeAll:
    def test_catalogue_floor_f1(self):
        inst = create_instance(ProblemId(1, 1, 5))
        fv = compute_all(build_doe(inst, 1000, 1))
        non_missing = sum(1 for n in FEATURE_CATALOGUE if not fv.is_missing(n))
        assert non_missing >= 40
        assert list(fv.values) == list(FEATURE_CATALOGUE)

    def test_purity_bit_for_bit(self):
        doe = build_doe(create_instance(ProblemId(3, 1, 2)), 150, 4)
        assert_fv_equal(compute_all(doe), compute_all(doe))

    def test_x_only_same_seed_f1_vs_f2(self):
        a = compute_all(build_doe(create_instance(ProblemId(1, 1, 2)), 120, 5))
        b = compute_all(build_doe(create_instance(ProblemId(2, 1, 2)), 120, 5))
        assert a.values["pca.expl_var_PC1.cov_x"] == b.values["pca.expl_var_PC1.cov_x"]
        assert a.values["ela_meta.lin_simple.intercept"] != b.values["ela_meta.lin_simple.intercept"]

    def test_rank_invariance_of_level_and_nbc(self):
        # strictly monotone objective transform leaves rank-based groups alone
        doe = build_doe(create_instance(ProblemId(8, 1, 2)), 150, 6)
        shifted = Doe(X=doe.X, y=2.0 * doe.y + 7.0, seed=doe.seed, instance=doe.instance)
        a, b = compute_all(doe), compute_all(shifted)
        for name in FEATURE_CATALOGUE:
            if name.startswith(("nbc.", "ela_level.")):
                va, vb = a.values[name], b.values[name]
                assert (math.isnan(va) and math.isnan(vb)) or va == pytest.approx(vb, rel=1e-12), name

    def test_missing_discipline_no_nan_leaks(self):
        # constant objective: plenty of groups degenerate, all must be tagged
        X = lhs_sample(120, 2, 1, -5, 5)
        fv = compute_all(make_doe(X, np.zeros(120)))
        for name in FEATURE_CATALOGUE:
            value = fv.values[name]
            if math.isnan(value):
                assert name in fv.missing and fv.missing[name], name
            else:
                assert math.isfinite(value), name

    def test_group_timings_recorded(self):
        fv = compute_all(build_doe(create_instance(ProblemId(1, 1, 2)), 60, 2))
        assert set(fv.provenance["timings"]) == {
            "ela_distr", "ela_meta", "ela_level", "pca", "nbc", "disp", "ic"}


class TestDropDegenerate:
    def _vectors(self, columns):
        rows = []
        n_rows = len(next(iter(columns.values())))
        for i in range(n_rows):
            fv = compute_all(build_doe(create_instance(ProblemId(1, 1, 2)), 60, i + 1))
            for name, vals in columns.items():
                fv.set(name, vals[i])
            rows.append(fv)
        return rows

    def test_constant_column_dropped(self):
        rows = self._vectors({"ic.m0": [3.7, 3.7, 3.7]})
        kept, dropped = drop_degenerate(rows)
        assert "ic.m0" in dropped

    def test_two_distinct_values_kept(self):
        rows = self._vectors({"ic.m0": [3.7, 3.8, 3.7]})
        kept, dropped = drop_degenerate(rows)
        assert "ic.m0" in kept

    def test_needs_two_rows(self):
        with pytest.raises(ValueError):
            drop_degenerate([compute_all(build_doe(create_instance(ProblemId(1, 1, 2)), 60, 1))])


class TestExport:
    def test_matrix_and_sidecar(self, tmp_path):
        doe = make_doe(lhs_sample(60, 2, 1, -5, 5), np.zeros(60))
        fv = compute_all(doe)
        matrix = tmp_path / "features.csv"
        sidecar = tmp_path / "missing.csv"
        export_feature_matrix([(1, 1, 2, 1, fv)], matrix, sidecar)
        lines = matrix.read_text().splitlines()
        assert lines[0].startswith("fid,iid,dim,doe_seed,ela_distr.skewness")
        row = lines[1].split(",")
        # missing values are empty cells
        assert "" in row
        side = sidecar.read_text().splitlines()
        assert side[0] == "fid,iid,dim,doe_seed,feature,reason"
        assert len(side) > 1
