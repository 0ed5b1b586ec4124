import json
import math

import numpy as np
import pytest

from fmrbench.data import Dataset, GroupIndex, grouped_holdout
from fmrbench.mmcl import (UNASSIGNED, GroupData, MmclConfig, MmclResult, competition_step,
                           group_aic, learn_step, mmcl_fit, mmclpp_init, overall_aic, random_init)
from fmrbench.regress import FitConfig, LinearModel, aic_linear, fit
from oracles import exhaustive_min_aic, overall_aic_oracle

LAW_A = (0.5, np.array([1.0, 2.0]))
LAW_B = (-1.0, np.array([-1.5, 0.5]))


def make(X, y, labels):
    labels = list(labels)
    ds = Dataset(np.asarray(X, float), np.asarray(y, float)[:, None], tuple(labels),
                 tuple(f"x{j}" for j in range(np.shape(X)[1])), ("y",))
    return ds, GroupIndex.from_labels(labels)


def two_law_data(rng, laws, rows=8, noise=0.0):
    """One group per entry of ``laws`` (0 -> law A, 1 -> law B)."""
    X = rng.standard_normal((rows * len(laws), 2))
    y = np.empty(len(X))
    labels = []
    for g, law in enumerate(laws):
        sl = slice(g * rows, (g + 1) * rows)
        b0, b = (LAW_A, LAW_B)[law]
        y[sl] = b0 + X[sl] @ b + noise * rng.standard_normal(rows)
        labels += [f"g{g}"] * rows
    return make(X, y, labels)


def gdata(ds, gi, holdout=0.0, seed=0):
    return GroupData(ds.X, ds.response(), gi, grouped_holdout(gi, holdout, seed))


def lm(b0, coef):
    coef = np.asarray(coef, float)
    return LinearModel(float(b0), coef, 1 + int(np.count_nonzero(coef)), 1.0)


class TestGroupAic:
    def test_matches_direct_call(self, rng):
        ds, gi = two_law_data(rng, [0, 1], noise=0.3)
        gd = gdata(ds, gi)
        rows = gi.rows[0]
        m = fit(ds.X[rows], ds.response()[rows])
        assert group_aic(m, gd, 0) == aic_linear(m, ds.X[rows], ds.response()[rows])
        assert gd.aic_matrix([m])[0, 0] == pytest.approx(group_aic(m, gd, 0), rel=1e-12)

    def test_larger_rss_larger_aic(self):
        X = np.zeros((4, 1))
        ds, gi = make(X, [1.0, -1.0, 1.0, -1.0], ["a"] * 4)
        gd = gdata(ds, gi)
        small, big = lm(0.0, [0.0]), lm(math.sqrt(10) - 1, [0.0])
        # rss(small) = 4; rss(big) on alternating +-1 around sqrt(10)-1 is larger
        assert group_aic(big, gd, 0) > group_aic(small, gd, 0)

    def test_hand_computed(self):
        X = np.array([[0.0], [1.0], [2.0], [0.0], [1.0], [2.0]])
        y = np.array([0.0, 1.0, 3.0, 1.0, 1.0, 0.0])
        ds, gi = make(X, y, ["a"] * 3 + ["b"] * 3)
        gd = gdata(ds, gi)
        m1, m2 = lm(0.0, [1.0]), lm(1.0, [0.0])
        A = gd.aic_matrix([m1, m2])
        # group a: residuals under m1 (0,0,1) -> rss 1; under m2 (1,0,2) -> rss 5
        # group b: residuals under m1 (1,0,2) -> rss 5; under m2 (0,0,1) -> rss 1
        expected = np.array([[3 * math.log(1 / 3) + 4, 3 * math.log(5 / 3) + 2],
                             [3 * math.log(5 / 3) + 4, 3 * math.log(1 / 3) + 2]])
        np.testing.assert_allclose(A, expected, rtol=1e-12)
        np.testing.assert_array_equal(competition_step([m1, m2], gd), [0, 1])
        assert overall_aic([m1, m2], [0, 1], gd) == pytest.approx(expected[0, 0] + expected[1, 1])


class TestCompetition:
    def test_single_model(self, rng):
        ds, gi = two_law_data(rng, [0, 1, 0], noise=0.2)
        gd = gdata(ds, gi)
        assert np.all(competition_step([fit(ds.X, ds.response())], gd) == 0)

    def test_noiseless_laws_are_recovered(self, rng):
        laws = [0, 1, 1, 0, 1]
        ds, gi = two_law_data(rng, laws)
        gd = gdata(ds, gi)
        models = [lm(LAW_A[0], LAW_A[1]), lm(LAW_B[0], LAW_B[1])]
        np.testing.assert_array_equal(competition_step(models, gd), laws)

    def test_ties_go_to_lowest_index(self, rng):
        ds, gi = two_law_data(rng, [0, 1, 0, 1], noise=0.5)
        gd = gdata(ds, gi)
        m = fit(ds.X, ds.response())
        assert np.all(competition_step([m, m, m], gd) == 0)

    def test_never_increases_overall_aic(self, rng):
        ds, gi = two_law_data(rng, [0, 1, 0, 1, 1, 0], noise=0.8)
        gd = gdata(ds, gi, 0.25, 3)
        models = [lm(0.0, [1.0, 1.0]), lm(0.2, [-1.0, 0.0]), lm(-0.5, [0.3, 0.3])]
        for start in ([0] * 6, [1, 2, 0, 1, 2, 0], [2] * 6):
            new = competition_step(models, gd)
            assert overall_aic(models, new, gd) <= overall_aic(models, start, gd) + 1e-9


class TestLearnAndOverall:
    def test_single_cluster_is_full_fit(self, rng):
        ds, gi = two_law_data(rng, [0, 1, 1], noise=0.4)
        gd = gdata(ds, gi, 0.25, 1)
        models, a = learn_step([0, 0, 0], gd, 1, FitConfig())
        ref = fit(ds.X[gd.split.all_train()], ds.response()[gd.split.all_train()])
        np.testing.assert_allclose(models[0].coefficients, ref.coefficients, atol=1e-12)
        assert models[0].intercept == pytest.approx(ref.intercept, abs=1e-12)
        np.testing.assert_array_equal(a, [0, 0, 0])

    def test_recovers_generating_betas(self, rng):
        ds, gi = two_law_data(rng, [0, 1, 0, 1])
        gd = gdata(ds, gi, 0.25, 2)
        models, _ = learn_step([0, 1, 0, 1], gd, 2, FitConfig())
        for m, (b0, b) in zip(models, (LAW_A, LAW_B)):
            assert m.intercept == pytest.approx(b0, abs=1e-6)
            np.testing.assert_allclose(m.coefficients, b, atol=1e-6)

    def test_deterministic(self, rng):
        ds, gi = two_law_data(rng, [0, 1, 0], noise=0.3)
        gd = gdata(ds, gi, 0.25, 2)
        a, _ = learn_step([1, 0, 1], gd, 2, FitConfig("lasso", 0.05))
        b, _ = learn_step([1, 0, 1], gd, 2, FitConfig("lasso", 0.05))
        for m1, m2 in zip(a, b):
            assert m1.intercept == m2.intercept
            np.testing.assert_array_equal(m1.coefficients, m2.coefficients)

    def test_empty_cluster_repair(self, rng):
        ds, gi = two_law_data(rng, [0, 0, 0, 1], noise=0.01)
        gd = gdata(ds, gi)
        models, a = learn_step([0, 0, 0, 0], gd, 2, FitConfig())
        # the law-B group is worst explained by the pooled model
        np.testing.assert_array_equal(a, [0, 0, 0, 1])
        assert len(models) == 2

    def test_single_cluster_overall(self, rng):
        ds, gi = two_law_data(rng, [0, 1, 1], noise=0.4)
        gd = gdata(ds, gi, 0.25, 1)
        m = fit(ds.X, ds.response())
        assert overall_aic([m], [0, 0, 0], gd) == pytest.approx(sum(group_aic(m, gd, i) for i in range(3)))

    def test_three_group_manual_sum(self, rng):
        ds, gi = two_law_data(rng, [0, 1, 0], noise=0.5)
        gd = gdata(ds, gi, 0.25, 4)
        models = [lm(0.1, [1.0, 1.5]), lm(-0.4, [-1.0, 0.7])]
        a = [0, 1, 1]
        total = 0.0
        for i, j in enumerate(a):
            rows = gd.split.eval_rows(i)
            r = ds.response()[rows] - models[j].intercept - ds.X[rows] @ models[j].coefficients
            total += len(rows) * math.log((r @ r) / len(rows)) + 2 * models[j].effective_params
        assert overall_aic(models, a, gd) == pytest.approx(total, rel=1e-12)

    def test_label_permutation(self, rng):
        ds, gi = two_law_data(rng, [0, 1, 0, 1, 0], noise=0.5)
        gd = gdata(ds, gi, 0.25, 0)
        models = [lm(0.1, [1.0, 1.5]), lm(-0.4, [-1.0, 0.7]), lm(0.0, [0.2, 0.2])]
        a = np.array([0, 1, 2, 1, 0])
        perm = np.array([2, 0, 1])  # new cluster j holds old cluster perm[j]
        inv = np.argsort(perm)
        assert overall_aic([models[k] for k in perm], inv[a], gd) == pytest.approx(
            overall_aic(models, a, gd), rel=1e-12)


class TestInit:
    def test_random_init_deterministic_and_distinct(self):
        gi = GroupIndex.from_labels(np.repeat(np.arange(7), 4))
        a = random_init(gi, 3, 42)
        np.testing.assert_array_equal(a, random_init(gi, 3, 42))
        assert sorted(a[a >= 0]) == [0, 1, 2]
        assert np.sum(a == UNASSIGNED) == 4

    def test_random_init_k_equals_m(self):
        gi = GroupIndex.from_labels(np.repeat(np.arange(4), 3))
        assert sorted(random_init(gi, 4, 5)) == [0, 1, 2, 3]

    def test_random_init_first_seed_uniform(self):
        gi = GroupIndex.from_labels(np.repeat(np.arange(5), 3))
        first = [int(np.flatnonzero(random_init(gi, 2, s) == 0)[0]) for s in range(1000)]
        freq = np.bincount(first, minlength=5) / 1000
        assert np.all(np.abs(freq - 0.2) <= 0.05)

    def test_random_init_merges_untrainable_seed(self):
        gi = GroupIndex.from_labels([0, 1, 1, 1, 2, 2, 2, 3])
        split = grouped_holdout(gi, 0.0, 0)
        for s in range(30):
            a = random_init(gi, 2, s, split)
            for j in range(2):
                assert sum(gi.sizes[a == j]) >= 2

    def test_mmclpp_k1_and_k_equals_m(self, rng):
        ds, gi = two_law_data(rng, [0, 1], noise=0.3)
        gd = gdata(ds, gi)
        a = mmclpp_init(gd, 1, 3, FitConfig())
        assert sorted(a) == [-1, 0]
        assert sorted(mmclpp_init(gd, 2, 3, FitConfig())) == [0, 1]

    def test_mmclpp_second_seed_from_other_law(self, rng):
        laws = np.array([0, 0, 1, 0, 1, 1])
        ds, gi = two_law_data(rng, laws)
        gd = gdata(ds, gi)
        for s in range(20):
            a = mmclpp_init(gd, 2, s, FitConfig())
            first, second = np.flatnonzero(a == 0)[0], np.flatnonzero(a == 1)[0]
            assert laws[first] != laws[second]


class TestMmclFit:
    def test_k1(self, rng):
        ds, gi = two_law_data(rng, [0, 1, 0, 1], noise=0.5)
        res = mmcl_fit(ds, gi, MmclConfig(K=1))
        assert np.all(res.assignment == 0)
        assert 1 <= res.iterations <= 2 and res.converged
        assert len(res.models) == 1

    @pytest.mark.parametrize("seed", range(20))
    def test_reaches_exhaustive_minimum(self, seed):
        rng = np.random.default_rng(1000 + seed)
        ds, gi = two_law_data(rng, [0, 1, 1, 0])
        res = mmcl_fit(ds, gi, MmclConfig(K=2, seed=seed))
        sp = res.split
        train = sp.train_rows
        ev = [sp.eval_rows(i) for i in range(gi.M)]
        best = exhaustive_min_aic(ds.X, ds.response(), gi.M, 2, train, ev)
        got = overall_aic_oracle(ds.X, ds.response(), list(res.assignment), train, ev)
        assert got == pytest.approx(best, rel=1e-9, abs=1e-9)
        gd = GroupData(ds.X, ds.response(), gi, sp)
        assert overall_aic(res.models, res.assignment, gd) == pytest.approx(best, rel=1e-9, abs=1e-9)

    def test_invariants_and_determinism(self, rng):
        ds, gi = two_law_data(rng, [0, 1, 0, 1, 1, 0, 0], noise=1.0)
        cfg = MmclConfig(K=3, seed=9, max_iter=4)
        a, b = mmcl_fit(ds, gi, cfg), mmcl_fit(ds, gi, cfg)
        np.testing.assert_array_equal(a.assignment, b.assignment)
        assert a.overall_aic_trace == b.overall_aic_trace
        assert len(a.overall_aic_trace) == a.iterations <= 4
        assert set(a.assignment) <= {0, 1, 2}

    def test_must_link(self, rng):
        ds, gi = two_law_data(rng, [0, 1, 0, 1], noise=0.3)
        res = mmcl_fit(ds, gi, MmclConfig(K=2, seed=1))
        rows = res.row_labels(gi)
        for i, r in enumerate(gi.rows):
            assert np.all(rows[r] == res.assignment[i])

    def test_mmclpp_mode(self, rng):
        laws = [0, 1, 0, 1, 1]
        ds, gi = two_law_data(rng, laws, noise=0.05)
        res = mmcl_fit(ds, gi, MmclConfig(K=2, init="mmclpp", seed=2))
        a = res.assignment
        assert len(set(a)) == 2
        assert all((a[i] == a[0]) == (laws[i] == laws[0]) for i in range(5))

    def test_given_init(self, rng):
        ds, gi = two_law_data(rng, [0, 1, 0], noise=0.05)
        res = mmcl_fit(ds, gi, MmclConfig(K=2, init="given", initial_assignment=(0, 1, 0)))
        np.testing.assert_array_equal(res.assignment, [0, 1, 0])

    def test_json_round_trip(self, rng):
        ds, gi = two_law_data(rng, [0, 1, 0], noise=0.2)
        res = mmcl_fit(ds, gi, MmclConfig(K=2, seed=3))
        d = json.loads(json.dumps(res.to_dict()))
        assert set(d) == {"assignment", "models", "overall_aic_trace", "iterations", "converged"}
        back = MmclResult.from_dict(d)
        np.testing.assert_array_equal(back.assignment, res.assignment)
        assert back.group_ids == gi.group_ids

    @pytest.mark.parametrize("kw", [dict(K=0), dict(epsilon=0.0), dict(max_iter=0),
                                    dict(init="kmeans"), dict(init="given")])
    def test_config_errors(self, kw):
        with pytest.raises(ValueError):
            MmclConfig(**kw)

    def test_k_exceeds_groups(self, rng):
        ds, gi = two_law_data(rng, [0, 1], noise=0.2)
        with pytest.raises(ValueError, match="exceeds"):
            mmcl_fit(ds, gi, MmclConfig(K=3))
