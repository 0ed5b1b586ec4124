import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fmrbench.regress import fit
from fmrbench.synth import (TABLE1_D2, SynthSpec, cell_spec, gen_betas, gen_sample, nmi,
                            run_monte_carlo, run_one)
from oracles import nmi_bruteforce


class TestBetas:
    def test_close_pair(self):
        b1, b2 = gen_betas(0.2)
        np.testing.assert_allclose(b1, [1.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(b2, [0.9, math.sqrt(0.19)], atol=1e-12)

    def test_orthogonal(self):
        _, b2 = gen_betas(2.0)
        np.testing.assert_allclose(b2, [0.0, 1.0], atol=1e-12)

    @pytest.mark.parametrize("d2", TABLE1_D2)
    def test_table_grid_invariants(self, d2):
        b1, b2 = gen_betas(d2)
        assert abs(np.linalg.norm(b1) - 1) < 1e-12 and abs(np.linalg.norm(b2) - 1) < 1e-12
        assert abs(b1 @ b2 - (1 - d2 / 2)) < 1e-12

    @given(st.floats(1e-3, 3.999))
    def test_squared_distance(self, d2):
        b1, b2 = gen_betas(d2)
        assert abs(((b1 - b2) ** 2).sum() - d2) < 1e-12

    @pytest.mark.parametrize("d2", [0.0, 4.0, -1.0])
    def test_out_of_range(self, d2):
        with pytest.raises(ValueError):
            gen_betas(d2)


class TestSample:
    def test_table_layout(self):
        s = gen_sample(SynthSpec(), 0.6, 1.0, 3)
        assert s.dataset.n == 600 and s.groups.M == 20
        sizes = s.groups.sizes
        assert list(sizes[:5]) == [60] * 5 and list(sizes[5:]) == [20] * 15
        np.testing.assert_array_equal(s.true_labels, [0] * 5 + [1] * 15)
        assert np.sum(s.true_row_labels() == 0) == 300

    def test_tiny_noise_recovers_betas(self):
        s = gen_sample(SynthSpec(), 1.8, 1e-9, 0)
        y = s.dataset.response()
        for i, rows in enumerate(s.groups.rows):
            m = fit(s.dataset.X[rows], y[rows])
            np.testing.assert_allclose(m.coefficients, s.betas[s.true_labels[i]], atol=1e-6)

    def test_covariate_moments(self):
        spec = SynthSpec(n=(50_000, 50_000), s=(1, 1))
        X = gen_sample(spec, 1.0, 1.0, 7).dataset.X
        assert np.all(np.abs(X.mean(axis=0)) < 0.02)
        assert np.all(np.abs(X.var(axis=0) - 1) < 0.05)

    def test_seed_determinism(self):
        a = gen_sample(SynthSpec(), 0.2, 2.0, 11).dataset
        b = gen_sample(SynthSpec(), 0.2, 2.0, 11).dataset
        np.testing.assert_array_equal(a.X, b.X)
        np.testing.assert_array_equal(a.Y, b.Y)

    @pytest.mark.parametrize("kw", [dict(n=(300, 301)), dict(d2_levels=(4.0,)),
                                    dict(noise_levels=(0.0,)), dict(runs=0)])
    def test_spec_validation(self, kw):
        with pytest.raises(ValueError):
            SynthSpec(**kw)


class TestNmi:
    def test_relabeling(self):
        assert nmi([0, 0, 1, 1], [1, 1, 0, 0]) == pytest.approx(1.0)

    def test_independent(self):
        assert nmi([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(0.0, abs=1e-15)

    def test_cyclic_shift(self):
        a = np.array([0, 0, 1, 1, 2, 2])
        assert nmi(a, (a + 1) % 3) == pytest.approx(1.0)

    def test_degenerate(self):
        assert nmi([3, 3, 3], [1, 1, 1]) == 1.0
        assert nmi([3, 3, 3], [0, 1, 1]) == 0.0

    def test_random_pairs_vs_contingency_oracle(self, rng):
        for _ in range(20):
            a = rng.integers(0, 4, 200)
            b = rng.integers(0, 3, 200)
            assert nmi(a, b) == pytest.approx(nmi_bruteforce(list(a), list(b)), abs=1e-10)

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 4)), min_size=1, max_size=60))
    def test_symmetric_and_bounded(self, pairs):
        a = [p[0] for p in pairs]
        b = [p[1] for p in pairs]
        v = nmi(a, b)
        assert 0.0 <= v <= 1.0
        assert v == pytest.approx(nmi(b, a), abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            nmi([0, 1], [0])


SMALL = SynthSpec(n=(60, 60), s=(3, 6), noise_levels=(0.5, 4.0), d2_levels=(0.6, 1.8), runs=3, seed=5)


class TestMonteCarlo:
    def test_single_run_reproducible(self):
        spec = cell_spec(SynthSpec(runs=1, seed=3), 0.5, 1.8)
        a = run_monte_carlo(spec).records
        b = run_monte_carlo(spec).records
        assert a == b and len(a) == 1

    def test_cell_order_independence(self):
        full = run_monte_carlo(SMALL)
        for rec in full.records:
            i = SMALL.noise_levels.index(rec.noise)
            j = SMALL.d2_levels.index(rec.d2)
            assert run_one(SMALL, i, j, rec.run) == rec
        # a cell run on its own carries different indices; reversed order must not matter
        rev = [run_one(SMALL, i, j, r) for i in (1, 0) for j in (1, 0) for r in (2, 1, 0)]
        assert sorted(rev, key=lambda r: (r.noise, r.d2, r.run)) == sorted(
            full.records, key=lambda r: (r.noise, r.d2, r.run))

    def test_workers_match_serial(self):
        assert run_monte_carlo(SMALL, workers=2).records == run_monte_carlo(SMALL).records

    def test_aggregate(self):
        res = run_monte_carlo(SMALL)
        agg = res.aggregate()
        assert len(agg) == 4
        for row in agg:
            cell = res.cell(row["noise"], row["d2"])
            assert len(cell) == 3
            assert row["mean_nmi"] == pytest.approx(np.mean([r.nmi for r in cell]))
            assert row["q25"] <= row["q50"] <= row["q75"]
            assert all(1 <= r.iterations <= SMALL.max_iter for r in cell)

    def test_easy_cell_separates(self):
        res = run_monte_carlo(cell_spec(SynthSpec(runs=10, seed=1), 0.1, 1.8))
        assert res.mean_nmi(0.1, 1.8) > 0.9
