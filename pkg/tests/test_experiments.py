import math

import numpy as np
import pytest

from lints_lab import counterexamples as cx
from lints_lab import experiments as ex
from lints_lab.bandit import Constant, FreqRho, ThinnessGated, run_episode
from lints_lab.errors import EmptyInput, InvalidParam


class TestSeeds:
    def test_split_is_deterministic_and_distinct(self):
        seeds = [ex.split_seed(42, r) for r in range(1000)]
        assert seeds == [ex.split_seed(42, r) for r in range(1000)]
        assert len(set(seeds)) == 1000
        assert all(0 <= s < 2 ** 64 for s in seeds)

    def test_base_matters(self):
        assert ex.split_seed(0, 0) != ex.split_seed(1, 0)


class TestBoxplot:
    def test_five(self):
        s = ex.boxplot_stats([5, 3, 1, 4, 2])
        assert (s.min, s.q1, s.median, s.q3, s.max) == (1, 2, 3, 4, 5)
        assert s.n == 5 and s.mean == 3

    def test_single(self):
        s = ex.boxplot_stats([7.0])
        assert s.min == s.q1 == s.median == s.q3 == s.max == s.mean == 7.0

    def test_interpolation(self):
        s = ex.boxplot_stats([1, 2, 3, 4])
        assert (s.q1, s.median, s.q3) == (1.75, 2.5, 3.25)

    def test_empty(self):
        with pytest.raises(EmptyInput):
            ex.boxplot_stats([])

    def test_ordering(self, rng):
        for _ in range(50):
            s = ex.boxplot_stats(rng.standard_exponential(int(rng.integers(1, 40))))
            assert s.min <= s.q1 <= s.median <= s.q3 <= s.max


class TestExample1Runs:
    def test_single_rep_deterministic(self):
        a = ex.run_example1([4], 1, 123)
        b = ex.run_example1([4], 1, 123)
        assert a == b and a[4].n == 1

    def test_thread_count_irrelevant(self):
        one = ex.example1_values([2, 8], 12, 5, threads=1)
        many = ex.example1_values([2, 8], 12, 5, threads=4)
        for a, b in zip(one, many):
            np.testing.assert_array_equal(a.p, b.p)
            assert a.seeds == b.seeds

    def test_matched_noise_centres_near_two(self):
        stats = ex.run_example1([16], 200, 0, sigma=1.0, tau=1.0)
        assert 1.5 <= stats[16].median <= 2.6

    def test_literal_values_are_indicators(self):
        vals = ex.example1_values([4], 20, 3, literal=True)[0].p
        assert set(np.unique(vals)) <= {0.0, 1.0}

    def test_closed_form_matches_sampling(self):
        """Ten replications at d = 8: p from the Gaussian formula vs 1e5 posterior samples."""
        params = cx.Example1Params(8)
        for r in range(10):
            gen = ex.replication_rng(99, r)
            theta = gen.standard_normal(params.dim)
            state = run_episode(cx.example1_env(params, theta), Constant(), 1.0, gen).final_state
            p = cx.example1_success_prob(state, params.good_arm, 1.0)
            assert p == ex.example1_replication(8, 99, r)
            n = 100_000
            draws = state.mean + np.random.default_rng(r).standard_normal((n, params.dim)) @ state.chol.T
            freq = np.mean(draws @ params.good_arm > 0)
            assert abs(freq - p) <= 3 * math.sqrt(p * (1 - p) / n)

    def test_invalid_dims(self):
        with pytest.raises(InvalidParam):
            ex.run_example1([0], 2, 0)


class TestExample2Runs:
    def test_vary_mu_monotone(self):
        stats = ex.run_example2("vary-mu", [0.0, 0.5, 1.0], 50, 42, d=200)
        assert stats[0.0].median < stats[0.5].median < stats[1.0].median

    def test_vary_d_non_decreasing(self):
        stats = ex.run_example2("vary-d", [16, 64, 256, 1024], 50, 42, mu=0.1)
        med = [stats[d].median for d in (16, 64, 256, 1024)]
        assert all(a <= b for a, b in zip(med, med[1:]))

    def test_single_rep_deterministic(self):
        a = ex.example2_replication(32, 0.1, 7, 0)
        assert a == ex.example2_replication(32, 0.1, 7, 0)
        assert 0 < a <= 1

    def test_bad_mode(self):
        with pytest.raises(InvalidParam):
            ex.run_example2("vary-x", [1], 1, 0)


class TestPolicyCompare:
    def test_schedules(self):
        cfg = ex.ExperimentConfig()
        assert ex.make_schedule("bayes", cfg) == Constant(1.0)
        assert ex.make_schedule("freq", cfg) == FreqRho(1e-4, 0.1)
        assert ex.make_schedule("improved", cfg) == ThinnessGated(5.0, 2.0, FreqRho(1e-4, 0.1))

    def test_cube_arms(self):
        fn = ex.cube_action_sets(9, 20, 3)
        a = fn(4, None)
        assert len(a) == 20 and np.abs(a.arms).max() <= 1 / 3
        np.testing.assert_array_equal(a.arms, fn(4, np.random.default_rng(0)).arms)

    def test_single_round(self):
        table = ex.run_policy_compare(ex.ExperimentConfig(d=3, arms=4, horizon=1, reps=1, threads=1))
        rows = list(table.rows())
        assert len(rows) == 3
        for row in rows:
            assert row[3] == row[4]

    def test_cumulative_column(self):
        cfg = ex.ExperimentConfig(d=4, arms=8, horizon=60, reps=3, threads=2)
        table = ex.run_policy_compare(cfg, base_seed=11)
        np.testing.assert_allclose(table.cum_regret_mean, np.cumsum(table.inst_regret_mean, axis=1),
                                   atol=1e-9)
        assert np.all(np.isfinite(table.psi_exceed_frac.sum(axis=1)))
        assert table.thinness_mean.shape == (3, 60)

    def test_thread_independent(self):
        cfg1 = ex.ExperimentConfig(d=4, arms=8, horizon=40, reps=4, threads=1)
        cfg4 = ex.ExperimentConfig(d=4, arms=8, horizon=40, reps=4, threads=4)
        a, b = ex.run_policy_compare(cfg1), ex.run_policy_compare(cfg4)
        np.testing.assert_array_equal(a.inst_regret_mean, b.inst_regret_mean)
        np.testing.assert_array_equal(a.thinness_mean, b.thinness_mean)

    def test_policy_subset_does_not_change_streams(self):
        full = ex.run_policy_compare(ex.ExperimentConfig(d=4, arms=8, horizon=30, reps=2))
        only = ex.run_policy_compare(ex.ExperimentConfig(d=4, arms=8, horizon=30, reps=2, policies=["freq"]))
        np.testing.assert_array_equal(full.inst_regret_mean[1], only.inst_regret_mean[0])

    @pytest.mark.parametrize("kwargs", [{"reps": 0}, {"policies": ["greedy"]}, {"policies": []}])
    def test_invalid_config(self, kwargs):
        with pytest.raises(InvalidParam):
            ex.ExperimentConfig(**kwargs)
