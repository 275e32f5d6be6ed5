import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lints_lab.errors import DimensionMismatch, InvalidParam, NonSymmetric, ZeroMatrix
from lints_lab.linalg import (
    PIVOT_FLOOR,
    PosteriorState,
    cholesky,
    cholesky_jitter,
    posterior_init,
    posterior_perturbation,
    posterior_sample,
    posterior_update,
    psd_norms,
    quad_norm,
    thinness,
)

from conftest import FixedStream, ZeroStream, random_psd


def naive_posterior(precision, info):
    cov = np.linalg.inv(precision)
    return cov, cov @ info


class TestCholesky:
    def test_identity(self):
        np.testing.assert_array_equal(cholesky(np.eye(3)), np.eye(3))

    def test_two_by_two(self):
        m = np.array([[4.0, 2.0], [2.0, 3.0]])
        L = cholesky(m)
        np.testing.assert_allclose(L, [[2, 0], [1, math.sqrt(2)]], atol=1e-12)
        np.testing.assert_allclose(L @ L.T, m, atol=1e-12)

    def test_diagonal(self):
        np.testing.assert_allclose(cholesky(np.diag([9.0, 16.0])), np.diag([3.0, 4.0]))

    def test_non_symmetric_reports_entries(self):
        m = np.eye(3)
        m[0, 2] = 1e-3
        with pytest.raises(NonSymmetric) as err:
            cholesky(m)
        assert {err.value.i, err.value.j} == {0, 2}

    def test_singular_matrix_is_clamped(self):
        v = np.array([1.0, 2.0, 3.0])
        m = np.outer(v, v)
        L, clamped = cholesky_jitter(m)
        assert clamped == 2
        assert np.all(np.diag(L) ** 2 >= PIVOT_FLOOR * (1 - 1e-12))
        assert np.abs(L @ L.T - m).max() <= 1e-8
        assert np.allclose(L, np.tril(L))

    def test_round_trip_random(self, rng):
        for _ in range(200):
            d = int(rng.integers(1, 30))
            m = random_psd(rng, d, cond=1e6)
            L = cholesky(m)
            assert np.allclose(L, np.tril(L))
            assert np.abs(L @ L.T - m).max() <= 1e-8


class TestNorms:
    def test_identity(self):
        assert psd_norms(np.eye(5)) == pytest.approx((1.0, 5.0))

    def test_diag(self):
        assert psd_norms(np.diag([2.0, 1.0, 1.0])) == pytest.approx((2.0, 4.0))

    def test_two_by_two_quadratic_root(self):
        op, nuc = psd_norms(np.array([[4.0, 2.0], [2.0, 3.0]]))
        assert op == pytest.approx((7 + math.sqrt(17)) / 2, abs=1e-12)
        assert nuc == 7.0

    def test_op_norm_matches_power_iteration(self, rng):
        m = random_psd(rng, 12)
        v = rng.standard_normal(12)
        for _ in range(2000):
            v = m @ v
            v /= np.linalg.norm(v)
        assert psd_norms(m)[0] == pytest.approx(v @ m @ v, rel=1e-9)


class TestThinness:
    @pytest.mark.parametrize("d", [1, 2, 7, 50])
    def test_identity_is_one(self, d):
        assert thinness(np.eye(d)) == 1.0

    def test_rank_one_extreme(self):
        assert thinness(np.diag([1.0, 0, 0, 0])) == pytest.approx(2.0)

    def test_substitution(self):
        assert thinness(np.diag([2.0, 1.0, 1.0])) == pytest.approx(math.sqrt(1.5), abs=1e-12)

    def test_zero_matrix(self):
        with pytest.raises(ZeroMatrix):
            thinness(np.zeros((3, 3)))

    def test_scale_invariance_and_bounds(self, rng):
        for _ in range(100):
            d = int(rng.integers(1, 20))
            m = random_psd(rng, d, cond=1e4)
            base = thinness(m)
            assert 1.0 <= base <= math.sqrt(d)
            for c in (1e-6, 1.0, 1e6):
                assert abs(thinness(c * m) - base) <= 1e-12


class TestQuadNorm:
    def test_unit(self):
        assert quad_norm(np.array([1.0, 0, 0]), np.eye(3)) == 1.0

    def test_by_hand(self):
        # 4 + 2*2 + 3 = 11
        assert quad_norm(np.ones(2), np.array([[4.0, 2.0], [2.0, 3.0]])) == pytest.approx(math.sqrt(11))

    def test_zero_vector(self):
        assert quad_norm(np.zeros(4), np.eye(4)) == 0.0

    def test_rounding_clamped(self):
        m = np.array([[1.0, -1.0], [-1.0, 1.0]])
        assert quad_norm(np.array([1.0, 1.0 + 1e-15]), m) >= 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            quad_norm(np.ones(3), np.eye(2))


class TestPosterior:
    def test_init_unit(self):
        s = posterior_init(3, 1.0)
        np.testing.assert_array_equal(s.covariance, np.eye(3))
        np.testing.assert_array_equal(s.mean, np.zeros(3))
        assert s.t == 1

    def test_init_scaled(self):
        s = posterior_init(2, 10.0)
        np.testing.assert_array_equal(s.covariance, 10 * np.eye(2))
        np.testing.assert_allclose(s.precision, 0.1 * np.eye(2))

    def test_init_reciprocal(self):
        assert posterior_init(1, 0.5).precision[0, 0] == 2.0

    @pytest.mark.parametrize("d,lam", [(0, 1.0), (2, 0.0), (2, -1.0)])
    def test_init_invalid(self, d, lam):
        with pytest.raises(InvalidParam):
            posterior_init(d, lam)

    def test_state_is_immutable(self):
        s = posterior_init(2, 1.0)
        with pytest.raises(ValueError):
            s.mean[0] = 1.0

    def test_update_scalar(self):
        s = posterior_update(posterior_init(1, 1.0), np.array([1.0]), 1.0)
        cov, mean = naive_posterior(np.array([[2.0]]), np.array([1.0]))
        assert s.covariance[0, 0] == pytest.approx(cov[0, 0]) == pytest.approx(0.5)
        assert s.mean[0] == pytest.approx(mean[0]) == pytest.approx(0.5)
        assert s.t == 2

    def test_update_zero_action(self):
        s0 = posterior_update(posterior_init(3, 2.0), np.array([1.0, -1.0, 0.5]), 0.3)
        s1 = posterior_update(s0, np.zeros(3), 123.0)
        for name in ("precision", "covariance", "info", "mean", "chol"):
            np.testing.assert_array_equal(getattr(s1, name), getattr(s0, name))
        assert s1.t == s0.t + 1

    def test_update_basis_vector(self):
        s = posterior_update(posterior_init(2, 1.0), np.array([1.0, 0.0]), 2.0)
        cov, mean = naive_posterior(np.diag([2.0, 1.0]), np.array([2.0, 0.0]))
        np.testing.assert_allclose(s.mean, mean, atol=1e-15)
        np.testing.assert_allclose(s.mean, [1.0, 0.0])
        np.testing.assert_allclose(s.covariance, np.diag([0.5, 1.0]))

    def test_update_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            posterior_update(posterior_init(2, 1.0), np.ones(3), 0.0)

    def test_state_invariants_along_updates(self, rng):
        s = posterior_init(6, 3.0)
        for _ in range(300):
            s = posterior_update(s, rng.uniform(-1, 1, 6), rng.standard_normal())
            assert np.abs(s.covariance @ s.precision - np.eye(6)).max() <= 1e-8
            assert np.abs(s.mean - s.covariance @ s.info).max() <= 1e-8
            assert np.abs(s.chol @ s.chol.T - s.covariance).max() <= 1e-8
            np.testing.assert_array_equal(s.covariance, s.covariance.T)

    def test_from_moments(self, rng):
        cov = random_psd(rng, 4)
        mean = rng.standard_normal(4)
        s = PosteriorState.from_moments(mean, cov)
        np.testing.assert_allclose(s.covariance @ s.precision, np.eye(4), atol=1e-8)
        np.testing.assert_allclose(s.covariance @ s.info, mean, atol=1e-8)


class TestShermanMorrison:
    def test_matches_naive_inverse(self, rng):
        """1000 random PSD states, unit-norm actions; mean and covariance agree to 1e-8."""
        for _ in range(1000):
            d = int(rng.integers(1, 12))
            prec = random_psd(rng, d, cond=1e3) + 0.1 * np.eye(d)
            mean = rng.standard_normal(d)
            state = PosteriorState.from_moments(mean, np.linalg.inv(prec))
            a = rng.standard_normal(d)
            a /= np.linalg.norm(a)
            y = rng.standard_normal()
            new = posterior_update(state, a, y)
            cov, m = naive_posterior(state.precision + np.outer(a, a), state.info + a * y)
            assert np.abs(new.covariance - cov).max() <= 1e-8
            assert np.abs(new.mean - m).max() <= 1e-8


class TestSampling:
    def test_zero_stream_returns_mean(self):
        s = posterior_update(posterior_init(3, 1.0), np.array([1.0, 2.0, 0.0]), 1.5)
        for iota in (0.1, 1.0, 7.0):
            np.testing.assert_array_equal(posterior_sample(s, iota, ZeroStream()), s.mean)

    def test_identity_factor(self):
        s = posterior_init(2, 1.0)
        np.testing.assert_array_equal(posterior_sample(s, 1.0, FixedStream([1.5, -0.5])), [1.5, -0.5])

    def test_consumes_exactly_d_normals(self):
        s = posterior_init(5, 1.0)
        r1, r2 = np.random.default_rng(3), np.random.default_rng(3)
        posterior_sample(s, 2.0, r1)
        r2.standard_normal(5)
        assert r1.standard_normal() == r2.standard_normal()

    def test_empirical_covariance(self):
        m = np.array([[4.0, 2.0], [2.0, 3.0]])
        s = PosteriorState.from_moments(np.zeros(2), m)
        gen = np.random.default_rng(11)
        draws = np.array([posterior_sample(s, 2.0, gen) for _ in range(100_000)])
        np.testing.assert_allclose(np.cov(draws.T), 4 * m, rtol=0.05)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), iota=st.floats(1e-3, 1e3))
    def test_linear_in_iota(self, seed, iota):
        gen = np.random.default_rng(seed)
        s = PosteriorState.from_moments(gen.standard_normal(4), random_psd(gen, 4))
        z = gen.standard_normal(4)
        np.testing.assert_array_equal(posterior_perturbation(s, 2 * iota, z),
                                      2 * posterior_perturbation(s, iota, z))
        t1 = posterior_sample(s, iota, np.random.default_rng(seed + 1)) - s.mean
        t2 = posterior_sample(s, 2 * iota, np.random.default_rng(seed + 1)) - s.mean
        np.testing.assert_allclose(t2, 2 * t1, rtol=1e-12, atol=1e-12)

    def test_rejects_nonpositive_iota(self):
        with pytest.raises(InvalidParam):
            posterior_sample(posterior_init(2, 1.0), 0.0, np.random.default_rng(0))
