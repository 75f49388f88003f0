from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import kalman_random_walk, rmse, simulate_random_walk
from pfnav import estimator as est
from pfnav.gridworld import GridAction, transition


def identity(p, a):
    return p


def make_set(particles, weights=None) -> est.ParticleSet:
    particles = np.atleast_2d(np.asarray(particles, dtype=float))
    n = particles.shape[0]
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)
    return est.ParticleSet(particles, w)


weight_vectors = arrays(
    np.float64, st.integers(1, 40), elements=st.floats(0.0, 1.0, allow_nan=False)
).filter(lambda w: w.sum() > 1e-6).map(lambda w: w / w.sum())


class TestInit:
    def test_point_mass(self):
        ps = est.init(4, est.point_mass((2.8, 2.8)), np.random.default_rng(0))
        np.testing.assert_array_equal(ps.particles, np.full((4, 2), 2.8))
        np.testing.assert_array_equal(ps.weights, np.full(4, 0.25))

    def test_uniform_ess(self):
        ps = est.init(500, est.gaussian_prior((0, 0), 1.0), np.random.default_rng(1))
        assert est.effective_sample_size(ps) == pytest.approx(500)

    @pytest.mark.parametrize("n", [0, -3])
    def test_rejects_empty(self, n):
        with pytest.raises(ValueError):
            est.init(n, est.point_mass((0.0,)), np.random.default_rng(0))

    def test_one_dimensional_prior(self):
        ps = est.init(3, lambda rng, n: np.arange(n, dtype=float), np.random.default_rng(0))
        assert ps.particles.shape == (3, 1)


class TestPredict:
    def test_zero_noise_identity_is_bit_identical(self):
        ps = make_set(np.random.default_rng(3).normal(size=(50, 2)))
        out = est.predict(ps, None, identity, est.NoiseSpec(0.05, 0.0), np.random.default_rng(0))
        np.testing.assert_array_equal(out.particles, ps.particles)
        np.testing.assert_array_equal(out.weights, ps.weights)

    def test_grid_shift(self):
        ps = make_set([[1.0, 2.0], [3.0, 4.0], [5.5, 0.5]])
        action = GridAction(0, 1.0, 0.0)
        out = est.predict(ps, action, transition, est.NoiseSpec(0.05, 0.0), np.random.default_rng(0))
        np.testing.assert_allclose(out.particles, ps.particles + [1.0, 0.0], atol=1e-15)

    def test_process_noise_variance(self):
        ps = make_set(np.zeros((100_000, 2)))
        out = est.predict(ps, None, identity, est.NoiseSpec(0.05, 0.07), np.random.default_rng(7))
        var = out.particles.var(axis=0)
        np.testing.assert_allclose(var, 0.0049, rtol=0.05)

    def test_per_component_sigma(self):
        ps = make_set(np.zeros((50_000, 2)))
        out = est.predict(ps, None, identity, est.NoiseSpec(0.05, (0.0, 0.1)), np.random.default_rng(2))
        assert np.all(out.particles[:, 0] == 0)
        assert out.particles[:, 1].std() == pytest.approx(0.1, rel=0.03)


class TestUpdateWeights:
    def test_zero_residual_factor_is_one(self):
        ps = make_set([[1.0, 1.0]])
        w, underflow = est._likelihood_weights(ps, [1.0, 1.0], est.NoiseSpec(0.3, 0.0))
        assert w[0] == 1.0 and not underflow

    def test_likelihood_ratio(self):
        ps = make_set([[0.0], [2.0]])
        out = est.update_weights(ps, [0.0], est.NoiseSpec(1.0, 0.0))
        assert out.weights[0] / out.weights[1] == pytest.approx(math.e**2)
        assert out.weights[0] / out.weights[1] == pytest.approx(7.389056, rel=1e-6)

    def test_equidistant_keeps_uniform(self):
        ps = make_set([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        out = est.update_weights(ps, [0.0, 0.0], est.NoiseSpec(0.5, 0.0))
        np.testing.assert_allclose(out.weights, 0.25)

    def test_zero_sigma_rejected(self):
        with pytest.raises(ValueError):
            est.update_weights(make_set([[0.0]]), [0.0], est.NoiseSpec(0.0, 0.1))

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError):
            est.NoiseSpec(-0.1, 0.1)

    def test_underflow_resets_uniform(self):
        ps = make_set([[0.0], [1.0], [2.0]], [0.2, 0.3, 0.5])
        out = est.update_weights(ps, [1e6], est.NoiseSpec(0.01, 0.0))
        np.testing.assert_allclose(out.weights, 1 / 3)

    def test_filter_counts_underflows(self):
        pf = est.ParticleFilter(10, identity, est.NoiseSpec(0.01, 0.0), np.random.default_rng(0))
        pf.reset(est.point_mass([0.0]))
        pf.step(None, [1e6])
        assert pf.underflows == 1

    @given(weight_vectors, st.floats(-3, 3))
    def test_normalized(self, w, z):
        ps = make_set(np.linspace(-2, 2, w.size)[:, None], w)
        out = est.update_weights(ps, [z], est.NoiseSpec(0.7, 0.0))
        assert abs(out.weights.sum() - 1) < 1e-9
        assert out.n == ps.n


class TestEffectiveSampleSize:
    @pytest.mark.parametrize(
        "weights, expected",
        [
            (np.full(7, 1 / 7), 7.0),
            ((1.0, 0.0, 0.0, 0.0), 1.0),
            ((0.5, 0.25, 0.25), 2.6666666666666665),
        ],
    )
    def test_values(self, weights, expected):
        ps = make_set(np.zeros((len(weights), 1)), weights)
        assert est.effective_sample_size(ps) == pytest.approx(expected)

    @given(weight_vectors)
    def test_bounds(self, w):
        ess = est.effective_sample_size(make_set(np.zeros((w.size, 1)), w))
        assert 1 - 1e-9 <= ess <= w.size + 1e-9


class TestResample:
    def test_uniform_copies_each_once(self):
        ps = make_set(np.arange(10.0)[:, None])
        for seed in range(5):
            out = est.resample(ps, np.random.default_rng(seed))
            np.testing.assert_array_equal(np.sort(out.particles[:, 0]), np.arange(10.0))

    def test_degenerate_weight(self):
        ps = make_set(np.arange(6.0)[:, None], [1, 0, 0, 0, 0, 0])
        out = est.resample(ps, np.random.default_rng(0))
        np.testing.assert_array_equal(out.particles, np.zeros((6, 1)))

    @given(weight_vectors, st.floats(0, 1, exclude_max=True))
    def test_counts_within_one_of_expectation(self, w, offset):
        idx = est.systematic_indices(w, offset)
        counts = np.bincount(idx, minlength=w.size)
        assert counts.sum() == w.size
        assert np.all(np.abs(counts - w.size * w) < 1 + 1e-9)

    @given(weight_vectors, st.integers(0, 2**32 - 1))
    def test_output_weights_uniform(self, w, seed):
        out = est.resample(make_set(np.arange(w.size, dtype=float)[:, None], w), np.random.default_rng(seed))
        np.testing.assert_allclose(out.weights, 1 / w.size)
        assert abs(out.weights.sum() - 1) < 1e-9
        assert out.n == w.size

    def test_unbiased_chi_square(self):
        from scipy.stats import chisquare

        w = np.array([0.5, 0.25, 0.125, 0.125])
        rng = np.random.default_rng(11)
        counts = np.zeros(4)
        for _ in range(10_000):
            counts += np.bincount(est.systematic_indices(w, rng.random()), minlength=4)
        assert chisquare(counts, 10_000 * 4 * w).pvalue > 0.001


class TestEstimate:
    @pytest.mark.parametrize(
        "particles, weights, expected",
        [
            ([[3.0, 4.0]], [1.0], [3.0, 4.0]),
            ([[0.0, 0.0], [2.0, 2.0]], [0.5, 0.5], [1.0, 1.0]),
            ([[0.0, 0.0], [4.0, 0.0]], [0.75, 0.25], [1.0, 0.0]),
        ],
    )
    def test_weighted_mean(self, particles, weights, expected):
        np.testing.assert_allclose(est.estimate(make_set(particles, weights)), expected)


class TestParticleFilter:
    def test_step_before_reset(self):
        pf = est.ParticleFilter(5, identity, est.NoiseSpec(), np.random.default_rng(0))
        with pytest.raises(RuntimeError):
            pf.step(None, [0.0, 0.0])

    def test_static_state_beats_raw(self):
        rng = np.random.default_rng(5)
        truth = np.array([1.0, -2.0])
        pf = est.ParticleFilter(500, identity, est.NoiseSpec(0.07, 0.01), rng)
        pf.reset(est.gaussian_prior(truth, 0.07))
        zs = truth + 0.07 * rng.standard_normal((1000, 2))
        ests = np.array([pf.step(None, z) for z in zs])
        assert rmse(ests, np.tile(truth, (1000, 1))) < rmse(zs, np.tile(truth, (1000, 1)))

    def test_seeded_determinism(self):
        def run():
            pf = est.ParticleFilter(100, identity, est.NoiseSpec(), np.random.default_rng(9))
            pf.reset(est.point_mass([0.0, 0.0]))
            return [pf.step(None, [0.01 * i, 0.0]) for i in range(20)]

        np.testing.assert_array_equal(run(), run())

    def test_tracks_kalman_on_random_walk(self):
        data_rng = np.random.default_rng(100)
        xs, zs = simulate_random_walk(data_rng, 300, 0.07, 0.05)
        kf = kalman_random_walk(zs, 0.07**2, 0.05**2, 0.0)
        pf = est.ParticleFilter(500, identity, est.NoiseSpec(0.05, 0.07), np.random.default_rng(1))
        pf.reset(est.point_mass([0.0]))
        pf_est = np.array([pf.step(None, [z])[0] for z in zs])
        assert rmse(pf_est, xs) <= 1.15 * rmse(kf, xs)


class TestKalmanOracle:
    def test_steady_state_gain(self):
        # closed form: P = (q + sqrt(q^2 + 4qr)) / 2 before the update, K = P / (P + r)
        q, r = 0.07**2, 0.05**2
        p_prior = (q + math.sqrt(q * q + 4 * q * r)) / 2
        k = p_prior / (p_prior + r)
        out = kalman_random_walk(np.r_[np.zeros(200), 1.0], q, r, 0.0)
        assert out[-1] == pytest.approx(k, rel=1e-9)

    def test_beats_raw_observations(self):
        xs, zs = simulate_random_walk(np.random.default_rng(0), 2000, 0.07, 0.05)
        assert rmse(kalman_random_walk(zs, 0.07**2, 0.05**2, 0.0), xs) < rmse(zs, xs)
