import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from sl0dn.core_model import (
    PERFECT_SNR,
    SNR_CAP_DB,
    BernoulliGaussianModel,
    MixingProblem,
    NoiseModel,
    capped_snr,
    derive_seed,
    generate_mixing_matrix,
    generate_sources,
    make_rng,
    mix,
    snr_db,
    validate_seed,
)
from sl0dn.errors import ParameterError, ShapeError, UndefinedMetricError

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


class TestMixingProblem:
    def test_arrays_are_read_only_copies(self):
        a = np.eye(3)
        x = np.ones(3)
        p = MixingProblem(a, x)
        a[0, 0] = 5.0
        assert p.matrix_a[0, 0] == 1.0
        with pytest.raises(ValueError):
            p.matrix_a[0, 0] = 2.0
        assert (p.n, p.m) == (3, 3)

    @pytest.mark.parametrize(
        "a, x",
        [
            (np.ones((2, 3)), np.ones(4)),
            (np.ones(3), np.ones(3)),
            (np.ones((2, 3)), np.ones((2, 1))),
            (np.ones((0, 3)), np.ones(0)),
        ],
    )
    def test_shape_errors(self, a, x):
        with pytest.raises(ShapeError):
            MixingProblem(a, x)

    def test_non_finite_rejected(self):
        with pytest.raises(ParameterError):
            MixingProblem(np.array([[np.nan, 1.0]]), np.ones(1))

    def test_residual(self):
        p = MixingProblem(np.eye(2), np.array([1.0, 2.0]))
        np.testing.assert_array_equal(p.residual([1.0, 0.0]), [0.0, -2.0])


class TestModelValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(p_active=0.0),
            dict(p_active=1.0),
            dict(sigma_on=0.0),
            dict(sigma_off=-0.1),
            dict(sigma_on=0.5, sigma_off=0.5),
            dict(sigma_on=math.inf),
        ],
    )
    def test_bad_source_model(self, kwargs):
        with pytest.raises(ParameterError):
            BernoulliGaussianModel(**kwargs)

    @pytest.mark.parametrize("sigma_n", [-1e-3, math.nan, math.inf])
    def test_bad_noise(self, sigma_n):
        with pytest.raises(ParameterError):
            NoiseModel(sigma_n)

    @pytest.mark.parametrize("seed", [-1, 2**64, 1.5, True, "3"])
    def test_bad_seed(self, seed):
        with pytest.raises(ParameterError):
            validate_seed(seed)


class TestSeeds:
    def test_derivation_is_pure_and_key_sensitive(self):
        assert derive_seed(5, 1, 2) == derive_seed(5, 1, 2)
        assert len({derive_seed(5, 1, 2), derive_seed(5, 2, 1), derive_seed(6, 1, 2)}) == 3

    def test_rng_reproducible(self):
        np.testing.assert_array_equal(make_rng(9).random(5), make_rng(9).random(5))


class TestGenerateSources:
    def test_active_count_band(self):
        s = generate_sources(BernoulliGaussianModel(), 1000, seed=11)
        assert 70 <= np.count_nonzero(np.abs(s) > 0.1) <= 130

    def test_exact_zeros_when_sigma_off_zero(self):
        model = BernoulliGaussianModel(0.1, 1.0, 0.0)
        s = generate_sources(model, 100, seed=3)
        # regenerate the activity mask from the same stream
        active = make_rng(3).random(100) < 0.1
        assert np.all(s[~active] == 0.0)
        assert np.all(s[active] != 0.0)

    def test_l0_count_binomial_band(self):
        model = BernoulliGaussianModel(0.1, 1.0, 0.0)
        m, trials = 200, 100
        counts = [np.count_nonzero(generate_sources(model, m, derive_seed(1, t))) for t in range(trials)]
        total = sum(counts)
        mean, std = 0.1 * m * trials, math.sqrt(m * trials * 0.1 * 0.9)
        assert abs(total - mean) <= 4 * std

    def test_zero_mean(self):
        # 10**5 draws of a short vector; each entry's mean within 4 standard errors
        model = BernoulliGaussianModel()
        rng = make_rng(2024)
        draws = np.array([generate_sources(model, 4, int(k)) for k in rng.integers(0, 2**63, 100_000)])
        var = model.p_active * model.sigma_on**2 + (1 - model.p_active) * model.sigma_off**2
        se = math.sqrt(var / draws.shape[0])
        assert np.all(np.abs(draws.mean(axis=0)) < 4 * se)

    def test_deterministic(self):
        model = BernoulliGaussianModel()
        np.testing.assert_array_equal(generate_sources(model, 50, 4), generate_sources(model, 50, 4))

    @pytest.mark.parametrize("m", [0, -3, 2.0])
    def test_bad_length(self, m):
        with pytest.raises(ParameterError):
            generate_sources(BernoulliGaussianModel(), m, 0)


class TestMixingMatrix:
    def test_unit_variance(self):
        a = generate_mixing_matrix(400, 1000, seed=1)
        assert a.shape == (400, 1000)
        assert 0.9 <= a.var() <= 1.1

    def test_scalar(self):
        a = generate_mixing_matrix(1, 1, seed=1)
        assert a.shape == (1, 1) and np.isfinite(a[0, 0])

    def test_deterministic(self):
        np.testing.assert_array_equal(generate_mixing_matrix(3, 5, 8), generate_mixing_matrix(3, 5, 8))


class TestMix:
    def test_zero_source(self):
        np.testing.assert_array_equal(mix(np.ones((2, 3)), np.zeros(3), NoiseModel(0.0), 0), np.zeros(2))

    def test_identity(self):
        np.testing.assert_array_equal(mix(np.eye(3), [1.0, 2.0, 3.0], NoiseModel(0.0), 0), [1.0, 2.0, 3.0])

    def test_noise_std(self):
        a = generate_mixing_matrix(5, 8, 0)
        s = generate_sources(BernoulliGaussianModel(), 8, 0)
        clean = a @ s
        resid = np.concatenate([mix(a, s, NoiseModel(0.05), k) - clean for k in range(10_000)])
        assert abs(resid.std() / 0.05 - 1.0) < 0.05

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            mix(np.ones((2, 3)), np.ones(2), NoiseModel(), 0)

    @settings(max_examples=50, deadline=None)
    @given(
        a=hnp.arrays(float, (3, 4), elements=finite),
        s1=hnp.arrays(float, 4, elements=finite),
        s2=hnp.arrays(float, 4, elements=finite),
        alpha=finite,
        beta=finite,
    )
    def test_linear_without_noise(self, a, s1, s2, alpha, beta):
        noise = NoiseModel(0.0)
        lhs = mix(a, alpha * s1 + beta * s2, noise, 0)
        rhs = alpha * mix(a, s1, noise, 0) + beta * mix(a, s2, noise, 0)
        scale = np.abs(a) @ (np.abs(alpha * s1) + np.abs(beta * s2)) + 1.0
        assert np.all(np.abs(lhs - rhs) <= 1e-12 * scale)


class TestSnr:
    def test_zero_estimate_is_zero_db(self):
        assert snr_db([1.0, -2.0, 3.0], np.zeros(3)) == pytest.approx(0.0, abs=1e-12)

    def test_twenty_db(self):
        s = np.array([3.0, 4.0])
        est = s + np.array([0.3, 0.4])
        assert snr_db(s, est) == pytest.approx(20.0, abs=1e-9)

    def test_perfect(self):
        assert snr_db([1.0, 2.0], [1.0, 2.0]) == PERFECT_SNR
        assert capped_snr(PERFECT_SNR) == SNR_CAP_DB

    def test_zero_reference_undefined(self):
        with pytest.raises(UndefinedMetricError):
            snr_db(np.zeros(3), np.ones(3))

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            snr_db(np.ones(3), np.ones(2))

    def test_no_overflow_for_tiny_error(self):
        assert math.isfinite(snr_db([1e200], [1e200 * (1 + 1e-15)]))

    @settings(max_examples=50, deadline=None)
    @given(
        s=hnp.arrays(float, 5, elements=st.floats(-10, 10)).filter(lambda v: np.linalg.norm(v) > 1e-3),
        e=hnp.arrays(float, 5, elements=st.floats(-10, 10)).filter(lambda v: np.linalg.norm(v) > 1e-3),
        c=st.floats(1e-3, 1e3) | st.floats(-1e3, -1e-3),
    )
    def test_scale_invariance(self, s, e, c):
        assert snr_db(c * s, c * (s + e)) == pytest.approx(snr_db(s, s + e), abs=1e-9)

    @settings(max_examples=30, deadline=None)
    @given(
        s=hnp.arrays(float, 4, elements=st.floats(-10, 10)).filter(lambda v: np.linalg.norm(v) > 1e-3),
        u=hnp.arrays(float, 4, elements=st.floats(-1, 1)).filter(lambda v: np.linalg.norm(v) > 1e-3),
    )
    def test_monotone_in_error_size(self, s, u):
        u = u / np.linalg.norm(u)
        values = [snr_db(s, s + eps * u) for eps in (1.0, 1e-2, 1e-4, 1e-6)]
        assert all(a < b for a, b in zip(values, values[1:]))
