"""Schedule construction and jump-coefficient identities.

Expected values marked as frozen were produced by independent
transcriptions of the closed forms (plain-Python arithmetic, no shared
code with the library); the oracles that are cheap to rerun are inlined.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skipstep import (
    ConfigurationError,
    NoiseSchedule,
    make_cosine_schedule,
    make_linear_schedule,
    predict_x0,
    skip_coefficients,
)


def small_schedule():
    return make_linear_schedule(3, 0.1, 0.3)


class TestLinearSchedule:
    def test_hand_product(self):
        s = small_schedule()
        np.testing.assert_allclose(s.alpha, [0.9, 0.8, 0.7], rtol=1e-15)
        np.testing.assert_allclose(s.alpha_bar, [1.0, 0.9, 0.72, 0.504], rtol=1e-15)

    def test_single_step(self):
        s = make_linear_schedule(1, 0.5, 0.5)
        np.testing.assert_allclose(s.alpha, [0.5])
        np.testing.assert_allclose(s.alpha_bar, [1.0, 0.5])

    def test_matches_independent_running_product(self):
        T = 1000
        s = make_linear_schedule(T, 1e-4, 0.02)
        prod = 1.0
        for i in range(T):
            prod *= 1.0 - (1e-4 + (0.02 - 1e-4) * i / (T - 1))
        assert abs(s.alpha_bar[-1] - prod) / prod <= 1e-12
        # frozen from the same oracle run offline
        assert s.alpha_bar[-1] == pytest.approx(4.0358297653756754e-05, rel=1e-12)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(T=10, beta_start=0.0, beta_end=0.1),
            dict(T=10, beta_start=0.1, beta_end=1.0),
            dict(T=10, beta_start=0.5, beta_end=0.1),
            dict(T=0, beta_start=0.1, beta_end=0.2),
        ],
    )
    def test_rejects_bad_ranges(self, kwargs):
        with pytest.raises(ConfigurationError):
            make_linear_schedule(**kwargs)


class TestCosineSchedule:
    def test_starts_at_one(self):
        s = make_cosine_schedule(10)
        assert s.alpha_bar[0] == 1.0

    def test_strictly_decreasing(self):
        s = make_cosine_schedule(10)
        assert np.all(np.diff(s.alpha_bar) < 0)

    def test_formula_reevaluation(self):
        s = make_cosine_schedule(100, offset=0.008)

        def f(t):
            return math.cos(((t / 100 + 0.008) / 1.008) * math.pi / 2) ** 2

        expected = f(50) / f(0)
        assert abs(s.alpha_bar[50] - expected) / expected <= 1e-12
        assert expected == pytest.approx(0.49384359044063775, rel=1e-13)

    def test_alpha_floor_applied(self):
        s = make_cosine_schedule(1000)
        assert np.min(s.alpha) >= 0.001


class TestScheduleInvariants:
    def test_alpha_in_unit_interval(self):
        for s in (make_linear_schedule(500), make_cosine_schedule(500)):
            assert np.all((s.alpha > 0) & (s.alpha < 1))

    def test_running_product_consistency(self):
        for s in (make_linear_schedule(500), make_cosine_schedule(500)):
            rel = np.abs(s.alpha_bar[1:] - s.alpha_bar[:-1] * s.alpha) / s.alpha_bar[1:]
            assert np.max(rel) <= 1e-12

    def test_rejects_inconsistent_product(self):
        with pytest.raises(ConfigurationError):
            NoiseSchedule(alpha=np.array([0.9, 0.8]), alpha_bar=np.array([1.0, 0.9, 0.7]))

    def test_arrays_immutable(self):
        s = small_schedule()
        with pytest.raises(ValueError):
            s.alpha[0] = 0.5


class TestSkipCoefficients:
    def test_frozen_transcription_values(self):
        # independent symbol-by-symbol transcription, T=3, t=3, m=2
        c = skip_coefficients(small_schedule(), 3, 2)
        assert c.t_prev == 1
        assert c.fwd_mean_scale == pytest.approx(0.7483314773547882, rel=1e-12)
        assert c.fwd_var == pytest.approx(0.44, rel=1e-12)
        assert c.post_coef_xt == pytest.approx(0.15087328172475567, rel=1e-12)
        assert c.post_coef_x0 == pytest.approx(0.8415738934319075, rel=1e-12)
        assert c.post_var == pytest.approx(0.08870967741935483, rel=1e-12)
        assert c.rev_coef_xt == pytest.approx(1.3363062095621219, rel=1e-12)
        assert c.rev_coef_eps == pytest.approx(0.8348680184885099, rel=1e-12)

    def test_single_step_reduction(self):
        s = make_linear_schedule(50, 1e-3, 0.1)
        for t in range(1, 51):
            c = skip_coefficients(s, t, 1)
            a = s.alpha[t - 1]
            ab_t, ab_p = s.alpha_bar[t], s.alpha_bar[t - 1]
            assert c.post_coef_xt == pytest.approx(
                math.sqrt(a) * (1 - ab_p) / (1 - ab_t), rel=1e-12
            )
            assert c.post_coef_x0 == pytest.approx(
                math.sqrt(ab_p) * (1 - a) / (1 - ab_t), rel=1e-12
            )
            assert c.post_var == pytest.approx(
                (1 - a) * (1 - ab_p) / (1 - ab_t), rel=1e-12
            )

    def test_full_jump_recovers_total_noising(self):
        s = make_linear_schedule(20, 1e-3, 0.1)
        for t in (1, 7, 20):
            c = skip_coefficients(s, t, t)
            assert c.fwd_mean_scale == pytest.approx(math.sqrt(s.alpha_bar[t]), rel=1e-14)
            assert c.fwd_var == pytest.approx(1 - s.alpha_bar[t], rel=1e-14)
            assert c.post_var == 0.0

    def test_forward_variance_in_unit_interval(self):
        s = make_linear_schedule(30)
        for t in range(1, 31):
            for m in range(1, t + 1):
                c = skip_coefficients(s, t, m)
                assert 0.0 < c.fwd_var < 1.0
                assert c.post_var >= 0.0

    @pytest.mark.parametrize("t,m", [(0, 1), (4, 1), (3, 4), (2, 0), (1, 2)])
    def test_rejects_out_of_range(self, t, m):
        with pytest.raises(IndexError):
            skip_coefficients(small_schedule(), t, m)


class TestCompositionIdentity:
    def test_all_triples(self):
        s = make_linear_schedule(50, 1e-3, 0.1)
        worst = 0.0
        for a in range(0, s.T):
            for b in range(a + 1, s.T):
                for c in range(b + 1, s.T + 1):
                    full = skip_coefficients(s, c, c - a)
                    first = skip_coefficients(s, b, b - a)
                    second = skip_coefficients(s, c, c - b)
                    scale = first.fwd_mean_scale * second.fwd_mean_scale
                    var = second.fwd_mean_scale**2 * first.fwd_var + second.fwd_var
                    worst = max(
                        worst,
                        abs(scale - full.fwd_mean_scale) / full.fwd_mean_scale,
                        abs(var - full.fwd_var) / full.fwd_var,
                    )
        assert worst <= 1e-10

    @settings(max_examples=50, deadline=None)
    @given(
        beta_end=st.floats(0.01, 0.5),
        a=st.integers(0, 18),
        gap1=st.integers(1, 10),
        gap2=st.integers(1, 10),
    )
    def test_random_schedules_and_gaps(self, beta_end, a, gap1, gap2):
        s = make_linear_schedule(40, 1e-3, beta_end)
        b, c = a + gap1, a + gap1 + gap2
        full = skip_coefficients(s, c, c - a)
        first = skip_coefficients(s, b, b - a)
        second = skip_coefficients(s, c, c - b)
        assert first.fwd_mean_scale * second.fwd_mean_scale == pytest.approx(
            full.fwd_mean_scale, rel=1e-10
        )
        assert second.fwd_mean_scale**2 * first.fwd_var + second.fwd_var == pytest.approx(
            full.fwd_var, rel=1e-10
        )


class TestNoiseSubstitutionIdentity:
    """Reverse-mean form against posterior-mean form with inverted clean data."""

    @settings(max_examples=100, deadline=None)
    @given(
        t=st.integers(1, 40),
        m_frac=st.floats(0.0, 1.0),
        x_t=st.floats(-3.0, 3.0),
        eps=st.floats(-3.0, 3.0),
    )
    def test_scalar_identity(self, t, m_frac, x_t, eps):
        s = make_linear_schedule(40, 1e-3, 0.06)
        m = 1 + int(m_frac * (t - 1))
        c = skip_coefficients(s, t, m)
        x0 = float(predict_x0(np.array([[x_t]]), np.array([[eps]]), s, t)[0, 0])
        lhs = c.rev_coef_xt * x_t - c.rev_coef_eps * eps
        rhs = c.post_coef_xt * x_t + c.post_coef_x0 * x0
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


class TestGridPosterior:
    def test_brute_force_bayes_small_chain(self):
        s = make_linear_schedule(5, 0.05, 0.4)
        x0, x_t = 0.7, 0.3
        grid = np.linspace(-12.0, 12.0, 200_001)
        for t in range(1, 6):
            for m in range(1, t):
                c = skip_coefficients(s, t, m)
                ab_p = s.alpha_bar[t - m]
                # normalized product of the two forward Gaussians on the grid
                log_lik = -0.5 * (x_t - c.fwd_mean_scale * grid) ** 2 / c.fwd_var
                log_pri = -0.5 * (grid - math.sqrt(ab_p) * x0) ** 2 / (1 - ab_p)
                w = np.exp(log_lik + log_pri)
                w /= w.sum()
                mean_g = float(np.sum(w * grid))
                var_g = float(np.sum(w * (grid - mean_g) ** 2))
                assert abs(mean_g - (c.post_coef_xt * x_t + c.post_coef_x0 * x0)) <= 1e-6
                assert abs(var_g - c.post_var) <= 1e-6

    def test_full_jump_is_point_mass_at_clean_data(self):
        # the m = t posterior conditions on the clean data itself
        s = make_linear_schedule(5, 0.05, 0.4)
        x0, x_t = 0.7, 0.3
        for t in range(1, 6):
            c = skip_coefficients(s, t, t)
            assert c.post_coef_xt * x_t + c.post_coef_x0 * x0 == pytest.approx(x0, rel=1e-12)
            assert c.post_var == 0.0


class TestPredictX0:
    def test_zero_noise(self):
        s = small_schedule()
        x = np.array([[2.0, -1.0]])
        out = predict_x0(x, np.zeros_like(x), s, 2)
        np.testing.assert_allclose(out, x / math.sqrt(0.72), rtol=1e-15)

    def test_inverts_noising(self):
        s = make_linear_schedule(100)
        gen = np.random.default_rng(0)
        x0 = gen.standard_normal((64, 3))
        eps = gen.standard_normal((64, 3))
        t = 70
        x_t = math.sqrt(s.alpha_bar[t]) * x0 + math.sqrt(1 - s.alpha_bar[t]) * eps
        np.testing.assert_allclose(predict_x0(x_t, eps, s, t), x0, rtol=1e-10, atol=1e-10)

    def test_hand_value(self):
        s = NoiseSchedule(alpha=np.array([0.64]), alpha_bar=np.array([1.0, 0.64]))
        out = predict_x0(np.array([[1.0]]), np.array([[0.5]]), s, 1)
        assert out[0, 0] == pytest.approx(0.875, rel=1e-15)

    def test_rejects_bad_timestep_and_shapes(self):
        s = small_schedule()
        with pytest.raises(IndexError):
            predict_x0(np.zeros((1, 1)), np.zeros((1, 1)), s, 4)
        with pytest.raises(ValueError):
            predict_x0(np.zeros((1, 2)), np.zeros((1, 3)), s, 1)
