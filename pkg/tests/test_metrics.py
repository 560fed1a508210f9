"""Metric correctness: closed forms, independent oracles, and invariances.

The energy-distance oracle here is an O(n log n) sorted-prefix-sum
computation of the same U-statistics, written independently of the
pairwise kernels it checks; scipy's CDF-based implementation provides a
second, external cross-check (it uses V-statistic within-batch means, so
the test converts before comparing).
"""

import math

import numpy as np
import pytest
from scipy.stats import energy_distance as scipy_energy_distance

from skipstep import (
    GaussianState,
    RandomSource,
    batch_moments,
    energy_distance,
    gaussian_w2,
    mmd,
    sliced_wasserstein,
)
from skipstep.metrics import MetricReport, report_header, report_row


def mean_abs_pairwise_sorted(x):
    """U-statistic mean |x_i - x_j| over i != j via sorted prefix sums."""
    x = np.sort(x)
    n = x.size
    ranks = 2 * np.arange(n) - (n - 1)
    return float(np.sum(ranks * x)) * 2.0 / (n * (n - 1))


def mean_abs_cross_sorted(a, b):
    """Mean |a_i - b_j| over all pairs via searchsorted and prefix sums."""
    b = np.sort(b)
    csum = np.concatenate(([0.0], np.cumsum(b)))
    total = csum[-1]
    pos = np.searchsorted(b, a, side="right")
    below = a * pos - csum[pos]
    above = (total - csum[pos]) - a * (b.size - pos)
    return float(np.sum(below + above)) / (a.size * b.size)


def energy_distance_1d_oracle(a, b):
    return (
        2 * mean_abs_cross_sorted(a, b)
        - mean_abs_pairwise_sorted(a)
        - mean_abs_pairwise_sorted(b)
    )


class TestGaussianW2:
    def test_identical_gaussians(self):
        g = GaussianState(mean=[0.3, -0.1], cov_diag=[1.0, 2.0])
        assert gaussian_w2(g, g) == 0.0

    def test_pure_mean_shift(self):
        a = GaussianState(mean=[0.0], cov_diag=[1.0])
        b = GaussianState(mean=[1.0], cov_diag=[1.0])
        assert gaussian_w2(a, b) == pytest.approx(1.0, rel=1e-15)

    def test_pure_scale_change(self):
        a = GaussianState(mean=[0.0], cov_diag=[1.0])
        b = GaussianState(mean=[0.0], cov_diag=[4.0])
        assert gaussian_w2(a, b) == pytest.approx(1.0, rel=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            gaussian_w2(
                GaussianState(mean=[0.0], cov_diag=[1.0]),
                GaussianState(mean=[0.0, 0.0], cov_diag=[1.0, 1.0]),
            )


class TestSlicedWasserstein:
    def test_identical_batches(self):
        a = RandomSource(1).normal((400, 3))
        assert sliced_wasserstein(a, a, 64, RandomSource(2)) == 0.0

    def test_point_masses(self):
        a = np.array([[0.0]])
        b = np.array([[2.5]])
        assert sliced_wasserstein(a, b, 16, RandomSource(3)) == pytest.approx(2.5, rel=1e-12)

    def test_mean_shift_matches_analytic_projection(self):
        # for N(m1, I) vs N(m2, I) in 2-D the projected distance is
        # |u . delta|, whose mean over uniform directions is |delta| 2/pi
        delta = np.array([1.2, -1.6])
        rng = RandomSource(4)
        n = 20_000
        a = rng.normal((n, 2))
        b = delta + rng.normal((n, 2))
        n_proj = 128
        est = sliced_wasserstein(a, b, n_proj, RandomSource(5))
        norm = float(np.linalg.norm(delta))
        analytic = norm * 2.0 / math.pi
        proj_std = norm * math.sqrt(0.5 - 4.0 / math.pi**2)
        tol = 3.0 * proj_std / math.sqrt(n_proj) + 0.02  # finite-sample W1 bias margin
        assert abs(est - analytic) <= tol

    def test_translation_consistency(self):
        rng = RandomSource(6)
        a = rng.normal((300, 2))
        b = rng.normal((300, 2)) + 0.4
        shift = np.array([10.0, -3.0])
        base = sliced_wasserstein(a, b, 64, RandomSource(7))
        moved = sliced_wasserstein(a + shift, b + shift, 64, RandomSource(7))
        assert abs(base - moved) <= 1e-10

    def test_symmetry(self):
        rng = RandomSource(8)
        a = rng.normal((200, 2))
        b = 0.3 + rng.normal((250, 2))
        x = sliced_wasserstein(a, b, 64, RandomSource(9))
        y = sliced_wasserstein(b, a, 64, RandomSource(9))
        assert abs(x - y) <= 1e-12

    def test_empty_batch_rejected(self):
        with pytest.raises(ValueError):
            sliced_wasserstein(np.zeros((0, 2)), np.zeros((5, 2)), 8, RandomSource(0))


class TestEnergyDistance:
    def test_identical_batches(self):
        a = RandomSource(10).normal((500, 2))
        assert energy_distance(a, a) == 0.0

    def test_singletons_closed_form(self):
        assert energy_distance(np.array([[0.0]]), np.array([[3.0]])) == pytest.approx(6.0)

    def test_matches_sorted_oracle(self):
        rng = RandomSource(11)
        a = rng.normal((3000, 1))
        b = 0.5 + 1.2 * rng.normal((3000, 1))
        ours = energy_distance(a, b)
        oracle = energy_distance_1d_oracle(a[:, 0], b[:, 0])
        assert ours == pytest.approx(oracle, rel=1e-10)

    def test_matches_scipy_after_ustat_to_vstat(self):
        rng = RandomSource(12)
        a = rng.normal((2000, 1))
        b = 0.7 + rng.normal((2000, 1))
        n = 2000
        # rebuild the V-statistic value scipy uses from our U-statistic parts
        within_a = mean_abs_pairwise_sorted(a[:, 0]) * (n - 1) / n
        within_b = mean_abs_pairwise_sorted(b[:, 0]) * (n - 1) / n
        cross = mean_abs_cross_sorted(a[:, 0], b[:, 0])
        vstat = 2 * cross - within_a - within_b
        assert vstat == pytest.approx(scipy_energy_distance(a[:, 0], b[:, 0]) ** 2, rel=1e-9)

    def test_null_value_within_permutation_band(self):
        # two draws from the same distribution vs the exchangeable null
        rng = RandomSource(13)
        pooled = rng.normal((20_000, 1))[:, 0]
        a, b = pooled[:10_000], pooled[10_000:]
        observed = energy_distance(a[:, None], b[:, None])
        gen = RandomSource(14).stream(0)
        null = []
        for _ in range(60):
            perm = gen.permutation(20_000)
            pa, pb = pooled[perm[:10_000]], pooled[perm[10_000:]]
            null.append(energy_distance_1d_oracle(pa, pb))
        null = np.asarray(null)
        spread = float(null.std(ddof=1))
        assert abs(observed - float(null.mean())) <= 5 * spread

    def test_translation_consistency(self):
        rng = RandomSource(15)
        a = rng.normal((300, 2))
        b = rng.normal((260, 2)) + 0.3
        shift = np.array([5.0, 5.0])
        assert abs(energy_distance(a, b) - energy_distance(a + shift, b + shift)) <= 1e-10

    def test_symmetry(self):
        rng = RandomSource(16)
        a = rng.normal((200, 3))
        b = 0.2 + rng.normal((240, 3))
        assert abs(energy_distance(a, b) - energy_distance(b, a)) <= 1e-12


class TestMmd:
    def test_identical_batches(self):
        a = RandomSource(17).normal((300, 2))
        assert mmd(a, a) == 0.0

    def test_separated_batches_positive(self):
        rng = RandomSource(18)
        a = rng.normal((500, 2))
        b = 3.0 + rng.normal((500, 2))
        assert mmd(a, b) > 0.1

    def test_symmetry(self):
        rng = RandomSource(19)
        a = rng.normal((200, 2))
        b = 0.5 + rng.normal((200, 2))
        assert abs(mmd(a, b, gamma=0.5) - mmd(b, a, gamma=0.5)) <= 1e-12


class TestBatchMoments:
    def test_constant_batch(self):
        m = batch_moments(np.full((10, 2), 3.0))
        np.testing.assert_array_equal(m.mean, [3.0, 3.0])
        np.testing.assert_array_equal(m.cov_diag, [0.0, 0.0])

    def test_two_point_unbiased_variance(self):
        m = batch_moments(np.array([[-1.0], [1.0]]))
        assert float(m.mean[0]) == 0.0
        assert float(m.cov_diag[0]) == pytest.approx(2.0, rel=1e-15)

    def test_large_sample_standard_normal(self):
        n = 200_000
        m = batch_moments(RandomSource(20).normal((n, 1)))
        assert abs(float(m.mean[0])) <= 4.0 / math.sqrt(n)
        assert abs(float(m.cov_diag[0]) - 1.0) <= 4.0 * math.sqrt(2.0 / n)

    def test_too_small_batch_rejected(self):
        with pytest.raises(ValueError):
            batch_moments(np.array([[1.0]]))


class TestMetricReport:
    def test_row_round_trip(self):
        r = MetricReport(
            sampler="skipped",
            steps=25,
            seed=3,
            values={"sliced_wasserstein": 0.125},
            cutoff=None,
            wall_clock_s=0.5,
        )
        header = report_header(["sliced_wasserstein"])
        row = report_row(r, ["sliced_wasserstein"])
        assert len(header) == len(row)
        assert row[header.index("sampler")] == "skipped"
        assert float(row[header.index("sliced_wasserstein")]) == 0.125

    def test_rejects_non_finite_ok_report(self):
        with pytest.raises(ValueError):
            MetricReport(
                sampler="ddim", steps=10, seed=0, values={"mmd": float("nan")}
            )

    def test_failed_status_allows_nan(self):
        r = MetricReport(
            sampler="ddim", steps=10, seed=0, values={"mmd": float("nan")}, status="failed"
        )
        assert r.status == "failed"
