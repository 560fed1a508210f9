"""Distributional distances between sample batches, and the report record
one benchmark run produces.

Quality is measured with sliced Wasserstein distance, energy distance, and
kernel MMD on empirical batches, plus the exact 2-Wasserstein distance
between diagonal Gaussians when a closed-form output distribution is
available. The pairwise-heavy pieces run through the kernels in _accel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._accel import mean_cross_distance, mean_self_distance, rbf_cross_mean, rbf_self_mean
from .rng import PROJECTION_STREAM, RandomSource
from .samplers import GaussianState

REPORT_FIXED_COLUMNS = ("sampler", "steps", "cutoff", "seed", "status")


@dataclass(frozen=True)
class MetricReport:
    """Metrics of one (sampler, step budget, seed) run."""

    sampler: str
    steps: int
    seed: int
    values: dict[str, float]
    cutoff: int | None = None
    wall_clock_s: float = 0.0
    status: str = "ok"

    def __post_init__(self):
        if self.status == "ok":
            for name, v in self.values.items():
                if not (math.isfinite(v) and v >= 0.0):
                    raise ValueError(f"metric {name!r} is not finite and >= 0: {v!r}")


def report_header(metric_names) -> list[str]:
    """CSV columns: the fixed run identity, one column per metric, wall clock."""
    return [*REPORT_FIXED_COLUMNS, *metric_names, "wall_clock_s"]


def report_row(r: MetricReport, metric_names) -> list[str]:
    cells = [
        r.sampler,
        str(r.steps),
        "" if r.cutoff is None else str(r.cutoff),
        str(r.seed),
        r.status,
    ]
    cells += [repr(r.values.get(name, float("nan"))) for name in metric_names]
    cells.append(f"{r.wall_clock_s:.6f}")
    return cells


def _check_batch(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty (n, dim) batch")
    return np.ascontiguousarray(x)


def gaussian_w2(m1: GaussianState, m2: GaussianState) -> float:
    """Exact 2-Wasserstein distance between diagonal Gaussians."""
    if m1.dim != m2.dim:
        raise ValueError(f"dimension mismatch: {m1.dim} vs {m2.dim}")
    mean_gap = float(np.sum((m1.mean - m2.mean) ** 2))
    std_gap = float(np.sum((np.sqrt(m1.cov_diag) - np.sqrt(m2.cov_diag)) ** 2))
    return math.sqrt(mean_gap + std_gap)


def sliced_wasserstein(A, B, n_proj: int = 128, rng: RandomSource | None = None) -> float:
    """Mean 1-D Wasserstein-1 distance over random unit projections.

    Projections come from the source's dedicated metric stream, so the
    value is deterministic in the seed and the caller's source is left
    untouched. Unequal batch sizes are handled by subsampling the larger
    batch (without replacement, from the same stream).
    """
    A = _check_batch(A, "A")
    B = _check_batch(B, "B")
    if A.shape[1] != B.shape[1]:
        raise ValueError("batches must share a dimension")
    if n_proj < 1:
        raise ValueError("n_proj must be >= 1")
    if rng is None:
        rng = RandomSource(0)
    gen = rng.stream(PROJECTION_STREAM)
    dirs = gen.standard_normal((n_proj, A.shape[1]))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    n = min(A.shape[0], B.shape[0])
    if A.shape[0] > n:
        A = A[gen.permutation(A.shape[0])[:n]]
    if B.shape[0] > n:
        B = B[gen.permutation(B.shape[0])[:n]]
    proj_a = np.sort(A @ dirs.T, axis=0)
    proj_b = np.sort(B @ dirs.T, axis=0)
    return float(np.mean(np.abs(proj_a - proj_b)))


def energy_distance(A, B) -> float:
    """2 E||a-b|| - E||a-a'|| - E||b-b'|| with U-statistic within-batch means."""
    A = _check_batch(A, "A")
    B = _check_batch(B, "B")
    if A.shape[1] != B.shape[1]:
        raise ValueError("batches must share a dimension")
    value = (
        2.0 * mean_cross_distance(A, B)
        - mean_self_distance(A)
        - mean_self_distance(B)
    )
    # tiny negative rounding residue is numerically possible on A == B
    return max(value, 0.0)


def mmd(A, B, gamma: float | None = None) -> float:
    """Gaussian-kernel maximum mean discrepancy (U-statistic, square-rooted).

    gamma defaults to the median heuristic 1/(2 med^2), with the median of
    pairwise distances estimated on an evenly strided pooled subsample.
    """
    A = _check_batch(A, "A")
    B = _check_batch(B, "B")
    if A.shape[1] != B.shape[1]:
        raise ValueError("batches must share a dimension")
    if gamma is None:
        gamma = _median_gamma(A, B)
    value = (
        rbf_self_mean(A, gamma) + rbf_self_mean(B, gamma) - 2.0 * rbf_cross_mean(A, B, gamma)
    )
    return math.sqrt(max(value, 0.0))


def _median_gamma(A, B, cap: int = 1024) -> float:
    parts = []
    for x in (A, B):
        stride = max(1, x.shape[0] // cap)
        parts.append(x[::stride][:cap])
    pooled = np.concatenate(parts, axis=0)
    d2 = ((pooled[:, None, :] - pooled[None, :, :]) ** 2).sum(axis=2)
    med = float(np.median(d2[np.triu_indices(pooled.shape[0], k=1)]))
    if med <= 0.0:
        return 1.0
    return 1.0 / (2.0 * med)


def batch_moments(A) -> GaussianState:
    """Sample mean and unbiased per-dimension variance of a batch."""
    A = _check_batch(A, "A")
    if A.shape[0] < 2:
        raise ValueError("batch_moments needs at least 2 samples")
    return GaussianState(mean=A.mean(axis=0), cov_diag=A.var(axis=0, ddof=1))
