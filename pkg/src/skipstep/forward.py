"""Forward (noising) process: single-shot, multi-step, and posterior sampling.

All operations are vectorized over a (batch, dim) layout and consume the
sequential stream of the supplied RandomSource, so a fixed seed and call
order reproduce every draw bit-identically.
"""

from __future__ import annotations

import math

import numpy as np

from .rng import RandomSource
from .schedule import NoiseSchedule, skip_coefficients


def _as_batch(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ValueError(f"expected a (batch, dim) array, got shape {x.shape}")
    return x


def diffuse_from_x0(
    x0, t: int, s: NoiseSchedule, rng: RandomSource
) -> tuple[np.ndarray, np.ndarray]:
    """Jump clean data straight to timestep t.

    Returns (x_t, eps) with x_t = sqrt(ab_t) x0 + sqrt(1 - ab_t) eps; the
    drawn eps is returned so a training loss can target it.
    """
    t = s._check_t(t)
    x0 = _as_batch(x0)
    a_t = float(s.alpha_bar[t])
    eps = rng.normal(x0.shape)
    x_t = math.sqrt(a_t) * x0 + math.sqrt(1.0 - a_t) * eps
    return x_t, eps


def diffuse_skip(
    x_prev, t: int, m: int, s: NoiseSchedule, rng: RandomSource
) -> np.ndarray:
    """Noise a state at timestep t - m up to timestep t in one jump."""
    x_prev = _as_batch(x_prev)
    c = skip_coefficients(s, t, m)
    eps = rng.normal(x_prev.shape)
    return c.fwd_mean_scale * x_prev + math.sqrt(c.fwd_var) * eps


def posterior_sample(
    x_t, x0, t: int, m: int, s: NoiseSchedule, rng: RandomSource
) -> np.ndarray:
    """Draw x_{t-m} from its Gaussian posterior given x_t and clean data."""
    x_t = _as_batch(x_t)
    x0 = _as_batch(x0)
    if x_t.shape != x0.shape:
        raise ValueError(f"shape mismatch: x_t {x_t.shape} vs x0 {x0.shape}")
    c = skip_coefficients(s, t, m)
    mean = c.post_coef_xt * x_t + c.post_coef_x0 * x0
    if c.post_var == 0.0:
        return mean
    eps = rng.normal(x_t.shape)
    return mean + math.sqrt(c.post_var) * eps
