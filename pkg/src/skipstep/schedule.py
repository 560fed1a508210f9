"""Noise schedules and the closed-form coefficients of multi-step jumps.

Conventions: timesteps are 1-indexed, ``t in [1, T]``, with state index 0
meaning clean data. ``alpha_bar`` has length T+1 with ``alpha_bar[0] = 1``
exactly, so a jump all the way to 0 is well-defined and reduces to the
single-shot noising marginal. All scalars are float64; the coefficient
formulas are evaluated in their algebraically simplified forms, which stay
well-conditioned for the step counts used here (T up to a few thousand).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

_PRODUCT_RTOL = 1e-12


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step retention factors alpha_t and their running product.

    alpha has shape (T,) holding alpha_1..alpha_T; alpha_bar has shape
    (T+1,) holding alpha_bar_0..alpha_bar_T with alpha_bar_0 = 1. Instances
    are immutable (arrays are marked read-only) and safe to share across
    concurrent samplers.
    """

    alpha: np.ndarray
    alpha_bar: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=np.float64)
        alpha_bar = np.asarray(self.alpha_bar, dtype=np.float64)
        if alpha.ndim != 1 or alpha.size < 1:
            raise ConfigurationError("alpha must be a non-empty 1-D array")
        if alpha_bar.shape != (alpha.size + 1,):
            raise ConfigurationError("alpha_bar must have length T + 1")
        if not np.all((alpha > 0.0) & (alpha < 1.0)):
            raise ConfigurationError("every alpha_t must lie in (0, 1)")
        if alpha_bar[0] != 1.0:
            raise ConfigurationError("alpha_bar[0] must be exactly 1")
        prod = alpha_bar[:-1] * alpha
        if not np.allclose(alpha_bar[1:], prod, rtol=_PRODUCT_RTOL, atol=0.0):
            raise ConfigurationError("alpha_bar is not the running product of alpha")
        if not np.all(np.diff(alpha_bar) < 0.0):
            raise ConfigurationError("alpha_bar must be strictly decreasing")
        alpha.setflags(write=False)
        alpha_bar.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "alpha_bar", alpha_bar)

    @property
    def T(self) -> int:
        return self.alpha.size

    def _check_t(self, t: int) -> int:
        t = int(t)
        if not 1 <= t <= self.T:
            raise IndexError(f"timestep {t} outside [1, {self.T}]")
        return t


@dataclass(frozen=True)
class SkipCoefficients:
    """Scalar coefficients for one jump from timestep t down to t_prev.

    ``fwd_*`` describe the forward noising kernel over the jump,
    ``post_*`` the Gaussian posterior of the lower state given the upper
    state and clean data, and ``rev_*`` the same posterior mean rewritten
    against the predicted noise instead of clean data.
    """

    t: int
    t_prev: int
    fwd_mean_scale: float
    fwd_var: float
    post_coef_xt: float
    post_coef_x0: float
    post_var: float
    rev_coef_xt: float
    rev_coef_eps: float


def make_linear_schedule(
    T: int, beta_start: float = 1e-4, beta_end: float = 0.02
) -> NoiseSchedule:
    """Schedule with beta_t linearly spaced on [beta_start, beta_end]."""
    if T < 1:
        raise ConfigurationError("T must be >= 1")
    if not (0.0 < beta_start < 1.0 and 0.0 < beta_end < 1.0):
        raise ConfigurationError("beta_start and beta_end must lie in (0, 1)")
    if beta_start > beta_end:
        raise ConfigurationError("beta_start must not exceed beta_end")
    beta = np.linspace(beta_start, beta_end, T)
    alpha = 1.0 - beta
    alpha_bar = np.concatenate(([1.0], np.cumprod(alpha)))
    return NoiseSchedule(alpha=alpha, alpha_bar=alpha_bar)


def make_cosine_schedule(T: int, offset: float = 0.008) -> NoiseSchedule:
    """Squared-cosine falloff of alpha_bar, with per-step alpha floored at 0.001.

    alpha_bar_t = f(t)/f(0) with f(t) = cos^2(((t/T + offset)/(1 + offset)) * pi/2);
    alpha_t is recovered from consecutive ratios, floored, and alpha_bar is
    rebuilt from the floored alphas so the running-product invariant holds.
    """
    if T < 1:
        raise ConfigurationError("T must be >= 1")
    if offset < 0.0:
        raise ConfigurationError("offset must be >= 0")
    steps = np.arange(T + 1, dtype=np.float64)
    f = np.cos(((steps / T + offset) / (1.0 + offset)) * (np.pi / 2.0)) ** 2
    raw_bar = f / f[0]
    alpha = np.clip(raw_bar[1:] / raw_bar[:-1], 0.001, None)
    # the ratio can only be pushed up by the floor, never to 1 or above
    alpha_bar = np.concatenate(([1.0], np.cumprod(alpha)))
    return NoiseSchedule(alpha=alpha, alpha_bar=alpha_bar)


def skip_coefficients(s: NoiseSchedule, t: int, m: int) -> SkipCoefficients:
    """Coefficients of the m-step jump from t to t - m.

    At m = 1 these reduce to the classic single-step posterior; at m = t
    (jump to clean data, alpha_bar_0 = 1) the forward pair reduces to the
    total noising marginal and the posterior variance vanishes.
    """
    t = s._check_t(t)
    m = int(m)
    if not 1 <= m <= t:
        raise IndexError(f"step width {m} outside [1, {t}] for t={t}")
    t_prev = t - m
    a_t = float(s.alpha_bar[t])
    a_p = float(s.alpha_bar[t_prev])
    ratio = a_t / a_p
    diff = a_p - a_t
    if diff < 0.0:
        # rounding residue on degenerate adjacent steps; treat as deterministic
        diff = 0.0
    one_minus_at = 1.0 - a_t
    post_var = diff * (1.0 - a_p) / (a_p * one_minus_at)
    if post_var < 0.0:
        post_var = 0.0
    return SkipCoefficients(
        t=t,
        t_prev=t_prev,
        fwd_mean_scale=math.sqrt(ratio),
        fwd_var=1.0 - ratio,
        post_coef_xt=math.sqrt(a_t) * (1.0 - a_p) / (math.sqrt(a_p) * one_minus_at),
        post_coef_x0=diff / (math.sqrt(a_p) * one_minus_at),
        post_var=post_var,
        rev_coef_xt=a_p / math.sqrt(a_t * a_p),
        rev_coef_eps=diff / math.sqrt(a_t * a_p * one_minus_at),
    )


def predict_x0(x_t, eps, s: NoiseSchedule, t: int):
    """Invert the noising marginal: x0 = x_t/sqrt(ab_t) - sqrt(1-ab_t)/sqrt(ab_t) * eps."""
    t = s._check_t(t)
    x_t = np.asarray(x_t, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if x_t.shape != eps.shape:
        raise ValueError(f"shape mismatch: x_t {x_t.shape} vs eps {eps.shape}")
    a_t = float(s.alpha_bar[t])
    root = math.sqrt(a_t)
    return x_t / root - (math.sqrt(1.0 - a_t) / root) * eps
