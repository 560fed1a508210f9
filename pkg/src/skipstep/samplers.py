"""Reverse samplers: full-chain, skipped-step, deterministic, mixed, and the
naive subset baseline, plus exact Gaussian propagation for affine denoisers.

Step plans are strictly decreasing timestep sequences T = t0 > .. > tK = 0;
consecutive entries (t, t') form the jump pairs a sampler visits. Updates:

* single step (full-chain rule at time t):
    x' = (x - (1-a_t)/sqrt(1-ab_t) eps_hat) / sqrt(a_t) + sigma_t xi
* skipped step (posterior-matched jump t -> t'):
    x' = rev_xt x - rev_eps eps_hat + sqrt(post_var) xi
* deterministic step (t -> t'):
    x' = sqrt(ab_t') x0_hat + sqrt(1 - ab_t') eps_hat

The naive subset baseline applies the single-step rule on a subsampled
plan regardless of the gap width; it is the common shortcut the skipped
update replaces, kept here so the gap in output quality is measurable.

Shared-seed protocol: the noise that creates the state at timestep t' is
drawn from the Philox stream keyed (seed, t'), and the initial x_T from
stream (seed, T). Samplers never consume the source's sequential stream,
so they are pure given (denoiser, schedule, plan, rng), and two samplers
that visit the same pairs with the same seed see bit-identical noise even
if other draws happen in between. The jump landing on 0 adds no noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._accel import affine_step, affine_step_noise
from .errors import ConfigurationError, UnsupportedDenoiserError
from .rng import RandomSource
from .schedule import NoiseSchedule, SkipCoefficients, predict_x0, skip_coefficients

SAMPLER_KINDS = ("ddpm", "skipped", "ddim", "mixed", "naive_subset")
PLAN_SCHEMES = ("uniform", "quadratic", "explicit")


@dataclass(frozen=True)
class StepPlan:
    """Strictly decreasing timestep sequence ending at 0."""

    timesteps: tuple[int, ...]
    scheme: str = "explicit"

    def __post_init__(self):
        ts = tuple(int(t) for t in self.timesteps)
        if len(ts) < 2:
            raise ConfigurationError("a step plan needs at least two timesteps")
        if ts[-1] != 0:
            raise ConfigurationError("a step plan must end at 0")
        if any(b >= a for a, b in zip(ts, ts[1:])):
            raise ConfigurationError("plan timesteps must be strictly decreasing")
        if self.scheme not in PLAN_SCHEMES:
            raise ConfigurationError(f"unknown plan scheme {self.scheme!r}")
        object.__setattr__(self, "timesteps", ts)

    @property
    def K(self) -> int:
        return len(self.timesteps) - 1

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.timesteps, self.timesteps[1:]))


def make_plan(
    T: int, K: int | None = None, scheme: str = "uniform", timesteps=None
) -> StepPlan:
    """Build a plan of (up to) K jumps down from T.

    uniform places stops at round(T (1 - i/K)), quadratic at
    round(T (1 - i/K)^2); duplicates after rounding are dropped, so the
    realized K can be smaller than requested. explicit validates a
    caller-provided sequence instead.
    """
    if scheme == "explicit":
        if timesteps is None:
            raise ConfigurationError("explicit plans require a timesteps sequence")
        plan = StepPlan(tuple(int(t) for t in timesteps), scheme="explicit")
        if plan.timesteps[0] != T:
            raise ConfigurationError(f"explicit plan must start at T={T}")
        return plan
    if scheme not in PLAN_SCHEMES:
        raise ConfigurationError(f"unknown plan scheme {scheme!r}")
    if K is None or not 1 <= K <= T:
        raise ConfigurationError(f"K must satisfy 1 <= K <= {T}, got {K}")
    power = 1 if scheme == "uniform" else 2
    raw = [math.floor(T * (1.0 - i / K) ** power + 0.5) for i in range(K + 1)]
    ts = [raw[0]]
    for v in raw[1:]:
        if v < ts[-1]:
            ts.append(v)
    if ts[-1] != 0:
        ts.append(0)
    return StepPlan(tuple(ts), scheme=scheme)


@dataclass(frozen=True)
class SamplerConfig:
    """A sampler kind bound to a plan (and cutoff index, for the mixed kind)."""

    kind: str
    plan: StepPlan
    cutoff_index: int | None = None
    variance_mode: str | None = None

    def __post_init__(self):
        if self.kind not in SAMPLER_KINDS:
            raise ConfigurationError(f"unknown sampler kind {self.kind!r}")
        if self.kind == "mixed":
            if self.cutoff_index is None or not 0 <= self.cutoff_index <= self.plan.K:
                raise ConfigurationError(
                    f"mixed sampler needs cutoff_index in [0, {self.plan.K}], "
                    f"got {self.cutoff_index}"
                )
        mode = self.variance_mode
        if mode is None:
            mode = "zero" if self.kind == "ddim" else "posterior"
        if mode not in ("posterior", "zero"):
            raise ConfigurationError(f"unknown variance mode {mode!r}")
        if (mode == "zero") != (self.kind == "ddim"):
            raise ConfigurationError(
                "variance mode 'zero' applies exactly to the ddim kind"
            )
        object.__setattr__(self, "variance_mode", mode)

    @property
    def cutoff_time(self) -> int | None:
        """Plan timestep reached after cutoff_index skipped jumps."""
        if self.cutoff_index is None:
            return None
        return self.plan.timesteps[self.cutoff_index]


@dataclass(frozen=True)
class GaussianState:
    """Diagonal Gaussian tracked through affine sampler updates."""

    mean: np.ndarray
    cov_diag: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        cov = np.atleast_1d(np.asarray(self.cov_diag, dtype=np.float64))
        if mean.shape != cov.shape or mean.ndim != 1:
            raise ConfigurationError("mean and cov_diag must be 1-D of equal length")
        if np.any(cov < 0.0):
            raise ConfigurationError("cov_diag must be non-negative")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov_diag", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


# ---------------------------------------------------------------------------
# per-pair update rules (shared by samplers and exact propagation)
# ---------------------------------------------------------------------------


def _check_setup(d, s: NoiseSchedule, dim: int, n: int) -> None:
    if dim < 1 or n < 1:
        raise ConfigurationError("dim and n must be positive")
    d_steps = getattr(d, "total_steps", None)
    if d_steps is not None and d_steps != s.T:
        raise ConfigurationError(
            f"denoiser trained for T={d_steps} but schedule has T={s.T}"
        )


def _check_plan(plan: StepPlan, s: NoiseSchedule) -> None:
    if plan.timesteps[0] != s.T:
        raise ConfigurationError(
            f"plan starts at {plan.timesteps[0]} but schedule has T={s.T}"
        )


def _init_state(s: NoiseSchedule, dim: int, n: int, rng: RandomSource) -> np.ndarray:
    return rng.stream(s.T).standard_normal((n, dim))


def _step_noise(rng: RandomSource, t_prev: int, n: int, dim: int):
    if t_prev <= 0:
        return None
    return rng.stream(t_prev).standard_normal((n, dim))


def _single_coeffs(s: NoiseSchedule, t: int) -> tuple[float, float, float]:
    """(c_x, c_eps, sigma) of the full-chain single-step rule at time t."""
    a = float(s.alpha[t - 1])
    ab = float(s.alpha_bar[t])
    c_x = 1.0 / math.sqrt(a)
    c_eps = (1.0 - a) / math.sqrt(a * (1.0 - ab))
    sigma = math.sqrt(skip_coefficients(s, t, 1).post_var)
    return c_x, c_eps, sigma


def _single_step(x, eps_hat, s: NoiseSchedule, t: int, noise):
    c_x, c_eps, sigma = _single_coeffs(s, t)
    if noise is None:
        return affine_step(x, eps_hat, c_x, c_eps)
    return affine_step_noise(x, eps_hat, noise, c_x, c_eps, sigma)


def _skip_step(x, eps_hat, c: SkipCoefficients, noise):
    if noise is None:
        return affine_step(x, eps_hat, c.rev_coef_xt, c.rev_coef_eps)
    return affine_step_noise(
        x, eps_hat, noise, c.rev_coef_xt, c.rev_coef_eps, math.sqrt(c.post_var)
    )


def _ddim_step(x, eps_hat, s: NoiseSchedule, t: int, t_prev: int):
    x0_hat = predict_x0(x, eps_hat, s, t)
    a_p = float(s.alpha_bar[t_prev])
    return math.sqrt(a_p) * x0_hat + math.sqrt(1.0 - a_p) * eps_hat


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------


def ddpm_sample(d, s: NoiseSchedule, dim: int, n: int, rng: RandomSource) -> np.ndarray:
    """Full-chain ancestral sampling, one step per schedule timestep."""
    _check_setup(d, s, dim, n)
    x = _init_state(s, dim, n, rng)
    for t in range(s.T, 0, -1):
        eps_hat = d.predict_eps(x, t)
        x = _single_step(x, eps_hat, s, t, _step_noise(rng, t - 1, n, dim))
    return x


def skipped_sample(
    d, s: NoiseSchedule, plan: StepPlan, dim: int, n: int, rng: RandomSource
) -> np.ndarray:
    """Posterior-matched jumps along the plan; reduces to ddpm on the full plan."""
    _check_setup(d, s, dim, n)
    _check_plan(plan, s)
    x = _init_state(s, dim, n, rng)
    for t, t_prev in plan.pairs():
        eps_hat = d.predict_eps(x, t)
        c = skip_coefficients(s, t, t - t_prev)
        x = _skip_step(x, eps_hat, c, _step_noise(rng, t_prev, n, dim))
    return x


def ddim_sample(
    d, s: NoiseSchedule, plan: StepPlan, dim: int, n: int, rng: RandomSource
) -> np.ndarray:
    """Deterministic (eta = 0) sampling along the plan; only x_T is random."""
    _check_setup(d, s, dim, n)
    _check_plan(plan, s)
    x = _init_state(s, dim, n, rng)
    for t, t_prev in plan.pairs():
        eps_hat = d.predict_eps(x, t)
        x = _ddim_step(x, eps_hat, s, t, t_prev)
    return x


def mixed_sample(
    d,
    s: NoiseSchedule,
    plan: StepPlan,
    k_c: int,
    dim: int,
    n: int,
    rng: RandomSource,
) -> np.ndarray:
    """Skipped jumps for the first k_c pairs, deterministic steps after.

    k_c = 0 degenerates to pure ddim sampling and k_c = K to pure skipped
    sampling, bit-for-bit, because the same per-pair updates and noise
    streams are used.
    """
    _check_setup(d, s, dim, n)
    _check_plan(plan, s)
    if not 0 <= k_c <= plan.K:
        raise ConfigurationError(f"cutoff index {k_c} outside [0, {plan.K}]")
    x = _init_state(s, dim, n, rng)
    for i, (t, t_prev) in enumerate(plan.pairs()):
        eps_hat = d.predict_eps(x, t)
        if i < k_c:
            c = skip_coefficients(s, t, t - t_prev)
            x = _skip_step(x, eps_hat, c, _step_noise(rng, t_prev, n, dim))
        else:
            x = _ddim_step(x, eps_hat, s, t, t_prev)
    return x


def naive_subset_sample(
    d, s: NoiseSchedule, plan: StepPlan, dim: int, n: int, rng: RandomSource
) -> np.ndarray:
    """Single-step rule applied on a subsampled plan, ignoring the gap width.

    Identical to ddpm_sample when the plan is full; on sparse plans its
    coefficients no longer match any forward posterior.
    """
    _check_setup(d, s, dim, n)
    _check_plan(plan, s)
    x = _init_state(s, dim, n, rng)
    for t, t_prev in plan.pairs():
        eps_hat = d.predict_eps(x, t)
        x = _single_step(x, eps_hat, s, t, _step_noise(rng, t_prev, n, dim))
    return x


def sample(d, s: NoiseSchedule, cfg: SamplerConfig, dim: int, n: int, rng: RandomSource):
    """Dispatch on cfg.kind. The ddpm kind requires the full plan."""
    if cfg.kind == "ddpm":
        if cfg.plan.K != s.T:
            raise ConfigurationError(
                "ddpm runs the full chain; use naive_subset for subsampled plans"
            )
        return ddpm_sample(d, s, dim, n, rng)
    if cfg.kind == "skipped":
        return skipped_sample(d, s, cfg.plan, dim, n, rng)
    if cfg.kind == "ddim":
        return ddim_sample(d, s, cfg.plan, dim, n, rng)
    if cfg.kind == "mixed":
        return mixed_sample(d, s, cfg.plan, cfg.cutoff_index, dim, n, rng)
    return naive_subset_sample(d, s, cfg.plan, dim, n, rng)


# ---------------------------------------------------------------------------
# exact marginal propagation for affine denoisers
# ---------------------------------------------------------------------------


def _pair_rule(kind: str, index: int, k_c: int | None) -> str:
    if kind == "mixed":
        return "skipped" if index < k_c else "ddim"
    if kind in ("ddpm", "naive_subset"):
        return "single"
    return kind


def propagate_affine_step(
    d,
    s: NoiseSchedule,
    t: int,
    t_prev: int,
    state: GaussianState,
    rule: str = "skipped",
    add_noise: bool = True,
) -> GaussianState:
    """Push a diagonal Gaussian through one pair update with an affine denoiser.

    With eps_hat = A x + b, every rule collapses to x' = C x + d + sigma xi,
    so mean' = C mean + d and var' = C^2 var + sigma^2 coordinatewise.
    """
    if not hasattr(d, "affine_coeffs"):
        raise UnsupportedDenoiserError(
            "exact propagation needs a denoiser exposing affine_coeffs(t)"
        )
    gain, offset = d.affine_coeffs(t)
    if rule == "skipped":
        c = skip_coefficients(s, t, t - t_prev)
        C = c.rev_coef_xt - c.rev_coef_eps * gain
        dvec = -c.rev_coef_eps * offset
        noise_var = c.post_var if add_noise else 0.0
    elif rule == "single":
        c_x, c_eps, sigma = _single_coeffs(s, t)
        C = c_x - c_eps * gain
        dvec = -c_eps * offset
        noise_var = sigma**2 if add_noise else 0.0
    elif rule == "ddim":
        a_t = float(s.alpha_bar[t])
        a_p = float(s.alpha_bar[t_prev])
        g = math.sqrt(1.0 - a_p) - math.sqrt(a_p * (1.0 - a_t) / a_t)
        C = math.sqrt(a_p / a_t) + g * gain
        dvec = g * offset
        noise_var = 0.0
    else:
        raise ConfigurationError(f"unknown pair rule {rule!r}")
    C = np.broadcast_to(np.asarray(C, dtype=np.float64), state.mean.shape)
    dvec = np.broadcast_to(np.asarray(dvec, dtype=np.float64), state.mean.shape)
    return GaussianState(
        mean=C * state.mean + dvec,
        cov_diag=C**2 * state.cov_diag + noise_var,
    )


def propagate_affine(d, s: NoiseSchedule, cfg: SamplerConfig) -> GaussianState:
    """Exact output Gaussian of the configured sampler under an affine denoiser.

    Starts from the x_T distribution N(0, I) and folds the per-pair affine
    collapse over the plan; the result's moments are what Monte-Carlo
    sampling converges to.
    """
    if not hasattr(d, "affine_coeffs"):
        raise UnsupportedDenoiserError(
            "exact propagation needs a denoiser exposing affine_coeffs(t)"
        )
    _check_plan(cfg.plan, s)
    if cfg.kind == "ddpm" and cfg.plan.K != s.T:
        raise ConfigurationError("ddpm propagation requires the full plan")
    dim = d.dim
    state = GaussianState(mean=np.zeros(dim), cov_diag=np.ones(dim))
    for i, (t, t_prev) in enumerate(cfg.plan.pairs()):
        rule = _pair_rule(cfg.kind, i, cfg.cutoff_index)
        state = propagate_affine_step(
            d, s, t, t_prev, state, rule, add_noise=t_prev > 0
        )
    return state
