"""Skipped-step diffusion sampling on toy data, verified against analytic
Gaussian oracles, with full-chain, deterministic, mixed, and naive-subset
baselines plus a benchmark CLI."""

from .data import DatasetSpec, generate
from .denoiser import (
    Denoiser,
    GaussianOracle,
    MlpDenoiser,
    TrainConfig,
    loss_weight,
    oracle_eps,
    train,
)
from .errors import ConfigurationError, TrainingDivergedError, UnsupportedDenoiserError
from .forward import diffuse_from_x0, diffuse_skip, posterior_sample
from .io import read_batch_csv, write_batch_csv
from .metrics import (
    MetricReport,
    batch_moments,
    energy_distance,
    gaussian_w2,
    mmd,
    sliced_wasserstein,
)
from .rng import RandomSource
from .samplers import (
    GaussianState,
    SamplerConfig,
    StepPlan,
    ddim_sample,
    ddpm_sample,
    make_plan,
    mixed_sample,
    naive_subset_sample,
    propagate_affine,
    propagate_affine_step,
    sample,
    skipped_sample,
)
from .schedule import (
    NoiseSchedule,
    SkipCoefficients,
    make_cosine_schedule,
    make_linear_schedule,
    predict_x0,
    skip_coefficients,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DatasetSpec",
    "Denoiser",
    "GaussianOracle",
    "GaussianState",
    "MetricReport",
    "MlpDenoiser",
    "NoiseSchedule",
    "RandomSource",
    "SamplerConfig",
    "SkipCoefficients",
    "StepPlan",
    "TrainConfig",
    "TrainingDivergedError",
    "UnsupportedDenoiserError",
    "batch_moments",
    "ddim_sample",
    "ddpm_sample",
    "diffuse_from_x0",
    "diffuse_skip",
    "energy_distance",
    "gaussian_w2",
    "generate",
    "loss_weight",
    "make_cosine_schedule",
    "make_linear_schedule",
    "make_plan",
    "mixed_sample",
    "mmd",
    "naive_subset_sample",
    "oracle_eps",
    "posterior_sample",
    "predict_x0",
    "read_batch_csv",
    "propagate_affine",
    "propagate_affine_step",
    "sample",
    "sliced_wasserstein",
    "skip_coefficients",
    "skipped_sample",
    "train",
    "write_batch_csv",
]
