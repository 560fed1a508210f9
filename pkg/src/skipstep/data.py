"""Deterministic toy datasets used as clean-data distributions.

Every kind is generated from its spec's seed alone and is documented by
its exact generative formula below; all kinds are scaled to roughly unit
range so one noise schedule works across them.

gaussian          x = mean + sqrt(var) * z,  z ~ N(0, I)
gaussian_mixture  component k ~ Categorical(weights);
                  x = means[k] + sqrt(variances[k]) * z
two_moons         theta ~ U(0, pi); upper moon (cos t, sin t), lower moon
                  (1 - cos t, 0.5 - sin t), each + noise_std * z, then the
                  fixed affine map (x - (0.5, 0.25)) / 1.5
swiss_roll_2d     theta = 1.5 pi (1 + 2u), u ~ U(0, 1);
                  x = (theta cos theta, theta sin theta) / (4.5 pi)
                  + noise_std * z
checkerboard      one of the 8 cells {(i, j) in [0,4)^2 : i + j even} is
                  chosen uniformly; x uniform inside the cell on the
                  [-1, 1]^2 board
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .rng import RandomSource

DATASET_KINDS = ("gaussian", "gaussian_mixture", "two_moons", "swiss_roll_2d", "checkerboard")

_MOONS_CENTER = np.array([0.5, 0.25])
_MOONS_SCALE = 1.5


@dataclass(frozen=True)
class DatasetSpec:
    """Declarative description of one toy dataset draw."""

    kind: str
    n: int
    seed: int = 0
    mean: tuple = (0.0,)
    var: tuple = (1.0,)
    means: tuple = ((-1.0,), (1.0,))
    variances: tuple = ((0.1,), (0.1,))
    weights: tuple = (0.5, 0.5)
    noise_std: float = 0.05

    def __post_init__(self):
        if self.kind not in DATASET_KINDS:
            raise ConfigurationError(f"unknown dataset kind {self.kind!r}")
        if self.n < 1:
            raise ConfigurationError("n must be >= 1")
        if self.kind == "gaussian":
            if len(self.mean) != len(self.var):
                raise ConfigurationError("mean and var must have equal length")
            if any(v <= 0 for v in self.var):
                raise ConfigurationError("var must be positive")
        if self.kind == "gaussian_mixture":
            if not (len(self.means) == len(self.variances) == len(self.weights)):
                raise ConfigurationError("means, variances, weights must align")
            if abs(sum(self.weights) - 1.0) > 1e-12:
                raise ConfigurationError("mixture weights must sum to 1")
            if any(w < 0 for w in self.weights):
                raise ConfigurationError("mixture weights must be non-negative")
            if any(v <= 0 for comp in self.variances for v in comp):
                raise ConfigurationError("component variances must be positive")
        if self.kind in ("two_moons", "swiss_roll_2d") and self.noise_std < 0:
            raise ConfigurationError("noise_std must be >= 0")

    @property
    def dim(self) -> int:
        if self.kind == "gaussian":
            return len(self.mean)
        if self.kind == "gaussian_mixture":
            return len(self.means[0])
        return 2


def generate(spec: DatasetSpec) -> np.ndarray:
    """Draw spec.n samples; identical spec (including seed) gives identical output."""
    gen = RandomSource(spec.seed).stream(0)
    n = spec.n
    if spec.kind == "gaussian":
        mean = np.asarray(spec.mean, dtype=np.float64)
        std = np.sqrt(np.asarray(spec.var, dtype=np.float64))
        return mean + std * gen.standard_normal((n, mean.size))
    if spec.kind == "gaussian_mixture":
        means = np.asarray(spec.means, dtype=np.float64)
        stds = np.sqrt(np.asarray(spec.variances, dtype=np.float64))
        comp = gen.choice(len(spec.weights), size=n, p=np.asarray(spec.weights))
        return means[comp] + stds[comp] * gen.standard_normal((n, means.shape[1]))
    if spec.kind == "two_moons":
        theta = gen.uniform(0.0, math.pi, size=n)
        lower = gen.integers(0, 2, size=n).astype(bool)
        x = np.where(lower, 1.0 - np.cos(theta), np.cos(theta))
        y = np.where(lower, 0.5 - np.sin(theta), np.sin(theta))
        pts = np.stack([x, y], axis=1) + spec.noise_std * gen.standard_normal((n, 2))
        return (pts - _MOONS_CENTER) / _MOONS_SCALE
    if spec.kind == "swiss_roll_2d":
        theta = 1.5 * math.pi * (1.0 + 2.0 * gen.uniform(0.0, 1.0, size=n))
        pts = np.stack([theta * np.cos(theta), theta * np.sin(theta)], axis=1)
        return pts / (4.5 * math.pi) + spec.noise_std * gen.standard_normal((n, 2))
    # checkerboard
    cells = [(i, j) for i in range(4) for j in range(4) if (i + j) % 2 == 0]
    idx = gen.integers(0, len(cells), size=n)
    corners = np.asarray(cells, dtype=np.float64)[idx]
    return -1.0 + 0.5 * (corners + gen.uniform(0.0, 1.0, size=(n, 2)))
