"""Noise predictors: the abstract interface, an exact Gaussian oracle, and
a small trainable MLP with manual backprop.

The oracle exists so that sampler outputs can be computed in closed form;
for Gaussian clean data, (x0, eps, x_t) are jointly Gaussian, which makes
the optimal noise predictor affine in x_t. The MLP is the toy stand-in for
a real denoising network: SiLU activations, sinusoidal conditioning on
t/T, trained with plain (optionally momentum) gradient descent.
"""

from __future__ import annotations

import abc
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, TrainingDivergedError
from .forward import diffuse_from_x0
from .rng import MODEL_INIT_STREAM, RandomSource
from .schedule import NoiseSchedule, skip_coefficients

_CHECKPOINT_FORMAT = "skipstep-mlp-v1"
_LOSS_MODES = ("simple", "weighted")
_SIGMA_MODES = ("posterior",)


class Denoiser(abc.ABC):
    """Interface: predict the forward-process noise from a noisy batch."""

    @abc.abstractmethod
    def predict_eps(self, x: np.ndarray, t: int) -> np.ndarray:
        """Noise estimate for batch x at timestep t; output shape equals input."""


class GaussianOracle(Denoiser):
    """Exact conditional-mean noise predictor for Gaussian clean data.

    For x0 ~ N(mu0, diag(var0)) and x_t = sqrt(ab_t) x0 + sqrt(1-ab_t) eps,
    each coordinate of (eps, x_t) is bivariate Gaussian with
    Cov(eps, x_t) = sqrt(1-ab_t) and Var(x_t) = ab_t var0 + (1-ab_t), so

        E[eps | x_t = x] = sqrt(1-ab_t) (x - sqrt(ab_t) mu0)
                           / (ab_t var0 + 1 - ab_t).

    The map is affine in x for fixed t, which propagate_affine exploits.
    """

    def __init__(self, mu0, var0, schedule: NoiseSchedule):
        mu0 = np.atleast_1d(np.asarray(mu0, dtype=np.float64))
        var0 = np.atleast_1d(np.asarray(var0, dtype=np.float64))
        if mu0.shape != var0.shape or mu0.ndim != 1:
            raise ConfigurationError("mu0 and var0 must be 1-D arrays of equal length")
        if not np.all(var0 > 0.0):
            raise ConfigurationError("var0 must be positive elementwise")
        mu0.setflags(write=False)
        var0.setflags(write=False)
        self.mu0 = mu0
        self.var0 = var0
        self.schedule = schedule

    @property
    def dim(self) -> int:
        return self.mu0.size

    @property
    def total_steps(self) -> int:
        return self.schedule.T

    def affine_coeffs(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-dimension (A_t, b_t) with predict_eps(x, t) = A_t * x + b_t."""
        t = self.schedule._check_t(t)
        a_t = float(self.schedule.alpha_bar[t])
        gain = math.sqrt(1.0 - a_t) / (a_t * self.var0 + (1.0 - a_t))
        return gain, -gain * math.sqrt(a_t) * self.mu0

    def predict_eps(self, x: np.ndarray, t: int) -> np.ndarray:
        gain, offset = self.affine_coeffs(t)
        return gain * x + offset


def oracle_eps(o: GaussianOracle, x, t: int) -> np.ndarray:
    """E[eps | x_t = x] under the oracle's Gaussian data model."""
    return o.predict_eps(np.asarray(x, dtype=np.float64), t)


def time_features(t: int, total_steps: int, n_features: int) -> np.ndarray:
    """Sinusoidal features of the normalized timestep tau = t / total_steps.

    Uses n_features//2 geometric frequencies c_k = 1000 * 10000^(-k/(half-1))
    (a single frequency 1000 when half == 1) and returns
    [sin(tau c_0), .., cos(tau c_0), ..] as a float64 vector.
    """
    half = n_features // 2
    tau = t / total_steps
    if half < 1:
        return np.zeros(0)
    if half == 1:
        freqs = np.array([1000.0])
    else:
        freqs = 1000.0 * np.power(10000.0, -np.arange(half) / (half - 1))
    args = tau * freqs
    return np.concatenate([np.sin(args), np.cos(args)])


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class MlpDenoiser(Denoiser):
    """Fully-connected SiLU network mapping (x, time features) to a noise estimate.

    Layer widths run (dim + time_embed_dim, *hidden, dim). Weights start
    N(0, 1/fan_in), biases at zero, drawn from the model-init stream of the
    given seed so construction is reproducible. SiLU rather than tanh: the
    predictor must track the near-identity map eps ~= x at high noise, and
    saturating hidden units lose exactly that precision.
    """

    activation = "silu"

    def __init__(
        self,
        dim: int,
        total_steps: int,
        hidden=(64, 64),
        time_embed_dim: int = 32,
        seed: int = 0,
    ):
        if dim < 1 or total_steps < 1:
            raise ConfigurationError("dim and total_steps must be positive")
        if time_embed_dim < 0 or time_embed_dim % 2:
            raise ConfigurationError("time_embed_dim must be a non-negative even number")
        if any(int(h) < 1 for h in hidden):
            raise ConfigurationError("hidden widths must be positive")
        self.dim = int(dim)
        self.total_steps = int(total_steps)
        self.hidden = tuple(int(h) for h in hidden)
        self.time_embed_dim = int(time_embed_dim)
        self.seed = int(seed)
        gen = RandomSource(self.seed).stream(MODEL_INIT_STREAM)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        widths = self.widths
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            self.weights.append(gen.standard_normal((fan_in, fan_out)) / math.sqrt(fan_in))
            self.biases.append(np.zeros(fan_out))

    @property
    def widths(self) -> tuple[int, ...]:
        return (self.dim + self.time_embed_dim, *self.hidden, self.dim)

    @property
    def n_params(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def parameters(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    def _embed_input(self, x: np.ndarray, t: int) -> np.ndarray:
        if self.time_embed_dim == 0:
            return x
        emb = time_features(t, self.total_steps, self.time_embed_dim)
        return np.concatenate([x, np.broadcast_to(emb, (x.shape[0], emb.size))], axis=1)

    def _forward(self, x: np.ndarray, t: int):
        """Forward pass keeping pre-activations for backprop."""
        h = self._embed_input(x, t)
        inputs = [h]
        pre = []
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            z = h @ W + b
            pre.append(z)
            h = z * _sigmoid(z)
            inputs.append(h)
        out = h @ self.weights[-1] + self.biases[-1]
        return out, (inputs, pre)

    def predict_eps(self, x: np.ndarray, t: int) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        out, _ = self._forward(x, t)
        return out

    def _backward(self, cache, d_out):
        """Gradients of a scalar loss given d(loss)/d(output)."""
        inputs, pre = cache
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.biases)
        delta = d_out
        for layer in range(len(self.weights) - 1, -1, -1):
            grads_w[layer] = inputs[layer].T @ delta
            grads_b[layer] = delta.sum(axis=0)
            if layer > 0:
                back = delta @ self.weights[layer].T
                z = pre[layer - 1]
                sig = _sigmoid(z)
                delta = back * (sig * (1.0 + z * (1.0 - sig)))  # silu'
        return grads_w, grads_b

    def save(self, path) -> None:
        """Write the documented checkpoint container (JSON header + raw float64)."""
        arrays = []
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            arrays.append([f"W{i}", list(W.shape)])
            arrays.append([f"b{i}", list(b.shape)])
        header = {
            "format": _CHECKPOINT_FORMAT,
            "dim": self.dim,
            "total_steps": self.total_steps,
            "hidden": list(self.hidden),
            "time_embed_dim": self.time_embed_dim,
            "activation": self.activation,
            "seed": self.seed,
            "arrays": arrays,
        }
        blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode() + b"\n"
        with open(path, "wb") as fh:
            fh.write(blob)
            for W, b in zip(self.weights, self.biases):
                fh.write(np.ascontiguousarray(W, dtype="<f8").tobytes())
                fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> "MlpDenoiser":
        with open(path, "rb") as fh:
            header = json.loads(fh.readline().decode())
            if header.get("format") != _CHECKPOINT_FORMAT:
                raise ConfigurationError(f"unrecognized checkpoint format in {path}")
            model = cls(
                dim=header["dim"],
                total_steps=header["total_steps"],
                hidden=header["hidden"],
                time_embed_dim=header["time_embed_dim"],
                seed=header["seed"],
            )
            for name, shape in header["arrays"]:
                count = int(np.prod(shape))
                arr = np.frombuffer(fh.read(count * 8), dtype="<f8").reshape(shape)
                kind, idx = name[0], int(name[1:])
                target = model.weights if kind == "W" else model.biases
                target[idx] = arr.copy()
        return model


@dataclass(frozen=True)
class TrainConfig:
    """Knobs for the noise-matching training loop."""

    steps: int
    batch_size: int = 128
    learning_rate: float = 1e-2
    momentum: float = 0.0
    loss_mode: str = "simple"
    sigma_mode: str = "posterior"
    seed: int = 0

    def __post_init__(self):
        if self.steps < 0:
            raise ConfigurationError("steps must be >= 0")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be positive")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigurationError("momentum must lie in [0, 1)")
        if self.loss_mode not in _LOSS_MODES:
            raise ConfigurationError(
                f"loss_mode must be one of {_LOSS_MODES}, got {self.loss_mode!r}"
            )
        if self.sigma_mode not in _SIGMA_MODES:
            raise ConfigurationError(
                f"sigma_mode must be one of {_SIGMA_MODES}, got {self.sigma_mode!r}"
            )


def loss_weight(s: NoiseSchedule, t: int, m: int, sigma_mode: str = "posterior") -> float:
    """Per-draw weight of the weighted objective for a (t, m) pair.

    sigma^2 is the skip-posterior variance of the pair; when that variance
    is zero (jump lands on clean data, only possible at t = 1 here) it
    falls back to beta_t so the weight stays finite and positive.
    """
    if sigma_mode not in _SIGMA_MODES:
        raise ConfigurationError(f"sigma_mode must be one of {_SIGMA_MODES}")
    c = skip_coefficients(s, t, m)
    sigma2 = c.post_var if c.post_var > 0.0 else 1.0 - float(s.alpha[t - 1])
    a_t = float(s.alpha_bar[t])
    a_p = float(s.alpha_bar[t - m])
    return (a_p - a_t) ** 2 / (2.0 * sigma2 * a_t * a_p * (1.0 - a_t))


def train(
    model: MlpDenoiser,
    data: np.ndarray,
    cfg: TrainConfig,
    s: NoiseSchedule,
    rng: RandomSource,
) -> tuple[MlpDenoiser, list[float]]:
    """Noise-matching gradient descent; returns the model and the loss trace.

    Each iteration draws t uniformly on [1, T], a step width m on
    [1, max(1, t-1)], noises a random minibatch straight to t, and descends
    w * mean((eps - eps_hat)^2). The simple mode fixes w = 1 (the width m
    then has no effect on the update, which is the point: one model serves
    every skip width); the weighted mode uses loss_weight(t, m).
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] == 0:
        raise ConfigurationError("training data must be a non-empty (n, dim) array")
    if data.shape[1] != model.dim:
        raise ConfigurationError(
            f"data dim {data.shape[1]} does not match model dim {model.dim}"
        )
    if model.total_steps != s.T:
        raise ConfigurationError("model and schedule disagree on total steps")

    velocity = [np.zeros_like(p) for p in model.parameters()]
    trace: list[float] = []
    for step in range(cfg.steps):
        t = rng.uniform_int(1, s.T)
        m = rng.uniform_int(1, max(1, t - 1))
        batch = data[rng.index_batch(data.shape[0], cfg.batch_size)]
        x_t, eps = diffuse_from_x0(batch, t, s, rng)
        out, cache = model._forward(x_t, t)
        w = 1.0 if cfg.loss_mode == "simple" else loss_weight(s, t, m, cfg.sigma_mode)
        resid = out - eps
        loss = w * float(np.mean(resid**2))
        if not math.isfinite(loss):
            raise TrainingDivergedError(
                f"non-finite loss {loss!r} at step {step} (t={t}, m={m})"
            )
        trace.append(loss)
        d_out = (2.0 * w / resid.size) * resid
        grads_w, grads_b = model._backward(cache, d_out)
        params = model.parameters()
        grads = [*grads_w, *grads_b]
        for p, g, v in zip(params, grads, velocity):
            v *= cfg.momentum
            v += g
            p -= cfg.learning_rate * v
    return model, trace
