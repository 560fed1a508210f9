"""YAML config loading, dotted-key overrides, and typed builders.

The file format is a plain YAML mapping (see configs/example.yaml for the
annotated reference). Builders raise ConfigurationError naming the exact
field that failed, which the CLI maps to exit code 2.
"""

from __future__ import annotations

from typing import Any

import yaml

from .data import DatasetSpec
from .denoiser import TrainConfig
from .errors import ConfigurationError
from .schedule import NoiseSchedule, make_cosine_schedule, make_linear_schedule


def load_config(path: str | None, overrides: list[str] | None = None) -> dict:
    """Parse the YAML file (empty dict when path is None) and apply overrides.

    Overrides are dotted key=value pairs ("bench.n=500"); values are parsed
    as YAML scalars so numbers, booleans, and lists work.
    """
    cfg: dict = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                loaded = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"cannot parse config file {path}: {exc}") from exc
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigurationError(f"config file {path} must contain a mapping")
        cfg = loaded
    for item in overrides or []:
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} is not of the form key=value")
        dotted, raw = item.split("=", 1)
        keys = [k for k in dotted.strip().split(".") if k]
        if not keys:
            raise ConfigurationError(f"override {item!r} has an empty key")
        node = cfg
        for k in keys[:-1]:
            nxt = node.get(k)
            if not isinstance(nxt, dict):
                nxt = {}
                node[k] = nxt
            node = nxt
        node[keys[-1]] = yaml.safe_load(raw)
    return cfg


def _section(cfg: dict, name: str, required: bool = True) -> dict:
    sec = cfg.get(name)
    if sec is None:
        if required:
            raise ConfigurationError(f"missing config section {name!r}")
        return {}
    if not isinstance(sec, dict):
        raise ConfigurationError(f"config section {name!r} must be a mapping")
    return sec


def _get(sec: dict, where: str, key: str, default=None, required: bool = False) -> Any:
    if key in sec:
        return sec[key]
    if required:
        raise ConfigurationError(f"missing config field {where}.{key}")
    return default


def build_schedule(cfg: dict) -> NoiseSchedule:
    sec = _section(cfg, "schedule")
    kind = _get(sec, "schedule", "kind", default="linear")
    T = int(_get(sec, "schedule", "T", default=1000))
    try:
        if kind == "linear":
            return make_linear_schedule(
                T,
                beta_start=float(_get(sec, "schedule", "beta_start", default=1e-4)),
                beta_end=float(_get(sec, "schedule", "beta_end", default=0.02)),
            )
        if kind == "cosine":
            return make_cosine_schedule(
                T, offset=float(_get(sec, "schedule", "offset", default=0.008))
            )
    except ConfigurationError as exc:
        raise ConfigurationError(f"schedule: {exc}") from exc
    raise ConfigurationError(f"schedule.kind must be linear or cosine, got {kind!r}")


def build_dataset_spec(cfg: dict) -> DatasetSpec:
    sec = _section(cfg, "dataset")
    kind = _get(sec, "dataset", "kind", required=True)
    kwargs: dict[str, Any] = {
        "kind": kind,
        "n": int(_get(sec, "dataset", "n", default=2000)),
        "seed": int(_get(sec, "dataset", "seed", default=0)),
    }
    for key in ("mean", "var", "weights"):
        if key in sec:
            kwargs[key] = tuple(sec[key])
    for key in ("means", "variances"):
        if key in sec:
            kwargs[key] = tuple(tuple(row) for row in sec[key])
    if "noise_std" in sec:
        kwargs["noise_std"] = float(sec["noise_std"])
    try:
        return DatasetSpec(**kwargs)
    except ConfigurationError as exc:
        raise ConfigurationError(f"dataset: {exc}") from exc


def build_train_config(cfg: dict) -> TrainConfig:
    sec = _section(cfg, "train")
    try:
        return TrainConfig(
            steps=int(_get(sec, "train", "steps", required=True)),
            batch_size=int(_get(sec, "train", "batch_size", default=128)),
            learning_rate=float(_get(sec, "train", "learning_rate", default=1e-2)),
            momentum=float(_get(sec, "train", "momentum", default=0.0)),
            loss_mode=_get(sec, "train", "loss_mode", default="simple"),
            sigma_mode=_get(sec, "train", "sigma_mode", default="posterior"),
            seed=int(_get(sec, "train", "seed", default=0)),
        )
    except ConfigurationError as exc:
        raise ConfigurationError(f"train: {exc}") from exc


def model_arch(cfg: dict) -> dict:
    """Architecture knobs of the MLP denoiser from the train section."""
    sec = _section(cfg, "train", required=False)
    return {
        "hidden": tuple(int(h) for h in _get(sec, "train", "hidden", default=(64, 64))),
        "time_embed_dim": int(_get(sec, "train", "time_embed_dim", default=32)),
    }
