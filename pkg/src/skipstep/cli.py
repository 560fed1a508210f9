"""Command-line front end: train, sample, bench, ablate, verify.

Every subcommand reads one YAML config (plus --set overrides) and writes
all of its outputs under one directory, resolved in this order: the -o
flag, the config's output_dir, the SKIPSTEP_OUT environment variable, and
finally ./out. Exit codes: 0 success, 1 verification or training failure,
2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .bench import ExperimentConfig, run_cutoff_ablation, run_sweep, summarize
from .data import generate
from .denoiser import GaussianOracle, MlpDenoiser, train
from .errors import ConfigurationError, TrainingDivergedError
from .io import write_batch_csv
from .rng import RandomSource
from .samplers import (
    ddim_sample,
    ddpm_sample,
    make_plan,
    mixed_sample,
    naive_subset_sample,
    skipped_sample,
)
from .svgplot import scatter_svg
from .verify import FAULT_FIELDS, run_checks

CHECKPOINT_NAME = "model.ckpt"
TRACE_NAME = "loss_trace.csv"
SAMPLES_NAME = "samples.csv"


def _out_dir(args, cfg: dict) -> Path:
    path = args.output or cfg.get("output_dir") or os.environ.get("SKIPSTEP_OUT") or "out"
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _b(sec: dict, where: str, key: str, default=None, required: bool = False):
    return cfgmod._get(sec, where, key, default=default, required=required)


def _build_denoiser(cfg: dict, out: Path):
    """Denoiser named by the config's denoiser section (training inline if asked)."""
    sec = cfgmod._section(cfg, "denoiser")
    source = _b(sec, "denoiser", "source", default="oracle")
    schedule = cfgmod.build_schedule(cfg)
    if source == "oracle":
        spec = cfgmod.build_dataset_spec(cfg)
        if spec.kind != "gaussian":
            raise ConfigurationError(
                "denoiser.source oracle requires dataset.kind gaussian"
            )
        return (
            GaussianOracle(np.asarray(spec.mean), np.asarray(spec.var), schedule),
            schedule,
            spec.dim,
        )
    if source == "checkpoint":
        path = _b(sec, "denoiser", "path", required=True)
        try:
            model = MlpDenoiser.load(path)
        except FileNotFoundError as exc:
            raise OSError(f"checkpoint not found: {path}") from exc
        if model.total_steps != schedule.T:
            raise ConfigurationError(
                f"checkpoint was trained for T={model.total_steps}, schedule has T={schedule.T}"
            )
        return model, schedule, model.dim
    if source == "train":
        model, _, _ = _train_model(cfg, out, write_outputs=False)
        return model, schedule, model.dim
    raise ConfigurationError(f"denoiser.source must be oracle, checkpoint, or train, got {source!r}")


def _train_model(cfg: dict, out: Path, write_outputs: bool = True):
    schedule = cfgmod.build_schedule(cfg)
    spec = cfgmod.build_dataset_spec(cfg)
    tc = cfgmod.build_train_config(cfg)
    arch = cfgmod.model_arch(cfg)
    data = generate(spec)
    model = MlpDenoiser(
        dim=spec.dim,
        total_steps=schedule.T,
        hidden=arch["hidden"],
        time_embed_dim=arch["time_embed_dim"],
        seed=tc.seed,
    )
    model, trace = train(model, data, tc, schedule, RandomSource(tc.seed))
    if write_outputs:
        model.save(out / CHECKPOINT_NAME)
        with open(out / TRACE_NAME, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["step", "loss"])
            for i, loss in enumerate(trace):
                writer.writerow([i, repr(loss)])
    return model, trace, schedule


def cmd_train(args) -> int:
    cfg = cfgmod.load_config(args.config, args.set)
    out = _out_dir(args, cfg)
    model, trace, _ = _train_model(cfg, out)
    last = trace[-1] if trace else float("nan")
    print(f"trained {model.n_params} parameters for {len(trace)} steps (final loss {last:.6f})")
    print(f"checkpoint: {out / CHECKPOINT_NAME}")
    print(f"loss trace: {out / TRACE_NAME}")
    return 0


def cmd_sample(args) -> int:
    cfg = cfgmod.load_config(args.config, args.set)
    out = _out_dir(args, cfg)
    d, schedule, dim = _build_denoiser(cfg, out)
    sec = cfgmod._section(cfg, "sample")
    kind = _b(sec, "sample", "kind", default="skipped")
    n = int(_b(sec, "sample", "n", default=1000))
    seed = int(_b(sec, "sample", "seed", default=0))
    rng = RandomSource(seed)
    if kind == "ddpm":
        samples = ddpm_sample(d, schedule, dim, n, rng)
    else:
        steps = int(_b(sec, "sample", "steps", default=25))
        scheme = _b(sec, "sample", "scheme", default="uniform")
        plan = make_plan(schedule.T, steps, scheme)
        if kind == "skipped":
            samples = skipped_sample(d, schedule, plan, dim, n, rng)
        elif kind == "ddim":
            samples = ddim_sample(d, schedule, plan, dim, n, rng)
        elif kind == "naive_subset":
            samples = naive_subset_sample(d, schedule, plan, dim, n, rng)
        elif kind == "mixed":
            k_c = _b(sec, "sample", "cutoff_index", required=True)
            samples = mixed_sample(d, schedule, plan, int(k_c), dim, n, rng)
        else:
            raise ConfigurationError(f"sample.kind: unknown sampler kind {kind!r}")
    write_batch_csv(out / SAMPLES_NAME, samples)
    print(f"wrote {samples.shape[0]} samples of dim {samples.shape[1]} to {out / SAMPLES_NAME}")
    if bool(_b(sec, "sample", "svg", default=False)) and dim <= 2:
        pts = samples if dim == 2 else np.stack(
            [samples[:, 0], np.arange(n) / n], axis=1
        )
        scatter_svg(pts, out / "samples.svg", title=f"{kind} samples")
        print(f"scatter: {out / 'samples.svg'}")
    return 0


def _experiment_config(cfg: dict, out: Path) -> ExperimentConfig:
    sec = cfgmod._section(cfg, "bench")
    dsec = cfgmod._section(cfg, "denoiser", required=False)
    source = _b(dsec, "denoiser", "source", default="oracle")
    kwargs = {}
    if source == "checkpoint":
        kwargs["checkpoint_path"] = _b(dsec, "denoiser", "path", required=True)
    if source == "train":
        kwargs["train_config"] = cfgmod.build_train_config(cfg)
        arch = cfgmod.model_arch(cfg)
        kwargs["model_hidden"] = arch["hidden"]
        kwargs["model_time_embed_dim"] = arch["time_embed_dim"]
    if "cutoff_time" in sec:
        kwargs["cutoff_time"] = int(sec["cutoff_time"])
    if "cutoff_index" in sec:
        kwargs["cutoff_index"] = int(sec["cutoff_index"])
    return ExperimentConfig(
        dataset=cfgmod.build_dataset_spec(cfg),
        schedule=cfgmod.build_schedule(cfg),
        denoiser_source=source,
        samplers=tuple(_b(sec, "bench", "samplers", default=["ddpm", "ddim", "skipped", "mixed"])),
        budgets=tuple(int(b) for b in _b(sec, "bench", "budgets", default=[100, 50, 25])),
        seeds=tuple(int(s) for s in _b(sec, "bench", "seeds", default=[0, 1, 2])),
        n_samples=int(_b(sec, "bench", "n", default=2000)),
        metrics=tuple(_b(sec, "bench", "metrics", default=["sliced_wasserstein", "energy_distance"])),
        out_dir=str(out),
        **kwargs,
    )


def _row_printer(args):
    if not args.verbose:
        return None

    def show(report):
        cut = "" if report.cutoff is None else f" k_c={report.cutoff}"
        vals = " ".join(f"{k}={v:.6f}" for k, v in report.values.items())
        print(f"  {report.sampler} K={report.steps}{cut} seed={report.seed} "
              f"[{report.status}] {vals} ({report.wall_clock_s:.2f}s)")

    return show


def cmd_bench(args) -> int:
    cfg = cfgmod.load_config(args.config, args.set)
    out = _out_dir(args, cfg)
    exp = _experiment_config(cfg, out)
    reports = run_sweep(exp, on_report=_row_printer(args))
    metric = exp.metrics[0]
    table = summarize(reports, metric)
    print(f"{len(reports)} runs -> {out / 'sweep.csv'}")
    print(f"mean {metric} by (sampler, steps):")
    for (kind, steps), value in sorted(table.items()):
        print(f"  {kind:>12} K={steps:<5} {value:.6f}")
    return 0


def cmd_ablate(args) -> int:
    cfg = cfgmod.load_config(args.config, args.set)
    out = _out_dir(args, cfg)
    exp = _experiment_config(cfg, out)
    sec = cfgmod._section(cfg, "ablate")
    budget = int(_b(sec, "ablate", "budget", default=25))
    grid = _b(sec, "ablate", "cutoffs", required=True)
    reports = run_cutoff_ablation(exp, budget, grid, on_report=_row_printer(args))
    metric = exp.metrics[0]
    best = min(
        (r for r in reports if r.status == "ok"), key=lambda r: r.values[metric]
    )
    print(f"{len(reports)} runs -> {out / 'ablation.csv'} and {out / 'ablation.svg'}")
    print(f"argmin cutoff by {metric}: k_c={best.cutoff} ({best.values[metric]:.6f})")
    return 0


def cmd_verify(args) -> int:
    if args.config is not None:
        cfgmod.load_config(args.config, args.set)  # surface config errors as exit 2
    results = run_checks(fault=args.fault)
    failed = [r for r in results if not r.passed]
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 0 if not failed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skipstep",
        description="Skipped-step diffusion sampling: train, sample, benchmark, verify.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, needs_config in (
        ("train", cmd_train, True),
        ("sample", cmd_sample, True),
        ("bench", cmd_bench, True),
        ("ablate", cmd_ablate, True),
        ("verify", cmd_verify, False),
    ):
        p = sub.add_parser(name)
        p.set_defaults(fn=fn)
        p.add_argument(
            "-v", "--verbose", action="count", default=0, help="print per-run detail"
        )
        if needs_config:
            p.add_argument("-c", "--config", required=True, help="YAML config file")
            p.add_argument(
                "--set",
                action="append",
                default=[],
                metavar="KEY=VALUE",
                help="dotted config override, e.g. bench.n=500",
            )
            p.add_argument("-o", "--output", default=None, help="output directory")
        if name == "verify":
            p.add_argument("-c", "--config", default=None, help="YAML config file")
            p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
            p.add_argument(
                "--fault",
                default=None,
                choices=FAULT_FIELDS,
                help="test hook: corrupt one jump coefficient and expect failure",
            )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except TrainingDivergedError as exc:
        print(f"training aborted: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
