"""Sweep harness: row counting, reproducibility, schema, and orderings."""

import csv

import pytest

import skipstep.bench as bench
from skipstep import ConfigurationError, DatasetSpec, make_linear_schedule
from skipstep.bench import ExperimentConfig, run_cutoff_ablation, run_sweep, summarize


def oracle_config(tmp_path, **overrides):
    kwargs = dict(
        dataset=DatasetSpec(kind="gaussian", n=400, seed=1, mean=(1.0,), var=(0.5,)),
        schedule=make_linear_schedule(200),
        denoiser_source="oracle",
        samplers=("skipped",),
        budgets=(10,),
        seeds=(0,),
        n_samples=400,
        metrics=("sliced_wasserstein", "energy_distance", "gaussian_w2"),
        out_dir=str(tmp_path),
    )
    kwargs.update(overrides)
    return ExperimentConfig(**kwargs)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def strip_wall_clock(rows):
    return [row[:-1] for row in rows]


class TestRunSweep:
    def test_single_run_single_row(self, tmp_path):
        reports = run_sweep(oracle_config(tmp_path))
        assert len(reports) == 1
        rows = read_rows(tmp_path / "sweep.csv")
        assert len(rows) == 2  # header + one run
        assert rows[0][:5] == ["sampler", "steps", "cutoff", "seed", "status"]

    def test_grid_counting(self, tmp_path):
        cfg = oracle_config(
            tmp_path,
            samplers=("ddpm", "ddim", "skipped", "mixed"),
            budgets=(20, 10, 5),
            seeds=(0, 1, 2),
        )
        reports = run_sweep(cfg)
        assert len(reports) == 36
        assert len(read_rows(tmp_path / "sweep.csv")) == 37
        assert all(r.status == "ok" for r in reports)

    def test_csv_byte_reproducible_modulo_wall_clock(self, tmp_path):
        cfg = oracle_config(tmp_path, samplers=("skipped", "mixed"), budgets=(10, 5), seeds=(0, 1))
        run_sweep(cfg, csv_name="first.csv")
        run_sweep(cfg, csv_name="second.csv")
        a = strip_wall_clock(read_rows(tmp_path / "first.csv"))
        b = strip_wall_clock(read_rows(tmp_path / "second.csv"))
        assert a == b

    def test_skipped_beats_naive_subset_in_exact_w2(self, tmp_path):
        cfg = oracle_config(
            tmp_path,
            schedule=make_linear_schedule(1000),
            samplers=("skipped", "naive_subset"),
            budgets=(25,),
            metrics=("gaussian_w2",),
        )
        table = summarize(run_sweep(cfg), "gaussian_w2")
        assert table[("skipped", 25)] < table[("naive_subset", 25)]

    def test_ddpm_row_at_reduced_budget_is_naive_subset(self, tmp_path):
        cfg = oracle_config(tmp_path, samplers=("ddpm", "naive_subset"), budgets=(10,))
        reports = run_sweep(cfg)
        by_kind = {r.sampler: r for r in reports}
        assert by_kind["ddpm"].values == by_kind["naive_subset"].values

    def test_failed_run_marked_and_sweep_continues(self, tmp_path, monkeypatch):
        calls = {"n": 0}
        real = bench.sliced_wasserstein

        def flaky(a, b, **kwargs):
            calls["n"] += 1
            if calls["n"] == 1:
                return float("nan")
            return real(a, b, **kwargs)

        monkeypatch.setattr(bench, "sliced_wasserstein", flaky)
        cfg = oracle_config(
            tmp_path, seeds=(0, 1), metrics=("sliced_wasserstein",)
        )
        reports = run_sweep(cfg)
        assert [r.status for r in reports] == ["failed", "ok"]
        rows = read_rows(tmp_path / "sweep.csv")
        assert rows[1][4] == "failed" and rows[2][4] == "ok"


class TestCutoffAblation:
    def test_rows_csv_and_svg(self, tmp_path):
        cfg = oracle_config(tmp_path, seeds=(0, 1), metrics=("sliced_wasserstein",))
        reports = run_cutoff_ablation(cfg, budget=10, cutoff_grid=(0, 2, 5, 8, 10))
        assert len(reports) == 10
        assert (tmp_path / "ablation.csv").exists()
        svg = (tmp_path / "ablation.svg").read_text()
        assert svg.startswith("<svg") and "polyline" in svg

    def test_endpoints_match_pure_samplers(self, tmp_path):
        cfg = oracle_config(
            tmp_path, samplers=("ddim", "skipped"), metrics=("sliced_wasserstein", "energy_distance", "gaussian_w2")
        )
        sweep = {r.sampler: r for r in run_sweep(cfg)}
        ablate = {r.cutoff: r for r in run_cutoff_ablation(cfg, 10, (0, 10))}
        assert ablate[0].values == sweep["ddim"].values
        assert ablate[10].values == sweep["skipped"].values

    def test_rejects_bad_grid(self, tmp_path):
        cfg = oracle_config(tmp_path)
        with pytest.raises(ConfigurationError):
            run_cutoff_ablation(cfg, 10, (0, 40))
        with pytest.raises(ConfigurationError):
            run_cutoff_ablation(cfg, 10, ())


class TestConfigValidation:
    def test_budget_above_total_steps(self, tmp_path):
        with pytest.raises(ConfigurationError):
            oracle_config(tmp_path, budgets=(500,))

    def test_empty_lists(self, tmp_path):
        with pytest.raises(ConfigurationError):
            oracle_config(tmp_path, samplers=())
        with pytest.raises(ConfigurationError):
            oracle_config(tmp_path, seeds=())

    def test_gaussian_w2_needs_oracle_on_gaussian_data(self, tmp_path):
        with pytest.raises(ConfigurationError):
            oracle_config(
                tmp_path,
                dataset=DatasetSpec(kind="two_moons", n=100, seed=0),
                denoiser_source="train",
                train_config=None,
            )

    def test_checkpoint_source_needs_path(self, tmp_path):
        with pytest.raises(ConfigurationError):
            oracle_config(tmp_path, denoiser_source="checkpoint")

    def test_missing_checkpoint_raises_io_error(self, tmp_path):
        cfg = oracle_config(
            tmp_path,
            dataset=DatasetSpec(kind="gaussian", n=100, seed=0, mean=(0.0,), var=(1.0,)),
            denoiser_source="checkpoint",
            checkpoint_path=str(tmp_path / "missing.ckpt"),
            metrics=("sliced_wasserstein",),
        )
        with pytest.raises(OSError):
            run_sweep(cfg)

    def test_reference_seed_is_deterministic_and_distinct(self):
        assert bench.reference_seed(0) == bench.reference_seed(0)
        assert bench.reference_seed(0) != bench.reference_seed(1)
        assert bench.reference_seed(3) != 3


class TestAblationReproducibility:
    def test_rerun_reproduces_argmin_and_rows(self, tmp_path):
        cfg = oracle_config(tmp_path, seeds=(0, 1), metrics=("sliced_wasserstein",))
        grid = (0, 2, 5, 8, 10)
        first = run_cutoff_ablation(cfg, 10, grid, csv_name="a.csv", svg_name="a.svg")
        second = run_cutoff_ablation(cfg, 10, grid, csv_name="b.csv", svg_name="b.svg")

        def argmin(reports):
            means = {}
            for r in reports:
                means.setdefault(r.cutoff, []).append(r.values["sliced_wasserstein"])
            return min(means, key=lambda k: sum(means[k]) / len(means[k]))

        assert argmin(first) == argmin(second)
        a = strip_wall_clock(read_rows(tmp_path / "a.csv"))
        b = strip_wall_clock(read_rows(tmp_path / "b.csv"))
        assert a == b

    def test_grid_defaults_to_config_field(self, tmp_path):
        cfg = oracle_config(
            tmp_path, metrics=("sliced_wasserstein",), cutoff_grid=(0, 5, 10)
        )
        reports = run_cutoff_ablation(cfg, 10)
        assert sorted({r.cutoff for r in reports}) == [0, 5, 10]
