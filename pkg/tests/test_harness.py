import csv
import json

import numpy as np
import pytest

from dxsel.data import load_dataset_dir
from dxsel.harness import (
    ExperimentConfig,
    report_from_trajectories,
    run_experiment,
    sample_fidelity,
)
from dxsel.surrogate import ScriptedSurrogate, SurrogateConfig, SyntheticSurrogate, SyntheticWorld

import cohorts


def demo_config(demo_dir, tmp_path, **overrides) -> ExperimentConfig:
    settings = {
        "dataset": str(demo_dir / "manifest.json"),
        "methods": ["random"],
        "budget": 2,
        "seeds": [0, 1],
        "m": 4,
        "out": str(tmp_path / "results"),
        "workers": 1,
        "surrogate": SurrogateConfig(
            kind="scripted", outcomes_path="outcomes.tsv", risks_path="risks.tsv"
        ),
    }
    settings.update(overrides)
    return ExperimentConfig(**settings)


class TestExperiment:
    def test_report_shape_two_seeds(self, demo_dir, tmp_path):
        config = demo_config(demo_dir, tmp_path)
        report = run_experiment(config)
        random_rows = [r for r in report.per_seed if r["method"] == "random"]
        assert len(random_rows) == 2
        aggregate = next(a for a in report.aggregates if a["method"] == "random")
        values = [r["accuracy"] for r in random_rows]
        assert aggregate["accuracy_mean"] == pytest.approx(float(np.mean(values)))
        expected_std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
        assert aggregate["accuracy_std"] == pytest.approx(expected_std)

    def test_output_files_written(self, demo_dir, tmp_path):
        config = demo_config(demo_dir, tmp_path, methods=["adaptive", "random"], gammas=[0.3])
        run_experiment(config)
        out = tmp_path / "results"
        assert (out / "report.csv").exists()
        assert (out / "report.txt").exists()
        assert (out / "frequencies.csv").exists()
        assert (out / "fidelity.csv").exists()
        assert list((out / "trajectories").glob("*.json"))
        with open(out / "report.csv") as handle:
            rows = list(csv.DictReader(handle))
        assert {row["method"] for row in rows} == {"adaptive", "random"}

    def test_self_consistency_report_vs_trajectories(self, demo_dir, tmp_path):
        config = demo_config(demo_dir, tmp_path, methods=["adaptive"], gammas=[0.3])
        report = run_experiment(config)
        rebuilt = report_from_trajectories(tmp_path / "results" / "trajectories")
        original = {
            (r["method"], r["gamma"], r["seed"]): r for r in report.per_seed
        }
        assert rebuilt.per_seed, "no rows recovered from the archive"
        for row in rebuilt.per_seed:
            ref = original[(row["method"], row["gamma"], row["seed"])]
            assert row["accuracy"] == pytest.approx(ref["accuracy"])
            assert row["mean_tests"] == pytest.approx(ref["mean_tests"])

    def test_gamma_sweep_tests_nonincreasing(self, tmp_path):
        schema, records, surrogate = cohorts.gamma_cohort(per_class=2)
        config = ExperimentConfig(
            dataset="unused",
            methods=["adaptive"],
            budget=3,
            gammas=[0.3, 0.5, 0.7],
            seeds=[0],
            m=10,
            out=str(tmp_path / "sweep"),
            workers=1,
        )
        report = run_experiment(config, schema=schema, records=records, surrogate=surrogate, write=False)
        means = {entry["gamma"]: entry["tests_mean"] for entry in report.tests_per_gamma}
        assert means[0.3] >= means[0.5] >= means[0.7]
        assert means[0.7] < 3.0

    def test_criterion_separation_on_pathology_cohort(self, tmp_path):
        schema, records, surrogate = cohorts.pathology_cohort(n_sick=10, n_healthy=10)
        config = ExperimentConfig(
            dataset="unused",
            methods=["adaptive", "adaptive-entropy"],
            budget=3,
            gammas=[0.0],
            seeds=[0],
            m=10,
            out=str(tmp_path / "patho"),
            workers=1,
        )
        report = run_experiment(config, schema=schema, records=records, surrogate=surrogate, write=False)
        accuracy = {row["method"]: row["accuracy"] for row in report.per_seed}
        assert accuracy["adaptive"] >= accuracy["adaptive-entropy"]

    def test_selection_frequencies_sum_to_mean_acquisitions(self, demo_dir, tmp_path):
        config = demo_config(demo_dir, tmp_path, methods=["random"], budget=2)
        report = run_experiment(config)
        total_rate = sum(
            row["rate"] for row in report.frequencies if row["combo"] == "random"
        )
        random_rows = [r for r in report.per_seed if r["method"] == "random"]
        mean_tests = float(np.mean([r["mean_tests"] for r in random_rows]))
        assert total_rate == pytest.approx(mean_tests, abs=1e-9)

    def test_bootstrap_strata_present(self, demo_dir, tmp_path):
        config = demo_config(demo_dir, tmp_path, methods=["all-features"])
        report = run_experiment(config)
        strata = {(row["combo"], row["label"]) for row in report.bootstrap}
        assert ("all-features", 0) in strata and ("all-features", 1) in strata
        for row in report.bootstrap:
            assert row["ci_low"] <= row["boot_mean"] <= row["ci_high"]

    def test_duplicate_seeds_rejected(self, demo_dir, tmp_path):
        with pytest.raises(ValueError, match="seeds"):
            demo_config(demo_dir, tmp_path, seeds=[1, 1])

    def test_config_file_round_trip(self, demo_dir, tmp_path):
        payload = {
            "dataset": str(demo_dir / "manifest.json"),
            "methods": ["random"],
            "budget": 2,
            "seeds": [3],
            "m": 4,
            "out": str(tmp_path / "r"),
            "surrogate": {
                "kind": "scripted",
                "outcomes_path": "outcomes.tsv",
                "risks_path": "risks.tsv",
            },
        }
        path = tmp_path / "config.json"
        path.write_text(json.dumps(payload))
        config = ExperimentConfig.from_json(path)
        assert config.seeds == [3]
        assert config.surrogate.kind == "scripted"
        report = run_experiment(config)
        assert report.per_seed

    def test_episode_failures_tallied_not_fatal(self, demo_dir, tmp_path):
        schema, records = load_dataset_dir(demo_dir)
        # Strip one patient's risk entries so its episodes fail.
        surrogate = ScriptedSurrogate.from_files(
            demo_dir / "outcomes.tsv", demo_dir / "risks.tsv"
        )
        surrogate._risks = {k: v for k, v in surrogate._risks.items() if k[0] != "p2"}
        config = demo_config(demo_dir, tmp_path, methods=["all-features"], seeds=[0])
        report = run_experiment(
            config, schema=schema, records=records, surrogate=surrogate, write=False
        )
        assert report.failures["all-features"] == 1
        assert report.per_seed  # the healthy episode still reported


class TestSampleFidelity:
    def test_synthetic_world_fidelity(self, demo_dir):
        schema, records = load_dataset_dir(demo_dir)
        world = SyntheticWorld.from_json(demo_dir / "world.json")
        rows = sample_fidelity(schema, records, SyntheticSurrogate(world), m=8, seed=0)
        names = {row["feature"] for row in rows}
        assert names == {"Serum creatinine", "Sodium levels", "Haemoglobin"}
        for row in rows:
            assert row["wasserstein"] >= 0.0
            assert row["energy"] >= 0.0
            assert 0.0 <= row["best_mae_pct"] <= 100.0

    def test_perfect_simulator_scores_zero_mae(self, demo_dir):
        schema, records = load_dataset_dir(demo_dir)

        class Echo(ScriptedSurrogate):
            pass

        # A scripted table that always returns the patient's true value.
        outcomes = {}
        for record in records:
            for name in ("Serum creatinine", "Sodium levels", "Haemoglobin"):
                outcomes[(record.id, name)] = [record.values[name]] * 4
        surrogate = Echo(outcomes, {})
        rows = sample_fidelity(schema, records, surrogate, m=4, seed=0)
        for row in rows:
            assert row["best_mae_pct"] == pytest.approx(0.0, abs=1e-12)
