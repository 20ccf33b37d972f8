"""Orchestration tests: dataset plumbing, config handling, pipeline runs."""

from __future__ import annotations

import dataclasses
import json
import logging

import numpy as np
import pytest

from qaedet.cli import (
    LOSS_CSV_HEADER,
    METRICS_KEYS,
    ConfigError,
    DataError,
    ExperimentConfig,
    PhaseError,
    config_from_mapping,
    config_hash,
    evaluate_run,
    generate_synthetic,
    load_config,
    load_dataset,
    main,
    run_experiment,
    stratified_split,
    write_dataset_csv,
)
from qaedet.encoding import RawSample, fit_standardizer
from qaedet.seeding import rng_for

logging.getLogger("qaedet").setLevel(logging.WARNING)


def paired_pattern_samples(n: int, seed: int, tiny: float = 0.05) -> list[RawSample]:
    """Learnable two-class set: classes ride the (1,0,1,0) and (0,1,0,1) patterns.

    Both classes share a common compressible structure (feature pairs are
    copies), so a one-qubit latent keeps the class signal.
    """
    rng = rng_for(seed, "pattern")
    rows = []
    for _ in range(n // 2):
        u = (0.6 + abs(rng.normal())) * rng.choice([-1.0, 1.0])
        rows.append(RawSample(np.array([u, 0.0, u, 0.0]) + tiny * rng.normal(size=4), -1))
        v = (0.6 + abs(rng.normal())) * rng.choice([-1.0, 1.0])
        rows.append(RawSample(np.array([0.0, v, 0.0, v]) + tiny * rng.normal(size=4), 1))
    return rows


def small_config(dataset: str, out_dir: str, **overrides) -> ExperimentConfig:
    base = dict(
        dataset=dataset, train_size=80, test_size=40, qae_max_iters=60,
        kernel_spsa_iters=8, kernel_train_size=32, seed=0, out_dir=out_dir,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


@pytest.fixture(scope="module")
def paired_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "paired.csv"
    write_dataset_csv(paired_pattern_samples(120, 7), path)
    return str(path)


@pytest.fixture(scope="module")
def analytic_run(paired_csv, tmp_path_factory):
    out = tmp_path_factory.mktemp("analytic_run")
    report = run_experiment(small_config(paired_csv, str(out)))
    return report, out


class TestGenerateSynthetic:
    def test_shape_and_labels(self):
        samples = generate_synthetic(40, 3, 2.0, seed=1)
        assert len(samples) == 40
        assert all(s.features.size == 3 for s in samples)
        assert [s.label for s in samples[:20]] == [-1] * 20
        assert [s.label for s in samples[20:]] == [1] * 20

    def test_deterministic_under_seed(self):
        a = generate_synthetic(30, 4, 5.0, seed=9)
        b = generate_synthetic(30, 4, 5.0, seed=9)
        assert all(np.array_equal(x.features, y.features) for x, y in zip(a, b))
        c = generate_synthetic(30, 4, 5.0, seed=10)
        assert any(not np.array_equal(x.features, y.features) for x, y in zip(a, c))

    def test_cluster_geometry(self):
        d, sep = 4, 6.0
        samples = generate_synthetic(4000, d, sep, seed=2)
        neg = np.stack([s.features for s in samples if s.label == -1])
        pos = np.stack([s.features for s in samples if s.label == 1])
        expected = (sep / 2) * np.ones(d) / np.sqrt(d)
        assert np.allclose(neg.mean(axis=0), expected, atol=0.15)
        assert np.allclose(pos.mean(axis=0), -expected, atol=0.15)
        assert np.allclose(neg.std(axis=0), 1.0, atol=0.1)
        assert np.linalg.norm(neg.mean(axis=0) - pos.mean(axis=0)) == pytest.approx(
            sep, abs=0.2
        )

    def test_zero_separation_is_class_blind(self):
        # identical class distributions: projecting onto the center axis
        # should classify at chance level over many seeds
        hits = total = 0
        for seed in range(20):
            for s in generate_synthetic(100, 4, 0.0, seed=seed):
                pred = -1 if s.features.sum() > 0 else 1
                hits += pred == s.label
                total += 1
        assert 0.4 < hits / total < 0.6

    def test_wide_separation_is_almost_perfectly_separable(self):
        # cluster distance 6 puts the midpoint 3 sigma from each center,
        # so the center-axis rule errs with probability about 0.0013
        hits = total = 0
        for seed in range(20):
            for s in generate_synthetic(200, 4, 6.0, seed=seed):
                pred = -1 if s.features.sum() > 0 else 1
                hits += pred == s.label
                total += 1
        assert hits / total > 0.985

    @pytest.mark.parametrize(
        "n, d, sep", [(7, 4, 1.0), (0, 4, 1.0), (10, 1, 1.0), (10, 4, -2.0)]
    )
    def test_rejects_bad_shape_parameters(self, n, d, sep):
        with pytest.raises(ValueError):
            generate_synthetic(n, d, sep, seed=0)


class TestDatasetCsv:
    def test_write_load_round_trip(self, tmp_path):
        samples = generate_synthetic(10, 3, 2.0, seed=4)
        path = tmp_path / "data.csv"
        write_dataset_csv(samples, path)
        loaded = load_dataset(path)
        assert len(loaded) == 10
        for original, back in zip(samples, loaded):
            assert np.array_equal(original.features, back.features)
            assert original.label == back.label

    def test_zero_one_labels_map_to_signs(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("f0,f1,label\n1.0,2.0,0\n3.0,4.0,1\n5.0,6.0,1\n")
        labels = [s.label for s in load_dataset(path)]
        assert labels == [-1, 1, 1]

    def test_non_finite_rows_rejected_others_kept(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("f0,f1,label\n1.0,2.0,1\nnan,4.0,0\n5.0,inf,1\n7.0,8.0,0\n")
        loaded = load_dataset(path)
        assert len(loaded) == 2
        assert [s.label for s in loaded] == [1, -1]
        assert np.array_equal(loaded[1].features, [7.0, 8.0])

    def test_non_numeric_cell_is_hard_error(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("f0,f1,label\n1.0,oops,1\n")
        with pytest.raises(DataError, match="non-numeric"):
            load_dataset(path)

    def test_missing_label_column_names_available(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("f0,f1,target\n1.0,2.0,1\n")
        with pytest.raises(DataError, match="f0, f1, target"):
            load_dataset(path)

    def test_custom_label_column(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("attack,f0\n1,0.5\n0,0.25\n")
        loaded = load_dataset(path, label_column="attack")
        assert [s.label for s in loaded] == [1, -1]
        assert loaded[0].features.size == 1

    def test_out_of_range_label_rejected(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("f0,label\n1.0,2\n")
        with pytest.raises(DataError, match="label"):
            load_dataset(path)

    def test_ragged_row_rejected(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("f0,f1,label\n1.0,1\n")
        with pytest.raises(DataError, match="cells"):
            load_dataset(path)

    def test_empty_and_header_only_files_rejected(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        with pytest.raises(DataError, match="empty"):
            load_dataset(empty)
        header_only = tmp_path / "header.csv"
        header_only.write_text("f0,label\n")
        with pytest.raises(DataError, match="no data rows"):
            load_dataset(header_only)

    def test_missing_file_is_data_error(self, tmp_path):
        with pytest.raises(DataError, match="cannot read"):
            load_dataset(tmp_path / "nowhere.csv")


class TestStratifiedSplit:
    def make_pool(self, n_neg: int, n_pos: int) -> list[RawSample]:
        rng = rng_for(3, "pool")
        pool = [RawSample(rng.normal(size=3), -1) for _ in range(n_neg)]
        pool += [RawSample(rng.normal(size=3), 1) for _ in range(n_pos)]
        return pool

    def test_sizes_and_disjointness(self):
        pool = self.make_pool(60, 40)
        train, test = stratified_split(pool, 50, 30, seed=1)
        assert len(train) == 50 and len(test) == 30
        assert {id(s) for s in train}.isdisjoint({id(s) for s in test})
        pool_ids = {id(s) for s in pool}
        assert {id(s) for s in train} | {id(s) for s in test} <= pool_ids

    def test_label_proportions_preserved(self):
        train, test = stratified_split(self.make_pool(60, 40), 50, 30, seed=1)
        assert sum(s.label == -1 for s in train) == 30
        assert sum(s.label == 1 for s in train) == 20
        assert sum(s.label == -1 for s in test) == 18
        assert sum(s.label == 1 for s in test) == 12

    def test_deterministic_and_seed_sensitive(self):
        pool = self.make_pool(30, 30)
        first_train, first_test = stratified_split(pool, 20, 10, seed=5)
        again_train, again_test = stratified_split(pool, 20, 10, seed=5)
        assert [id(s) for s in first_train] == [id(s) for s in again_train]
        assert [id(s) for s in first_test] == [id(s) for s in again_test]
        other_train, _ = stratified_split(pool, 20, 10, seed=6)
        assert [id(s) for s in first_train] != [id(s) for s in other_train]

    def test_classes_interleaved_not_blocked(self):
        train, _ = stratified_split(self.make_pool(50, 50), 40, 20, seed=2)
        labels = [s.label for s in train]
        assert labels[:20] != [-1] * 20

    def test_oversized_request_rejected(self):
        with pytest.raises(DataError, match="dataset has"):
            stratified_split(self.make_pool(5, 5), 8, 4, seed=0)

    def test_leaking_a_test_sample_changes_train_stats(self):
        pool = self.make_pool(40, 40)
        train, test = stratified_split(pool, 40, 20, seed=3)
        clean = fit_standardizer(train)
        leaked = fit_standardizer(train + [test[0]])
        assert not np.allclose(clean.mu, leaked.mu)


class TestExperimentConfig:
    def test_defaults_validate(self):
        config = ExperimentConfig(dataset="x.csv")
        assert config.train_size == 160 and config.test_size == 40
        assert config.shots == 0 and config.noise is False

    @pytest.mark.parametrize(
        "overrides",
        [
            {"dataset": ""},
            {"train_size": 0},
            {"test_size": 0},
            {"C": 0.0},
            {"svm_tol": 0.0},
            {"workers": -1},
            {"kernel_train_size": -2},
            {"noise": True, "shots": 0},
            {"qae_batch_size": 0},
            {"kernel_layers": 0},
            {"cobyla_rho_begin": 0.5, "cobyla_rho_end": 0.6},
            {"spsa_a": -1.0},
            {"noise": True, "shots": 100, "p1": 1.5},
            {"label_column": ""},
        ],
    )
    def test_bad_values_rejected(self, overrides):
        base = dict(dataset="x.csv")
        base.update(overrides)
        with pytest.raises(ConfigError):
            ExperimentConfig(**base)

    def test_wrong_types_rejected(self):
        with pytest.raises(ConfigError, match="seed"):
            ExperimentConfig(dataset="x.csv", seed="5")
        with pytest.raises(ConfigError, match="noise"):
            ExperimentConfig(dataset="x.csv", noise=1)
        with pytest.raises(ConfigError, match="train_size"):
            ExperimentConfig(dataset="x.csv", train_size=20.5)

    def test_int_coerces_to_float_fields(self):
        config = ExperimentConfig(dataset="x.csv", C=2, spsa_a=1)
        assert config.C == 2.0 and isinstance(config.C, float)
        assert config.spsa_a == 1.0

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="mystery"):
            config_from_mapping({"dataset": "x.csv", "mystery": 3})

    def test_missing_dataset_rejected(self):
        with pytest.raises(ConfigError):
            config_from_mapping({"train_size": 10})


class TestConfigFile:
    def test_yaml_round_trip(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text(
            "dataset: data.csv\ntrain_size: 24\ntest_size: 8\n"
            "noise: true\nshots: 128\np1: 0.002\nseed: 7\n"
        )
        config = load_config(path)
        assert config.dataset == "data.csv"
        assert config.train_size == 24 and config.test_size == 8
        assert config.noise is True and config.shots == 128
        assert config.p1 == 0.002 and config.seed == 7

    def test_unknown_key_named_in_error(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text("dataset: d.csv\nshotz: 4\n")
        with pytest.raises(ConfigError, match="shotz"):
            load_config(path)

    def test_invalid_yaml_rejected(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text("dataset: [unclosed\n")
        with pytest.raises(ConfigError, match="YAML"):
            load_config(path)

    def test_non_mapping_document_rejected(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text("- just\n- a list\n")
        with pytest.raises(ConfigError, match="mapping"):
            load_config(path)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "nope.yaml")


class TestConfigHash:
    def test_stable_and_seed_sensitive(self):
        a = ExperimentConfig(dataset="x.csv", seed=1)
        b = ExperimentConfig(dataset="x.csv", seed=1)
        c = ExperimentConfig(dataset="x.csv", seed=2)
        assert config_hash(a) == config_hash(b)
        assert config_hash(a) != config_hash(c)

    def test_ignores_operational_knobs(self):
        a = ExperimentConfig(dataset="x.csv", out_dir="runs/a", workers=1)
        b = ExperimentConfig(dataset="x.csv", out_dir="runs/b", workers=8)
        assert config_hash(a) == config_hash(b)


class TestRunExperiment:
    def test_reaches_high_accuracy_on_learnable_data(self, analytic_run):
        report, _ = analytic_run
        assert report.test_metrics.accuracy >= 0.9
        assert report.train_metrics.accuracy >= 0.9

    def test_all_artifacts_written(self, analytic_run):
        report, out = analytic_run
        expected = {
            "qae_loss", "kernel_loss", "kernel_train",
            "model", "metrics", "pipeline", "run_report",
        }
        assert set(report.artifacts) == expected
        for path in report.artifacts.values():
            assert (out / path.split("/")[-1]).exists()

    def test_loss_csvs_have_exact_header(self, analytic_run):
        _, out = analytic_run
        for name in ("qae_loss.csv", "kernel_loss.csv"):
            first_line = (out / name).read_text().splitlines()[0]
            assert first_line == LOSS_CSV_HEADER

    def test_every_iteration_logged_exactly_once(self, analytic_run):
        report, out = analytic_run
        for name, log in (("qae_loss.csv", report.qae_log),
                          ("kernel_loss.csv", report.kernel_log)):
            lines = (out / name).read_text().splitlines()[1:]
            iterations = [int(line.split(",")[0]) for line in lines]
            assert iterations == list(range(len(log)))
        assert len(report.kernel_log) == 8

    def test_metrics_json_schema(self, analytic_run):
        report, out = analytic_run
        payload = json.loads((out / "metrics.json").read_text())
        assert tuple(payload) == METRICS_KEYS
        assert payload["config_hash"] == report.config_hash
        for key in METRICS_KEYS[1:]:
            assert 0.0 <= payload[key] <= 1.0

    def test_report_carries_timings_and_echo(self, analytic_run):
        report, _ = analytic_run
        assert set(report.phase_seconds) == {
            "data", "qae", "latents", "kernel", "qsvc", "evaluate",
        }
        assert all(seconds >= 0 for seconds in report.phase_seconds.values())
        assert report.config["train_size"] == 80
        run_report = json.loads(
            open(report.artifacts["run_report"], encoding="utf-8").read()
        )
        assert run_report["train_metrics"]["config_hash"] == report.config_hash
        assert run_report["test_metrics"]["config_hash"] == report.config_hash

    def test_identical_config_reproduces_bytes(self, paired_csv, analytic_run, tmp_path):
        _, first_out = analytic_run
        repeat = run_experiment(small_config(paired_csv, str(tmp_path / "again")))
        for name in ("metrics.json", "qae_loss.csv", "kernel_loss.csv", "model.json"):
            assert (tmp_path / "again" / name).read_bytes() == (first_out / name).read_bytes()
        assert repeat.config_hash == config_hash(small_config(paired_csv, "other"))

    def test_noisy_run_differs_only_in_noise_fields(self, paired_csv, analytic_run, tmp_path):
        analytic_report, _ = analytic_run
        noisy_report = run_experiment(small_config(
            paired_csv, str(tmp_path / "noisy"), noise=True, shots=64,
        ))
        differing = {
            key for key in analytic_report.config
            if analytic_report.config[key] != noisy_report.config[key]
        }
        assert differing == {"noise", "shots", "out_dir"}
        for row in noisy_report.qae_log:
            assert np.isfinite(row.loss_std)
            assert row.lower_bound <= row.loss <= row.upper_bound

    def test_phase_failure_names_phase_and_keeps_logs(self, paired_csv, tmp_path, monkeypatch):
        import qaedet.cli as cli_module

        def boom(*args, **kwargs):
            raise RuntimeError("kernel training exploded")

        monkeypatch.setattr(cli_module, "train_kernel", boom)
        out = tmp_path / "broken"
        with pytest.raises(PhaseError, match="kernel"):
            run_experiment(small_config(paired_csv, str(out), qae_max_iters=3))
        qae_lines = (out / "qae_loss.csv").read_text().splitlines()
        assert qae_lines[0] == LOSS_CSV_HEADER
        assert len(qae_lines) == 4

    def test_missing_dataset_is_data_error(self, tmp_path):
        with pytest.raises(DataError):
            run_experiment(small_config(str(tmp_path / "gone.csv"), str(tmp_path)))

    def test_latent_register_must_leave_trash(self, paired_csv, tmp_path):
        with pytest.raises(ConfigError, match="trash"):
            run_experiment(small_config(paired_csv, str(tmp_path), n_l=2))


class TestEvaluateRun:
    def test_scores_new_dataset_with_stored_state(self, paired_csv, analytic_run, tmp_path):
        _, out = analytic_run
        metrics = evaluate_run(out, paired_csv)
        assert metrics.accuracy >= 0.9
        payload = json.loads((out / "eval_metrics.json").read_text())
        assert 0.0 <= payload["accuracy"] <= 1.0
        assert payload["dataset"] == paired_csv

    def test_unfinished_run_dir_rejected(self, paired_csv, tmp_path):
        with pytest.raises(DataError, match="pipeline.json"):
            evaluate_run(tmp_path, paired_csv)


class TestMainExitCodes:
    def test_synth_then_train_via_config_file(self, tmp_path):
        data = tmp_path / "tiny.csv"
        write_dataset_csv(paired_pattern_samples(24, 3), data)
        config = tmp_path / "config.yaml"
        config.write_text(
            f"dataset: {data}\ntrain_size: 16\ntest_size: 8\n"
            "qae_max_iters: 3\nkernel_spsa_iters: 2\nkernel_train_size: 8\n"
        )
        rc = main(["train", "--config", str(config), "--out", str(tmp_path / "run")])
        assert rc == 0
        assert (tmp_path / "run" / "metrics.json").exists()
        assert main(["report", "--run", str(tmp_path / "run")]) == 0
        assert main(["evaluate", "--run", str(tmp_path / "run"),
                     "--dataset", str(data)]) == 0

    def test_synth_writes_dataset(self, tmp_path):
        out = tmp_path / "synth.csv"
        assert main(["synth", "--n", "20", "--d", "3", "--out", str(out)]) == 0
        assert len(load_dataset(out)) == 20

    def test_bad_synth_parameters_exit_2(self, tmp_path):
        assert main(["synth", "--n", "7", "--out", str(tmp_path / "x.csv")]) == 2

    def test_train_without_dataset_exits_2(self):
        assert main(["train"]) == 2

    def test_conflicting_noise_flags_exit_2(self, tmp_path):
        rc = main(["train", "--dataset", "d.csv", "--analytic", "--noise"])
        assert rc == 2

    def test_missing_dataset_exits_3(self, tmp_path):
        rc = main(["train", "--dataset", str(tmp_path / "absent.csv")])
        assert rc == 3

    def test_report_on_empty_dir_exits_3(self, tmp_path):
        assert main(["report", "--run", str(tmp_path)]) == 3

    def test_phase_failure_exits_4(self, tmp_path, monkeypatch):
        import qaedet.cli as cli_module

        data = tmp_path / "tiny.csv"
        write_dataset_csv(paired_pattern_samples(24, 3), data)

        def boom(*args, **kwargs):
            raise RuntimeError("no kernel today")

        monkeypatch.setattr(cli_module, "train_kernel", boom)
        rc = main([
            "train", "--dataset", str(data), "--out", str(tmp_path / "run"),
            "--config", str(_write_tiny_config(tmp_path, data)),
        ])
        assert rc == 4


def _write_tiny_config(tmp_path, data) -> str:
    config = tmp_path / "tiny.yaml"
    config.write_text(
        f"dataset: {data}\ntrain_size: 16\ntest_size: 8\n"
        "qae_max_iters: 3\nkernel_spsa_iters: 2\nkernel_train_size: 8\n"
    )
    return str(config)
