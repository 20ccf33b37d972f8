"""Experiment orchestration and command-line interface.

Runs the full detection pipeline in order: dataset ingestion and
standardization, autoencoder training, latent extraction, kernel-angle
training, dual-SVM fit, and held-out evaluation.  Each run directory
receives plot-ready loss CSVs, a flat ``metrics.json``, the trained model
and kernel matrix, and a machine-readable run report.  Subcommands cover
synthetic data generation (``synth``), full runs (``train``), re-scoring a
new dataset with a trained run (``evaluate``), and printing a summary of a
finished run (``report``).

All randomness flows from one global seed through named derivations, so
two runs with identical configs produce byte-identical metrics and loss
logs, and noisy/noiseless runs on the same seed are paired.  The config
file is a flat YAML document whose keys mirror ``ExperimentConfig``.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .encoding import (
    DegenerateSampleError,
    RawSample,
    StandardizationStats,
    fit_standardizer,
    num_qubits_for,
    preprocess,
)
from .kernel import (
    FeatureMapConfig,
    KernelParams,
    cross_kernel_matrix,
    init_kernel_params,
    kernel_matrix,
    train_kernel,
)
from .noise import DepolarizingModel
from .optim import CobylaConfig, SpsaConfig, cobyla_minimize
from .qae import EncoderParams, QaeConfig, TrainLogRow, extract_latent, train_qae
from .qsvc import Metrics, SvmModel, compute_metrics, predict, solve_dual
from .seeding import derive_seed, rng_for

logger = logging.getLogger("qaedet")

LOSS_CSV_HEADER = "iteration,loss,loss_std,lower_bound,upper_bound,grad_norm,cv"

METRICS_KEYS = (
    "config_hash",
    "train_accuracy",
    "train_precision",
    "train_recall",
    "train_f1",
    "test_accuracy",
    "test_precision",
    "test_recall",
    "test_f1",
)

# Operational knobs that change where or how fast a run executes but never
# what it computes; they are excluded from the config hash.
_UNHASHED_FIELDS = ("out_dir", "workers")


class ConfigError(Exception):
    """Invalid experiment configuration or command-line usage."""


class DataError(Exception):
    """Dataset cannot be read, parsed, or split as requested."""


class PhaseError(RuntimeError):
    """A pipeline phase failed; logs gathered so far were persisted."""

    def __init__(self, phase: str, cause: BaseException) -> None:
        super().__init__(f"phase '{phase}' failed: {cause}")
        self.phase = phase


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one pipeline run needs, resolvable from a YAML file.

    ``workers=0`` means one worker per available processor and
    ``kernel_train_size=0`` means the kernel angles are trained on the
    whole training set rather than a stratified subsample.
    """

    dataset: str
    label_column: str = "label"
    train_size: int = 160
    test_size: int = 40
    split_seed: int = 0
    n_l: int = 1
    qae_reps: int = 2
    qae_batch_size: int = 16
    qae_num_batches: int = 5
    qae_max_iters: int = 150
    cobyla_rho_begin: float = 1.0
    cobyla_rho_end: float = 1e-3
    kernel_layers: int = 2
    kernel_spsa_iters: int = 20
    kernel_train_size: int = 64
    spsa_a: float = 0.2
    spsa_c: float = 0.1
    C: float = 1.0
    svm_tol: float = 1e-3
    noise: bool = False
    p1: float = 0.001
    p2: float = 0.01
    shots: int = 0
    workers: int = 0
    out_dir: str = "run"
    seed: int = 0

    def __post_init__(self) -> None:
        self._check_field_types()
        if not self.dataset:
            raise ConfigError("dataset path must be non-empty")
        if not self.label_column:
            raise ConfigError("label_column must be non-empty")
        if self.train_size < 1 or self.test_size < 1:
            raise ConfigError("train_size and test_size must be >= 1")
        if self.kernel_train_size < 0:
            raise ConfigError("kernel_train_size must be >= 0")
        if self.workers < 0:
            raise ConfigError("workers must be >= 0")
        if self.C <= 0 or self.svm_tol <= 0:
            raise ConfigError("C and svm_tol must be positive")
        if self.noise and self.shots == 0:
            raise ConfigError("noise simulation needs shots > 0 (analytic mode is noiseless)")
        try:
            # probe-construct every sub-config so that their own invariants
            # are enforced here; n_q is data-dependent, so use the narrowest
            # register the latent size allows
            QaeConfig(
                n_q=self.n_l + 1, n_l=self.n_l, reps=self.qae_reps,
                batch_size=self.qae_batch_size, num_batches=self.qae_num_batches,
                shots=self.shots, max_iters=self.qae_max_iters, seed=self.seed,
            )
            FeatureMapConfig(
                n_k=2**self.n_l, layers=self.kernel_layers, shots=self.shots
            )
            CobylaConfig(
                max_iters=self.qae_max_iters,
                rho_begin=self.cobyla_rho_begin, rho_end=self.cobyla_rho_end,
            )
            SpsaConfig(max_iters=self.kernel_spsa_iters, a=self.spsa_a, c=self.spsa_c)
            if self.noise:
                DepolarizingModel(p1=self.p1, p2=self.p2)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def _check_field_types(self) -> None:
        for spec in dataclasses.fields(self):
            value = getattr(self, spec.name)
            if spec.type == "bool":
                ok = isinstance(value, bool)
            elif spec.type == "int":
                ok = isinstance(value, int) and not isinstance(value, bool)
            elif spec.type == "float":
                ok = isinstance(value, (int, float)) and not isinstance(value, bool)
                if ok:
                    object.__setattr__(self, spec.name, float(value))
            else:
                ok = isinstance(value, str)
            if not ok:
                raise ConfigError(
                    f"config key '{spec.name}' must be of type {spec.type}, "
                    f"got {type(value).__name__}"
                )


@dataclass(frozen=True)
class RunReport:
    """Outcome of one pipeline run: logs, metrics, timings, and paths."""

    config_hash: str
    config: dict
    qae_log: list[TrainLogRow]
    kernel_log: list[TrainLogRow]
    train_metrics: Metrics
    test_metrics: Metrics
    phase_seconds: dict[str, float]
    artifacts: dict[str, str]


def config_from_mapping(data: dict) -> ExperimentConfig:
    """Build a validated config from a flat key-value mapping."""
    known = {spec.name for spec in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    try:
        return ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse a flat YAML config file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a key-value mapping")
    return config_from_mapping(data)


def config_hash(config: ExperimentConfig) -> str:
    """Stable 16-hex-digit digest of every result-affecting config field."""
    echo = {
        k: v for k, v in dataclasses.asdict(config).items()
        if k not in _UNHASHED_FIELDS
    }
    blob = json.dumps(echo, sort_keys=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def generate_synthetic(n: int, d: int, separation: float, seed: int = 0) -> list[RawSample]:
    """Two unit-variance isotropic Gaussian clusters mirrored about the origin.

    Cluster centers sit at +/- (separation/2) * ones(d)/sqrt(d), so
    ``separation`` is the distance between them; the +center cluster is
    labelled -1 and the -center cluster +1.  Deterministic under seed.
    """
    if n < 2 or n % 2 != 0:
        raise ValueError(f"n must be even and >= 2, got {n}")
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    if separation < 0:
        raise ValueError(f"separation must be >= 0, got {separation}")
    rng = rng_for(seed, "synth")
    center = (separation / 2.0) * np.ones(d) / np.sqrt(d)
    offsets = rng.normal(size=(n, d))
    half = n // 2
    samples = [RawSample(center + offsets[i], -1) for i in range(half)]
    samples += [RawSample(-center + offsets[half + i], 1) for i in range(half)]
    return samples


def write_dataset_csv(samples: list[RawSample], path: str | Path, label_column: str = "label") -> None:
    """Write samples as a header CSV with one numeric label column."""
    if not samples:
        raise ValueError("cannot write an empty dataset")
    d = samples[0].features.size
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow([f"f{j}" for j in range(d)] + [label_column])
        for s in samples:
            writer.writerow([repr(float(v)) for v in s.features] + [s.label])


def load_dataset(path: str | Path, label_column: str = "label") -> list[RawSample]:
    """Read a header CSV into labelled samples.

    Labels must map to {-1, +1}; 0/1 are accepted and 0 maps to -1.  Rows
    containing non-finite feature values are rejected with a per-row
    diagnostic; a non-numeric cell or a missing label column is a hard
    error.
    """
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            rows = [row for row in reader if row]
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from None
    if not rows:
        raise DataError(f"dataset {path} is empty")
    header = [name.strip() for name in rows[0]]
    if label_column not in header:
        raise DataError(
            f"label column '{label_column}' not found in {path}; "
            f"available columns: {', '.join(header)}"
        )
    label_idx = header.index(label_column)
    feature_idx = [j for j in range(len(header)) if j != label_idx]
    if not feature_idx:
        raise DataError(f"dataset {path} has no feature columns")
    if len(rows) == 1:
        raise DataError(f"dataset {path} has a header but no data rows")

    samples: list[RawSample] = []
    rejected = 0
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"{path} line {i}: expected {len(header)} cells, got {len(row)}")
        try:
            values = np.array([float(row[j]) for j in feature_idx])
            raw_label = float(row[label_idx])
        except ValueError:
            raise DataError(f"{path} line {i}: non-numeric cell") from None
        if not np.isfinite(raw_label) or raw_label not in (-1.0, 0.0, 1.0):
            raise DataError(
                f"{path} line {i}: label {row[label_idx]!r} is not one of -1, 0, 1"
            )
        if not np.all(np.isfinite(values)):
            logger.warning("%s line %d: rejected, non-finite feature value", path, i)
            rejected += 1
            continue
        label = -1 if raw_label <= 0.0 else 1
        samples.append(RawSample(values, label))
    if not samples:
        raise DataError(f"dataset {path} has no usable rows ({rejected} rejected)")
    logger.info("loaded %d samples from %s (%d rows rejected)", len(samples), path, rejected)
    return samples


def _allocate(counts: list[int], total: int) -> list[int]:
    """Split ``total`` across groups proportionally to ``counts``.

    Largest-remainder rounding with deterministic ties (earlier group
    first); each quota is capped by its group size.
    """
    pool = sum(counts)
    exact = [total * c / pool for c in counts]
    quotas = [min(int(q), c) for q, c in zip(exact, counts)]
    order = sorted(
        range(len(counts)), key=lambda g: (-(exact[g] - int(exact[g])), g)
    )
    shortfall = total - sum(quotas)
    while shortfall > 0:
        progressed = False
        for g in order:
            if shortfall == 0:
                break
            if quotas[g] < counts[g]:
                quotas[g] += 1
                shortfall -= 1
                progressed = True
        if not progressed:
            raise DataError("cannot allocate split: not enough samples")
    return quotas


def stratified_split(
    samples: list[RawSample], train_size: int, test_size: int, seed: int = 0
) -> tuple[list[RawSample], list[RawSample]]:
    """Disjoint train/test subsets preserving the label proportions.

    Deterministic under the split seed; both subsets are shuffled so class
    blocks do not survive into batch order.
    """
    if train_size + test_size > len(samples):
        raise DataError(
            f"requested {train_size}+{test_size} samples but dataset has {len(samples)}"
        )
    rng = rng_for(seed, "split")
    classes = sorted({s.label for s in samples})
    members = {c: [i for i, s in enumerate(samples) if s.label == c] for c in classes}
    counts = [len(members[c]) for c in classes]
    train_quota = _allocate(counts, train_size)
    leftover = [n - q for n, q in zip(counts, train_quota)]
    test_quota = _allocate(leftover, test_size)

    train_idx: list[int] = []
    test_idx: list[int] = []
    for c, tr_q, te_q in zip(classes, train_quota, test_quota):
        perm = rng.permutation(len(members[c]))
        chosen = [members[c][p] for p in perm]
        train_idx.extend(chosen[:tr_q])
        test_idx.extend(chosen[tr_q : tr_q + te_q])
    train_idx = [train_idx[p] for p in rng.permutation(len(train_idx))]
    test_idx = [test_idx[p] for p in rng.permutation(len(test_idx))]
    return [samples[i] for i in train_idx], [samples[i] for i in test_idx]


def write_loss_csv(path: str | Path, rows: list[TrainLogRow]) -> None:
    """Write a training log with the exact documented header."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(LOSS_CSV_HEADER.split(","))
        for row in rows:
            writer.writerow([
                row.iteration, repr(row.loss), repr(row.loss_std),
                repr(row.lower_bound), repr(row.upper_bound),
                repr(row.grad_norm), repr(row.cv),
            ])


def _metrics_payload(chash: str, train: Metrics, test: Metrics) -> dict:
    values = {}
    for prefix, m in (("train", train), ("test", test)):
        values[f"{prefix}_accuracy"] = m.accuracy
        values[f"{prefix}_precision"] = m.precision
        values[f"{prefix}_recall"] = m.recall
        values[f"{prefix}_f1"] = m.f1
    payload = {"config_hash": chash}
    payload.update((k, values[k]) for k in METRICS_KEYS if k != "config_hash")
    return payload


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _stratified_subset(labels: np.ndarray, size: int, seed: int) -> np.ndarray:
    """Indices of a label-proportional subsample, sorted ascending."""
    rng = rng_for(seed, "kernel-subsample")
    classes = sorted(set(labels.tolist()))
    members = [np.flatnonzero(labels == c) for c in classes]
    quotas = _allocate([m.size for m in members], size)
    picked: list[np.ndarray] = []
    for idx, quota in zip(members, quotas):
        perm = rng.permutation(idx.size)[:quota]
        picked.append(idx[perm])
    return np.sort(np.concatenate(picked))


def run_experiment(config: ExperimentConfig) -> RunReport:
    """Execute the full pipeline and write all artifacts to the output dir.

    Phases run in order: data, qae, latents, kernel, qsvc, evaluate.  A
    failure in any phase persists the loss logs gathered so far and
    re-raises as ``PhaseError`` naming the phase (config and data problems
    keep their own types).
    """
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    chash = config_hash(config)
    echo = dataclasses.asdict(config)
    workers = config.workers or (os.cpu_count() or 1)
    noise = DepolarizingModel(p1=config.p1, p2=config.p2) if config.noise else None
    seed = config.seed

    artifacts: dict[str, str] = {}
    phase_seconds: dict[str, float] = {}
    qae_rows: list[TrainLogRow] = []
    kernel_rows: list[TrainLogRow] = []
    phase = "data"

    def finish_phase(started: float) -> None:
        phase_seconds[phase] = time.perf_counter() - started
        logger.info("phase %-8s finished in %.2f s", phase, phase_seconds[phase])

    try:
        tick = time.perf_counter()
        samples = load_dataset(config.dataset, config.label_column)
        train_raw, test_raw = stratified_split(
            samples, config.train_size, config.test_size, config.split_seed
        )
        stats = fit_standardizer(train_raw)
        try:
            train_enc = [preprocess(s, stats) for s in train_raw]
            test_enc = [preprocess(s, stats) for s in test_raw]
        except DegenerateSampleError as exc:
            raise DataError(f"sample not encodable: {exc}") from None
        y_train = np.array([s.label for s in train_raw], dtype=float)
        y_test = np.array([s.label for s in test_raw], dtype=float)
        n_q = num_qubits_for(train_raw[0].features.size)
        if n_q <= config.n_l:
            raise ConfigError(
                f"n_l={config.n_l} leaves no trash qubits for {n_q}-qubit samples"
            )
        finish_phase(tick)

        phase = "qae"
        tick = time.perf_counter()
        qae_config = QaeConfig(
            n_q=n_q, n_l=config.n_l, reps=config.qae_reps,
            batch_size=config.qae_batch_size, num_batches=config.qae_num_batches,
            shots=config.shots, max_iters=config.qae_max_iters,
            seed=derive_seed(seed, "qae"),
        )
        cobyla_config = CobylaConfig(
            max_iters=config.qae_max_iters,
            rho_begin=config.cobyla_rho_begin, rho_end=config.cobyla_rho_end,
        )

        def optimizer(f, x0, on_iteration=None):
            return cobyla_minimize(f, x0, cobyla_config, on_iteration=on_iteration)

        theta, qae_rows = train_qae(qae_config, train_enc, optimizer, noise)
        write_loss_csv(out / "qae_loss.csv", qae_rows)
        artifacts["qae_loss"] = str(out / "qae_loss.csv")
        finish_phase(tick)

        phase = "latents"
        tick = time.perf_counter()
        z_train = np.stack([
            extract_latent(qae_config, theta, enc, noise=noise,
                           seed=derive_seed(seed, "latent-train", i))
            for i, enc in enumerate(train_enc)
        ])
        z_test = np.stack([
            extract_latent(qae_config, theta, enc, noise=noise,
                           seed=derive_seed(seed, "latent-test", i))
            for i, enc in enumerate(test_enc)
        ])
        finish_phase(tick)

        phase = "kernel"
        tick = time.perf_counter()
        # one feature-map qubit per latent probability component
        fm_config = FeatureMapConfig(
            n_k=2**config.n_l, layers=config.kernel_layers, shots=config.shots
        )
        phi0 = init_kernel_params(fm_config, seed)
        if 0 < config.kernel_train_size < len(train_enc):
            sub = _stratified_subset(y_train, config.kernel_train_size, seed)
        else:
            sub = np.arange(len(train_enc))
        spsa_config = SpsaConfig(
            max_iters=config.kernel_spsa_iters, a=config.spsa_a, c=config.spsa_c,
            seed=derive_seed(seed, "kernel-spsa"),
        )
        phi, kernel_rows = train_kernel(
            z_train[sub], y_train[sub], phi0, spsa_config, fm_config,
            noise=noise, C=config.C, workers=workers,
        )
        write_loss_csv(out / "kernel_loss.csv", kernel_rows)
        artifacts["kernel_loss"] = str(out / "kernel_loss.csv")
        finish_phase(tick)

        phase = "qsvc"
        tick = time.perf_counter()
        K_train = kernel_matrix(
            z_train, phi, fm_config, noise=noise,
            seed=derive_seed(seed, "train-kernel"), workers=workers,
        )
        K_train.to_csv(out / "kernel_train.csv")
        artifacts["kernel_train"] = str(out / "kernel_train.csv")
        model = solve_dual(K_train, y_train, C=config.C, tol=config.svm_tol)
        (out / "model.json").write_text(model.to_json(), encoding="utf-8")
        artifacts["model"] = str(out / "model.json")
        train_pred = predict(model, K_train.entries)
        finish_phase(tick)

        phase = "evaluate"
        tick = time.perf_counter()
        K_cross = cross_kernel_matrix(
            z_test, z_train, phi, fm_config, noise=noise,
            seed=derive_seed(seed, "test-kernel"), workers=workers,
        )
        test_pred = predict(model, K_cross)
        finish_phase(tick)
    except (ConfigError, DataError):
        raise
    except Exception as exc:
        write_loss_csv(out / "qae_loss.csv", qae_rows)
        write_loss_csv(out / "kernel_loss.csv", kernel_rows)
        logger.error("phase '%s' failed; partial loss logs kept in %s", phase, out)
        raise PhaseError(phase, exc) from exc

    train_seconds = sum(
        phase_seconds[p] for p in ("data", "qae", "latents", "kernel", "qsvc")
    )
    train_metrics = compute_metrics(train_pred, y_train, elapsed_seconds=train_seconds)
    test_metrics = compute_metrics(test_pred, y_test, elapsed_seconds=phase_seconds["evaluate"])

    _write_json(out / "metrics.json", _metrics_payload(chash, train_metrics, test_metrics))
    artifacts["metrics"] = str(out / "metrics.json")

    pipeline_state = {
        "config_hash": chash,
        "label_column": config.label_column,
        "seed": seed,
        "n_q": n_q,
        "n_l": config.n_l,
        "qae_reps": config.qae_reps,
        "kernel_layers": config.kernel_layers,
        "shots": config.shots,
        "noise": config.noise,
        "p1": config.p1,
        "p2": config.p2,
        "mu": stats.mu.tolist(),
        "sigma": stats.sigma.tolist(),
        "theta": theta.theta.tolist(),
        "phi": phi.phi.tolist(),
        "train_latents": z_train.tolist(),
    }
    _write_json(out / "pipeline.json", pipeline_state)
    artifacts["pipeline"] = str(out / "pipeline.json")

    report = RunReport(
        config_hash=chash,
        config=echo,
        qae_log=qae_rows,
        kernel_log=kernel_rows,
        train_metrics=train_metrics,
        test_metrics=test_metrics,
        phase_seconds=phase_seconds,
        artifacts=artifacts,
    )
    run_report = {
        "config_hash": chash,
        "config": echo,
        "phase_seconds": phase_seconds,
        "train_metrics": {**_metrics_of(train_metrics), "config_hash": chash},
        "test_metrics": {**_metrics_of(test_metrics), "config_hash": chash},
        "qae_iterations": len(qae_rows),
        "kernel_iterations": len(kernel_rows),
        "artifacts": dict(artifacts),
    }
    _write_json(out / "run_report.json", run_report)
    report.artifacts["run_report"] = str(out / "run_report.json")
    logger.info(
        "train accuracy %.4f, test accuracy %.4f",
        train_metrics.accuracy, test_metrics.accuracy,
    )
    return report


def _metrics_of(m: Metrics) -> dict:
    return {
        "accuracy": m.accuracy, "precision": m.precision,
        "recall": m.recall, "f1": m.f1, "elapsed_seconds": m.elapsed_seconds,
    }


def evaluate_run(
    run_dir: str | Path,
    dataset: str | Path,
    label_column: str | None = None,
    workers: int = 0,
) -> Metrics:
    """Score a new dataset with the artifacts of a finished run."""
    run_dir = Path(run_dir)
    state_path = run_dir / "pipeline.json"
    model_path = run_dir / "model.json"
    for required in (state_path, model_path):
        if not required.exists():
            raise DataError(f"missing artifact {required}; is {run_dir} a finished run?")
    state = json.loads(state_path.read_text(encoding="utf-8"))
    model = SvmModel.from_json(model_path.read_text(encoding="utf-8"))
    workers = workers or (os.cpu_count() or 1)

    tick = time.perf_counter()
    samples = load_dataset(dataset, label_column or state["label_column"])
    stats = StandardizationStats(np.array(state["mu"]), np.array(state["sigma"]))
    try:
        encoded = [preprocess(s, stats) for s in samples]
    except DegenerateSampleError as exc:
        raise DataError(f"sample not encodable: {exc}") from None
    labels = np.array([s.label for s in samples], dtype=float)

    noise = DepolarizingModel(p1=state["p1"], p2=state["p2"]) if state["noise"] else None
    qae_config = QaeConfig(
        n_q=state["n_q"], n_l=state["n_l"], reps=state["qae_reps"],
        shots=state["shots"], seed=state["seed"],
    )
    theta = EncoderParams(np.array(state["theta"]))
    z = np.stack([
        extract_latent(qae_config, theta, enc, noise=noise,
                       seed=derive_seed(state["seed"], "latent-eval", i))
        for i, enc in enumerate(encoded)
    ])
    fm_config = FeatureMapConfig(
        n_k=2 ** state["n_l"], layers=state["kernel_layers"], shots=state["shots"]
    )
    phi = KernelParams(np.array(state["phi"]))
    K = cross_kernel_matrix(
        z, np.array(state["train_latents"]), phi, fm_config, noise=noise,
        seed=derive_seed(state["seed"], "eval-kernel"), workers=workers,
    )
    pred = predict(model, K)
    metrics = compute_metrics(pred, labels, elapsed_seconds=time.perf_counter() - tick)

    payload = {"config_hash": state["config_hash"], "dataset": str(dataset)}
    payload.update(_metrics_of(metrics))
    _write_json(run_dir / "eval_metrics.json", payload)
    logger.info(
        "evaluated %d samples: accuracy %.4f, f1 %.4f",
        len(samples), metrics.accuracy, metrics.f1,
    )
    return metrics


def _cmd_synth(args: argparse.Namespace) -> int:
    try:
        samples = generate_synthetic(args.n, args.d, args.separation, args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    write_dataset_csv(samples, args.out)
    logger.info("wrote %d samples to %s", len(samples), args.out)
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    if args.analytic and args.noise:
        raise ConfigError("--analytic (shots=0) and --noise are mutually exclusive")
    if args.analytic and args.shots:
        raise ConfigError("--analytic forces shots=0; drop --shots")
    data: dict = {}
    if args.config is not None:
        loaded = load_config(args.config)
        data = dataclasses.asdict(loaded)
    if args.dataset is not None:
        data["dataset"] = str(args.dataset)
    if "dataset" not in data:
        raise ConfigError("a dataset is required: config key 'dataset' or --dataset")
    if args.noise:
        data["noise"] = True
    if args.analytic:
        data["noise"] = False
        data["shots"] = 0
    for key in ("p1", "p2", "shots", "seed", "workers"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    if args.out is not None:
        data["out_dir"] = str(args.out)
    config = config_from_mapping(data)
    report = run_experiment(config)
    logger.info("run complete; report at %s", report.artifacts["run_report"])
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    evaluate_run(args.run, args.dataset, args.label_column, args.workers or 0)
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    run_dir = Path(args.run)
    report_path = run_dir / "run_report.json"
    if not report_path.exists():
        raise DataError(f"no run report found at {report_path}")
    report = json.loads(report_path.read_text(encoding="utf-8"))
    print(f"config {report['config_hash']}")
    for phase, seconds in report["phase_seconds"].items():
        print(f"  {phase:<9} {seconds:8.2f} s")
    for split in ("train", "test"):
        m = report[f"{split}_metrics"]
        print(
            f"  {split:<5} accuracy {m['accuracy']:.4f}  precision {m['precision']:.4f}  "
            f"recall {m['recall']:.4f}  f1 {m['f1']:.4f}"
        )
    for name, path in report["artifacts"].items():
        print(f"  {name:<12} {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qaedet",
        description="Autoencoder-compressed quantum-kernel anomaly detection pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="write a synthetic two-cluster dataset CSV")
    synth.add_argument("--n", type=int, default=200, help="total rows (even)")
    synth.add_argument("--d", type=int, default=4, help="feature count (>= 2)")
    synth.add_argument("--separation", type=float, default=6.0,
                       help="distance between cluster centers")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", type=Path, default=Path("dataset.csv"))
    synth.set_defaults(handler=_cmd_synth)

    train = sub.add_parser("train", help="run the full pipeline on a dataset")
    train.add_argument("--config", type=Path, help="YAML experiment config")
    train.add_argument("--dataset", type=Path, help="dataset CSV (overrides config)")
    train.add_argument("--noise", action="store_true", help="enable depolarizing noise")
    train.add_argument("--p1", type=float, help="single-qubit depolarizing probability")
    train.add_argument("--p2", type=float, help="two-qubit depolarizing probability")
    train.add_argument("--shots", type=int, help="measurement shots (0 = analytic)")
    train.add_argument("--analytic", action="store_true", help="force shots=0, no noise")
    train.add_argument("--seed", type=int, help="global seed")
    train.add_argument("--out", type=Path, help="output directory")
    train.add_argument("--workers", type=int, help="parallel kernel workers (0 = auto)")
    train.set_defaults(handler=_cmd_train)

    evaluate = sub.add_parser("evaluate", help="score a dataset with a finished run")
    evaluate.add_argument("--run", type=Path, required=True, help="run directory")
    evaluate.add_argument("--dataset", type=Path, required=True)
    evaluate.add_argument("--label-column", help="override the stored label column")
    evaluate.add_argument("--workers", type=int)
    evaluate.set_defaults(handler=_cmd_evaluate)

    report = sub.add_parser("report", help="print a summary of a finished run")
    report.add_argument("--run", type=Path, required=True, help="run directory")
    report.set_defaults(handler=_cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO,
        format="%(levelname)s %(message)s",
        handlers=[logging.StreamHandler(sys.stdout)],
    )
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        logger.error("config error: %s", exc)
        return 2
    except DataError as exc:
        logger.error("data error: %s", exc)
        return 3
    except PhaseError as exc:
        logger.error("%s", exc)
        return 4
    except Exception:
        logger.exception("unexpected failure")
        return 4


if __name__ == "__main__":
    sys.exit(main())
