"""Trainable fidelity quantum kernel.

Each input vector z is embedded by a feature map Phi(z, phi): per layer, a
data-encoding RY(pi * z_j) rotation on every qubit, a trainable RY(phi)
rotation on every qubit, then a linear CX ladder.  The kernel entry is the
compute-uncompute fidelity |<0|Phi(z_j)^dag Phi(z_i)|0>|^2: run the first
embedding forward, the second inverted, and read the all-zeros probability
(exactly in analytic mode, as a count ratio in shot mode).

Kernel training wraps the SPSA optimizer around the soft-margin dual value
of the resulting Gram matrix, so the feature map is tuned for the same
classifier that will consume it.
"""

from __future__ import annotations

import csv
import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .noise import DepolarizingModel, ensemble_counts
from .optim import SpsaConfig, spsa_minimize
from .qae import TrainLogRow
from .qsim import Circuit, Gate, inverse_gates, run, sample, zero_state
from .qsvc import dual_objective, solve_dual
from .seeding import derive_seed, rng_for


@dataclass(frozen=True)
class FeatureMapConfig:
    """Feature-map shape: qubit count, trainable layers, shots per entry."""

    n_k: int
    layers: int = 2
    shots: int = 0

    def __post_init__(self) -> None:
        if self.n_k < 1:
            raise ValueError("need at least one kernel qubit")
        if self.layers < 1:
            raise ValueError("need at least one layer")
        if self.shots < 0:
            raise ValueError("shots must be >= 0")

    @property
    def n_params(self) -> int:
        return self.layers * self.n_k


@dataclass(frozen=True)
class KernelParams:
    """Flat trainable angle vector, layer-major then qubit index."""

    phi: np.ndarray

    def __post_init__(self) -> None:
        phi = np.ascontiguousarray(self.phi, dtype=np.float64)
        if phi.ndim != 1:
            raise ValueError("phi must be a flat vector")
        if not np.all(np.isfinite(phi)):
            raise ValueError("phi entries must be finite")
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric Gram matrix of pairwise fidelities in [0, 1]."""

    entries: np.ndarray
    shots_used: int = 0
    params_hash: str = ""

    def __post_init__(self) -> None:
        entries = np.ascontiguousarray(self.entries, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("entries must be a square matrix")
        if not np.array_equal(entries, entries.T):
            raise ValueError("entries must be exactly symmetric")
        if np.any(entries < 0.0) or np.any(entries > 1.0):
            raise ValueError("fidelity entries must lie in [0, 1]")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    def to_csv(self, path) -> None:
        """Row-major export with a header row of sample indices."""
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(range(self.entries.shape[0]))
            writer.writerows(self.entries.tolist())


def params_hash(params: KernelParams) -> str:
    """Short stable identifier of the angles that produced a matrix."""
    return hashlib.sha256(params.phi.tobytes()).hexdigest()[:16]


def init_kernel_params(config: FeatureMapConfig, seed: int) -> KernelParams:
    """Uniform random angles in [0, pi), reproducible from the seed."""
    phi = rng_for(seed, "kernel-init").uniform(0.0, np.pi, config.n_params)
    return KernelParams(phi)


def build_feature_map(z, params: KernelParams, config: FeatureMapConfig) -> Circuit:
    """Embedding circuit with concrete angles for one input vector."""
    data = np.asarray(z, dtype=float).ravel()
    if data.size == 0 or not np.all(np.isfinite(data)):
        raise ValueError("z must be a non-empty finite vector")
    phi = params.phi
    if phi.size != config.n_params:
        raise ValueError(f"expected {config.n_params} angles, got {phi.size}")
    gates: list[Gate] = []
    for layer in range(config.layers):
        for j in range(config.n_k):
            gates.append(Gate("RY", (j,), angle=float(np.pi * data[j % data.size])))
        for j in range(config.n_k):
            gates.append(Gate("RY", (j,), angle=float(phi[layer * config.n_k + j])))
        for j in range(config.n_k - 1):
            gates.append(Gate("CX", (j, j + 1)))
    return Circuit(config.n_k, tuple(gates))


def kernel_entry(
    z_i,
    z_j,
    params: KernelParams,
    config: FeatureMapConfig,
    noise: DepolarizingModel | None = None,
    seed: int = 0,
) -> float:
    """Compute-uncompute fidelity estimate for one pair of inputs."""
    if config.shots == 0 and noise is not None:
        raise ValueError("analytic mode (shots=0) cannot model trajectory noise")
    forward = build_feature_map(z_i, params, config)
    backward = build_feature_map(z_j, params, config)
    circuit = Circuit(config.n_k, forward.gates + inverse_gates(backward.gates))
    all_qubits = list(range(config.n_k))
    zeros = "0" * config.n_k
    if config.shots == 0:
        final = run(circuit)
        value = float(np.abs(final.amplitudes[0]) ** 2)
    elif noise is None:
        final = run(circuit)
        counts = sample(final, all_qubits, config.shots, seed)
        value = counts.frequency(zeros)
    else:
        counts = ensemble_counts(
            circuit, None, zero_state(config.n_k), noise, all_qubits,
            config.shots, seed,
        )
        value = counts.frequency(zeros)
    return float(np.clip(value, 0.0, 1.0))


def _entry_jobs(pairs, Z_rows, Z_cols, params, config, noise, seeds, workers):
    def job(pair):
        i, j = pair
        return kernel_entry(Z_rows[i], Z_cols[j], params, config, noise, seeds(i, j))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(job, pairs))
    return [job(pair) for pair in pairs]


def kernel_matrix(
    Z,
    params: KernelParams,
    config: FeatureMapConfig,
    noise: DepolarizingModel | None = None,
    seed: int = 0,
    workers: int = 1,
) -> KernelMatrix:
    """Gram matrix over the rows of Z: upper triangle computed, mirrored.

    Entry (i, j) gets its own seed derived from (seed, i, j), so results do
    not depend on evaluation order or worker count.  In analytic noiseless
    mode the diagonal is checked against 1 and then stored exactly as 1.
    """
    latents = [np.asarray(z, dtype=float).ravel() for z in Z]
    n = len(latents)
    if n < 2:
        raise ValueError("need at least two samples")
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    values = _entry_jobs(
        pairs, latents, latents, params, config, noise,
        lambda i, j: derive_seed(seed, "entry", i, j), workers,
    )
    entries = np.zeros((n, n))
    for (i, j), value in zip(pairs, values):
        entries[i, j] = value
        entries[j, i] = value
    if config.shots == 0:
        diagonal = np.diag(entries)
        if np.any(np.abs(diagonal - 1.0) > 1e-12):
            raise RuntimeError("analytic self-fidelity drifted from 1")
        np.fill_diagonal(entries, 1.0)
    return KernelMatrix(entries, config.shots, params_hash(params))


def cross_kernel_matrix(
    Z_rows,
    Z_cols,
    params: KernelParams,
    config: FeatureMapConfig,
    noise: DepolarizingModel | None = None,
    seed: int = 0,
    workers: int = 1,
) -> np.ndarray:
    """Rectangular fidelity block K[i, j] = k(Z_rows[i], Z_cols[j])."""
    rows = [np.asarray(z, dtype=float).ravel() for z in Z_rows]
    cols = [np.asarray(z, dtype=float).ravel() for z in Z_cols]
    if not rows or not cols:
        raise ValueError("need at least one row and one column sample")
    pairs = [(i, j) for i in range(len(rows)) for j in range(len(cols))]
    values = _entry_jobs(
        pairs, rows, cols, params, config, noise,
        lambda i, j: derive_seed(seed, "cross", i, j), workers,
    )
    block = np.zeros((len(rows), len(cols)))
    for (i, j), value in zip(pairs, values):
        block[i, j] = value
    return block


def qsvc_margin_loss(K, y, C: float = 1.0, tol: float = 1e-3) -> float:
    """Soft-margin dual value of the solved classifier; lower is better.

    Solves the dual on the label-weighted matrix and reports
    1/2 a^T (yy^T * K) a - sum a, the minimization form of the objective.
    """
    model = solve_dual(K, y, C=C, tol=tol)
    return dual_objective(model.alpha, K, y)


def train_kernel(
    Z,
    y,
    phi0: KernelParams,
    spsa: SpsaConfig,
    config: FeatureMapConfig,
    noise: DepolarizingModel | None = None,
    C: float = 1.0,
    workers: int = 1,
) -> tuple[KernelParams, list[TrainLogRow]]:
    """Tune feature-map angles by SPSA descent on the margin loss.

    Each iteration evaluates two perturbed angle vectors; the logged loss
    is their mean, the spread columns summarize those two evaluations, and
    the gradient norm comes from the SPSA estimate itself.
    """
    labels = np.asarray(y, dtype=float).ravel()
    counter = iter(range(10**9))

    def objective(phi: np.ndarray) -> float:
        K = kernel_matrix(
            Z, KernelParams(phi), config, noise,
            seed=derive_seed(spsa.seed, "kernel-eval", next(counter)),
            workers=workers,
        )
        return qsvc_margin_loss(K, labels, C=C)

    rows: list[TrainLogRow] = []

    def on_iteration(rec) -> None:
        pair = np.array([rec.extras["f_plus"], rec.extras["f_minus"]])
        std = float(pair.std(ddof=1))
        mean = float(rec.loss)
        rows.append(
            TrainLogRow(
                iteration=rec.iteration,
                loss=mean,
                loss_std=std,
                lower_bound=mean - 1.96 * std,
                upper_bound=mean + 1.96 * std,
                grad_norm=float(rec.grad_norm),
                cv=std / mean if mean > 0 else float("nan"),
            )
        )

    best, _ = spsa_minimize(objective, phi0.phi, spsa, on_iteration=on_iteration)
    return KernelParams(best), rows
