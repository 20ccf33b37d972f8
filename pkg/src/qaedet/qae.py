"""SWAP-test quantum autoencoder.

The encoder is a hardware-efficient ansatz on the n_q input qubits (per
repetition: one RY per qubit, then a linear CX ladder).  Compression
quality of the n_t trash qubits is scored by a SWAP test against a fresh
|0> reference register: an ancilla is Hadamard-sandwiched around CSWAPs
of the two trash registers, and the loss is P(ancilla reads 1), which is
(1 - F)/2 for trash-reference fidelity F.  Perfect compression leaves the
trash in |0...0> and the loss at zero; the analytic loss can never exceed
one half.

Register layout on n_l + 2 n_t + 1 qubits: [0, n_l) latent, [n_l, n_q)
trash A (encoder side), [n_q, n_q + n_t) trash B reference, last the
ancilla.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .encoding import EncodedSample, amplitude_encode
from .noise import DepolarizingModel, ensemble_counts
from .optim import CobylaConfig, cobyla_minimize, spsa_gradient_estimate
from .qsim import Circuit, Gate, StateVector, marginal_probabilities, run, sample
from .seeding import derive_seed, rng_for

_PROBE_SHIFT = 0.1  # perturbation size for the logged gradient estimate


@dataclass(frozen=True)
class QaeConfig:
    """Autoencoder shape and loss-estimation settings (shots=0: analytic)."""

    n_q: int
    n_l: int
    reps: int = 2
    batch_size: int = 16
    num_batches: int = 5
    shots: int = 0
    max_iters: int = 150
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_l < 1:
            raise ValueError("need at least one latent qubit")
        if self.n_q <= self.n_l:
            raise ValueError("need at least one trash qubit (n_q > n_l)")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.batch_size < 1 or self.num_batches < 1:
            raise ValueError("batch_size and num_batches must be >= 1")
        if self.shots < 0:
            raise ValueError("shots must be >= 0")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")

    @property
    def n_t(self) -> int:
        return self.n_q - self.n_l

    @property
    def width(self) -> int:
        return self.n_l + 2 * self.n_t + 1

    @property
    def aux_qubit(self) -> int:
        return self.width - 1

    @property
    def n_params(self) -> int:
        return self.reps * self.n_q


@dataclass(frozen=True)
class EncoderParams:
    """Flat RY angle vector, reps-major then qubit index."""

    theta: np.ndarray

    def __post_init__(self) -> None:
        theta = np.ascontiguousarray(self.theta, dtype=np.float64)
        if theta.ndim != 1:
            raise ValueError("theta must be a flat vector")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)


@dataclass(frozen=True)
class LossStats:
    """Batch-loss aggregate: mean, spread and a 95% normal interval."""

    mean: float
    std: float
    ci_low: float
    ci_high: float
    cv: float


@dataclass(frozen=True)
class TrainLogRow:
    """One training iteration in the layout the loss CSVs use."""

    iteration: int
    loss: float
    loss_std: float
    lower_bound: float
    upper_bound: float
    grad_norm: float
    cv: float


@lru_cache(maxsize=None)
def build_encoder(config: QaeConfig) -> Circuit:
    """Ansatz on the n_q input qubits with reps * n_q parameter slots."""
    gates: list[Gate] = []
    for r in range(config.reps):
        for j in range(config.n_q):
            gates.append(Gate("RY", (j,), param=f"theta_{r}_{j}"))
        for j in range(config.n_q - 1):
            gates.append(Gate("CX", (j, j + 1)))
    return Circuit(config.n_q, tuple(gates))


@lru_cache(maxsize=None)
def build_swaptest_circuit(config: QaeConfig) -> Circuit:
    """Encoder followed by the trash-vs-reference SWAP test."""
    aux = config.aux_qubit
    gates = list(build_encoder(config).gates)
    gates.append(Gate("H", (aux,)))
    for i in range(config.n_t):
        gates.append(Gate("CSWAP", (aux, config.n_l + i, config.n_q + i)))
    gates.append(Gate("H", (aux,)))
    return Circuit(config.width, tuple(gates))


def init_params(config: QaeConfig, seed: int | None = None) -> EncoderParams:
    """Uniform random angles in [0, pi), reproducible from the seed."""
    seed = config.seed if seed is None else seed
    theta = rng_for(seed, "qae-init").uniform(0.0, np.pi, config.n_params)
    return EncoderParams(theta)


def _embed_input(enc: EncodedSample, config: QaeConfig) -> StateVector:
    # sample amplitudes on the low n_q qubits; trash B and ancilla in |0>
    if enc.n_q != config.n_q:
        raise ValueError(
            f"sample encodes {enc.n_q} qubits, autoencoder expects {config.n_q}"
        )
    amps = np.zeros(2**config.width, dtype=np.complex128)
    amps[: 2**config.n_q] = enc.values
    return StateVector(config.width, amps)


def qae_loss(
    config: QaeConfig,
    params: EncoderParams,
    batch: list[EncodedSample],
    noise: DepolarizingModel | None = None,
    seed: int | None = None,
) -> float:
    """Mean SWAP-test failure probability over a batch.

    Analytic mode (shots=0) reads P(aux=1) off the final state and is
    noiseless by definition; shot mode estimates it from measurement
    frequencies, one trajectory per shot when noise is present.
    """
    if not batch:
        raise ValueError("batch must be non-empty")
    if config.shots == 0 and noise is not None:
        raise ValueError("analytic mode (shots=0) cannot model trajectory noise")
    seed = config.seed if seed is None else seed
    theta = np.asarray(params.theta, dtype=float)
    if theta.size != config.n_params:
        raise ValueError(f"expected {config.n_params} angles, got {theta.size}")
    circuit = build_swaptest_circuit(config)
    aux = config.aux_qubit
    total = 0.0
    for i, enc in enumerate(batch):
        initial = _embed_input(enc, config)
        if config.shots == 0:
            final = run(circuit, theta, initial)
            total += float(marginal_probabilities(final, [aux])[1])
        elif noise is None:
            final = run(circuit, theta, initial)
            counts = sample(final, [aux], config.shots, derive_seed(seed, "shot", i))
            total += counts.frequency("1")
        else:
            counts = ensemble_counts(
                circuit, theta, initial, noise, [aux], config.shots,
                derive_seed(seed, "shot", i),
            )
            total += counts.frequency("1")
    return total / len(batch)


def loss_stats_from_batch_losses(losses: list[float]) -> LossStats:
    """Aggregate per-batch losses: sample std and mean +/- 1.96 std."""
    arr = np.asarray(losses, dtype=float)
    if arr.size < 2:
        raise ValueError("need at least two batch losses")
    mean = float(arr.mean())
    std = float(arr.std(ddof=1))
    cv = std / mean if mean > 0 else float("nan")
    return LossStats(mean, std, mean - 1.96 * std, mean + 1.96 * std, cv)


def batched_loss_stats(
    config: QaeConfig,
    params: EncoderParams,
    pool: list[EncodedSample],
    noise: DepolarizingModel | None = None,
    seed: int | None = None,
) -> LossStats:
    """Loss statistics over num_batches random batches drawn from the pool."""
    seed = config.seed if seed is None else seed
    if config.num_batches < 2:
        raise ValueError("need at least two batches for spread statistics")
    if len(pool) < config.batch_size:
        raise ValueError(
            f"pool of {len(pool)} cannot fill batches of {config.batch_size}"
        )
    rng = rng_for(seed, "batch-draw")
    losses = []
    for b in range(config.num_batches):
        picks = rng.choice(len(pool), size=config.batch_size, replace=False)
        batch = [pool[j] for j in picks]
        losses.append(qae_loss(config, params, batch, noise, derive_seed(seed, "batch", b)))
    return loss_stats_from_batch_losses(losses)


def train_qae(
    config: QaeConfig,
    pool: list[EncodedSample],
    optimizer=None,
    noise: DepolarizingModel | None = None,
    seed: int | None = None,
) -> tuple[EncoderParams, list[TrainLogRow]]:
    """Fit encoder angles by minimizing the batched SWAP-test loss.

    ``optimizer`` is any callable with the (f, x0, on_iteration) signature
    the optim module exposes; None selects the trust-region default with
    the config's iteration budget.  Each iteration logs the batch
    statistics of its evaluation plus a two-sided perturbation estimate of
    the gradient norm (estimated separately and only for the log when the
    optimizer itself builds no gradient).
    """
    seed = config.seed if seed is None else seed
    if optimizer is None:
        cobyla_config = CobylaConfig(max_iters=config.max_iters)

        def optimizer(f, x0, on_iteration=None):
            return cobyla_minimize(f, x0, cobyla_config, on_iteration=on_iteration)

    counter = iter(range(10**9))
    last_stats: list[LossStats] = [None]  # type: ignore[list-item]

    def objective(theta: np.ndarray) -> float:
        stats = batched_loss_stats(
            config, EncoderParams(theta), pool, noise,
            derive_seed(seed, "objective", next(counter)),
        )
        last_stats[0] = stats
        return stats.mean

    def probe(theta: np.ndarray) -> float:
        return batched_loss_stats(
            config, EncoderParams(theta), pool, noise,
            derive_seed(seed, "probe", next(counter)),
        ).mean

    rows: list[TrainLogRow] = []

    def on_iteration(rec) -> None:
        if np.isfinite(rec.grad_norm):
            grad_norm = float(rec.grad_norm)
        else:
            delta = rng_for(seed, "probe-delta", rec.iteration).choice(
                [-1.0, 1.0], size=rec.x.size
            )
            grad = spsa_gradient_estimate(probe, rec.x, _PROBE_SHIFT, delta)
            grad_norm = float(np.linalg.norm(grad))
        stats = last_stats[0]
        rows.append(
            TrainLogRow(
                iteration=len(rows),
                loss=stats.mean,
                loss_std=stats.std,
                lower_bound=stats.ci_low,
                upper_bound=stats.ci_high,
                grad_norm=grad_norm,
                cv=stats.cv,
            )
        )

    theta0 = init_params(config, seed).theta
    x_best, _ = optimizer(objective, theta0, on_iteration=on_iteration)
    return EncoderParams(x_best), rows


def extract_latent(
    config: QaeConfig,
    params: EncoderParams,
    enc: EncodedSample,
    shots: int | None = None,
    noise: DepolarizingModel | None = None,
    seed: int | None = None,
) -> np.ndarray:
    """Probability vector of the latent register after encoding.

    Analytic when shots=0, otherwise empirical measurement frequencies
    (one trajectory per shot under noise).  ``shots`` defaults to the
    config setting.  Entries sum to one.
    """
    shots = config.shots if shots is None else shots
    seed = config.seed if seed is None else seed
    if shots < 0:
        raise ValueError("shots must be >= 0")
    if shots == 0 and noise is not None:
        raise ValueError("analytic mode (shots=0) cannot model trajectory noise")
    theta = np.asarray(params.theta, dtype=float)
    if theta.size != config.n_params:
        raise ValueError(f"expected {config.n_params} angles, got {theta.size}")
    circuit = build_encoder(config)
    initial = amplitude_encode(enc)
    if initial.num_qubits != config.n_q:
        raise ValueError("sample register does not match autoencoder input")
    latent_qubits = list(range(config.n_l))
    if shots == 0:
        final = run(circuit, theta, initial)
        return marginal_probabilities(final, latent_qubits)
    if noise is None:
        final = run(circuit, theta, initial)
        counts = sample(final, latent_qubits, shots, derive_seed(seed, "latent"))
    else:
        counts = ensemble_counts(
            circuit, theta, initial, noise, latent_qubits, shots,
            derive_seed(seed, "latent"),
        )
    z = np.zeros(2**config.n_l)
    for b in range(z.size):
        z[b] = counts.frequency(format(b, f"0{config.n_l}b"))
    return z
