"""Depolarizing noise on top of the statevector simulator.

Two independent routes model the same channel:

* Monte-Carlo Pauli trajectories: after every gate, each touched qubit
  suffers a uniformly random Pauli (X, Y or Z) with probability ``p1`` for
  one-qubit gates and ``p2`` for multi-qubit gates.  Averaging projective
  statistics over trajectories approximates the exact channel.
* An exact density-matrix evolution (small registers only), used as the
  oracle the trajectory statistics are checked against.

State preparation and measurement are noiseless; errors follow gates only.

``trajectory_run`` evolves one trajectory from one seed, so callers may
fan trajectories out concurrently via ``derive_trajectory_seed``.  The
batched ``trajectory_ensemble`` is the throughput path: it evolves all
trajectories at once, drawing every trajectory's noise decisions from a
single generator seeded off the base seed.  The two paths share the gate
kernels and agree in distribution, which the tests pin down against the
density oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qsim import (
    Circuit,
    Gate,
    MeasurementCounts,
    StateVector,
    apply_gate_array,
    ry_matrix,
    _H_MATRIX,
    _perm_table,
)
from .seeding import derive_seed

MAX_DENSITY_QUBITS = 4

_PAULIS = (
    np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128),
    np.array([[0.0, -1j], [1j, 0.0]], dtype=np.complex128),
    np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128),
)
_PAULI_GATES = ("X", "Y", "Z")


@dataclass(frozen=True)
class DepolarizingModel:
    """Per-qubit Pauli error probabilities after 1-qubit and 2+-qubit gates."""

    p1: float = 0.001
    p2: float = 0.01

    def __post_init__(self) -> None:
        for name, p in (("p1", self.p1), ("p2", self.p2)):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")

    def gate_probability(self, gate: Gate) -> float:
        return self.p1 if len(gate.qubits) == 1 else self.p2


@dataclass(frozen=True)
class DensityMatrix:
    """Exact mixed state on a small register (Hermitian, unit trace, PSD)."""

    num_qubits: int
    matrix: np.ndarray

    def __post_init__(self) -> None:
        n = int(self.num_qubits)
        if not 1 <= n <= MAX_DENSITY_QUBITS:
            raise ValueError(
                f"num_qubits must be in [1, {MAX_DENSITY_QUBITS}], got {n}"
            )
        mat = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        dim = 2**n
        if mat.shape != (dim, dim):
            raise ValueError(f"expected {dim}x{dim} matrix, got {mat.shape}")
        if np.max(np.abs(mat - mat.conj().T)) > 1e-10:
            raise ValueError("density matrix must be Hermitian")
        if abs(np.trace(mat).real - 1.0) > 1e-10:
            raise ValueError("density matrix must have unit trace")
        if np.linalg.eigvalsh(mat).min() < -1e-9:
            raise ValueError("density matrix must be positive semidefinite")
        mat.setflags(write=False)
        object.__setattr__(self, "num_qubits", n)
        object.__setattr__(self, "matrix", mat)

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal().real.copy()


def pure_density(state: StateVector) -> DensityMatrix:
    amps = state.amplitudes
    return DensityMatrix(state.num_qubits, np.outer(amps, amps.conj()))


def derive_trajectory_seed(base_seed: int, index: int) -> int:
    """Seed for trajectory ``index``, so trajectories can run concurrently."""
    return derive_seed(base_seed, "trajectory", index)


def trajectory_run(
    circuit: Circuit,
    params: np.ndarray | list[float] | None,
    initial: StateVector,
    model: DepolarizingModel,
    seed: int,
) -> StateVector:
    """Evolve one stochastic Pauli trajectory; deterministic under seed."""
    if initial.num_qubits != circuit.num_qubits:
        raise ValueError("initial state size does not match circuit")
    n = circuit.num_qubits
    rng = np.random.default_rng(seed)
    amps = initial.amplitudes
    for g in circuit.bind(params):
        amps = apply_gate_array(amps, g, n)
        p = model.gate_probability(g)
        for q in g.qubits:
            if rng.random() < p:
                pauli = _PAULI_GATES[rng.integers(3)]
                amps = apply_gate_array(amps, Gate(pauli, (q,)), n)
    return StateVector(n, amps)


def trajectory_ensemble(
    circuit: Circuit,
    params: np.ndarray | list[float] | None,
    initial: StateVector,
    model: DepolarizingModel,
    shots: int,
    seed: int,
) -> np.ndarray:
    """Final states of ``shots`` independent trajectories, shape (shots, 2**n).

    All trajectories evolve in one batch; noise decisions for every
    (gate, qubit) site are drawn up front from a generator derived from
    the base seed, so results are reproducible and order-independent.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if initial.num_qubits != circuit.num_qubits:
        raise ValueError("initial state size does not match circuit")
    n = circuit.num_qubits
    bound = circuit.bind(params)
    sites = [(gi, q) for gi, g in enumerate(bound) for q in g.qubits]
    rng = np.random.default_rng(derive_seed(seed, "ensemble"))
    uniforms = rng.random((len(sites), shots))
    paulis = rng.integers(0, 3, size=(len(sites), shots))

    states = np.tile(initial.amplitudes, (shots, 1))
    site = 0
    for g in bound:
        states = apply_gate_array(states, g, n)
        p = model.gate_probability(g)
        for q in g.qubits:
            hits = uniforms[site] < p
            if hits.any():
                for code, kind in enumerate(_PAULI_GATES):
                    rows = np.nonzero(hits & (paulis[site] == code))[0]
                    if rows.size:
                        states[rows] = apply_gate_array(
                            states[rows], Gate(kind, (q,)), n
                        )
            site += 1
    return states


def ensemble_counts(
    circuit: Circuit,
    params: np.ndarray | list[float] | None,
    initial: StateVector,
    model: DepolarizingModel,
    qubits: list[int],
    shots: int,
    seed: int,
) -> MeasurementCounts:
    """One measured outcome per trajectory (shot), as a bitstring histogram.

    Bit conventions match ``qsim.sample``: ``qubits[0]`` is the low bit of
    the outcome index and bitstrings read most-significant-qubit first.
    """
    states = trajectory_ensemble(circuit, params, initial, model, shots, seed)
    n = circuit.num_qubits
    probs = _batch_marginal(np.abs(states) ** 2, qubits, n)
    rng = np.random.default_rng(derive_seed(seed, "measure"))
    cumulative = np.cumsum(probs, axis=1)
    u = rng.random(shots) * cumulative[:, -1]
    outcomes = np.minimum(
        (cumulative < u[:, None]).sum(axis=1), probs.shape[1] - 1
    )
    histogram = np.bincount(outcomes, minlength=probs.shape[1])
    width = len(qubits)
    counts = {
        format(b, f"0{width}b"): int(c) for b, c in enumerate(histogram) if c > 0
    }
    return MeasurementCounts(shots, counts)


def _batch_marginal(probs: np.ndarray, qubits: list[int], n: int) -> np.ndarray:
    """Marginal over a qubit subset for a batch of probability rows."""
    qs = [int(q) for q in qubits]
    if not qs or len(set(qs)) != len(qs) or any(q < 0 or q >= n for q in qs):
        raise ValueError(f"bad qubit subset {qs}")
    batch = probs.shape[0]
    t = probs.reshape([batch] + [2] * n)
    # axis for qubit q is n-q (after the batch axis); qubits[-1] becomes MSB
    kept = [n - q for q in reversed(qs)]
    rest = [ax for ax in range(1, n + 1) if ax not in kept]
    return t.transpose([0] + kept + rest).reshape(batch, 2 ** len(qs), -1).sum(axis=2)


# -- exact density-matrix oracle ----------------------------------------------


def _embed_single(mat: np.ndarray, q: int, n: int) -> np.ndarray:
    return np.kron(np.eye(2 ** (n - 1 - q)), np.kron(mat, np.eye(2**q)))


def _gate_unitary(gate: Gate, n: int) -> np.ndarray:
    if gate.kind == "RY":
        return _embed_single(ry_matrix(gate.angle), gate.qubits[0], n)
    if gate.kind == "H":
        return _embed_single(_H_MATRIX, gate.qubits[0], n)
    if gate.kind in ("X", "Y", "Z"):
        code = _PAULI_GATES.index(gate.kind)
        return _embed_single(_PAULIS[code], gate.qubits[0], n)
    # permutation gates: row i picks up old amplitude at perm[i]
    perm = _perm_table(gate.kind, gate.qubits, n)
    dim = 2**n
    mat = np.zeros((dim, dim), dtype=np.complex128)
    mat[np.arange(dim), perm] = 1.0
    return mat


def depolarize(matrix: np.ndarray, qubit: int, p: float, n: int) -> np.ndarray:
    """(1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z) on one qubit."""
    out = (1.0 - p) * matrix
    for pauli in _PAULIS:
        full = _embed_single(pauli, qubit, n)
        out = out + (p / 3.0) * (full @ matrix @ full.conj().T)
    return out


def density_evolve(
    circuit: Circuit,
    params: np.ndarray | list[float] | None,
    initial: DensityMatrix,
    model: DepolarizingModel,
) -> DensityMatrix:
    """Exact evolution under gates plus per-qubit depolarizing errors."""
    if initial.num_qubits != circuit.num_qubits:
        raise ValueError("initial state size does not match circuit")
    if circuit.num_qubits > MAX_DENSITY_QUBITS:
        raise ValueError(
            f"density evolution supports at most {MAX_DENSITY_QUBITS} qubits"
        )
    n = circuit.num_qubits
    rho = initial.matrix
    for g in circuit.bind(params):
        u = _gate_unitary(g, n)
        rho = u @ rho @ u.conj().T
        p = model.gate_probability(g)
        for q in g.qubits:
            rho = depolarize(rho, q, p, n)
    return DensityMatrix(n, rho)
