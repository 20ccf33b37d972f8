"""Shared test utilities: independent dense oracles and random generators.

The gate oracle below builds full 2^n x 2^n matrices column by column from
the textbook action of each gate on basis states, with qubit 0 as the
least-significant index bit.  It shares no code with the simulator's
index-table kernels, so agreement is a real cross-check.
"""

from __future__ import annotations

import numpy as np

from qaedet.qsim import Circuit, Gate, StateVector


def oracle_gate_matrix(gate: Gate, n: int) -> np.ndarray:
    dim = 2**n
    mat = np.zeros((dim, dim), dtype=np.complex128)
    kind = gate.kind
    for col in range(dim):
        bits = [(col >> q) & 1 for q in range(n)]
        if kind == "X":
            q = gate.qubits[0]
            mat[col ^ (1 << q), col] = 1.0
        elif kind == "Y":
            q = gate.qubits[0]
            mat[col ^ (1 << q), col] = 1j if bits[q] == 0 else -1j
        elif kind == "Z":
            q = gate.qubits[0]
            mat[col, col] = -1.0 if bits[q] else 1.0
        elif kind == "H":
            q = gate.qubits[0]
            lo, hi = col & ~(1 << q), col | (1 << q)
            mat[lo, col] = 1.0 / np.sqrt(2.0)
            mat[hi, col] = (1.0 if bits[q] == 0 else -1.0) / np.sqrt(2.0)
        elif kind == "RY":
            q = gate.qubits[0]
            c, s = np.cos(gate.angle / 2.0), np.sin(gate.angle / 2.0)
            lo, hi = col & ~(1 << q), col | (1 << q)
            if bits[q] == 0:
                mat[lo, col] = c
                mat[hi, col] = s
            else:
                mat[lo, col] = -s
                mat[hi, col] = c
        elif kind == "CX":
            c, t = gate.qubits
            row = col ^ (1 << t) if bits[c] else col
            mat[row, col] = 1.0
        elif kind == "CSWAP":
            c, a, b = gate.qubits
            row = col
            if bits[c] and bits[a] != bits[b]:
                row = col ^ (1 << a) ^ (1 << b)
            mat[row, col] = 1.0
        else:
            raise ValueError(kind)
    return mat


def oracle_circuit_matrix(circuit: Circuit, params=None) -> np.ndarray:
    mat = np.eye(2**circuit.num_qubits, dtype=np.complex128)
    for g in circuit.bind(params):
        mat = oracle_gate_matrix(g, circuit.num_qubits) @ mat
    return mat


def reduced_density(state: StateVector, keep: list[int]) -> np.ndarray:
    """Partial trace onto the listed qubits, keep[0] as the low index bit."""
    n = state.num_qubits
    psi = state.amplitudes.reshape([2] * n)
    keep_axes = [n - 1 - q for q in reversed(keep)]
    other_axes = [ax for ax in range(n) if ax not in keep_axes]
    mat = np.transpose(psi, other_axes + keep_axes).reshape(-1, 2 ** len(keep))
    return np.einsum("ei,ej->ij", mat, mat.conj())


def random_state(rng: np.random.Generator, n: int) -> StateVector:
    amps = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    amps /= np.linalg.norm(amps)
    return StateVector(n, amps)


def random_circuit(
    rng: np.random.Generator, num_qubits: int, num_gates: int
) -> Circuit:
    kinds_1q = ["RY", "H", "X", "Y", "Z"]
    gates = []
    for _ in range(num_gates):
        roll = rng.random()
        if num_qubits >= 3 and roll < 0.15:
            qs = tuple(rng.choice(num_qubits, size=3, replace=False))
            gates.append(Gate("CSWAP", qs))
        elif num_qubits >= 2 and roll < 0.45:
            qs = tuple(rng.choice(num_qubits, size=2, replace=False))
            gates.append(Gate("CX", qs))
        else:
            kind = kinds_1q[rng.integers(len(kinds_1q))]
            q = (int(rng.integers(num_qubits)),)
            if kind == "RY":
                gates.append(Gate("RY", q, angle=float(rng.uniform(-np.pi, np.pi))))
            else:
                gates.append(Gate(kind, q))
    return Circuit(num_qubits, tuple(gates))
