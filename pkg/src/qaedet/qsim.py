"""Dense statevector simulator for a small fixed gate set.

Convention: qubit 0 is the least-significant bit of the basis index, and
bitstrings are written most-significant-qubit first.  Supported gates are
RY, H, X, Y, Z, CX and CSWAP; that set is closed under inversion (RY flips
its angle, the rest are involutions), which is all the pipeline needs.

States are immutable; every gate application returns a fresh vector.  The
array helpers at the bottom operate on raw arrays with an arbitrary batch
prefix, so trajectory ensembles can reuse them without per-gate wrapping.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_QUBITS = 20

GATE_ARITY = {"RY": 1, "H": 1, "X": 1, "Y": 1, "Z": 1, "CX": 2, "CSWAP": 3}

_H_MATRIX = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2.0)


def ry_matrix(theta: float) -> np.ndarray:
    """Rotation about Y: [[cos(t/2), -sin(t/2)], [sin(t/2), cos(t/2)]]."""
    c = np.cos(theta / 2.0)
    s = np.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


@dataclass(frozen=True)
class Gate:
    """One gate instance.

    RY carries either a concrete ``angle`` or the name of a parameter slot
    (``param``) to be bound later; the other kinds carry neither.
    """

    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None
    param: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in GATE_ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        qubits = tuple(int(q) for q in self.qubits)
        object.__setattr__(self, "qubits", qubits)
        if len(qubits) != GATE_ARITY[self.kind]:
            raise ValueError(
                f"{self.kind} acts on {GATE_ARITY[self.kind]} qubits, got {qubits}"
            )
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"{self.kind} qubits must be distinct, got {qubits}")
        if any(q < 0 for q in qubits):
            raise ValueError(f"negative qubit index in {qubits}")
        if self.kind == "RY":
            if (self.angle is None) == (self.param is None):
                raise ValueError("RY needs exactly one of angle or param")
        elif self.angle is not None or self.param is not None:
            raise ValueError(f"{self.kind} takes no angle or param")


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state on ``num_qubits`` qubits (amplitudes read-only)."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        n = int(self.num_qubits)
        if not 1 <= n <= MAX_QUBITS:
            raise ValueError(f"num_qubits must be in [1, {MAX_QUBITS}], got {n}")
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (2**n,):
            raise ValueError(f"expected {2**n} amplitudes, got shape {amps.shape}")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > 1e-8:
            raise ValueError(f"state norm {norm} deviates from 1 by more than 1e-8")
        amps.setflags(write=False)
        object.__setattr__(self, "num_qubits", n)
        object.__setattr__(self, "amplitudes", amps)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class MeasurementCounts:
    """Histogram of measured bitstrings; only observed outcomes appear."""

    shots: int
    counts: dict[str, int]

    def __post_init__(self) -> None:
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if sum(self.counts.values()) != self.shots:
            raise ValueError("counts must sum to shots")

    def frequency(self, bitstring: str) -> float:
        return self.counts.get(bitstring, 0) / self.shots


@dataclass(frozen=True)
class Circuit:
    """Gate list on a fixed register with named RY parameter slots.

    ``parameter_slots`` lists distinct slot names in first-appearance
    order; ``bind`` maps a flat vector in that order onto the gates.
    """

    num_qubits: int
    gates: tuple[Gate, ...]

    def __post_init__(self) -> None:
        n = int(self.num_qubits)
        if not 1 <= n <= MAX_QUBITS:
            raise ValueError(f"num_qubits must be in [1, {MAX_QUBITS}], got {n}")
        gates = tuple(self.gates)
        for g in gates:
            if max(g.qubits) >= n:
                raise ValueError(f"gate {g.kind} on {g.qubits} exceeds register {n}")
        slots: list[str] = []
        for g in gates:
            if g.param is not None and g.param not in slots:
                slots.append(g.param)
        object.__setattr__(self, "num_qubits", n)
        object.__setattr__(self, "gates", gates)
        object.__setattr__(self, "_slots", tuple(slots))

    @property
    def parameter_slots(self) -> tuple[str, ...]:
        return self._slots  # type: ignore[attr-defined]

    def bind(self, params: np.ndarray | list[float] | None = None) -> tuple[Gate, ...]:
        """Return concrete gates with every RY slot replaced by its value."""
        slots = self.parameter_slots
        if params is None:
            params = []
        values = np.asarray(params, dtype=float).ravel()
        if len(values) != len(slots):
            raise ValueError(
                f"expected {len(slots)} parameter values, got {len(values)}"
            )
        table = dict(zip(slots, values))
        bound = []
        for g in self.gates:
            if g.param is None:
                bound.append(g)
            else:
                bound.append(Gate("RY", g.qubits, angle=float(table[g.param])))
        return tuple(bound)


def zero_state(num_qubits: int) -> StateVector:
    amps = np.zeros(2**num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(num_qubits, amps)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Apply one bound gate; returns a new state, never mutates."""
    if max(gate.qubits) >= state.num_qubits:
        raise ValueError(f"gate qubits {gate.qubits} exceed register")
    if gate.param is not None:
        raise ValueError(f"unbound parameter {gate.param!r}")
    amps = apply_gate_array(state.amplitudes, gate, state.num_qubits)
    return StateVector(state.num_qubits, amps)


def run(
    circuit: Circuit,
    params: np.ndarray | list[float] | None = None,
    initial: StateVector | None = None,
) -> StateVector:
    """Evolve ``initial`` (default |0...0>) through the bound circuit."""
    if initial is None:
        initial = zero_state(circuit.num_qubits)
    if initial.num_qubits != circuit.num_qubits:
        raise ValueError(
            f"initial state has {initial.num_qubits} qubits, "
            f"circuit has {circuit.num_qubits}"
        )
    amps = initial.amplitudes
    for g in circuit.bind(params):
        amps = apply_gate_array(amps, g, circuit.num_qubits)
    return StateVector(circuit.num_qubits, amps)


def marginal_probabilities(state: StateVector, qubits: list[int]) -> np.ndarray:
    """Outcome distribution over a qubit subset.

    Entry ``b`` is the probability that the listed qubits read ``b``, with
    ``qubits[0]`` contributing the least-significant bit of ``b``.
    """
    n = state.num_qubits
    qs = [int(q) for q in qubits]
    if not qs:
        raise ValueError("qubits must be non-empty")
    if len(set(qs)) != len(qs):
        raise ValueError(f"duplicate qubits in {qs}")
    if any(q < 0 or q >= n for q in qs):
        raise ValueError(f"qubit out of range in {qs}")
    probs = state.probabilities().reshape([2] * n)
    # axis for qubit q is n-1-q; order kept axes so qubits[-1] is the MSB
    kept = [n - 1 - q for q in reversed(qs)]
    rest = [ax for ax in range(n) if ax not in kept]
    marg = probs.transpose(kept + rest).reshape(2 ** len(qs), -1).sum(axis=1)
    return marg


def sample(
    state: StateVector, qubits: list[int], shots: int, seed: int
) -> MeasurementCounts:
    """Draw ``shots`` measurement outcomes of the listed qubits."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = marginal_probabilities(state, qubits)
    probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    histogram = rng.multinomial(shots, probs)
    width = len(qubits)
    counts = {
        format(b, f"0{width}b"): int(c) for b, c in enumerate(histogram) if c > 0
    }
    return MeasurementCounts(shots, counts)


def inverse_gates(gates: tuple[Gate, ...]) -> tuple[Gate, ...]:
    """Inverse of a bound gate sequence: reversed order, RY angles negated."""
    inv = []
    for g in reversed(gates):
        if g.param is not None:
            raise ValueError("cannot invert a circuit with unbound parameters")
        if g.kind == "RY":
            inv.append(Gate("RY", g.qubits, angle=-g.angle))
        else:
            inv.append(g)
    return tuple(inv)


# -- raw array kernels -------------------------------------------------------
#
# All helpers below take amplitudes of shape (..., 2**n) and vectorize over
# any leading batch axes.  Permutation gates are applied via cached index
# tables; H and RY go through the generic 2x2 path.


@lru_cache(maxsize=None)
def _perm_table(kind: str, qubits: tuple[int, ...], n: int) -> np.ndarray:
    idx = np.arange(2**n)
    if kind == "X":
        return idx ^ (1 << qubits[0])
    if kind == "CX":
        c, t = qubits
        flip = ((idx >> c) & 1) << t
        return idx ^ flip
    if kind == "CSWAP":
        c, a, b = qubits
        bit_a = (idx >> a) & 1
        bit_b = (idx >> b) & 1
        differ = (bit_a ^ bit_b) & ((idx >> c) & 1)
        return idx ^ (differ << a) ^ (differ << b)
    raise ValueError(kind)


@lru_cache(maxsize=None)
def _z_signs(q: int, n: int) -> np.ndarray:
    idx = np.arange(2**n)
    return np.where((idx >> q) & 1, -1.0, 1.0)


@lru_cache(maxsize=None)
def _y_phases(q: int, n: int) -> np.ndarray:
    # Y|0> = i|1>, Y|1> = -i|0>: after flipping bit q, the phase depends on
    # the destination bit value.
    idx = np.arange(2**n)
    return np.where((idx >> q) & 1, 1j, -1j)


def _apply_2x2(amps: np.ndarray, mat: np.ndarray, q: int, n: int) -> np.ndarray:
    shape = amps.shape
    low = 1 << q
    high = 1 << (n - 1 - q)
    t = amps.reshape(shape[:-1] + (high, 2, low))
    a0 = t[..., 0, :]
    a1 = t[..., 1, :]
    out = np.empty_like(t)
    out[..., 0, :] = mat[0, 0] * a0 + mat[0, 1] * a1
    out[..., 1, :] = mat[1, 0] * a0 + mat[1, 1] * a1
    return out.reshape(shape)


def apply_gate_array(amps: np.ndarray, gate: Gate, n: int) -> np.ndarray:
    """Apply one bound gate to amplitudes of shape (..., 2**n)."""
    kind = gate.kind
    if kind == "RY":
        return _apply_2x2(amps, ry_matrix(gate.angle), gate.qubits[0], n)
    if kind == "H":
        return _apply_2x2(amps, _H_MATRIX, gate.qubits[0], n)
    if kind == "Z":
        return amps * _z_signs(gate.qubits[0], n)
    if kind == "X":
        return amps[..., _perm_table("X", gate.qubits, n)]
    if kind == "Y":
        q = gate.qubits[0]
        return amps[..., _perm_table("X", (q,), n)] * _y_phases(q, n)
    if kind in ("CX", "CSWAP"):
        return amps[..., _perm_table(kind, gate.qubits, n)]
    raise ValueError(f"unknown gate kind {kind!r}")
