"""Dense statevector simulation for the rotation gate set used by the classifiers.

Qubit 0 is the least significant bit of the basis index (little-endian), so
basis index ``i`` has qubit ``q`` in state ``(i >> q) & 1``.

Gate kernels operate on arrays of shape ``(..., 2**n)`` so a whole batch of
states (one per training sample) can be pushed through a circuit at once.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_ORACLE_QUBITS = 6
NORM_ATOL = 1e-10


class GateKind(str, enum.Enum):
    H = "H"
    RX = "RX"
    RY = "RY"
    RZ = "RZ"
    RXX = "RXX"
    RYY = "RYY"
    RZZ = "RZZ"

    @property
    def arity(self) -> int:
        return 2 if self in TWO_QUBIT_KINDS else 1

    @property
    def parametric(self) -> bool:
        return self is not GateKind.H


TWO_QUBIT_KINDS = frozenset({GateKind.RXX, GateKind.RYY, GateKind.RZZ})
ROTATION_KINDS = (GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.RXX, GateKind.RYY, GateKind.RZZ)


@dataclass(frozen=True)
class Gate:
    """One gate: ``kind`` acting on ``qubits`` with rotation ``angle`` (radians).

    Rotations realize ``exp(-i * angle * L / 2)`` for the Pauli (string) ``L``
    of their kind. ``angle`` is ``None`` for H.
    """

    kind: GateKind
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        qubits = tuple(int(q) for q in self.qubits)
        object.__setattr__(self, "qubits", qubits)
        if len(qubits) != kind.arity:
            raise ValueError(f"{kind.value} acts on {kind.arity} qubit(s), got {qubits}")
        if any(q < 0 for q in qubits):
            raise ValueError(f"negative qubit index in {qubits}")
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"duplicate qubit indices {qubits} for {kind.value}")
        if kind.parametric:
            if self.angle is None:
                raise ValueError(f"{kind.value} requires an angle")
            object.__setattr__(self, "angle", float(self.angle))
        elif self.angle is not None:
            raise ValueError("H takes no angle")

    def with_angle(self, angle: float) -> "Gate":
        return Gate(self.kind, self.qubits, angle)

    def matrix(self) -> np.ndarray:
        """2x2 or 4x4 unitary; 4x4 basis index is ``2*bit(qubits[0]) + bit(qubits[1])``."""
        return gate_matrix(self.kind, self.angle)


_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_HAD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULI = {"I": _I2, "X": _X, "Y": _Y, "Z": _Z}
_GENERATOR = {
    GateKind.RX: _X,
    GateKind.RY: _Y,
    GateKind.RZ: _Z,
    GateKind.RXX: np.kron(_X, _X),
    GateKind.RYY: np.kron(_Y, _Y),
    GateKind.RZZ: np.kron(_Z, _Z),
}


def gate_matrix(kind: GateKind, angle: float | None = None) -> np.ndarray:
    kind = GateKind(kind)
    if kind is GateKind.H:
        return _HAD.copy()
    gen = _GENERATOR[kind]
    # gen squares to identity, so exp(-i a gen / 2) = cos(a/2) I - i sin(a/2) gen
    half = 0.5 * angle
    return np.cos(half) * np.eye(gen.shape[0], dtype=complex) - 1j * np.sin(half) * gen


def apply_matrix(psi: np.ndarray, mat: np.ndarray, qubits: Sequence[int], n_qubits: int) -> np.ndarray:
    """Apply a 1- or 2-qubit ``mat`` to ``psi`` of shape ``(..., 2**n_qubits)``; returns a new array."""
    batch_shape = psi.shape[:-1]
    nb = len(batch_shape)
    t = psi.reshape(batch_shape + (2,) * n_qubits)
    axes = [nb + n_qubits - 1 - q for q in qubits]
    k = len(qubits)
    t = np.moveaxis(t, axes, list(range(-k, 0)))
    moved_shape = t.shape
    t = t.reshape(moved_shape[:-k] + (2**k,)) @ mat.T
    t = np.moveaxis(t.reshape(moved_shape), list(range(-k, 0)), axes)
    return np.ascontiguousarray(t).reshape(psi.shape)


def _check_gate(gate: Gate, n_qubits: int) -> None:
    for q in gate.qubits:
        if q >= n_qubits:
            raise ValueError(f"qubit index {q} out of range for {n_qubits} qubit(s)")


def apply_gate_array(psi: np.ndarray, gate: Gate, n_qubits: int) -> np.ndarray:
    _check_gate(gate, n_qubits)
    return apply_matrix(psi, gate.matrix(), gate.qubits, n_qubits)


def apply_gates_array(psi: np.ndarray, gates: Iterable[Gate], n_qubits: int) -> np.ndarray:
    for gate in gates:
        psi = apply_gate_array(psi, gate, n_qubits)
    return psi


@dataclass(frozen=True, eq=False)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != 2**self.n_qubits:
            raise ValueError(f"expected {2 ** self.n_qubits} amplitudes, got {amps.shape[0]}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    def __len__(self) -> int:
        return self.amplitudes.shape[0]


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    return StateVector(state.n_qubits, apply_gate_array(state.amplitudes, gate, state.n_qubits))


def run_circuit(n_qubits: int, gates: Iterable[Gate], initial: StateVector | None = None) -> StateVector:
    """Return ``C|0...0>`` (or ``C|initial>``) with ``gates[0]`` applied first."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    psi = StateVector.zero(n_qubits).amplitudes if initial is None else initial.amplitudes
    return StateVector(n_qubits, apply_gates_array(psi, gates, n_qubits))


def probabilities(state: StateVector | np.ndarray) -> np.ndarray:
    amps = state.amplitudes if isinstance(state, StateVector) else state
    return amps.real**2 + amps.imag**2


@dataclass(frozen=True)
class PauliZObservable:
    """Tensor product of Z (``True``) and identity (``False``) factors, indexed by qubit."""

    mask: tuple[bool, ...]

    def __post_init__(self):
        mask = tuple(bool(b) for b in self.mask)
        if not any(mask):
            raise ValueError("observable must flag at least one qubit with Z")
        object.__setattr__(self, "mask", mask)

    @classmethod
    def from_string(cls, s: str) -> "PauliZObservable":
        """``"ZIZ"`` -> Z on qubits 0 and 2 (character i is qubit i)."""
        s = s.strip().upper()
        if not s or set(s) - {"Z", "I"}:
            raise ValueError(f"observable string must use only 'Z' and 'I', got {s!r}")
        return cls(tuple(c == "Z" for c in s))

    @classmethod
    def global_z(cls, n_qubits: int) -> "PauliZObservable":
        return cls((True,) * n_qubits)

    @classmethod
    def single(cls, n_qubits: int, qubit: int = 0) -> "PauliZObservable":
        return cls(tuple(q == qubit for q in range(n_qubits)))

    @property
    def n_qubits(self) -> int:
        return len(self.mask)

    def __str__(self) -> str:
        return "".join("Z" if b else "I" for b in self.mask)

    def eigenvalues(self) -> np.ndarray:
        """(+1/-1) eigenvalue of every basis state, length ``2**n``."""
        idx = np.arange(2**self.n_qubits)
        bits = np.zeros_like(idx)
        for q, flagged in enumerate(self.mask):
            if flagged:
                bits ^= (idx >> q) & 1
        return 1.0 - 2.0 * bits

    def matrix(self) -> np.ndarray:
        return np.diag(self.eigenvalues())


def expectation_z(state: StateVector, obs: PauliZObservable) -> float:
    if obs.n_qubits != state.n_qubits:
        raise ValueError(f"observable acts on {obs.n_qubits} qubits, state has {state.n_qubits}")
    value = float(probabilities(state) @ obs.eigenvalues())
    return min(1.0, max(-1.0, value))


def sample_counts(state: StateVector | np.ndarray, shots: int, rng_seed: int | np.random.Generator) -> np.ndarray:
    """Histogram (length ``2**n``) of ``shots`` computational-basis measurements."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = probabilities(state)
    probs = probs / probs.sum()
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    return rng.multinomial(shots, probs)


def _embed(ops: dict[int, np.ndarray], n_qubits: int) -> np.ndarray:
    # kron order puts qubit n-1 leftmost, matching little-endian indices
    out = np.ones((1, 1), dtype=complex)
    for q in reversed(range(n_qubits)):
        out = np.kron(out, ops.get(q, _I2))
    return out


_PAULI_OF = {
    GateKind.RX: "X", GateKind.RY: "Y", GateKind.RZ: "Z",
    GateKind.RXX: "X", GateKind.RYY: "Y", GateKind.RZZ: "Z",
}


def dense_unitary_oracle(n_qubits: int, gates: Iterable[Gate]) -> np.ndarray:
    """Full ``2**n x 2**n`` unitary of the gate list, built from Kronecker-embedded Pauli strings.

    Independent of the tensor-reshaping kernel used by :func:`apply_gate`; meant for tests.
    """
    if n_qubits > MAX_ORACLE_QUBITS:
        raise ValueError(f"dense oracle limited to {MAX_ORACLE_QUBITS} qubits, got {n_qubits}")
    dim = 2**n_qubits
    u = np.eye(dim, dtype=complex)
    for gate in gates:
        _check_gate(gate, n_qubits)
        if gate.kind is GateKind.H:
            g = _embed({gate.qubits[0]: _HAD}, n_qubits)
        else:
            p = PAULI[_PAULI_OF[gate.kind]]
            string = _embed({q: p for q in gate.qubits}, n_qubits)
            g = np.cos(gate.angle / 2) * np.eye(dim) - 1j * np.sin(gate.angle / 2) * string
        u = g @ u
    return u
