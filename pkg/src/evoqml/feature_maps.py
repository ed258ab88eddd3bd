"""Data-encoding circuits: the two-repetition ZZ map and the RX product map."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .statevector import Gate, GateKind, StateVector, run_circuit

TWO_PI = 2 * np.pi


class FeatureMapKind(str, enum.Enum):
    ZZ_FULL = "ZZ_FULL"
    RX_PRODUCT = "RX_PRODUCT"


@dataclass(frozen=True)
class FeatureMapSpec:
    kind: FeatureMapKind
    n_features: int
    repetitions: int = 2

    def __post_init__(self):
        object.__setattr__(self, "kind", FeatureMapKind(self.kind))
        if self.n_features < 1:
            raise ValueError("n_features must be >= 1")
        if self.kind is FeatureMapKind.ZZ_FULL and self.repetitions != 2:
            raise ValueError("ZZ_FULL uses exactly 2 repetitions")

    @property
    def n_qubits(self) -> int:
        return self.n_features


def _as_sample(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != n:
        raise ValueError(f"sample has {x.shape[0]} features, map expects {n}")
    return x


def _pair_coefficient(x: np.ndarray, i: int, j: int):
    return (np.pi - x[..., i]) * (np.pi - x[..., j])


def zz_feature_map_gates(x, n: int) -> list[Gate]:
    """Gates of ``V H V H`` (H layer applied first), ``V = prod RZ(2 x_i) * prod_{i<j} RZZ(2 (pi-x_i)(pi-x_j))``."""
    x = _as_sample(x, n)
    v = [Gate(GateKind.RZ, (i,), 2.0 * x[i]) for i in range(n)]
    v += [Gate(GateKind.RZZ, (i, j), 2.0 * _pair_coefficient(x, i, j)) for i, j in combinations(range(n), 2)]
    h = [Gate(GateKind.H, (i,)) for i in range(n)]
    return h + v + h + v


def rx_product_map_gates(x, n: int) -> list[Gate]:
    x = _as_sample(x, n)
    bad = np.flatnonzero((x < 0) | (x >= TWO_PI))
    if bad.size:
        raise ValueError(
            f"features {bad.tolist()} outside [0, 2pi): RX_PRODUCT expects min-max scaled inputs"
        )
    return [Gate(GateKind.RX, (i,), x[i]) for i in range(n)]


def feature_map_gates(spec: FeatureMapSpec, x) -> list[Gate]:
    if spec.kind is FeatureMapKind.ZZ_FULL:
        return zz_feature_map_gates(x, spec.n_features)
    return rx_product_map_gates(x, spec.n_features)


def prepare_state(spec: FeatureMapSpec, x) -> StateVector:
    return run_circuit(spec.n_qubits, feature_map_gates(spec, x))


def _z_signs(n: int) -> np.ndarray:
    idx = np.arange(2**n)
    return 1.0 - 2.0 * ((idx[None, :] >> np.arange(n)[:, None]) & 1)


def _hadamard_all(n: int) -> np.ndarray:
    h = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
    out = np.ones((1, 1))
    for _ in range(n):
        out = np.kron(out, h)
    return out


def prepare_states(spec: FeatureMapSpec, X) -> np.ndarray:
    """Encoded states for every row of ``X`` as a ``(samples, 2**n)`` array.

    Vectorized closed form of :func:`prepare_state`: the diagonal layer of the
    ZZ map is a phase per basis state and the RX map is a product state.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = spec.n_features
    if X.shape[1] != n:
        raise ValueError(f"data has {X.shape[1]} features, map expects {n}")
    if spec.kind is FeatureMapKind.RX_PRODUCT:
        if np.any((X < 0) | (X >= TWO_PI)):
            raise ValueError("RX_PRODUCT expects min-max scaled inputs in [0, 2pi)")
        # qubit q contributes cos(x/2) for bit 0 and -i sin(x/2) for bit 1
        out = np.ones((X.shape[0], 1), dtype=complex)
        for q in reversed(range(n)):
            local = np.stack([np.cos(X[:, q] / 2), -1j * np.sin(X[:, q] / 2)], axis=1)
            out = (out[:, :, None] * local[:, None, :]).reshape(X.shape[0], -1)
        return out
    z = _z_signs(n)
    phase = X @ z
    for i, j in combinations(range(n), 2):
        phase = phase + _pair_coefficient(X, i, j)[:, None] * (z[i] * z[j])[None, :]
    diag = np.exp(-1j * phase)
    plus = _hadamard_all(n)[:, 0]
    psi = diag * plus[None, :]
    psi = psi @ _hadamard_all(n).T
    return diag * psi
