"""Label encodings: Z-parity estimator for two classes, bucketed basis probabilities for k classes.

Both estimators are linear in the measured probability vector, so each
encoding exposes a readout matrix and estimates for a batch are
``probs @ readout``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .statevector import PauliZObservable, StateVector, expectation_z, probabilities

EPS = 1e-10


class LossKind(str, enum.Enum):
    MSE = "MSE"
    LOG_LOSS = "LOG_LOSS"
    CROSS_ENTROPY = "CROSS_ENTROPY"


@dataclass(frozen=True)
class BinaryParityEncoding:
    observable: PauliZObservable
    threshold: float = 0.0

    n_classes = 2

    @property
    def n_qubits(self) -> int:
        return self.observable.n_qubits

    def readout(self) -> np.ndarray:
        return self.observable.eigenvalues()


@dataclass(frozen=True)
class MultiHotEncoding:
    """Disjoint basis-index buckets; bucket ``j`` collects the probability mass of class ``j``."""

    n_qubits: int
    buckets: tuple[tuple[int, ...], ...]
    _readout: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        buckets = tuple(tuple(int(i) for i in b) for b in self.buckets)
        object.__setattr__(self, "buckets", buckets)
        dim = 2**self.n_qubits
        if len(buckets) < 2:
            raise ValueError("multiclass encoding needs at least 2 buckets")
        seen: set[int] = set()
        for j, b in enumerate(buckets):
            if not b:
                raise ValueError(f"bucket {j} is empty")
            for i in b:
                if not 0 <= i < dim:
                    raise ValueError(f"bucket {j} index {i} out of range for {dim} basis states")
                if i in seen:
                    raise ValueError(f"basis index {i} appears in more than one bucket")
                seen.add(i)
        readout = np.zeros((dim, len(buckets)))
        for j, b in enumerate(buckets):
            readout[list(b), j] = 1.0
        readout.setflags(write=False)
        object.__setattr__(self, "_readout", readout)

    @property
    def n_classes(self) -> int:
        return len(self.buckets)

    @property
    def excluded(self) -> tuple[int, ...]:
        used = {i for b in self.buckets for i in b}
        return tuple(i for i in range(2**self.n_qubits) if i not in used)

    def readout(self) -> np.ndarray:
        return self._readout


LabelEncoding = BinaryParityEncoding | MultiHotEncoding


def default_partition(n_qubits: int, k: int) -> MultiHotEncoding:
    """Consecutive equal blocks over indices ``1 .. 2**n - 1``; index 0 and any remainder are left out."""
    usable = 2**n_qubits - 1
    if k < 2 or usable < k:
        raise ValueError(f"cannot split {usable} basis indices into {k} classes")
    size = usable // k
    return MultiHotEncoding(n_qubits, tuple(tuple(range(1 + j * size, 1 + (j + 1) * size)) for j in range(k)))


def parity_estimate(state: StateVector, enc: BinaryParityEncoding) -> float:
    return expectation_z(state, enc.observable)


def multiclass_estimates(omega, enc: MultiHotEncoding) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    if omega.shape[-1] != 2**enc.n_qubits:
        raise ValueError(f"distribution has {omega.shape[-1]} entries, encoding expects {2 ** enc.n_qubits}")
    total = omega.sum(axis=-1)
    if np.any(np.abs(total - 1.0) > 1e-9):
        raise ValueError("probabilities must sum to 1")
    return omega @ enc.readout()


def estimates(probs: np.ndarray, enc: LabelEncoding) -> np.ndarray:
    """Estimator(s) for a probability vector or a ``(samples, 2**n)`` batch."""
    return np.asarray(probs) @ enc.readout()


def state_estimates(state: StateVector, enc: LabelEncoding):
    if isinstance(enc, BinaryParityEncoding):
        return parity_estimate(state, enc)
    return multiclass_estimates(probabilities(state), enc)


def predict_label(est, enc: LabelEncoding) -> np.ndarray:
    """Binary: +1 where ``p >= threshold`` else -1. Multiclass: argmax with ties to the lowest class."""
    est = np.asarray(est, dtype=float)
    if isinstance(enc, BinaryParityEncoding):
        return np.where(est >= enc.threshold, 1, -1)
    return np.argmax(est, axis=-1)


def accuracy(est, labels, enc: LabelEncoding) -> float:
    return float(np.mean(predict_label(est, enc) == np.asarray(labels)))


def _check_labels(labels: np.ndarray, kind: LossKind, n_outputs: int | None) -> np.ndarray:
    if kind is LossKind.CROSS_ENTROPY:
        if labels.ndim == 2:
            labels = np.argmax(labels, axis=1)
        labels = labels.astype(int)
        if np.any((labels < 0) | (labels >= n_outputs)):
            raise ValueError(f"class label outside 0..{n_outputs - 1}")
        return labels
    if not np.all(np.isin(labels, (-1, 1))):
        raise ValueError("binary losses expect labels in {-1, +1}")
    return labels.astype(float)


def dataset_loss(outputs, labels, kind: LossKind) -> float:
    return loss_and_grad(outputs, labels, kind, need_grad=False)[0]


def loss_and_grad(outputs, labels, kind: LossKind, need_grad: bool = True):
    """Mean loss over samples and its gradient w.r.t. ``outputs`` (same shape)."""
    kind = LossKind(kind)
    out = np.asarray(outputs, dtype=float)
    labels = np.asarray(labels)
    if out.shape[0] == 0:
        raise ValueError("empty dataset")
    if labels.shape[0] != out.shape[0]:
        raise ValueError("outputs and labels are not aligned")
    m = out.shape[0]
    if kind is LossKind.CROSS_ENTROPY:
        if out.ndim != 2:
            raise ValueError("cross-entropy expects a (samples, classes) estimate matrix")
        y = _check_labels(labels, kind, out.shape[1])
        rows = np.arange(m)
        s = out.sum(axis=1) + EPS
        q = out[rows, y] / s + EPS
        # eps smoothing can push q a hair above 1; losses stay >= 0
        loss = float(np.mean(np.maximum(-np.log(q), 0.0)))
        if not need_grad:
            return loss, None
        # d(-log q)/d yhat_j = -(delta_jy / s - yhat_y / s^2) / q
        grad = (out[rows, y] / s**2 / q)[:, None] * np.ones_like(out)
        grad[rows, y] -= 1.0 / (s * q)
        return loss, grad / m
    if out.ndim != 1:
        raise ValueError("binary losses expect one estimate per sample")
    y = _check_labels(labels, kind, None)
    if kind is LossKind.MSE:
        diff = out - y
        loss = float(np.mean(diff**2))
        return loss, (2.0 * diff / m if need_grad else None)
    arg = (1.0 + y * out) / 2.0 + EPS
    loss = float(np.mean(np.maximum(-np.log(arg), 0.0)))
    return loss, (-(y / 2.0) / arg / m if need_grad else None)
