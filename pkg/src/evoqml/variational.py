"""Fixed-ansatz variational classifier and barren-plateau diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .encoding import BinaryParityEncoding, LabelEncoding, LossKind, accuracy, estimates, loss_and_grad
from .evolution import GenerationRecord
from .feature_maps import FeatureMapSpec, prepare_states
from .statevector import Gate, GateKind, PauliZObservable, apply_gate_array, apply_matrix, probabilities

SHIFT = math.pi / 2


@dataclass(frozen=True)
class AnsatzSpec:
    """Per layer: RY on every qubit, RZ on every qubit, then a ring of fixed RZZ entanglers."""

    n_qubits: int
    layers: int
    entangler_angle: float = math.pi / 2

    def __post_init__(self):
        if self.n_qubits < 1 or self.layers < 1:
            raise ValueError("ansatz needs n_qubits >= 1 and layers >= 1")

    @property
    def n_params(self) -> int:
        return 2 * self.n_qubits * self.layers

    def ring(self) -> list[tuple[int, int]]:
        n = self.n_qubits
        if n == 1:
            return []
        if n == 2:
            return [(0, 1)]
        return [(i, (i + 1) % n) for i in range(n)]


@dataclass
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


def build_ansatz(spec: AnsatzSpec, theta) -> list[Gate]:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != spec.n_params:
        raise ValueError(f"ansatz takes {spec.n_params} parameters, got {theta.shape[0]}")
    n = spec.n_qubits
    gates = []
    for layer in range(spec.layers):
        base = 2 * n * layer
        gates += [Gate(GateKind.RY, (q,), theta[base + q]) for q in range(n)]
        gates += [Gate(GateKind.RZ, (q,), theta[base + n + q]) for q in range(n)]
        gates += [Gate(GateKind.RZZ, pair, spec.entangler_angle) for pair in spec.ring()]
    return gates


def _param_slots(spec: AnsatzSpec) -> list[int | None]:
    """Parameter index carried by each gate of :func:`build_ansatz` (``None`` for entanglers)."""
    n = spec.n_qubits
    slots: list[int | None] = []
    for layer in range(spec.layers):
        slots += list(range(2 * n * layer, 2 * n * (layer + 1)))
        slots += [None] * len(spec.ring())
    return slots


class AnsatzModel:
    """Estimates, loss and exact gradient of the ansatz on a fixed batch of encoded states."""

    def __init__(self, spec: AnsatzSpec, states, labels, enc: LabelEncoding, loss: LossKind):
        self.spec = spec
        self.states = np.asarray(states, dtype=complex)
        self.labels = np.asarray(labels)
        self.enc = enc
        self.loss_kind = LossKind(loss)
        if self.states.shape[-1] != 2**spec.n_qubits:
            raise ValueError("encoded states do not match the ansatz width")

    def outputs(self, theta, states=None) -> np.ndarray:
        psi = self.states if states is None else states
        for g in build_ansatz(self.spec, theta):
            psi = apply_gate_array(psi, g, self.spec.n_qubits)
        return estimates(probabilities(psi), self.enc)

    def loss(self, theta) -> float:
        return loss_and_grad(self.outputs(theta), self.labels, self.loss_kind, need_grad=False)[0]

    def output_jacobian(self, theta):
        """Outputs at ``theta`` and their parameter-shift derivatives, shape ``(params,) + outputs.shape``.

        Every parameter sits in exactly one ``exp(-i t P / 2)`` gate with ``P^2 = I``,
        so ``(f(t + pi/2) - f(t - pi/2)) / 2`` is exact for the (state-linear) estimates.
        Prefix states are kept from a forward sweep; the suffix unitary is grown
        backwards, so each shifted evaluation costs one gate and one matrix product.
        """
        n = self.spec.n_qubits
        gates = build_ansatz(self.spec, theta)
        slots = _param_slots(self.spec)
        prefix = [self.states]
        for g in gates:
            prefix.append(apply_gate_array(prefix[-1], g, n))
        out = estimates(probabilities(prefix[-1]), self.enc)
        jac = np.zeros((self.spec.n_params,) + out.shape)
        suffix = np.eye(2**n, dtype=complex)
        for i in range(len(gates) - 1, -1, -1):
            g = gates[i]
            k = slots[i]
            if k is not None:
                shifted = []
                for delta in (SHIFT, -SHIFT):
                    psi = apply_gate_array(prefix[i], g.with_angle(g.angle + delta), n)
                    shifted.append(estimates(probabilities(psi @ suffix.T), self.enc))
                jac[k] = 0.5 * (shifted[0] - shifted[1])
            suffix = apply_matrix(suffix, g.matrix().T, g.qubits, n)
        return out, jac

    def loss_and_gradient(self, theta):
        out, jac = self.output_jacobian(theta)
        loss, dl_dout = loss_and_grad(out, self.labels, self.loss_kind)
        grad = np.tensordot(jac, dl_dout, axes=dl_dout.ndim)
        return loss, grad


def parameter_shift_gradient(spec: AnsatzSpec, theta, data, fmap: FeatureMapSpec,
                             enc: LabelEncoding, loss: LossKind) -> np.ndarray:
    """dL/dtheta: parameter shift on the estimates, chained through the loss derivative."""
    model = AnsatzModel(spec, prepare_states(fmap, data.features), data.labels, enc, loss)
    return model.loss_and_gradient(theta)[1]


def train_vqc(spec: AnsatzSpec, data, fmap: FeatureMapSpec, enc: LabelEncoding, loss: LossKind,
              cfg: TrainConfig, test=None):
    """Full-batch gradient descent from a uniform random start; returns ``(theta, history)``.

    Each history record holds the loss and accuracies at the start of that epoch.
    """
    if hasattr(data, "train"):
        data, test = data.train, (data.test if test is None else test)
    if len(data.labels) == 0:
        raise ValueError("empty training set")
    model = AnsatzModel(spec, prepare_states(fmap, data.features), data.labels, enc, loss)
    test_states = None if test is None or len(test.labels) == 0 else prepare_states(fmap, test.features)
    rng = np.random.default_rng(cfg.seed)
    theta = rng.uniform(0.0, 2 * math.pi, spec.n_params)
    depth = len(build_ansatz(spec, theta))
    history = []
    for epoch in range(cfg.epochs):
        out, jac = model.output_jacobian(theta)
        loss_value, dl_dout = loss_and_grad(out, model.labels, model.loss_kind)
        test_acc = math.nan if test_states is None else accuracy(model.outputs(theta, test_states), test.labels, enc)
        history.append(GenerationRecord(epoch, loss_value, accuracy(out, model.labels, enc), test_acc, depth))
        theta = theta - cfg.learning_rate * np.tensordot(jac, dl_dout, axes=dl_dout.ndim)
    return theta, history


def gradient_variance_probe(n_qubits: int, layers: int, n_samples: int, seed: int,
                            observable: str = "global") -> float:
    """Sample variance of dF/dtheta_0 over uniform random parameters.

    ``F = <0|U(theta)^dag O U(theta)|0>`` with ``O`` the all-qubit Z parity
    (``"global"``) or Z on qubit 0 (``"local"``).
    """
    if n_samples < 30:
        raise ValueError("n_samples must be >= 30")
    if observable == "global":
        obs = PauliZObservable.global_z(n_qubits)
    elif observable == "local":
        obs = PauliZObservable.single(n_qubits, 0)
    else:
        raise ValueError(f"observable must be 'global' or 'local', got {observable!r}")
    spec = AnsatzSpec(n_qubits, layers)
    enc = BinaryParityEncoding(obs)
    zero = np.zeros((1, 2**n_qubits), dtype=complex)
    zero[0, 0] = 1.0
    model = AnsatzModel(spec, zero, np.ones(1), enc, LossKind.MSE)
    rng = np.random.default_rng(seed)
    grads = np.empty(n_samples)
    shift = np.zeros(spec.n_params)
    shift[0] = SHIFT
    for s in range(n_samples):
        theta = rng.uniform(0.0, 2 * math.pi, spec.n_params)
        grads[s] = 0.5 * (model.outputs(theta + shift)[0] - model.outputs(theta - shift)[0])
    return float(np.var(grads, ddof=1))


def cost_function_matrix(C, obs: PauliZObservable) -> float:
    """``tr[C |0><0| C^T H]`` for a real circuit matrix ``C``."""
    C = _real_matrix(C, obs)
    return float(C[:, 0] @ (obs.eigenvalues() * C[:, 0]))


def cost_gradient_matrix(C, obs: PauliZObservable) -> np.ndarray:
    """``dF/dC = 2 H C |0><0|``: only the first column is nonzero, equal to ``2 H C[:, 0]``."""
    C = _real_matrix(C, obs)
    grad = np.zeros_like(C)
    grad[:, 0] = 2.0 * obs.eigenvalues() * C[:, 0]
    return grad


def _real_matrix(C, obs: PauliZObservable) -> np.ndarray:
    C = np.asarray(C)
    if np.iscomplexobj(C):
        if np.any(C.imag != 0):
            raise ValueError("circuit matrix must be real")
        C = C.real
    C = C.astype(float)
    dim = 2**obs.n_qubits
    if obs.n_qubits > 4:
        raise ValueError("matrix analysis limited to n <= 4")
    if C.shape != (dim, dim):
        raise ValueError(f"expected a {dim}x{dim} matrix, got {C.shape}")
    return C
