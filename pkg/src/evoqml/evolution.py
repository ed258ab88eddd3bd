"""Elitist evolution of variable-topology rotation circuits (the EQC trainer)."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .encoding import LabelEncoding, LossKind, accuracy, estimates, loss_and_grad
from .feature_maps import FeatureMapSpec, prepare_states
from .statevector import (
    ROTATION_KINDS,
    TWO_QUBIT_KINDS,
    Gate,
    GateKind,
    apply_gates_array,
    probabilities,
)

TWO_PI = 2 * math.pi
SINGLE_QUBIT_POOL = tuple(k for k in ROTATION_KINDS if k not in TWO_QUBIT_KINDS)


class Action(str, enum.Enum):
    INSERT = "INSERT"
    MODIFY = "MODIFY"
    SWAP = "SWAP"
    DELETE = "DELETE"


ACTIONS = (Action.INSERT, Action.MODIFY, Action.SWAP, Action.DELETE)


def wrap_angle(angle: float) -> float:
    a = math.fmod(angle, TWO_PI)
    if a < 0:
        a += TWO_PI
    # fmod of a tiny negative can land exactly on 2pi after the shift
    return 0.0 if a >= TWO_PI else a


@dataclass(frozen=True)
class CircuitGenome:
    """Ordered gate list ``U_1, ..., U_d`` (applied first to last); empty means identity."""

    n_qubits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        gates = tuple(self.gates)
        object.__setattr__(self, "gates", gates)
        for g in gates:
            if g.kind not in ROTATION_KINDS:
                raise ValueError(f"{g.kind.value} is not in the mutation pool")
            if any(q >= self.n_qubits for q in g.qubits):
                raise ValueError(f"gate {g} addresses a qubit outside 0..{self.n_qubits - 1}")
            if not 0.0 <= g.angle < TWO_PI:
                raise ValueError(f"gate angle {g.angle!r} outside [0, 2pi)")

    @property
    def depth(self) -> int:
        return len(self.gates)

    def __len__(self) -> int:
        return len(self.gates)


@dataclass
class MutationConfig:
    p_insert: float = 0.50
    p_modify: float = 0.30
    p_swap: float = 0.10
    p_delete: float = 0.10
    mu: int = 4
    max_generations: int = 500
    angle_perturbation_scale: float = math.pi / 8
    # "perturb" adds N(0, scale) to the angle, "redraw" samples a fresh uniform angle
    modify_mode: str = "perturb"
    early_stop_loss: float = 1e-6
    seed: int = 0
    shots: int | None = None

    def __post_init__(self):
        total = self.p_insert + self.p_modify + self.p_swap + self.p_delete
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"action probabilities sum to {total!r}, expected 1")
        if min(self.p_insert, self.p_modify, self.p_swap, self.p_delete) < 0:
            raise ValueError("action probabilities must be non-negative")
        if self.mu < 1:
            raise ValueError("mu must be >= 1")
        if self.max_generations < 1:
            raise ValueError("max_generations must be >= 1")
        if self.modify_mode not in ("perturb", "redraw"):
            raise ValueError(f"unknown modify_mode {self.modify_mode!r}")

    @property
    def action_probabilities(self) -> tuple[float, float, float, float]:
        return (self.p_insert, self.p_modify, self.p_swap, self.p_delete)


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    best_loss: float
    train_acc: float
    test_acc: float
    depth: int


def random_gate(n_qubits: int, rng: np.random.Generator) -> Gate:
    pool = ROTATION_KINDS if n_qubits >= 2 else SINGLE_QUBIT_POOL
    kind = pool[rng.integers(len(pool))]
    qubits = rng.choice(n_qubits, size=kind.arity, replace=False)
    return Gate(kind, tuple(int(q) for q in qubits), float(rng.uniform(0.0, TWO_PI)))


def sample_action(cfg: MutationConfig, rng: np.random.Generator) -> Action:
    return ACTIONS[rng.choice(4, p=cfg.action_probabilities)]


def apply_action(parent: CircuitGenome, action: Action, cfg: MutationConfig, rng: np.random.Generator) -> CircuitGenome:
    gates = list(parent.gates)
    two_qubit = [i for i, g in enumerate(gates) if g.kind in TWO_QUBIT_KINDS]
    if not gates or (action is Action.SWAP and not two_qubit):
        action = Action.INSERT
    if action is Action.INSERT:
        pos = int(rng.integers(len(gates) + 1))
        gates.insert(pos, random_gate(parent.n_qubits, rng))
    elif action is Action.MODIFY:
        i = int(rng.integers(len(gates)))
        if cfg.modify_mode == "redraw":
            angle = rng.uniform(0.0, TWO_PI)
        else:
            angle = gates[i].angle + rng.normal(0.0, cfg.angle_perturbation_scale)
        gates[i] = gates[i].with_angle(wrap_angle(float(angle)))
    elif action is Action.SWAP:
        i = two_qubit[int(rng.integers(len(two_qubit)))]
        g = gates[i]
        gates[i] = Gate(g.kind, g.qubits[::-1], g.angle)
    else:
        del gates[int(rng.integers(len(gates)))]
    return CircuitGenome(parent.n_qubits, tuple(gates))


def mutate(parent: CircuitGenome, cfg: MutationConfig, rng: np.random.Generator) -> CircuitGenome:
    """One sampled action applied to a copy of ``parent``."""
    return apply_action(parent, sample_action(cfg, rng), cfg, rng)


class CircuitEvaluator:
    """Loss and accuracy of a trailing circuit on pre-encoded training (and test) states.

    The feature map does not change during training, so encoded states are
    computed once and every candidate circuit is applied to the whole batch.
    """

    def __init__(self, train_states, train_labels, enc: LabelEncoding, loss: LossKind,
                 test_states=None, test_labels=None, shots: int | None = None, shots_seed: int = 0):
        self.n_qubits = int(round(math.log2(np.asarray(train_states).shape[1])))
        if np.asarray(train_states).shape[0] == 0:
            raise ValueError("empty training set")
        self.train_states = np.asarray(train_states)
        self.train_labels = np.asarray(train_labels)
        self.test_states = None if test_states is None else np.asarray(test_states)
        self.test_labels = None if test_labels is None else np.asarray(test_labels)
        self.enc = enc
        self.loss_kind = LossKind(loss)
        self.shots = shots
        self.shots_seed = shots_seed
        if enc.n_qubits != self.n_qubits:
            raise ValueError(f"encoding acts on {enc.n_qubits} qubits, data is encoded on {self.n_qubits}")

    @classmethod
    def from_data(cls, train, fmap: FeatureMapSpec, enc: LabelEncoding, loss: LossKind, test=None, **kw):
        return cls(
            prepare_states(fmap, train.features), train.labels, enc, loss,
            None if test is None else prepare_states(fmap, test.features),
            None if test is None else test.labels, **kw,
        )

    def outputs(self, gates: Sequence[Gate], states: np.ndarray) -> np.ndarray:
        probs = probabilities(apply_gates_array(states, gates, self.n_qubits))
        if self.shots:
            rng = np.random.default_rng(self.shots_seed)
            probs = np.stack([rng.multinomial(self.shots, p / p.sum()) for p in probs]) / self.shots
        return estimates(probs, self.enc)

    def loss(self, genome: CircuitGenome) -> float:
        out = self.outputs(genome.gates, self.train_states)
        return loss_and_grad(out, self.train_labels, self.loss_kind, need_grad=False)[0]

    def train_accuracy(self, genome: CircuitGenome) -> float:
        return accuracy(self.outputs(genome.gates, self.train_states), self.train_labels, self.enc)

    def test_accuracy(self, genome: CircuitGenome) -> float:
        if self.test_states is None or len(self.test_states) == 0:
            return math.nan
        return accuracy(self.outputs(genome.gates, self.test_states), self.test_labels, self.enc)


def fitness(genome: CircuitGenome, data, fmap: FeatureMapSpec, enc: LabelEncoding, loss: LossKind) -> float:
    """Training loss of ``W_ev U_phi(x)|0>`` over every sample of ``data``."""
    return CircuitEvaluator.from_data(data, fmap, enc, loss).loss(genome)


def _select(candidates: list[CircuitGenome], losses: list[float], incumbent: int | None) -> int:
    best = min(losses)
    tied = [i for i, v in enumerate(losses) if v == best]
    if incumbent is not None and incumbent in tied:
        shallower = [i for i in tied if i != incumbent and candidates[i].depth < candidates[incumbent].depth]
        if not shallower:
            return incumbent
        tied = shallower
    return min(tied, key=lambda i: (candidates[i].depth, i))


@dataclass
class EvolutionResult:
    best: CircuitGenome
    history: list[GenerationRecord] = field(default_factory=list)

    def __iter__(self):
        return iter((self.best, self.history))


def evolve(data, fmap: FeatureMapSpec, enc: LabelEncoding, loss: LossKind, cfg: MutationConfig,
           test=None, evaluator: CircuitEvaluator | None = None) -> EvolutionResult:
    """Run the elitist search; ``data`` is a training :class:`Dataset` or a split with ``.train``/``.test``.

    Generation 0 scores the empty circuit and ``mu`` random one-gate circuits.
    Every later generation mutates the incumbent ``mu`` times and keeps the
    best of incumbent and children. Child ``i`` of generation ``t`` draws from
    its own stream seeded with ``(seed, t, i)``, so evaluation order is free.
    """
    if hasattr(data, "train"):
        data, test = data.train, (data.test if test is None else test)
    if evaluator is None:
        if len(data.labels) == 0:
            raise ValueError("empty training set")
        evaluator = CircuitEvaluator.from_data(data, fmap, enc, loss, test=test,
                                               shots=cfg.shots, shots_seed=cfg.seed)
    n = evaluator.n_qubits

    def stream(generation: int, child: int) -> np.random.Generator:
        return np.random.default_rng([cfg.seed, generation, child])

    candidates = [CircuitGenome(n)]
    candidates += [CircuitGenome(n, (random_gate(n, stream(0, i)),)) for i in range(cfg.mu)]
    losses = [evaluator.loss(c) for c in candidates]
    pick = _select(candidates, losses, None)
    parent, parent_loss = candidates[pick], losses[pick]

    history: list[GenerationRecord] = []
    train_acc = evaluator.train_accuracy(parent)
    test_acc = evaluator.test_accuracy(parent)
    for generation in range(cfg.max_generations):
        if generation > 0:
            children = [mutate(parent, cfg, stream(generation, i)) for i in range(cfg.mu)]
            pool = [parent] + children
            losses = [parent_loss] + [evaluator.loss(c) for c in children]
            pick = _select(pool, losses, 0)
            if pick != 0:
                parent, parent_loss = pool[pick], losses[pick]
                train_acc = evaluator.train_accuracy(parent)
                test_acc = evaluator.test_accuracy(parent)
        history.append(GenerationRecord(generation, parent_loss, train_acc, test_acc, parent.depth))
        if parent_loss < cfg.early_stop_loss:
            break
    return EvolutionResult(parent, history)


def format_genome(genome: CircuitGenome) -> str:
    """One gate per line: ``KIND q0 [q1] angle`` with 17 significant digits."""
    lines = []
    for g in genome.gates:
        qubits = " ".join(str(q) for q in g.qubits)
        lines.append(f"{g.kind.value} {qubits} {g.angle:.17g}")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_genome(text: str, n_qubits: int) -> CircuitGenome:
    gates = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        parts = line.split()
        if not parts:
            continue
        try:
            kind = GateKind(parts[0])
            if len(parts) != kind.arity + 2:
                raise ValueError(f"expected {kind.arity + 2} fields")
            gates.append(Gate(kind, tuple(int(p) for p in parts[1:-1]), float(parts[-1])))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: cannot parse gate {line!r}: {exc}") from None
    return CircuitGenome(n_qubits, tuple(gates))
