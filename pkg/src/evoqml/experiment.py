"""Config-driven experiment runner: repeated EQC/VQC runs, aggregates, comparisons, plateau probes.

Configs are YAML files; see ``configs/`` for annotated examples. Every random
choice of repetition ``r`` is derived from ``(seed, r)``, so two configs with
the same dataset section and seed see identical datasets and splits.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .datasets import (
    MinMaxScaling,
    SplitDataset,
    adhoc_generate,
    load_iris,
    read_dataset_csv,
    split,
)
from .encoding import BinaryParityEncoding, LabelEncoding, LossKind, MultiHotEncoding, default_partition
from .evolution import GenerationRecord, MutationConfig, evolve, format_genome
from .feature_maps import FeatureMapKind, FeatureMapSpec
from .statevector import PauliZObservable
from .variational import AnsatzSpec, TrainConfig, gradient_variance_probe, train_vqc

HISTORY_FIELDS = ("generation", "best_loss", "train_acc", "test_acc", "depth")
MAX_PROBE_QUBITS = 12


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass
class DatasetConfig:
    kind: str = "iris"  # iris | adhoc | csv
    path: str | None = None
    n_dim: int = 2
    gap: float = 0.3
    per_class: int = 30
    grid: int | None = None
    v_seed: int | None = None
    train_fraction: float = 0.65
    scale: bool | None = None  # None: scale iris/csv, leave adhoc on its native [0, 2pi) grid


@dataclass
class EncodingConfig:
    kind: str = "multiclass"  # binary | multiclass
    mask: str | None = None  # binary: "ZZ", "ZI", ... (character i is qubit i)
    threshold: float = 0.0
    buckets: Any = "default"  # multiclass: "default" or a list of index lists


@dataclass
class TrainerConfig:
    kind: str = "eqc"  # eqc | vqc
    # eqc
    p_insert: float = 0.50
    p_modify: float = 0.30
    p_swap: float = 0.10
    p_delete: float = 0.10
    mu: int = 4
    max_generations: int = 500
    angle_perturbation_scale: float = math.pi / 8
    modify_mode: str = "perturb"
    early_stop_loss: float = 1e-6
    shots: int | None = None
    # vqc
    layers: int = 4
    learning_rate: float = 0.1
    epochs: int = 500


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    feature_map: str = "RX_PRODUCT"
    encoding: EncodingConfig = field(default_factory=EncodingConfig)
    loss: str = "CROSS_ENTROPY"
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    repetitions: int = 10
    seed: int = 0
    output_dir: str = "runs/experiment"

    @property
    def n_features(self) -> int:
        if self.dataset.kind == "iris":
            return 4
        if self.dataset.kind == "adhoc":
            return self.dataset.n_dim
        return read_dataset_csv(self.dataset.path).n_features

    @property
    def n_classes(self) -> int:
        if self.dataset.kind == "iris":
            return 3
        if self.dataset.kind == "adhoc":
            return 2
        return read_dataset_csv(self.dataset.path).n_classes

    def feature_map_spec(self) -> FeatureMapSpec:
        return FeatureMapSpec(FeatureMapKind(self.feature_map), self.n_features)

    def label_encoding(self) -> LabelEncoding:
        n = self.n_features
        if self.encoding.kind == "binary":
            mask = self.encoding.mask or "Z" * n
            return BinaryParityEncoding(PauliZObservable.from_string(mask), self.encoding.threshold)
        if self.encoding.buckets == "default":
            return default_partition(n, self.n_classes)
        return MultiHotEncoding(n, tuple(tuple(b) for b in self.encoding.buckets))

    def mutation_config(self, seed: int) -> MutationConfig:
        t = self.trainer
        return MutationConfig(t.p_insert, t.p_modify, t.p_swap, t.p_delete, t.mu, t.max_generations,
                              t.angle_perturbation_scale, t.modify_mode, t.early_stop_loss, seed, t.shots)

    def as_dict(self) -> dict:
        return asdict(self)


def _build(cls, raw, path: str):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(path, "expected a mapping")
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        sub = f"{path}.{key}" if path else str(key)
        if key not in known:
            raise ConfigError(sub, "unknown key")
        if key in ("dataset", "encoding", "trainer"):
            value = _build({"dataset": DatasetConfig, "encoding": EncodingConfig,
                            "trainer": TrainerConfig}[key], value, sub)
        kwargs[key] = value
    return cls(**kwargs)


def _require(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ConfigError(path, message)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def validate_config(cfg: ExperimentConfig) -> None:
    """Raise :class:`ConfigError` (with a dotted field path) on any inconsistency."""
    d = cfg.dataset
    _require(d.kind in ("iris", "adhoc", "csv"), "dataset.kind", f"unknown dataset kind {d.kind!r}")
    if d.kind == "csv":
        _require(bool(d.path), "dataset.path", "required for csv datasets")
        _require(Path(d.path).is_file(), "dataset.path", f"no such file {d.path!r}")
    if d.kind == "iris" and d.path is not None:
        _require(Path(d.path).is_file(), "dataset.path", f"no such file {d.path!r}")
    if d.kind == "adhoc":
        _require(d.n_dim in (2, 3), "dataset.n_dim", "must be 2 or 3")
        _require(_is_num(d.gap) and d.gap > 0, "dataset.gap", "must be > 0")
        _require(_is_int(d.per_class) and d.per_class >= 2, "dataset.per_class", "must be an integer >= 2")
        _require(d.grid is None or (_is_int(d.grid) and d.grid >= 2), "dataset.grid", "must be an integer >= 2")
        _require(d.v_seed is None or _is_int(d.v_seed), "dataset.v_seed", "must be an integer")
    _require(_is_num(d.train_fraction) and 0 < d.train_fraction < 1, "dataset.train_fraction",
             "must lie strictly between 0 and 1")
    _require(d.scale is None or isinstance(d.scale, bool), "dataset.scale", "must be true or false")

    _require(cfg.feature_map in FeatureMapKind.__members__, "feature_map",
             f"must be one of {sorted(FeatureMapKind.__members__)}")
    _require(cfg.loss in LossKind.__members__, "loss", f"must be one of {sorted(LossKind.__members__)}")
    _require(_is_int(cfg.repetitions) and cfg.repetitions >= 1, "repetitions", "must be an integer >= 1")
    _require(_is_int(cfg.seed) and cfg.seed >= 0, "seed", "must be a non-negative integer")
    _require(isinstance(cfg.output_dir, str) and cfg.output_dir != "", "output_dir", "must be a path")

    n, k = cfg.n_features, cfg.n_classes
    e = cfg.encoding
    _require(e.kind in ("binary", "multiclass"), "encoding.kind", "must be 'binary' or 'multiclass'")
    if e.kind == "binary":
        _require(k == 2, "encoding.kind", f"binary encoding cannot label {k} classes")
        if d.kind == "csv":
            _require(read_dataset_csv(d.path).binary_signed, "dataset.path", "binary encoding needs labels -1/+1")
        _require(cfg.loss in ("MSE", "LOG_LOSS"), "loss", "binary encoding pairs with MSE or LOG_LOSS")
        if e.mask is not None:
            _require(isinstance(e.mask, str) and len(e.mask) == n and set(e.mask.upper()) <= {"Z", "I"}
                     and "Z" in e.mask.upper(), "encoding.mask",
                     f"must be a {n}-character string of Z/I with at least one Z")
    else:
        _require(k >= 2, "encoding.kind", "multiclass encoding needs at least 2 classes")
        _require(cfg.loss == "CROSS_ENTROPY", "loss", "multiclass encoding pairs with CROSS_ENTROPY")
        if e.buckets == "default":
            _require(2**n - 1 >= k, "encoding.buckets", f"{n} qubits cannot host {k} classes")
        else:
            _require(isinstance(e.buckets, list) and len(e.buckets) == k, "encoding.buckets",
                     f"expected 'default' or a list of {k} index lists")
            try:
                MultiHotEncoding(n, tuple(tuple(b) for b in e.buckets))
            except (TypeError, ValueError) as exc:
                raise ConfigError("encoding.buckets", str(exc)) from None

    t = cfg.trainer
    _require(t.kind in ("eqc", "vqc"), "trainer.kind", "must be 'eqc' or 'vqc'")
    if t.kind == "eqc":
        _require(_is_int(t.mu) and t.mu >= 1, "trainer.mu", "must be an integer >= 1")
        _require(_is_int(t.max_generations) and t.max_generations >= 1, "trainer.max_generations",
                 "must be an integer >= 1")
        _require(t.shots is None or (_is_int(t.shots) and t.shots >= 1), "trainer.shots", "must be >= 1")
        try:
            cfg.mutation_config(0)
        except ValueError as exc:
            raise ConfigError("trainer", str(exc)) from None
    else:
        _require(_is_int(t.layers) and t.layers >= 1, "trainer.layers", "must be an integer >= 1")
        _require(_is_num(t.learning_rate) and t.learning_rate >= 0, "trainer.learning_rate", "must be >= 0")
        _require(_is_int(t.epochs) and t.epochs >= 1, "trainer.epochs", "must be an integer >= 1")


def parse_config(raw: dict, base_dir: Path | None = None) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("", "config must be a mapping at the top level")
    try:
        cfg = _build(ExperimentConfig, raw, "")
    except TypeError as exc:
        raise ConfigError("", str(exc)) from None
    if base_dir is not None:
        if cfg.dataset.path is not None and not Path(cfg.dataset.path).is_absolute():
            cfg.dataset.path = str(base_dir / cfg.dataset.path)
    validate_config(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError("", f"cannot read {path}: {exc}") from None
    return parse_config(raw, path.parent)


@dataclass(frozen=True)
class RunSeeds:
    data: int
    split: int
    trainer: int


def run_seeds(master: int, rep: int) -> RunSeeds:
    d, s, t = np.random.SeedSequence([master, rep]).generate_state(3)
    return RunSeeds(int(d), int(s), int(t))


def build_split(cfg: ExperimentConfig, seeds: RunSeeds) -> SplitDataset:
    d = cfg.dataset
    if d.kind == "iris":
        data = load_iris(d.path)
    elif d.kind == "adhoc":
        data, _ = adhoc_generate(d.n_dim, d.gap, d.per_class, seeds.data, d.v_seed, d.grid)
    else:
        data = read_dataset_csv(d.path)
    parts = split(data, d.train_fraction, seeds.split)
    scale = d.scale if d.scale is not None else d.kind != "adhoc"
    if scale:
        scaling = MinMaxScaling.fit(parts.train)
        parts = SplitDataset(scaling.transform(parts.train), scaling.transform(parts.test),
                             parts.train_idx, parts.test_idx)
    return parts


@dataclass
class RunResult:
    rep: int
    seeds: RunSeeds
    history: list[GenerationRecord]
    artifact: str  # serialized genome (eqc) or parameter CSV (vqc)

    @property
    def final(self) -> GenerationRecord:
        return self.history[-1]


def circuit_evals_per_iteration(cfg: ExperimentConfig) -> int:
    """Full-training-set circuit evaluations per generation (EQC) or epoch (VQC)."""
    if cfg.trainer.kind == "eqc":
        return cfg.trainer.mu
    return 2 * AnsatzSpec(cfg.n_features, cfg.trainer.layers).n_params + 1


def train_once(cfg: ExperimentConfig, parts: SplitDataset, rep: int, seeds: RunSeeds) -> RunResult:
    fmap, enc, loss = cfg.feature_map_spec(), cfg.label_encoding(), LossKind(cfg.loss)
    if cfg.trainer.kind == "eqc":
        best, history = evolve(parts, fmap, enc, loss, cfg.mutation_config(seeds.trainer))
        return RunResult(rep, seeds, history, format_genome(best))
    t = cfg.trainer
    theta, history = train_vqc(AnsatzSpec(cfg.n_features, t.layers), parts, fmap, enc, loss,
                               TrainConfig(t.learning_rate, t.epochs, seeds.trainer))
    artifact = "index,theta\n" + "".join(f"{i},{v!r}\n" for i, v in enumerate(theta.tolist()))
    return RunResult(rep, seeds, history, artifact)


def _run_rep(args) -> RunResult:
    cfg, parts, rep, seeds = args
    return train_once(cfg, parts, rep, seeds)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if not isinstance(v, str) else v for v in row])
    return buf.getvalue()


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def history_csv(history: list[GenerationRecord]) -> str:
    return _csv_text(HISTORY_FIELDS, [[getattr(h, f) for f in HISTORY_FIELDS] for h in history])


def aggregate_rows(histories: list[list[GenerationRecord]]) -> list[list]:
    """Per-iteration mean and unbiased std of the loss across runs.

    Runs that stopped early contribute their final record to later iterations.
    """
    length = max(len(h) for h in histories)
    rows = []
    for g in range(length):
        recs = [h[min(g, len(h) - 1)] for h in histories]
        loss = np.array([r.best_loss for r in recs])
        std = float(np.std(loss, ddof=1)) if len(loss) > 1 else 0.0
        rows.append([g, float(loss.mean()), std,
                     float(np.mean([r.train_acc for r in recs])), float(np.mean([r.test_acc for r in recs])),
                     len(recs)])
    return rows


def _stats(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    return float(arr.mean()), (float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0)


@dataclass
class ExperimentSummary:
    name: str
    trainer: str
    runs: list[RunResult]
    evals_per_iteration: int
    output_dir: Path

    @property
    def test_accuracies(self) -> list[float]:
        return [r.final.test_acc for r in self.runs]

    @property
    def train_accuracies(self) -> list[float]:
        return [r.final.train_acc for r in self.runs]

    def as_dict(self) -> dict:
        te_mean, te_std = _stats(self.test_accuracies)
        tr_mean, tr_std = _stats(self.train_accuracies)
        lo_mean, lo_std = _stats([r.final.best_loss for r in self.runs])
        return {
            "name": self.name,
            "trainer": self.trainer,
            "repetitions": len(self.runs),
            "std_estimator": "unbiased (n-1)",
            "test_acc_mean": te_mean, "test_acc_std": te_std,
            "train_acc_mean": tr_mean, "train_acc_std": tr_std,
            "final_loss_mean": lo_mean, "final_loss_std": lo_std,
            "iterations": [len(r.history) for r in self.runs],
            "circuit_evals_per_iteration": self.evals_per_iteration,
            "budget_rule": "EQC generations = VQC epochs; per-iteration circuit evaluations differ",
        }


def run_experiment(cfg: ExperimentConfig, output_dir=None, jobs: int = 1) -> ExperimentSummary:
    """Train ``cfg.repetitions`` independent runs and write histories, aggregate and summary.

    All datasets are built before anything is written, so data errors leave the output directory untouched.
    """
    validate_config(cfg)
    out = Path(output_dir if output_dir is not None else cfg.output_dir)
    seeds = [run_seeds(cfg.seed, r) for r in range(cfg.repetitions)]
    tasks = [(cfg, build_split(cfg, s), r, s) for r, s in enumerate(seeds)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_run_rep, tasks))
    else:
        runs = [_run_rep(t) for t in tasks]

    suffix = "genome.txt" if cfg.trainer.kind == "eqc" else "theta.csv"
    for run in runs:
        write_atomic(out / f"run_{run.rep:02d}_history.csv", history_csv(run.history))
        write_atomic(out / f"run_{run.rep:02d}_{suffix}", run.artifact)
    write_atomic(out / "aggregate.csv", _csv_text(
        ("generation", "mean_loss", "std_loss", "mean_train_acc", "mean_test_acc", "n_runs"),
        aggregate_rows([r.history for r in runs])))

    summary = ExperimentSummary(cfg.name, cfg.trainer.kind, runs, circuit_evals_per_iteration(cfg), out)
    rows = [[f"run_{r.rep:02d}", r.seeds.data, r.seeds.split, r.seeds.trainer, len(r.history),
             r.final.best_loss, r.final.train_acc, r.final.test_acc, r.final.depth] for r in runs]
    write_atomic(out / "summary.csv", _csv_text(
        ("run", "data_seed", "split_seed", "trainer_seed", "iterations", "final_loss", "train_acc",
         "test_acc", "depth"), rows))
    doc = {"summary": summary.as_dict(), "config": cfg.as_dict()}
    write_atomic(out / "summary.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return summary


def _dataset_signature(cfg: ExperimentConfig) -> tuple:
    return (asdict(cfg.dataset), cfg.seed, cfg.repetitions)


def compare_models(configs: list[ExperimentConfig], output_dir, external: dict[str, float] | None = None,
                   jobs: int = 1) -> list[dict]:
    """Run every config on identical splits and tabulate mean test accuracy per model.

    ``external`` adds externally computed (e.g. classical) accuracies as rows of kind "external".
    """
    if not configs:
        raise ConfigError("", "no models to compare")
    base = _dataset_signature(configs[0])
    for i, c in enumerate(configs[1:], start=1):
        if _dataset_signature(c) != base:
            raise ConfigError(f"configs[{i}].dataset", "dataset, seed and repetitions must match across models")
    names = [c.name for c in configs] + list(external or {})
    if len(set(names)) != len(names):
        raise ConfigError("", f"model names must be unique, got {names}")
    for name, acc in (external or {}).items():
        if not 0.0 <= acc <= 1.0:
            raise ConfigError(f"external.{name}", "accuracy must lie in [0, 1]")
    out = Path(output_dir)
    rows = []
    for cfg in configs:
        summary = run_experiment(cfg, out / cfg.name, jobs=jobs)
        mean, std = _stats(summary.test_accuracies)
        rows.append({"model": cfg.name, "kind": cfg.trainer.kind, "mean_test_acc": mean, "std_test_acc": std,
                     "n_runs": len(summary.runs), "iterations": max(len(r.history) for r in summary.runs),
                     "circuit_evals_per_iteration": summary.evals_per_iteration})
    for name, acc in (external or {}).items():
        rows.append({"model": name, "kind": "external", "mean_test_acc": float(acc), "std_test_acc": math.nan,
                     "n_runs": 0, "iterations": 0, "circuit_evals_per_iteration": 0})
    header = ("model", "kind", "mean_test_acc", "std_test_acc", "n_runs", "iterations",
              "circuit_evals_per_iteration")
    write_atomic(out / "comparison.csv", _csv_text(header, [[r[h] for h in header] for r in rows]))
    write_atomic(out / "comparison.txt", format_table(rows))
    return rows


def format_table(rows: list[dict]) -> str:
    lines = [f"{'model':<24} {'kind':<9} {'test acc':>10} {'std':>8} {'runs':>5} {'evals/it':>9}"]
    for r in rows:
        std = "-" if math.isnan(r["std_test_acc"]) else f"{r['std_test_acc']:.4f}"
        evals = "-" if r["kind"] == "external" else str(r["circuit_evals_per_iteration"])
        lines.append(f"{r['model']:<24} {r['kind']:<9} {r['mean_test_acc']:>10.4f} {std:>8} "
                     f"{r['n_runs']:>5} {evals:>9}")
    lines.append("std: unbiased (n-1); budget rule: EQC generations = VQC epochs")
    return "\n".join(lines) + "\n"


def probe_plateau(n_list, layers: int, samples: int, seed: int, observable: str = "global") -> list[tuple[int, float]]:
    n_list = [int(n) for n in n_list]
    if not n_list:
        raise ValueError("n_list must not be empty")
    for n in n_list:
        if not 1 <= n <= MAX_PROBE_QUBITS:
            raise ValueError(f"n={n} outside 1..{MAX_PROBE_QUBITS}")
    return [(n, gradient_variance_probe(n, layers, samples, seed, observable)) for n in n_list]


def log_variance_slope(rows: list[tuple[int, float]]) -> float:
    """Least-squares slope of log(variance) against n."""
    n = np.array([r[0] for r in rows], dtype=float)
    v = np.log(np.array([r[1] for r in rows]))
    return float(np.polyfit(n, v, 1)[0])


def plateau_csv(rows, layers: int, samples: int, observable: str) -> str:
    return _csv_text(("n_qubits", "observable", "layers", "samples", "gradient_variance"),
                     [[n, observable, layers, samples, v] for n, v in rows])

