"""Iris ingestion, ad-hoc dataset generation, min-max scaling and stratified splitting."""

from __future__ import annotations

import csv
import hashlib
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .feature_maps import FeatureMapKind, FeatureMapSpec, prepare_states
from .statevector import PauliZObservable

log = logging.getLogger(__name__)

TWO_PI = 2 * math.pi
SCALE_TOP = TWO_PI * (1 - 1e-9)

# class ids follow the order in which the buckets were assigned to species
IRIS_CLASSES = {"setosa": 0, "virginica": 1, "versicolor": 2}


class DatasetError(ValueError):
    pass


class InsufficientCandidatesError(DatasetError):
    pass


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    provenance: str = ""

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=float))
        self.labels = np.asarray(self.labels, dtype=int).reshape(-1)
        if self.features.shape[0] != self.labels.shape[0]:
            raise DatasetError(f"{self.features.shape[0]} feature rows but {self.labels.shape[0]} labels")
        if self.binary_signed:
            return
        if np.any((self.labels < 0) | (self.labels >= self.n_classes)):
            raise DatasetError(f"labels outside 0..{self.n_classes - 1}")

    @property
    def binary_signed(self) -> bool:
        return self.n_classes == 2 and self.labels.size > 0 and bool(np.all(np.isin(self.labels, (-1, 1))))

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return self.labels.shape[0]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx], self.n_classes, self.provenance)

    def classes(self) -> np.ndarray:
        return np.unique(self.labels)


@dataclass
class SplitDataset:
    train: Dataset
    test: Dataset
    train_idx: np.ndarray = field(repr=False)
    test_idx: np.ndarray = field(repr=False)


def _species_id(name: str) -> int | None:
    key = name.strip().lower()
    if key.startswith("iris-"):
        key = key[5:]
    return IRIS_CLASSES.get(key)


def default_iris_path() -> Path:
    return Path(str(resources.files("evoqml") / "data" / "iris.csv"))


def verify_iris_checksum(path=None) -> bool:
    path = Path(path) if path is not None else default_iris_path()
    expected = (path.parent / (path.name + ".sha256")).read_text().split()[0]
    return hashlib.sha256(path.read_bytes()).hexdigest() == expected


def load_iris(path=None) -> Dataset:
    """Read ``sepal_length,sepal_width,petal_length,petal_width,species`` rows (header optional)."""
    path = Path(path) if path is not None else default_iris_path()
    features, labels = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if lineno == 1 and _is_header(row):
                continue
            if len(row) != 5:
                raise DatasetError(f"{path}:{lineno}: expected 5 columns, got {len(row)}")
            try:
                values = [float(c) for c in row[:4]]
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: non-numeric feature in {row[:4]}") from None
            label = _species_id(row[4])
            if label is None:
                raise DatasetError(f"{path}:{lineno}: unknown class {row[4]!r}")
            features.append(values)
            labels.append(label)
    if not labels:
        raise DatasetError(f"{path}: empty dataset")
    return Dataset(np.array(features), np.array(labels), 3, f"iris:{path.name}")


def _is_header(row) -> bool:
    try:
        float(row[0])
    except ValueError:
        return True
    return False


@dataclass(frozen=True)
class MinMaxScaling:
    """Per-feature affine map fitted on training data onto ``[0, 2pi (1 - 1e-9)]``."""

    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def fit(cls, data: Dataset) -> "MinMaxScaling":
        if len(data) == 0:
            raise DatasetError("cannot fit scaling on an empty dataset")
        lo = data.features.min(axis=0)
        hi = data.features.max(axis=0)
        const = np.flatnonzero(hi <= lo)
        if const.size:
            raise DatasetError(f"feature(s) {const.tolist()} are constant; min-max scaling undefined")
        return cls(lo, hi)

    def transform_array(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        scaled = (X - self.lo) / (self.hi - self.lo) * SCALE_TOP
        out_of_range = (scaled < 0) | (scaled > SCALE_TOP)
        if np.any(out_of_range):
            log.warning("clamping %d value(s) outside the fitted feature range", int(out_of_range.sum()))
            scaled = np.clip(scaled, 0.0, SCALE_TOP)
        return scaled

    def transform(self, data: Dataset) -> Dataset:
        return Dataset(self.transform_array(data.features), data.labels, data.n_classes, data.provenance)

    def inverse_array(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) / SCALE_TOP * (self.hi - self.lo) + self.lo


def minmax_scale(data: Dataset) -> tuple[Dataset, MinMaxScaling]:
    scaling = MinMaxScaling.fit(data)
    return scaling.transform(data), scaling


def split(data: Dataset, train_fraction: float = 0.65, seed: int = 0) -> SplitDataset:
    """Stratified random split; each class keeps ``round_half_up(fraction * size)`` samples for training."""
    if not 0.0 < train_fraction < 1.0:
        raise DatasetError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c in data.classes():
        members = np.flatnonzero(data.labels == c)
        if members.size < 2:
            raise DatasetError(f"class {c} has {members.size} sample(s); need at least 2 to split")
        k = int(math.floor(train_fraction * members.size + 0.5))
        k = min(max(k, 1), members.size - 1)
        perm = rng.permutation(members)
        train_idx.append(perm[:k])
        test_idx.append(perm[k:])
    tr = np.sort(np.concatenate(train_idx))
    te = np.sort(np.concatenate(test_idx))
    return SplitDataset(data.subset(tr), data.subset(te), tr, te)


def random_unitary(dim: int, seed: int) -> np.ndarray:
    """Haar-random unitary via QR of a complex Gaussian matrix."""
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def adhoc_expectations(X, n_dim: int, v_seed: int) -> np.ndarray:
    """Labeling functional ``<Phi(x)| V^dag Z..Z V |Phi(x)>`` for every row of ``X``."""
    states = prepare_states(FeatureMapSpec(FeatureMapKind.ZZ_FULL, n_dim), X)
    v = random_unitary(2**n_dim, v_seed)
    rotated = states @ v.T
    parity = PauliZObservable.global_z(n_dim).eigenvalues()
    return (np.abs(rotated) ** 2) @ parity


@dataclass(frozen=True)
class AdhocMetadata:
    n_dim: int
    gap: float
    per_class: int
    seed: int
    v_seed: int
    grid: int

    def as_dict(self) -> dict:
        return {"n_dim": self.n_dim, "gap": self.gap, "per_class": self.per_class,
                "seed": self.seed, "v_seed": self.v_seed, "grid": self.grid}


DEFAULT_GRID = {2: 100, 3: 20}


def adhoc_generate(n_dim: int, gap: float, per_class: int, seed: int, v_seed: int | None = None,
                   grid: int | None = None, max_refinements: int = 2) -> tuple[Dataset, AdhocMetadata]:
    """Sample ``per_class`` grid points of each parity sign with ``|expectation| >= gap``.

    The grid is doubled up to ``max_refinements`` times when too few points clear the gap.
    """
    if n_dim not in (2, 3):
        raise DatasetError("ad-hoc data is defined for 2 or 3 dimensions")
    if gap <= 0:
        raise DatasetError("gap must be > 0")
    if per_class < 1:
        raise DatasetError("per_class must be >= 1")
    v_seed = seed if v_seed is None else v_seed
    grid = DEFAULT_GRID[n_dim] if grid is None else grid
    for _ in range(max_refinements + 1):
        axis = TWO_PI * np.arange(grid) / grid
        X = np.stack(np.meshgrid(*([axis] * n_dim), indexing="ij"), axis=-1).reshape(-1, n_dim)
        f = adhoc_expectations(X, n_dim, v_seed)
        pos = np.flatnonzero(f >= gap)
        neg = np.flatnonzero(f <= -gap)
        if min(pos.size, neg.size) >= per_class:
            break
        grid *= 2
    else:
        raise InsufficientCandidatesError(
            f"only {pos.size} positive / {neg.size} negative grid points clear gap {gap}; "
            f"need {per_class} of each"
        )
    rng = np.random.default_rng(seed)
    chosen = np.concatenate([rng.choice(pos, per_class, replace=False), rng.choice(neg, per_class, replace=False)])
    labels = np.concatenate([np.ones(per_class, dtype=int), -np.ones(per_class, dtype=int)])
    meta = AdhocMetadata(n_dim, float(gap), per_class, int(seed), int(v_seed), int(grid))
    provenance = "adhoc(" + ",".join(f"{k}={v}" for k, v in meta.as_dict().items()) + ")"
    return Dataset(X[chosen], labels, 2, provenance), meta


def write_dataset_csv(data: Dataset, path) -> None:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"f{i}" for i in range(data.n_features)] + ["label"])
        for x, y in zip(data.features, data.labels):
            w.writerow([repr(float(v)) for v in x] + [int(y)])


def read_dataset_csv(path, n_classes: int | None = None) -> Dataset:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetError(f"{path}: empty dataset")
    header, body = rows[0], [r for r in rows[1:] if r]
    if not header or header[-1] != "label" or header[:-1] != [f"f{i}" for i in range(len(header) - 1)]:
        raise DatasetError(f"{path}: header must be f0..f{{n-1}},label")
    features, labels = [], []
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DatasetError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
        try:
            features.append([float(v) for v in row[:-1]])
            labels.append(int(row[-1]))
        except ValueError:
            raise DatasetError(f"{path}:{lineno}: malformed row {row}") from None
    if not labels:
        raise DatasetError(f"{path}: empty dataset")
    labels = np.array(labels)
    if n_classes is None:
        n_classes = 2 if set(labels.tolist()) <= {-1, 1} else int(labels.max()) + 1
    return Dataset(np.array(features), labels, n_classes, f"csv:{path.name}")
