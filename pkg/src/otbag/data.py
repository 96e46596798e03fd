"""Dataset loading, normalization and transfer-task construction."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import Domain, FeatureVector, TaggedInstance, check_label
from .errors import (
    BadDimension,
    BadFraction,
    BadNumber,
    BadSparseLine,
    BadValue,
    DegenerateSplit,
    DimensionMismatch,
    EmptyFile,
    IndexOutOfRange,
    IoError,
    NotBinary,
    RaggedCsv,
)


@dataclass(frozen=True)
class Dataset:
    name: str
    dimension: int
    instances: tuple[tuple[FeatureVector, int], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.dimension < 1:
            raise BadDimension(f"dimension must be >= 1, got {self.dimension}")
        rows = tuple((x, check_label(y)) for x, y in self.instances)
        for x, _ in rows:
            if x.dimension != self.dimension:
                raise DimensionMismatch(
                    f"{self.name}: instance of dimension {x.dimension} in a {self.dimension}-d dataset"
                )
        object.__setattr__(self, "instances", rows)

    def __len__(self):
        return len(self.instances)

    @property
    def labels(self) -> np.ndarray:
        return np.array([y for _, y in self.instances], dtype=np.int8)

    def matrix(self) -> np.ndarray:
        if not self.instances:
            return np.zeros((0, self.dimension))
        return np.stack([x.to_dense() for x, _ in self.instances])

    @classmethod
    def from_arrays(cls, name: str, X, y) -> "Dataset":
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise BadValue(f"expected a 2-d feature array, got shape {X.shape}")
        rows = tuple((FeatureVector(X.shape[1], row), int(lab)) for row, lab in zip(X, y))
        return cls(name, X.shape[1], rows)

    def subset(self, idx, name: str | None = None) -> "Dataset":
        return Dataset(name or self.name, self.dimension, tuple(self.instances[i] for i in idx))


@dataclass(frozen=True)
class TransferTask:
    source: Dataset
    target_train: Dataset
    target_test: Dataset
    seed: int | None = None

    def __post_init__(self):
        dims = {self.source.dimension, self.target_train.dimension, self.target_test.dimension}
        if len(dims) != 1:
            raise DimensionMismatch(f"task datasets disagree on dimension: {sorted(dims)}")

    @property
    def name(self) -> str:
        return f"{self.source.name}->{self.target_train.name}"


def _open(path, mode="r"):
    try:
        return open(path, mode, newline="")
    except OSError as err:
        raise IoError(str(err)) from err


def _parse_float(token: str, where: str) -> float:
    try:
        v = float(token)
    except ValueError:
        raise BadNumber(f"{where}: not a number: {token!r}") from None
    if not math.isfinite(v):
        raise BadNumber(f"{where}: non-finite value {token!r}")
    return v


def _same_label(a: str, b: str) -> bool:
    if a == b:
        return True
    try:
        return float(a) == float(b)
    except ValueError:
        return False


def load_dense_csv(path, label_column: int = -1, positive_value="1", header: bool = False, name=None) -> Dataset:
    """Read a comma-separated file of decimals plus one label column.

    Rows whose label equals ``positive_value`` (compared as text, or
    numerically when both parse) become label 1; the rest become 0.
    """
    with _open(path) as fh:
        rows = [r for r in csv.reader(fh) if any(c.strip() for c in r)]
    if header and rows:
        rows = rows[1:]
    if not rows:
        raise EmptyFile(f"{path}: no data rows")
    width = len(rows[0])
    if width < 2:
        raise RaggedCsv(f"{path}: need at least one feature and one label column")
    col = label_column % width if -width <= label_column < width else None
    if col is None:
        raise RaggedCsv(f"{path}: label column {label_column} outside {width} columns")

    positive = str(positive_value).strip()
    seen: list[str] = []
    instances = []
    for lineno, row in enumerate(rows, start=2 if header else 1):
        if len(row) != width:
            raise RaggedCsv(f"{path}:{lineno}: {len(row)} columns, expected {width}")
        raw_label = row[col].strip()
        if not any(_same_label(raw_label, s) for s in seen):
            seen.append(raw_label)
            if len(seen) > 2:
                raise NotBinary(f"{path}: more than two label values: {seen}")
        feats = [_parse_float(c.strip(), f"{path}:{lineno}") for i, c in enumerate(row) if i != col]
        instances.append((FeatureVector(width - 1, feats), int(_same_label(raw_label, positive))))
    return Dataset(name or Path(path).stem, width - 1, tuple(instances))


def write_dense_csv(dataset: Dataset, path, header: bool = False) -> None:
    """Write features then label (0/1) as the last column."""
    with _open(path, "w") as fh:
        out = csv.writer(fh, lineterminator="\n")
        if header:
            out.writerow([f"x{i}" for i in range(dataset.dimension)] + ["label"])
        for x, y in dataset.instances:
            out.writerow([repr(float(v)) for v in x.to_dense()] + [y])


_SVMLIGHT_LABELS = {-1.0: 0, 0.0: 0, 1.0: 1}


def load_svmlight(path, dimension: int, name=None) -> Dataset:
    """Read ``label idx:val ...`` lines with 1-based strictly ascending indices.

    Labels -1/0 map to 0 and +1/1 to 1. Blank lines and ``#`` comments are
    skipped; a ``qid:`` token is ignored.
    """
    if dimension < 1:
        raise BadDimension(f"dimension must be >= 1, got {dimension}")
    instances = []
    with _open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            label_tok, *tokens = line.split()
            label = _SVMLIGHT_LABELS.get(_parse_float(label_tok, where))
            if label is None:
                raise NotBinary(f"{where}: label {label_tok!r} is not one of -1, 0, +1, 1")
            idx, vals = [], []
            for tok in tokens:
                key, sep, val = tok.partition(":")
                if not sep or not key or not val:
                    raise BadSparseLine(f"{where}: malformed pair {tok!r}")
                if key == "qid":
                    continue
                try:
                    i = int(key)
                except ValueError:
                    raise BadSparseLine(f"{where}: bad index {key!r}") from None
                if i < 1 or i > dimension:
                    raise IndexOutOfRange(f"{where}: index {i} outside 1..{dimension}")
                if idx and i - 1 <= idx[-1]:
                    raise BadSparseLine(f"{where}: indices must be strictly ascending")
                idx.append(i - 1)
                vals.append(_parse_float(val, where))
            instances.append((FeatureVector(dimension, vals, idx), label))
    if not instances:
        raise EmptyFile(f"{path}: no data lines")
    return Dataset(name or Path(path).stem, dimension, tuple(instances))


def write_svmlight(dataset: Dataset, path) -> None:
    with _open(path, "w") as fh:
        for x, y in dataset.instances:
            sx = x.to_sparse()
            pairs = " ".join(f"{i + 1}:{v!r}" for i, v in zip(sx.indices.tolist(), sx.values.tolist()))
            fh.write(f"{'+1' if y else '-1'} {pairs}".rstrip() + "\n")


@dataclass(frozen=True)
class NormParams:
    mean: np.ndarray
    std: np.ndarray
    ddof: int = 0

    def apply(self, dataset: Dataset) -> Dataset:
        if dataset.dimension != self.mean.shape[0]:
            raise DimensionMismatch("normalization parameters do not match dataset dimension")
        scale = np.where(self.std > 0, self.std, 1.0)
        Z = (dataset.matrix() - self.mean) / scale
        return Dataset.from_arrays(dataset.name, Z, dataset.labels)

    def write(self, path) -> None:
        """Sidecar: a comment naming the std convention, then ``index mean std`` lines."""
        with _open(path, "w") as fh:
            fh.write(f"# zscore ddof={self.ddof}\n")
            for i, (mu, sd) in enumerate(zip(self.mean.tolist(), self.std.tolist())):
                fh.write(f"{i} {mu!r} {sd!r}\n")

    @classmethod
    def read(cls, path) -> "NormParams":
        rows = []
        with _open(path) as fh:
            for line in fh:
                if line.strip() and not line.startswith("#"):
                    _, mu, sd = line.split()
                    rows.append((float(mu), float(sd)))
        arr = np.array(rows)
        return cls(arr[:, 0], arr[:, 1])


def zscore_normalize(train: Dataset, others: Sequence[Dataset] = ()) -> tuple[Dataset, list[Dataset], NormParams]:
    """Standardize with population statistics of ``train``; zero-variance features are only centred."""
    if len(train) == 0:
        raise EmptyFile(f"{train.name}: cannot normalize with an empty training set")
    X = train.matrix()
    params = NormParams(X.mean(axis=0), X.std(axis=0))
    return params.apply(train), [params.apply(d) for d in others], params


def _stratified_counts(class_sizes: dict[int, int], n_train: int) -> dict[int, int]:
    """Largest-remainder allocation of ``n_train`` across classes."""
    total = sum(class_sizes.values())
    exact = {c: n_train * s / total for c, s in class_sizes.items()}
    counts = {c: math.floor(v) for c, v in exact.items()}
    leftover = n_train - sum(counts.values())
    for c in sorted(exact, key=lambda c: (counts[c] - exact[c], c))[:leftover]:
        counts[c] += 1
    return counts


def make_task(source: Dataset, target: Dataset, train_fraction: float, seed: int) -> TransferTask:
    """Stratified split of ``target`` into train/test; ``source`` is used whole."""
    if not 0.0 < train_fraction < 1.0:
        raise BadFraction(f"train_fraction must lie in (0, 1), got {train_fraction}")
    if source.dimension != target.dimension:
        raise DimensionMismatch(
            f"source dimension {source.dimension} != target dimension {target.dimension}"
        )
    labels = target.labels
    n_train = math.floor(train_fraction * len(target))
    by_class = {c: np.flatnonzero(labels == c) for c in (0, 1)}
    counts = _stratified_counts({c: len(ix) for c, ix in by_class.items()}, n_train)
    if any(counts[c] == 0 for c in (0, 1)):
        raise DegenerateSplit(f"training split of {n_train} leaves a label class empty: {counts}")

    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c in (0, 1):
        perm = rng.permutation(by_class[c])
        train_idx.extend(perm[: counts[c]].tolist())
        test_idx.extend(perm[counts[c]:].tolist())
    train_idx = rng.permutation(train_idx).tolist()
    test_idx = rng.permutation(test_idx).tolist()
    return TransferTask(
        source,
        target.subset(train_idx),
        target.subset(test_idx),
        seed,
    )


def interleave_stream(task: TransferTask, seed: int) -> list[TaggedInstance]:
    """Merge source and target-train instances, tag them, and shuffle uniformly."""
    merged = [TaggedInstance(x, y, Domain.SOURCE) for x, y in task.source.instances]
    merged += [TaggedInstance(x, y, Domain.TARGET) for x, y in task.target_train.instances]
    order = np.random.default_rng(seed).permutation(len(merged))
    return [merged[i] for i in order]


def _fit_dimension(x: FeatureVector, cap: int) -> FeatureVector:
    if x.is_sparse:
        keep = x.indices < cap
        return FeatureVector(cap, x.values[keep], x.indices[keep])
    v = x.values[:cap]
    if v.shape[0] < cap:
        v = np.concatenate([v, np.zeros(cap - v.shape[0])])
    return FeatureVector(cap, v)


def build_mixed_source(primary_source: Dataset, foreign: Dataset, dimension_cap: int | None = None) -> Dataset:
    """Append ``foreign`` instances, cut or zero-padded to the source dimension."""
    cap = primary_source.dimension if dimension_cap is None else int(dimension_cap)
    rows = primary_source.instances
    if cap != primary_source.dimension:
        rows = tuple((_fit_dimension(x, cap), y) for x, y in rows)
    rows += tuple((_fit_dimension(x, cap), y) for x, y in foreign.instances)
    return Dataset(f"mix_{primary_source.name}", cap, rows)


def subsample(dataset: Dataset, fraction: float, seed: int) -> Dataset:
    """Uniform subsample without replacement keeping ``floor(fraction * n)`` instances."""
    if not 0.0 < fraction <= 1.0:
        raise BadFraction(f"subsample fraction must lie in (0, 1], got {fraction}")
    if fraction == 1.0:
        return dataset
    n = math.floor(fraction * len(dataset))
    idx = np.sort(np.random.default_rng(seed).choice(len(dataset), size=n, replace=False))
    return dataset.subset(idx.tolist())

