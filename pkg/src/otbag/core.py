"""Shared value types and the majority-vote primitive."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import BadDimension, BadLabel, BadValue, DimensionMismatch, EmptyCommittee

LABELS = (0, 1)


class Domain(enum.Enum):
    SOURCE = "source"
    TARGET = "target"


def check_label(y) -> int:
    """Return ``y`` as a plain int, rejecting anything outside {0, 1}."""
    if isinstance(y, (bool, np.bool_)) or y not in LABELS:
        raise BadLabel(f"label must be 0 or 1, got {y!r}")
    return int(y)


class FeatureVector:
    """Immutable real vector in dense or sparse form.

    Dense vectors keep every coordinate in ``values``. Sparse vectors keep
    strictly ascending ``indices`` with matching ``values``; absent
    coordinates are zero. Both forms expose the same arithmetic, so learners
    never branch on the representation.
    """

    __slots__ = ("dimension", "values", "indices")

    def __init__(self, dimension: int, values, indices=None):
        dimension = int(dimension)
        if dimension < 1:
            raise BadDimension(f"dimension must be >= 1, got {dimension}")
        values = np.array(values, dtype=np.float64).ravel()
        if not np.all(np.isfinite(values)):
            raise BadValue("feature values must be finite")
        if indices is None:
            if values.shape[0] != dimension:
                raise DimensionMismatch(
                    f"dense vector has {values.shape[0]} entries, expected {dimension}"
                )
        else:
            indices = np.array(indices, dtype=np.int64).ravel()
            if indices.shape != values.shape:
                raise BadValue("indices and values differ in length")
            if indices.size:
                if indices[0] < 0 or indices[-1] >= dimension:
                    raise BadValue(f"sparse index outside [0, {dimension})")
                if np.any(np.diff(indices) <= 0):
                    raise BadValue("sparse indices must be strictly ascending")
            indices.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "dimension", dimension)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "indices", indices)

    def __setattr__(self, name, value):
        raise AttributeError("FeatureVector is immutable")

    @classmethod
    def dense(cls, values) -> "FeatureVector":
        values = np.asarray(values, dtype=np.float64).ravel()
        return cls(values.shape[0], values)

    @classmethod
    def sparse(cls, dimension: int, entries: Mapping[int, float] | Iterable[tuple[int, float]]):
        """Build from an index->value mapping or (index, value) pairs in any order."""
        pairs = entries.items() if isinstance(entries, Mapping) else entries
        pairs = sorted((int(i), float(v)) for i, v in pairs)
        for (a, _), (b, _) in zip(pairs, pairs[1:]):
            if a == b:
                raise BadValue(f"duplicate sparse index {a}")
        idx = [i for i, _ in pairs]
        vals = [v for _, v in pairs]
        return cls(dimension, vals, idx)

    @property
    def is_sparse(self) -> bool:
        return self.indices is not None

    def to_dense(self) -> np.ndarray:
        if self.indices is None:
            return self.values
        out = np.zeros(self.dimension)
        out[self.indices] = self.values
        return out

    def to_sparse(self) -> "FeatureVector":
        if self.indices is not None:
            return self
        nz = np.flatnonzero(self.values)
        return FeatureVector(self.dimension, self.values[nz], nz)

    def dot(self, w: np.ndarray) -> float:
        if self.indices is None:
            return float(np.dot(w, self.values))
        return float(np.dot(w[self.indices], self.values))

    def add_to(self, w: np.ndarray, scale: float) -> None:
        """In-place ``w += scale * self``."""
        if self.indices is None:
            w += scale * self.values
        else:
            w[self.indices] += scale * self.values

    def __eq__(self, other):
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return self.dimension == other.dimension and np.array_equal(
            self.to_dense(), other.to_dense()
        )

    __hash__ = None

    def __repr__(self):
        if self.indices is None:
            return f"FeatureVector.dense({self.values.tolist()})"
        body = dict(zip(self.indices.tolist(), self.values.tolist()))
        return f"FeatureVector.sparse({self.dimension}, {body})"


@dataclass(frozen=True)
class TaggedInstance:
    x: FeatureVector
    y: int
    domain: Domain

    def __post_init__(self):
        object.__setattr__(self, "y", check_label(self.y))
        if not isinstance(self.domain, Domain):
            raise BadValue(f"domain must be a Domain, got {self.domain!r}")

    @property
    def is_target(self) -> bool:
        return self.domain is Domain.TARGET


def vote_margin(votes: Sequence[int]) -> int:
    """Votes for label 1 minus votes for label 0."""
    if len(votes) == 0:
        raise EmptyCommittee("cannot vote with an empty committee")
    ones = sum(1 for v in votes if check_label(v) == 1)
    return 2 * ones - len(votes)


def majority_vote(votes: Sequence[int]) -> int:
    """Label with strictly more votes; exact ties go to label 0."""
    return 1 if vote_margin(votes) > 0 else 0


def stream_dimension(instances: Sequence[TaggedInstance]) -> int:
    dims = {inst.x.dimension for inst in instances}
    if len(dims) > 1:
        raise DimensionMismatch(f"stream mixes dimensions {sorted(dims)}")
    return dims.pop()
