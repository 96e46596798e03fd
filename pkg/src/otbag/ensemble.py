"""Online transfer bagging and its two committee-filtering variants.

All three trainers walk the merged source/target stream once, in order. For
every instance and every member ``m`` (in index order) a single count
``k ~ Poisson(1)`` is drawn and ``h_m`` is updated ``k`` times. The filtering
variants also keep a target-only committee ``F``: on target instances ``f_m``
receives the same ``k`` updates.

Accuracy ledgers are prequential by default: each target instance is scored
by every ``h_m`` and by the ``F`` majority vote once, before any member sees
it. ``count_mode="in_loop"`` instead counts ``h_m`` hits inside the ``k``-fold
update block and scores ``F`` after the updates.

Member indices are 0-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import FeatureVector, TaggedInstance, majority_vote, stream_dimension
from .errors import BadConfig, BadSegment, DimensionMismatch, EmptyStream, EmptyTestSet, NoTargetData
from .learners import LinearLearner, new_learner

COUNT_MODES = ("prequential", "in_loop")


@dataclass
class AccuracyLedger:
    acc_h: list[int]
    acc_f: int = 0
    n_target_seen: int = 0

    @classmethod
    def zeros(cls, m: int) -> "AccuracyLedger":
        return cls([0] * m)

    def dominating(self) -> tuple[int, ...]:
        """Members whose hit count is at least the F committee's."""
        return tuple(m for m, hits in enumerate(self.acc_h) if hits >= self.acc_f)

    @classmethod
    def total(cls, ledgers: Sequence["AccuracyLedger"]) -> "AccuracyLedger":
        m = len(ledgers[0].acc_h)
        return cls(
            [sum(led.acc_h[i] for led in ledgers) for i in range(m)],
            sum(led.acc_f for led in ledgers),
            sum(led.n_target_seen for led in ledgers),
        )


def _committee_labels(members: Sequence[LinearLearner], x: FeatureVector) -> list[int]:
    return [h.predict(x) for h in members]


def _committee_matrix(members: Sequence[LinearLearner], X: np.ndarray) -> np.ndarray:
    return np.stack([h.predict_matrix(X) for h in members])


def _vote_rows(labels: np.ndarray) -> np.ndarray:
    """Column-wise majority vote over a (voters, n) label array; ties -> 0."""
    margin = 2 * labels.sum(axis=0, dtype=np.int64) - labels.shape[0]
    return (margin > 0).astype(np.int8)


class _Model:
    algorithm: str

    @property
    def dimension(self) -> int:
        return self.h_members[0].dimension

    def _check(self, x: FeatureVector) -> None:
        if x.dimension != self.dimension:
            raise DimensionMismatch(
                f"model has dimension {self.dimension}, got vector of {x.dimension}"
            )

    def _check_matrix(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.dimension:
            raise DimensionMismatch(f"expected (n, {self.dimension}) array, got {X.shape}")
        return X


@dataclass(eq=True)
class OTBagModel(_Model):
    members: list[LinearLearner]
    algorithm = "otbag"

    @property
    def h_members(self) -> list[LinearLearner]:
        return self.members

    def predict(self, x: FeatureVector) -> int:
        self._check(x)
        return majority_vote(_committee_labels(self.members, x))

    def predict_matrix(self, X) -> np.ndarray:
        X = self._check_matrix(X)
        return _vote_rows(_committee_matrix(self.members, X))


@dataclass(eq=True)
class DualModel:
    h_members: list[LinearLearner]
    f_members: list[LinearLearner]
    ledger: AccuracyLedger


@dataclass(eq=True)
class SDMVModel(_Model):
    dual: DualModel
    surviving: tuple[int, ...]
    fallback_to_f: bool
    algorithm = "sdmv"

    def __post_init__(self):
        if bool(self.surviving) == bool(self.fallback_to_f):
            raise BadConfig("exactly one of a nonempty surviving set or the F fallback is required")

    @property
    def h_members(self) -> list[LinearLearner]:
        return self.dual.h_members

    def committee(self) -> list[LinearLearner]:
        if self.fallback_to_f:
            return self.dual.f_members
        return [self.dual.h_members[m] for m in self.surviving]

    def predict(self, x: FeatureVector) -> int:
        self._check(x)
        return majority_vote(_committee_labels(self.committee(), x))

    def predict_matrix(self, X) -> np.ndarray:
        X = self._check_matrix(X)
        return _vote_rows(_committee_matrix(self.committee(), X))


@dataclass(eq=True)
class SegmentIndexSets:
    """Per-segment dominance records.

    ``alpha`` counts all segments, ``eta`` is the nominal segment length,
    ``sets[j]`` holds the dominating members of segment ``j + 2`` (the first
    segment only warms the learners up) and ``ledgers`` has one entry per
    segment including the first.
    """

    alpha: int
    eta: int
    sets: list[tuple[int, ...]]
    ledgers: list[AccuracyLedger] = field(default_factory=list)

    def __post_init__(self):
        if self.alpha < 2 or len(self.sets) != self.alpha - 1:
            raise BadSegment(f"{self.alpha} segments need {self.alpha - 1} index sets, got {len(self.sets)}")


@dataclass(eq=True)
class JDSMVModel(_Model):
    dual: DualModel
    segments: SegmentIndexSets
    algorithm = "jdsmv"

    @property
    def h_members(self) -> list[LinearLearner]:
        return self.dual.h_members

    def segment_decisions(self, x: FeatureVector) -> tuple[list[int], int]:
        """Return the per-segment committee decisions and the F decision."""
        self._check(x)
        psi_f = majority_vote(_committee_labels(self.dual.f_members, x))
        psi = []
        for index in self.segments.sets:
            if index:
                psi.append(majority_vote([self.dual.h_members[m].predict(x) for m in index]))
            else:
                psi.append(psi_f)
        return psi, psi_f

    def predict(self, x: FeatureVector) -> int:
        psi, psi_f = self.segment_decisions(x)
        return majority_vote(psi + [psi_f])

    def predict_matrix(self, X) -> np.ndarray:
        X = self._check_matrix(X)
        h_labels = _committee_matrix(self.dual.h_members, X)
        psi_f = _vote_rows(_committee_matrix(self.dual.f_members, X))
        rows = [_vote_rows(h_labels[list(index)]) if index else psi_f for index in self.segments.sets]
        rows.append(psi_f)
        return _vote_rows(np.stack(rows))


EnsembleModel = OTBagModel | SDMVModel | JDSMVModel


def _prepare(stream: Iterable[TaggedInstance], m: int) -> tuple[list[TaggedInstance], int]:
    if int(m) < 1:
        raise BadConfig(f"ensemble size must be >= 1, got {m}")
    stream = list(stream)
    if not stream:
        raise EmptyStream("training stream is empty")
    return stream, stream_dimension(stream)


def _fresh(m, kind, dimension, hyperparams) -> list[LinearLearner]:
    return [new_learner(kind, dimension, **hyperparams) for _ in range(m)]


def train_otbag(
    stream: Iterable[TaggedInstance],
    m: int,
    kind,
    rng,
    **hyperparams,
) -> OTBagModel:
    """Online bagging over the whole stream; domain tags are ignored."""
    stream, dim = _prepare(stream, m)
    members = _fresh(m, kind, dim, hyperparams)
    for inst in stream:
        x, y = inst.x, inst.y
        for h in members:
            for _ in range(rng.poisson1()):
                h.update(x, y)
    return OTBagModel(members)


def _dual_pass(
    stream: list[TaggedInstance],
    m: int,
    kind,
    rng,
    hyperparams: dict,
    count_mode: str,
    segment_of: Callable[[int], int],
    n_segments: int,
) -> tuple[list[LinearLearner], list[LinearLearner], list[AccuracyLedger]]:
    if count_mode not in COUNT_MODES:
        raise BadConfig(f"count_mode must be one of {COUNT_MODES}, got {count_mode!r}")
    dim = stream[0].x.dimension
    hs = _fresh(m, kind, dim, hyperparams)
    fs = _fresh(m, kind, dim, hyperparams)
    ledgers = [AccuracyLedger.zeros(m) for _ in range(n_segments)]
    prequential = count_mode == "prequential"

    for n, inst in enumerate(stream):
        x, y = inst.x, inst.y
        target = inst.is_target
        led = ledgers[segment_of(n)]
        if target:
            led.n_target_seen += 1
            if prequential:
                for i, h in enumerate(hs):
                    if h.predict(x) == y:
                        led.acc_h[i] += 1
                if majority_vote(_committee_labels(fs, x)) == y:
                    led.acc_f += 1
        for i in range(m):
            h, f = hs[i], fs[i]
            for _ in range(rng.poisson1()):
                h.update(x, y)
                if target:
                    f.update(x, y)
                    if not prequential and h.predict(x) == y:
                        led.acc_h[i] += 1
        if target and not prequential:
            if majority_vote(_committee_labels(fs, x)) == y:
                led.acc_f += 1
    return hs, fs, ledgers


def train_sdmv(
    stream: Iterable[TaggedInstance],
    m: int,
    kind,
    rng,
    count_mode: str = "prequential",
    **hyperparams,
) -> SDMVModel:
    """Dual H/F training, then keep the members at least as accurate as F on target data."""
    stream, _ = _prepare(stream, m)
    if not any(inst.is_target for inst in stream):
        raise NoTargetData("dominance filtering needs at least one target instance")
    hs, fs, (ledger,) = _dual_pass(stream, m, kind, rng, hyperparams, count_mode, lambda n: 0, 1)
    surviving = ledger.dominating()
    return SDMVModel(DualModel(hs, fs, ledger), surviving, fallback_to_f=not surviving)


def segment_plan(n: int, alpha: int | None = None, segment_length: int | None = None) -> tuple[int, int]:
    """Return ``(eta, n_segments)`` for a stream of ``n`` instances.

    With ``alpha`` the stream is cut into ``alpha`` segments of ``n // alpha``
    instances; with ``segment_length`` into ``n // segment_length`` segments.
    Either way the leftover tail joins the last segment.
    """
    if (alpha is None) == (segment_length is None):
        raise BadSegment("give exactly one of alpha or segment_length")
    if alpha is not None:
        if alpha < 2:
            raise BadSegment(f"alpha must be >= 2, got {alpha}")
        eta = n // alpha
        if eta < 1:
            raise BadSegment(f"stream of {n} instances cannot fill {alpha} segments")
        return eta, alpha
    if segment_length < 1:
        raise BadSegment(f"segment_length must be >= 1, got {segment_length}")
    if n < 2 * segment_length:
        raise BadSegment(
            f"stream of {n} instances is shorter than two segments of {segment_length}"
        )
    return segment_length, n // segment_length


def train_jdsmv(
    stream: Iterable[TaggedInstance],
    m: int,
    kind,
    rng,
    alpha: int | None = None,
    segment_length: int | None = None,
    count_mode: str = "prequential",
    **hyperparams,
) -> JDSMVModel:
    """Dual H/F training with per-segment ledgers and dominance index sets."""
    stream, _ = _prepare(stream, m)
    eta, n_seg = segment_plan(len(stream), alpha, segment_length)
    last = n_seg - 1
    hs, fs, ledgers = _dual_pass(
        stream, m, kind, rng, hyperparams, count_mode, lambda n: min(n // eta, last), n_seg
    )
    sets = [led.dominating() if led.n_target_seen else () for led in ledgers[1:]]
    dual = DualModel(hs, fs, AccuracyLedger.total(ledgers))
    return JDSMVModel(dual, SegmentIndexSets(n_seg, eta, sets, ledgers))


def predict_otbag(model: OTBagModel, x: FeatureVector) -> int:
    return model.predict(x)


def predict_sdmv(model: SDMVModel, x: FeatureVector) -> int:
    return model.predict(x)


def predict_jdsmv(model: JDSMVModel, x: FeatureVector) -> int:
    return model.predict(x)


def prequential_eval(model: EnsembleModel, test_set: Sequence[TaggedInstance]) -> float:
    """Fraction of held-out instances labelled correctly; the model is not updated."""
    if len(test_set) == 0:
        raise EmptyTestSet("test set is empty")
    y = np.fromiter((inst.y for inst in test_set), dtype=np.int8, count=len(test_set))
    if all(not inst.x.is_sparse for inst in test_set):
        X = np.stack([inst.x.values for inst in test_set])
        pred = model.predict_matrix(X)
    else:
        pred = np.fromiter((model.predict(inst.x) for inst in test_set), dtype=np.int8)
    return float(np.mean(pred == y))
