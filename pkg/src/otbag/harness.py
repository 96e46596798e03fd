"""Repeated randomized experiments and result reporting.

Repetition ``r`` uses seed ``base_seed + r``. That seed is expanded into
three independent sub-seeds (target split, stream order, Poisson draws), so
any single repetition can be rerun in isolation. Every algorithm in a
repetition sees the same stream and a fresh Poisson source on the same seed.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .core import Domain, TaggedInstance
from .data import (
    Dataset,
    TransferTask,
    build_mixed_source,
    interleave_stream,
    load_dense_csv,
    load_svmlight,
    make_task,
    subsample,
    zscore_normalize,
)
from .ensemble import prequential_eval, train_jdsmv, train_otbag, train_sdmv
from .errors import BadConfig, EmptyStream, EmptyTable, IoError, OTBagError
from .learners import LearnerKind
from .sampling import SeededRng

log = logging.getLogger(__name__)

ALGORITHMS = ("otbag", "sdmv", "jdsmv")
BASELINE = "target_only"
SYNTHETIC_KINDS = ("aligned", "flipped")
REPORT_FORMATS = ("table", "csv", "json")


@dataclass(frozen=True)
class SyntheticSpec:
    kind: str = "aligned"
    d: int = 10
    n_source: int = 1000
    n_target: int = 40
    n_test: int = 1000
    separation: float = 4.0

    def __post_init__(self):
        if self.kind not in SYNTHETIC_KINDS:
            raise BadConfig(f"synthetic kind must be one of {SYNTHETIC_KINDS}, got {self.kind!r}")
        if self.d < 1 or min(self.n_source, self.n_target, self.n_test) < 1:
            raise BadConfig("synthetic dimension and counts must be >= 1")


@dataclass
class ExperimentConfig:
    source: str | None = None
    target: str | None = None
    format: str = "csv"
    dimension: int | None = None
    label_column: int = -1
    positive_value: str = "1"
    header: bool = False
    mixed_foreign: str | None = None
    subsample: float = 1.0
    normalize: bool = False
    synthetic: SyntheticSpec | None = None
    m: int = 10
    alpha: int = 10
    segment_length: int | None = None
    train_fraction: float = 0.4
    repetitions: int = 20
    base_seed: int = 0
    learner: str = "perceptron"
    learning_rate: float = 0.1
    algorithms: tuple[str, ...] = ALGORITHMS
    baseline: bool = False
    count_mode: str = "prequential"

    def __post_init__(self):
        if isinstance(self.synthetic, dict):
            self.synthetic = SyntheticSpec(**self.synthetic)
        if isinstance(self.algorithms, str):
            self.algorithms = tuple(a.strip() for a in self.algorithms.split(",") if a.strip())
        self.algorithms = tuple(self.algorithms)

    def validate(self) -> "ExperimentConfig":
        if self.repetitions < 1:
            raise BadConfig(f"repetitions must be >= 1, got {self.repetitions}")
        if self.m < 1:
            raise BadConfig(f"M must be >= 1, got {self.m}")
        if self.alpha < 2:
            raise BadConfig(f"alpha must be >= 2, got {self.alpha}")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown or not self.algorithms:
            raise BadConfig(f"algorithms must be a nonempty subset of {ALGORITHMS}, got {self.algorithms}")
        if self.format not in ("csv", "svmlight"):
            raise BadConfig(f"format must be csv or svmlight, got {self.format!r}")
        if self.synthetic is None and not (self.source and self.target):
            raise BadConfig("need --source and --target files or a synthetic task")
        if self.format == "svmlight" and self.synthetic is None and not self.dimension:
            raise BadConfig("svmlight input needs --dimension")
        LearnerKind.parse(self.learner)
        return self

    def learner_params(self) -> dict:
        if LearnerKind.parse(self.learner) is LearnerKind.LOGISTIC:
            return {"learning_rate": self.learning_rate}
        return {}

    def to_dict(self) -> dict:
        out = asdict(self)
        out["algorithms"] = list(self.algorithms)
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(raw) - known
        if extra:
            raise BadConfig(f"unknown config keys: {sorted(extra)}")
        return cls(**raw)


@dataclass(frozen=True)
class ResultCell:
    task: str
    algorithm: str
    accuracies: tuple[float, ...]
    seconds: tuple[float, ...] = field(default=(), compare=False)

    @property
    def mean(self) -> float:
        return math.fsum(self.accuracies) / len(self.accuracies)

    @property
    def std(self) -> float:
        mu = self.mean
        return math.sqrt(math.fsum((a - mu) ** 2 for a in self.accuracies) / len(self.accuracies))


@dataclass
class ResultTable:
    cells: list[ResultCell] = field(default_factory=list)

    def __bool__(self):
        return bool(self.cells)

    def cell(self, task: str, algorithm: str) -> ResultCell:
        for c in self.cells:
            if c.task == task and c.algorithm == algorithm:
                return c
        raise KeyError((task, algorithm))

    def by_algorithm(self, algorithm: str) -> ResultCell:
        matches = [c for c in self.cells if c.algorithm == algorithm]
        if len(matches) != 1:
            raise KeyError(algorithm)
        return matches[0]

    def extend(self, other: "ResultTable") -> "ResultTable":
        return ResultTable(self.cells + other.cells)

    def to_dict(self, include_timing: bool = False) -> dict:
        out = []
        for c in self.cells:
            row = {
                "task": c.task,
                "algorithm": c.algorithm,
                "mean": c.mean,
                "std": c.std,
                "accuracies": list(c.accuracies),
            }
            if include_timing:
                row["seconds"] = list(c.seconds)
            out.append(row)
        return {"cells": out}

    @classmethod
    def from_dict(cls, raw: dict) -> "ResultTable":
        return cls([
            ResultCell(r["task"], r["algorithm"], tuple(r["accuracies"]), tuple(r.get("seconds", ())))
            for r in raw["cells"]
        ])

    @classmethod
    def from_json(cls, text: str) -> "ResultTable":
        return cls.from_dict(json.loads(text))


def make_synthetic_task(kind: str, d: int, n_source: int, n_target: int, n_test: int, separation: float, seed) -> TransferTask:
    """Two unit-variance Gaussian clouds centred at +-separation/2 on the first axis.

    ``aligned`` draws the source from the target distribution; ``flipped``
    does the same and then inverts every source label. Labels within each
    sample are balanced (odd counts give label 0 the extra instance).
    """
    spec = SyntheticSpec(kind, d, n_source, n_target, n_test, separation)
    rng = np.random.default_rng(seed)

    def sample(n, name, flip=False):
        y = rng.permutation(np.arange(n) % 2)
        X = rng.standard_normal((n, spec.d))
        X[:, 0] += (2 * y - 1) * (spec.separation / 2)
        return Dataset.from_arrays(name, X, 1 - y if flip else y)

    source = sample(spec.n_source, f"synth_{kind}_source", flip=kind == "flipped")
    train = sample(spec.n_target, "synth_target")
    test = sample(spec.n_test, "synth_target")
    return TransferTask(source, train, test, seed)


def repetition_seeds(seed: int) -> tuple[int, int, int]:
    """(split, order, bagging) seeds derived from one repetition seed."""
    children = np.random.SeedSequence(seed).spawn(3)
    return tuple(int(c.generate_state(1, dtype=np.uint64)[0]) for c in children)


def _load(path: str, config: ExperimentConfig) -> Dataset:
    if config.format == "svmlight":
        return load_svmlight(path, config.dimension)
    return load_dense_csv(path, config.label_column, config.positive_value, config.header)


class _TaskFactory:
    """Builds the per-repetition transfer task from a config."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        if config.synthetic is not None:
            self.name = f"synthetic_{config.synthetic.kind}"
            return
        source = _load(config.source, config)
        target = _load(config.target, config)
        if config.subsample < 1.0:
            source = subsample(source, config.subsample, config.base_seed)
            target = subsample(target, config.subsample, config.base_seed + 1)
        if config.mixed_foreign:
            source = build_mixed_source(source, _load(config.mixed_foreign, config))
        self.source, self.target = source, target
        self.name = f"{source.name}->{target.name}"

    def __call__(self, split_seed: int) -> TransferTask:
        cfg = self.config
        if cfg.synthetic is not None:
            s = cfg.synthetic
            return make_synthetic_task(s.kind, s.d, s.n_source, s.n_target, s.n_test, s.separation, split_seed)
        task = make_task(self.source, self.target, cfg.train_fraction, split_seed)
        if cfg.normalize:
            fit_on = Dataset("train", task.source.dimension, task.source.instances + task.target_train.instances)
            _, (src, tr, te), _ = zscore_normalize(fit_on, [task.source, task.target_train, task.target_test])
            task = TransferTask(src, tr, te, task.seed)
        return task


def _train(algorithm: str, stream: list[TaggedInstance], config: ExperimentConfig, bag_seed: int):
    rng = SeededRng(bag_seed)
    params = config.learner_params()
    if algorithm in ("otbag", BASELINE):
        return train_otbag(stream, config.m, config.learner, rng, **params)
    if algorithm == "sdmv":
        return train_sdmv(stream, config.m, config.learner, rng, count_mode=config.count_mode, **params)
    if config.segment_length:
        return train_jdsmv(stream, config.m, config.learner, rng, segment_length=config.segment_length,
                           count_mode=config.count_mode, **params)
    return train_jdsmv(stream, config.m, config.learner, rng, alpha=config.alpha,
                       count_mode=config.count_mode, **params)


ModelSink = Callable[[int, str, object], None]


def _run(config: ExperimentConfig, algorithms: Sequence[str], model_sink: ModelSink | None) -> ResultTable:
    config.validate()
    factory = _TaskFactory(config)
    acc = {a: [] for a in algorithms}
    secs = {a: [] for a in algorithms}
    for r in range(config.repetitions):
        seed = config.base_seed + r
        try:
            split_seed, order_seed, bag_seed = repetition_seeds(seed)
            task = factory(split_seed)
            stream = interleave_stream(task, order_seed)
            for algorithm in algorithms:
                run_stream = stream
                if algorithm == BASELINE:
                    run_stream = [inst for inst in stream if inst.domain is Domain.TARGET]
                    if not run_stream:
                        raise EmptyStream("target training split is empty")
                start = time.perf_counter()
                model = _train(algorithm, run_stream, config, bag_seed)
                score = prequential_eval(model, [
                    TaggedInstance(x, y, Domain.TARGET) for x, y in task.target_test.instances
                ])
                secs[algorithm].append(time.perf_counter() - start)
                acc[algorithm].append(score)
                if model_sink is not None:
                    model_sink(r, algorithm, model)
        except OTBagError as err:
            annotated = type(err)(f"repetition {r} (seed {seed}): {err}")
            annotated.repetition = r
            raise annotated from err
        log.debug("repetition %d done: %s", r, {a: v[-1] for a, v in acc.items()})
    return ResultTable([
        ResultCell(factory.name, a, tuple(acc[a]), tuple(secs[a])) for a in algorithms
    ])


def run_experiment(config: ExperimentConfig, model_sink: ModelSink | None = None) -> ResultTable:
    """Run the selected algorithms (plus the target-only control when ``config.baseline``)."""
    algorithms = list(config.algorithms) + ([BASELINE] if config.baseline else [])
    return _run(config, algorithms, model_sink)


def run_baseline_target_only(config: ExperimentConfig, model_sink: ModelSink | None = None) -> ResultTable:
    """OTBag trained on the target-train instances alone, in the same order and with the same draws."""
    return _run(config, [BASELINE], model_sink)


def format_cell(mean: float, std: float) -> str:
    """Mean as a percentage and std as a fraction, both to two decimals."""
    return f"{100 * mean:.2f}±{std:.2f}"


def _text_table(table: ResultTable) -> str:
    tasks = list(dict.fromkeys(c.task for c in table.cells))
    algos = list(dict.fromkeys(c.algorithm for c in table.cells))
    lookup = {(c.task, c.algorithm): format_cell(c.mean, c.std) for c in table.cells}
    header = ["task"] + algos
    rows = [[t] + [lookup.get((t, a), "-") for a in algos] for t in tasks]
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    def fmt(r):
        return "  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip()

    return "\n".join([fmt(header), fmt(["-" * w for w in widths])] + [fmt(r) for r in rows]) + "\n"


def _csv(table: ResultTable, include_timing: bool) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["task", "algorithm", "repetition", "accuracy", "mean", "std"] + (["seconds"] if include_timing else []))
    for c in table.cells:
        for r, a in enumerate(c.accuracies):
            row = [c.task, c.algorithm, r, repr(a), repr(c.mean), repr(c.std)]
            if include_timing:
                row.append(repr(c.seconds[r]))
            out.writerow(row)
    return buf.getvalue()


def render_report(table: ResultTable, fmt: str = "table", include_timing: bool = False) -> str:
    if not table:
        raise EmptyTable("result table has no cells")
    if fmt == "table":
        return _text_table(table)
    if fmt == "csv":
        return _csv(table, include_timing)
    if fmt == "json":
        return json.dumps(table.to_dict(include_timing), indent=2, sort_keys=True) + "\n"
    raise BadConfig(f"report format must be one of {REPORT_FORMATS}, got {fmt!r}")


def emit_report(table: ResultTable, fmt: str = "table", path=None, include_timing: bool = False) -> str:
    """Render ``table`` and write it to ``path`` when given; returns the text either way.

    Timings are left out unless asked for, so reports of identical runs are
    byte-identical.
    """
    text = render_report(table, fmt, include_timing)
    if path is not None:
        try:
            Path(path).write_text(text, encoding="utf-8")
        except OSError as err:
            raise IoError(f"cannot write report to {path}: {err}") from err
    return text
