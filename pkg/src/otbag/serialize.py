"""Plain-text model files.

Layout (whitespace separated, one record per line, ``#`` starts a comment)::

    otbag-model 1
    algorithm <otbag|sdmv|jdsmv>
    members <M>
    dimension <d>
    ledger <acc_f> <n_target_seen> <acc_h_0> ... <acc_h_M-1>      dual models
    surviving <i> <i> ...  |  surviving -                          sdmv (- = use F)
    segments <alpha> <eta>                                         jdsmv
    segment_ledger <acc_f> <n_target_seen> <acc_h...>              jdsmv, alpha lines
    index <i> <i> ...  |  index -                                  jdsmv, alpha-1 lines
    h <kind> <bias> <w_0> ... <w_d-1>                              M lines
    f <kind> <bias> <w_0> ... <w_d-1>                              M lines, dual models

``kind`` is ``perceptron`` or ``logistic:<learning_rate>``. Member indices are
0-based. Floats are written with ``repr`` so loading is bit-exact.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .ensemble import (
    AccuracyLedger,
    DualModel,
    EnsembleModel,
    JDSMVModel,
    OTBagModel,
    SDMVModel,
    SegmentIndexSets,
)
from .errors import BadModelFile, IoError, OTBagError
from .learners import LearnerKind, LinearLearner, new_learner

MAGIC = "otbag-model"
VERSION = 1


def _kind_token(h: LinearLearner) -> str:
    if h.kind is LearnerKind.LOGISTIC:
        return f"logistic:{h.learning_rate!r}"
    return h.kind.value


def _member_line(tag: str, h: LinearLearner) -> str:
    return " ".join([tag, _kind_token(h), repr(float(h.bias))] + [repr(float(w)) for w in h.weights])


def _ledger_tokens(led: AccuracyLedger) -> str:
    return " ".join(str(v) for v in [led.acc_f, led.n_target_seen, *led.acc_h])


def _index_tokens(index) -> str:
    return " ".join(str(i) for i in index) if index else "-"


def dumps(model: EnsembleModel) -> str:
    lines = [f"{MAGIC} {VERSION}", f"algorithm {model.algorithm}"]
    lines.append(f"members {len(model.h_members)}")
    lines.append(f"dimension {model.dimension}")
    if isinstance(model, OTBagModel):
        lines += [_member_line("h", h) for h in model.members]
        return "\n".join(lines) + "\n"

    dual = model.dual
    lines.append(f"ledger {_ledger_tokens(dual.ledger)}")
    if isinstance(model, SDMVModel):
        lines.append(f"surviving {_index_tokens(model.surviving)}")
    else:
        seg = model.segments
        lines.append(f"segments {seg.alpha} {seg.eta}")
        lines += [f"segment_ledger {_ledger_tokens(led)}" for led in seg.ledgers]
        lines += [f"index {_index_tokens(index)}" for index in seg.sets]
    lines += [_member_line("h", h) for h in dual.h_members]
    lines += [_member_line("f", f) for f in dual.f_members]
    return "\n".join(lines) + "\n"


def _parse_member(tokens: list[str], dimension: int) -> LinearLearner:
    kind, _, lr = tokens[0].partition(":")
    hyper = {"learning_rate": float(lr)} if lr else {}
    h = new_learner(kind, dimension, **hyper)
    values = [float(t) for t in tokens[1:]]
    if len(values) != dimension + 1:
        raise BadModelFile(f"member line has {len(values) - 1} weights, expected {dimension}")
    h.bias = values[0]
    h.weights = np.array(values[1:])
    return h


def _parse_ledger(tokens: list[str], m: int) -> AccuracyLedger:
    values = [int(t) for t in tokens]
    if len(values) != m + 2:
        raise BadModelFile(f"ledger needs {m + 2} counters, got {len(values)}")
    return AccuracyLedger(values[2:], values[0], values[1])


def _parse_index(tokens: list[str]) -> tuple[int, ...]:
    return () if tokens == ["-"] else tuple(int(t) for t in tokens)


def loads(text: str) -> EnsembleModel:
    records: dict[str, list[list[str]]] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            key, *rest = line.split()
            records.setdefault(key, []).append(rest)

    def one(key):
        if len(records.get(key, ())) != 1:
            raise BadModelFile(f"expected exactly one {key!r} record")
        return records[key][0]

    try:
        if one(MAGIC) != [str(VERSION)]:
            raise BadModelFile(f"unsupported model file version {one(MAGIC)}")
        (algorithm,) = one("algorithm")
        m = int(one("members")[0])
        dimension = int(one("dimension")[0])
        hs = [_parse_member(t, dimension) for t in records.get("h", [])]
        if len(hs) != m:
            raise BadModelFile(f"expected {m} h members, got {len(hs)}")
        if algorithm == "otbag":
            return OTBagModel(hs)
        fs = [_parse_member(t, dimension) for t in records.get("f", [])]
        if len(fs) != m:
            raise BadModelFile(f"expected {m} f members, got {len(fs)}")
        dual = DualModel(hs, fs, _parse_ledger(one("ledger"), m))
        if algorithm == "sdmv":
            surviving = _parse_index(one("surviving"))
            return SDMVModel(dual, surviving, fallback_to_f=not surviving)
        if algorithm == "jdsmv":
            alpha, eta = (int(t) for t in one("segments"))
            ledgers = [_parse_ledger(t, m) for t in records.get("segment_ledger", [])]
            sets = [_parse_index(t) for t in records.get("index", [])]
            return JDSMVModel(dual, SegmentIndexSets(alpha, eta, sets, ledgers))
    except BadModelFile:
        raise
    except (OTBagError, ValueError) as err:
        raise BadModelFile(f"malformed model file: {err}") from err
    raise BadModelFile(f"unknown algorithm {algorithm!r}")


def save_model(model: EnsembleModel, path) -> None:
    try:
        Path(path).write_text(dumps(model))
    except OSError as err:
        raise IoError(str(err)) from err


def load_model(path) -> EnsembleModel:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise IoError(str(err)) from err
    return loads(text)
