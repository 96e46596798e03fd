"""Exit-criteria checks, runnable without pytest via ``otbag selftest``.

Each check returns a :class:`Check` carrying the measured quantities, the
verdict and the wall-clock time; time budgets are part of the verdict.
"""

from __future__ import annotations

import itertools
import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from .core import Domain, FeatureVector, TaggedInstance, majority_vote
from .data import write_dense_csv
from .ensemble import predict_otbag, train_jdsmv, train_otbag, train_sdmv
from .harness import ExperimentConfig, SyntheticSpec, make_synthetic_task, run_experiment
from .learners import OnlineLogistic, Perceptron
from .sampling import FixedDraws, ScriptedDraws, SeededRng, binomial_pmf, poisson1_pmf
from .serialize import dumps, loads


@dataclass
class Check:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.2f}s)"


def _timed(number, name, budget):
    def wrap(fn):
        def run() -> Check:
            start = time.perf_counter()
            passed, detail = fn()
            took = time.perf_counter() - start
            if took >= budget:
                passed = False
                detail += f"; over the {budget:g}s budget"
            return Check(number, name, passed, detail, took)

        run.__name__ = fn.__name__
        run.number = number
        return run

    return wrap


@_timed(1, "poisson limit of the binomial", 1.0)
def check_poisson_limit():
    gap = max(abs(binomial_pmf(10_000, k) - poisson1_pmf(k)) for k in range(11))
    return gap < 1e-4, f"max |Binom(1e4, 1e-4) - Poisson(1)| over k<=10 = {gap:.2e} (< 1e-4)"


def poisson_bins(draws: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Observed and expected counts over bins {0, 1, 2, 3, >=4}."""
    n = draws.size
    observed = np.array([np.sum(draws == k) for k in range(4)] + [np.sum(draws >= 4)])
    probs = [poisson1_pmf(k) for k in range(4)]
    probs.append(1.0 - sum(probs))
    return observed, n * np.array(probs)


@_timed(2, "sampler statistics", 2.0)
def check_sampler():
    rng = SeededRng(2024)
    draws = np.array([rng.poisson1() for _ in range(100_000)])
    mean = draws.mean()
    p0 = np.mean(draws == 0)
    observed, expected = poisson_bins(draws)
    p_value = stats.chisquare(observed, expected).pvalue
    ok = 0.99 <= mean <= 1.01 and 0.357 <= p0 <= 0.379 and p_value > 0.001
    return ok, f"mean={mean:.4f}, freq(0)={p0:.4f}, chi-square p={p_value:.3f}"


def _random_stream(rng, n, d, target_share=0.5):
    X = rng.standard_normal((n, d))
    y = (X @ rng.standard_normal(d) > 0).astype(int)
    doms = rng.random(n) < target_share
    return [
        TaggedInstance(FeatureVector.dense(x), int(t), Domain.TARGET if dm else Domain.SOURCE)
        for x, t, dm in zip(X, y, doms)
    ]


@_timed(3, "degenerate ensemble equals one perceptron", 1.0)
def check_degenerate():
    rng = np.random.default_rng(3)
    stream = _random_stream(rng, 200, 4)
    model = train_otbag(stream, 1, "perceptron", FixedDraws(1))
    single = Perceptron(4)
    for inst in stream:
        single.update(inst.x, inst.y)
    points = [FeatureVector.dense(v) for v in rng.standard_normal((100, 4))]
    mismatches = sum(predict_otbag(model, x) != single.predict(x) for x in points)
    return mismatches == 0, f"{mismatches} label mismatches on 100 points"


@_timed(4, "majority vote against brute-force count", 0.5)
def check_vote_oracle():
    cases = 0
    bad = 0
    for n in range(1, 6):
        for votes in itertools.product((0, 1), repeat=n):
            cases += 1
            ones = sum(1 for v in votes if v == 1)
            zeros = sum(1 for v in votes if v == 0)
            expected = 1 if ones > zeros else 0
            bad += majority_vote(list(votes)) != expected
    return bad == 0 and cases == 62, f"{cases} vote lists, {bad} disagreements"


# Four-instance, two-member, two-feature perceptron trace. Draws are consumed
# per instance in member order; the comments give the state after each step.
TRACE_STREAM = [
    # h0 ([1,0],1) f0 ([1,0],1); h1 f1 untouched (k=0)
    (([1.0, 0.0], 1, Domain.TARGET), (1, 0)),
    # h0 misfires (score 1) -> ([1,-1],0); h1 already right
    (([0.0, 1.0], 0, Domain.SOURCE), (1, 1)),
    # before updates: h0 right (score 0), h1 right, F = vote(1, 0) = 0 right
    (([1.0, 1.0], 0, Domain.TARGET), (0, 2)),
    # before updates: h0 wrong (score 1), h1 right, F = vote(1, 0) = 0 right;
    # then h0 -> ([-1,-2],-1), f0 -> ([-1,-1],0)
    (([2.0, 1.0], 0, Domain.TARGET), (1, 1)),
]
TRACE_EXPECTED = {
    "acc_h": [1, 2],
    "acc_f": 2,
    "n_target_seen": 3,
    "surviving": (1,),
    "h": [([-1.0, -2.0], -1.0), ([0.0, 0.0], 0.0)],
    "f": [([-1.0, -1.0], 0.0), ([0.0, 0.0], 0.0)],
    # segment_length 2: segment 1 = instances 1-2, segment 2 = instances 3-4
    "segment_ledgers": [([0, 0], 0, 1), ([1, 2], 2, 2)],
    "zeta": [(1,)],
}


def trace_stream():
    stream = [TaggedInstance(FeatureVector.dense(x), y, dom) for (x, y, dom), _ in TRACE_STREAM]
    draws = [k for _, ks in TRACE_STREAM for k in ks]
    return stream, draws


def _states(members):
    return [(h.weights.tolist(), h.bias) for h in members]


@_timed(5, "hand-traced ledgers, H* and zeta", 0.5)
def check_hand_trace():
    stream, draws = trace_stream()
    exp = TRACE_EXPECTED
    sd = train_sdmv(stream, 2, "perceptron", ScriptedDraws(draws))
    led = sd.dual.ledger
    sdmv_ok = (
        led.acc_h == exp["acc_h"]
        and led.acc_f == exp["acc_f"]
        and led.n_target_seen == exp["n_target_seen"]
        and sd.surviving == exp["surviving"]
        and not sd.fallback_to_f
        and _states(sd.dual.h_members) == exp["h"]
        and _states(sd.dual.f_members) == exp["f"]
    )
    jd_ok = True
    for kwargs in ({"segment_length": 2}, {"alpha": 2}):
        jd = train_jdsmv(stream, 2, "perceptron", ScriptedDraws(draws), **kwargs)
        seg_ledgers = [(s.acc_h, s.acc_f, s.n_target_seen) for s in jd.segments.ledgers]
        jd_ok &= (
            seg_ledgers == exp["segment_ledgers"]
            and jd.segments.sets == exp["zeta"]
            and _states(jd.dual.h_members) == exp["h"]
            and _states(jd.dual.f_members) == exp["f"]
        )
    return sdmv_ok and jd_ok, f"sdmv ledger {led.acc_h}/{led.acc_f}, H*={sd.surviving}, zeta={jd.segments.sets}"


ACCEPTANCE_SIZES = dict(d=10, n_source=1000, n_target=40, n_test=1000, separation=4.0)


def _synthetic_run(kind, algorithms, baseline=False):
    cfg = ExperimentConfig(
        synthetic=SyntheticSpec(kind=kind, **ACCEPTANCE_SIZES),
        algorithms=algorithms,
        baseline=baseline,
        repetitions=20,
    )
    return run_experiment(cfg)


@_timed(6, "positive transfer on aligned synthetic task", 10.0)
def check_positive_transfer():
    table = _synthetic_run("aligned", ("otbag",), baseline=True)
    otbag = table.by_algorithm("otbag").mean
    base = table.by_algorithm("target_only").mean
    gain = 100 * (otbag - base)
    ok = gain >= 3.0 and otbag >= 0.85
    return ok, f"otbag {100 * otbag:.2f}% vs target-only {100 * base:.2f}% (gain {gain:+.2f} pp, need >= +3.00 and otbag >= 85%)"


@_timed(7, "negative-transfer mitigation on flipped synthetic task", 15.0)
def check_negative_transfer():
    table = _synthetic_run("flipped", ("otbag", "sdmv", "jdsmv"))
    ot, sd, jd = (100 * table.by_algorithm(a).mean for a in ("otbag", "sdmv", "jdsmv"))
    ok = jd >= ot + 5.0 and sd >= ot
    return ok, f"otbag {ot:.2f}%, sdmv {sd:.2f}%, jdsmv {jd:.2f}%"


@_timed(8, "byte-identical json from two identical runs", 10.0)
def check_determinism():
    from .cli import main

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        task = make_synthetic_task("flipped", 5, 300, 60, 1, 3.0, seed=8)
        write_dense_csv(task.source, tmp / "source.csv")
        write_dense_csv(task.target_train, tmp / "target.csv")
        outputs = []
        for i in range(2):
            out = tmp / f"report{i}.json"
            argv = ["run", "--source", str(tmp / "source.csv"), "--target", str(tmp / "target.csv"),
                    "--reps", "3", "--seed", "11", "--report", "json", "--out", str(out), "--baseline"]
            code = main(argv)
            if code != 0:
                return False, f"run exited with {code}"
            outputs.append(out.read_bytes())
    return outputs[0] == outputs[1], f"{len(outputs[0])}-byte reports {'identical' if outputs[0] == outputs[1] else 'differ'}"


def _loss(w, b, x, y):
    s = float(np.dot(w, x) + b)
    # log(1 + e^-s) for y=1, log(1 + e^s) for y=0, in overflow-safe form
    z = s if y == 0 else -s
    return max(z, 0.0) + math.log1p(math.exp(-abs(z)))


@_timed(9, "logistic step against finite-difference gradient", 1.0)
def check_gradient():
    rng = np.random.default_rng(9)
    h = 1e-6
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(1, 6))
        lr = float(rng.uniform(0.01, 1.0))
        learner = OnlineLogistic(d, learning_rate=lr)
        learner.weights = rng.standard_normal(d)
        learner.bias = float(rng.standard_normal())
        x = rng.standard_normal(d)
        y = int(rng.integers(0, 2))
        w0, b0 = learner.weights.copy(), learner.bias
        learner.update(FeatureVector.dense(x), y)
        step = np.append(learner.weights - w0, learner.bias - b0) / lr
        params = np.append(w0, b0)
        grad = np.empty(d + 1)
        for i in range(d + 1):
            up, dn = params.copy(), params.copy()
            up[i] += h
            dn[i] -= h
            grad[i] = (_loss(up[:d], up[d], x, y) - _loss(dn[:d], dn[d], x, y)) / (2 * h)
        rel = np.linalg.norm(step + grad) / max(np.linalg.norm(grad), 1e-300)
        worst = max(worst, rel)
    return worst < 1e-5, f"worst relative error {worst:.2e} over 100 cases"


@_timed(10, "model file round trip", 2.0)
def check_serialization():
    rng = np.random.default_rng(10)
    stream = _random_stream(rng, 300, 6, target_share=0.3)
    models = [
        train_otbag(stream, 5, "perceptron", SeededRng(1)),
        train_sdmv(stream, 5, "logistic", SeededRng(2), learning_rate=0.3),
        train_jdsmv(stream, 5, "perceptron", SeededRng(3), alpha=4),
    ]
    points = [FeatureVector.dense(v) for v in rng.standard_normal((1000, 6)) * 3]
    bad = 0
    for model in models:
        twin = loads(dumps(model))
        bad += sum(model.predict(x) != twin.predict(x) for x in points)
        bad += twin != model
    return bad == 0, f"{bad} mismatches across otbag/sdmv/jdsmv on 1000 inputs"


CHECKS = [
    check_poisson_limit,
    check_sampler,
    check_degenerate,
    check_vote_oracle,
    check_hand_trace,
    check_positive_transfer,
    check_negative_transfer,
    check_determinism,
    check_gradient,
    check_serialization,
]


def run_all(echo=print) -> list[Check]:
    results = []
    for check in CHECKS:
        result = check()
        echo(result.line())
        results.append(result)
    return results
