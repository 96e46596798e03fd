from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from otbag.core import Domain, FeatureVector
from otbag.data import (
    Dataset,
    NormParams,
    TransferTask,
    build_mixed_source,
    interleave_stream,
    load_dense_csv,
    load_svmlight,
    make_task,
    subsample,
    write_dense_csv,
    write_svmlight,
    zscore_normalize,
)
from otbag.errors import (
    BadFraction,
    BadNumber,
    BadSparseLine,
    DegenerateSplit,
    DimensionMismatch,
    EmptyFile,
    IndexOutOfRange,
    IoError,
    NotBinary,
    RaggedCsv,
)


def ds(rows, labels, name="d"):
    return Dataset.from_arrays(name, np.array(rows, dtype=float), labels)


def multiset(dataset):
    return Counter((tuple(x.to_dense().tolist()), y) for x, y in dataset.instances)


class TestCsv:
    def test_basic(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("1.0,2.0,a\n3,4,b\n-5e-1,0,a\n")
        d = load_dense_csv(p, label_column=-1, positive_value="a")
        assert d.dimension == 2 and len(d) == 3
        assert d.labels.tolist() == [1, 0, 1]
        assert d.instances[2][0].values.tolist() == [-0.5, 0.0]

    def test_label_first_with_header(self, tmp_path):
        p = tmp_path / "b.csv"
        p.write_text("y,f1\n1,0.5\n-1,0.25\n")
        d = load_dense_csv(p, label_column=0, positive_value=1, header=True)
        assert d.labels.tolist() == [1, 0] and d.dimension == 1

    def test_numeric_label_spellings(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("0.5,1.0\n0.1,1\n0.2,0\n")
        assert load_dense_csv(p, positive_value="1").labels.tolist() == [1, 1, 0]

    @pytest.mark.parametrize(
        "text, error",
        [
            ("", EmptyFile),
            ("1,2,a\n3,b\n", RaggedCsv),
            ("1,NaN,a\n", BadNumber),
            ("1,x,a\n", BadNumber),
            ("1,inf,a\n", BadNumber),
            ("1,a\n2,b\n3,c\n", NotBinary),
        ],
    )
    def test_errors(self, tmp_path, text, error):
        p = tmp_path / "bad.csv"
        p.write_text(text)
        with pytest.raises(error):
            load_dense_csv(p, positive_value="a")

    def test_empty_file_is_ragged(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("\n")
        with pytest.raises(RaggedCsv):
            load_dense_csv(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoError):
            load_dense_csv(tmp_path / "nope.csv")

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        d = ds(rng.standard_normal((25, 4)) * 1e3, rng.integers(0, 2, 25))
        for header in (False, True):
            p = tmp_path / f"rt{header}.csv"
            write_dense_csv(d, p, header=header)
            back = load_dense_csv(p, header=header, name="d")
            assert back == d


class TestSvmlight:
    def test_examples(self, tmp_path):
        p = tmp_path / "a.svm"
        p.write_text("+1 1:0.5 3:2.0\n-1\n# comment\n0 2:1 # trailing\n1 qid:3 4:7\n")
        d = load_svmlight(p, 4)
        assert d.instances[0][0].to_dense().tolist() == [0.5, 0.0, 2.0, 0.0]
        assert d.labels.tolist() == [1, 0, 0, 1]
        assert d.instances[1][0].to_dense().tolist() == [0.0] * 4
        assert d.instances[0][0].is_sparse

    @pytest.mark.parametrize(
        "line, error",
        [
            ("1 5:1.0", IndexOutOfRange),
            ("1 0:1.0", IndexOutOfRange),
            ("1 3:1 2:1", BadSparseLine),
            ("1 2:1 2:3", BadSparseLine),
            ("1 2=1", BadSparseLine),
            ("1 x:1", BadSparseLine),
            ("1 2:abc", BadNumber),
            ("2 1:1", NotBinary),
            ("pos 1:1", BadNumber),
        ],
    )
    def test_errors(self, tmp_path, line, error):
        p = tmp_path / "bad.svm"
        p.write_text(line + "\n")
        with pytest.raises(error):
            load_svmlight(p, 4)

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((30, 8)) * (rng.random((30, 8)) < 0.3)
        d = ds(X, rng.integers(0, 2, 30))
        p = tmp_path / "rt.svm"
        write_svmlight(d, p)
        back = load_svmlight(p, 8, name="d")
        assert back == d


class TestZscore:
    def test_examples(self):
        train = ds([[0.0, 5.0], [2.0, 5.0]], [0, 1])
        other = ds([[4.0, 7.0]], [1])
        z_train, (z_other,), params = zscore_normalize(train, [other])
        assert params.mean.tolist() == [1.0, 5.0]
        assert params.std.tolist() == [1.0, 0.0]
        assert z_train.matrix().tolist() == [[-1.0, 0.0], [1.0, 0.0]]
        assert z_other.matrix().tolist() == [[3.0, 2.0]]
        assert z_train.labels.tolist() == [0, 1]

    def test_not_idempotent(self):
        train = ds([[0.0], [4.0], [5.0]], [0, 1, 1])
        once, _, params = zscore_normalize(train)
        twice = params.apply(once)
        assert not np.allclose(once.matrix(), twice.matrix())

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000), st.integers(2, 40), st.integers(1, 5))
    def test_standardised_columns(self, seed, n, d):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((n, d)) * rng.uniform(0.1, 100, d) + rng.uniform(-50, 50, d)
        X[:, 0] = 3.0
        z, _, params = zscore_normalize(ds(X, np.arange(n) % 2))
        Z = z.matrix()
        assert np.all(np.abs(Z.mean(axis=0)) < 1e-9)
        stds = Z.std(axis=0)
        for j in range(d):
            assert stds[j] == pytest.approx(0.0 if params.std[j] == 0 else 1.0, abs=1e-9)

    def test_sidecar(self, tmp_path):
        _, _, params = zscore_normalize(ds([[0.0, 1.0], [2.0, 1.0]], [0, 1]))
        p = tmp_path / "norm.txt"
        params.write(p)
        lines = p.read_text().splitlines()
        assert lines[0] == "# zscore ddof=0"
        assert lines[1:] == ["0 1.0 1.0", "1 1.0 0.0"]
        back = NormParams.read(p)
        assert back.mean.tolist() == params.mean.tolist() and back.std.tolist() == params.std.tolist()

    def test_sparse_input(self):
        d = Dataset("s", 3, ((FeatureVector.sparse(3, {0: 2.0}), 1), (FeatureVector.sparse(3, {2: 4.0}), 0)))
        z, _, _ = zscore_normalize(d)
        assert z.matrix().tolist() == [[1.0, 0.0, -1.0], [-1.0, 0.0, 1.0]]


class TestMakeTask:
    def target(self, n=10, ones=5):
        return ds(np.arange(n, dtype=float).reshape(-1, 1), [1] * ones + [0] * (n - ones), name="tgt")

    def test_four_six_split(self):
        task = make_task(self.target(), self.target(), 0.4, seed=1)
        assert len(task.target_train) == 4 and len(task.target_test) == 6
        assert sorted(task.target_train.labels.tolist()) == [0, 0, 1, 1]

    def test_stratified_rounding(self):
        task = make_task(self.target(11, 3), self.target(11, 3), 0.5, seed=0)
        assert len(task.target_train) == 5
        assert Counter(task.target_train.labels.tolist()) == {0: 4, 1: 1}

    def test_seeded(self):
        t = self.target(30, 12)
        a, b = make_task(t, t, 0.4, 5), make_task(t, t, 0.4, 5)
        assert a == b
        assert make_task(t, t, 0.4, 6).target_train != a.target_train

    def test_preserves_multiset(self):
        t = self.target(30, 12)
        task = make_task(t, t, 0.4, 3)
        assert multiset(task.target_train) + multiset(task.target_test) == multiset(t)

    def test_errors(self):
        t = self.target()
        with pytest.raises(BadFraction):
            make_task(t, t, 1.0, 0)
        with pytest.raises(BadFraction):
            make_task(t, t, 0.0, 0)
        with pytest.raises(DegenerateSplit):
            make_task(t, t, 0.1, 0)
        with pytest.raises(DegenerateSplit):
            make_task(t, self.target(10, 0), 0.5, 0)
        with pytest.raises(DimensionMismatch):
            make_task(ds([[1.0, 2.0]], [1]), t, 0.4, 0)


class TestInterleave:
    def task(self, n_source, n_target):
        src = ds(np.arange(n_source, dtype=float).reshape(-1, 1), np.arange(n_source) % 2)
        tgt = ds(100 + np.arange(n_target, dtype=float).reshape(-1, 1), np.arange(n_target) % 2)
        return TransferTask(src, tgt, tgt)

    def test_small(self):
        stream = interleave_stream(self.task(2, 1), seed=0)
        assert len(stream) == 3
        assert sum(i.domain is Domain.TARGET for i in stream) == 1

    def test_seeded(self):
        t = self.task(10, 5)
        assert interleave_stream(t, 4) == interleave_stream(t, 4)

    def test_distinct_orders(self):
        # 24 orders of 4 items: 20 seeds landing on one order has probability 24 * 24**-20
        t = self.task(3, 1)
        orders = {tuple(i.x.values[0] for i in interleave_stream(t, s)) for s in range(20)}
        assert len(orders) >= 2

    @given(st.integers(0, 30), st.integers(0, 30), st.integers(0, 1000))
    def test_permutation_with_tags(self, ns, nt, seed):
        t = self.task(ns, nt)
        stream = interleave_stream(t, seed)
        got = Counter((i.x.values[0], i.y, i.domain) for i in stream)
        want = Counter((x.values[0], y, Domain.SOURCE) for x, y in t.source.instances)
        want += Counter((x.values[0], y, Domain.TARGET) for x, y in t.target_train.instances)
        assert got == want


class TestMixedSource:
    def test_truncation(self):
        primary = ds(np.ones((3, 400)), [0, 1, 0], name="b")
        foreign = ds(np.arange(2 * 800, dtype=float).reshape(2, 800), [1, 0])
        mixed = build_mixed_source(primary, foreign)
        assert mixed.name == "mix_b" and mixed.dimension == 400 and len(mixed) == 5
        assert mixed.instances[3][0].values.tolist() == list(range(400))

    def test_padding(self):
        primary = ds(np.ones((1, 4)), [1])
        foreign = ds([[7.0, 8.0]], [0])
        mixed = build_mixed_source(primary, foreign)
        assert mixed.instances[1][0].values.tolist() == [7.0, 8.0, 0.0, 0.0]

    def test_sparse_foreign(self):
        primary = Dataset("p", 3, ((FeatureVector.sparse(3, {0: 1.0}), 1),))
        foreign = Dataset("f", 5, ((FeatureVector.sparse(5, {1: 2.0, 4: 9.0}), 0),))
        mixed = build_mixed_source(primary, foreign)
        assert mixed.instances[1][0].to_dense().tolist() == [0.0, 2.0, 0.0]


def test_subsample():
    d = ds(np.arange(20, dtype=float).reshape(-1, 1), np.arange(20) % 2)
    half = subsample(d, 0.5, seed=1)
    assert len(half) == 10 and multiset(half) <= multiset(d)
    assert subsample(d, 0.5, seed=1) == half
    assert subsample(d, 1.0, seed=1) is d
    with pytest.raises(BadFraction):
        subsample(d, 0.0, 1)
