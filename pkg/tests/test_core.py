import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from otbag.core import Domain, FeatureVector, TaggedInstance, majority_vote, vote_margin
from otbag.errors import BadLabel, BadValue, DimensionMismatch, EmptyCommittee

votes = st.lists(st.sampled_from([0, 1]), min_size=1, max_size=15)


@pytest.mark.parametrize(
    "ballot, label, margin",
    [([1, 1, 0], 1, 1), ([0], 0, -1), ([0, 1], 0, 0), ([0, 0], 0, -2), ([1], 1, 1)],
)
def test_vote_examples(ballot, label, margin):
    assert majority_vote(ballot) == label
    assert vote_margin(ballot) == margin


def test_empty_committee():
    with pytest.raises(EmptyCommittee):
        majority_vote([])
    with pytest.raises(EmptyCommittee):
        vote_margin([])


def test_vote_rejects_non_labels():
    with pytest.raises(BadLabel):
        majority_vote([1, 2])


def test_vote_exhaustive_small_lists():
    for n in range(1, 6):
        for ballot in itertools.product((0, 1), repeat=n):
            counts = {0: ballot.count(0), 1: ballot.count(1)}
            assert majority_vote(list(ballot)) == (1 if counts[1] > counts[0] else 0)


@given(votes, st.randoms())
def test_vote_permutation_invariant(ballot, rnd):
    shuffled = list(ballot)
    rnd.shuffle(shuffled)
    assert majority_vote(shuffled) == majority_vote(ballot)


@given(votes)
def test_vote_agrees_with_margin(ballot):
    assert (majority_vote(ballot) == 1) == (vote_margin(ballot) > 0)


class TestFeatureVector:
    def test_dense_and_sparse_agree(self):
        dense = FeatureVector.dense([0.5, 0.0, 2.0, 0.0])
        sparse = FeatureVector.sparse(4, {2: 2.0, 0: 0.5})
        assert dense == sparse
        w = np.array([1.0, -3.0, 0.25, 7.0])
        assert dense.dot(w) == sparse.dot(w) == 1.0
        assert sparse.to_dense().tolist() == [0.5, 0.0, 2.0, 0.0]
        assert dense.to_sparse().indices.tolist() == [0, 2]

    def test_add_to(self):
        w = np.zeros(3)
        FeatureVector.sparse(3, {1: 2.0}).add_to(w, -1.5)
        FeatureVector.dense([1.0, 1.0, 1.0]).add_to(w, 2.0)
        assert w.tolist() == [2.0, -1.0, 2.0]

    @pytest.mark.parametrize(
        "build",
        [
            lambda: FeatureVector.dense([1.0, float("nan")]),
            lambda: FeatureVector.dense([float("inf")]),
            lambda: FeatureVector.sparse(3, [(0, 1.0), (0, 2.0)]),
            lambda: FeatureVector.sparse(3, {3: 1.0}),
            lambda: FeatureVector(3, [1.0, 2.0], [2, 1]),
        ],
    )
    def test_invalid(self, build):
        with pytest.raises(BadValue):
            build()

    def test_dense_length_must_match(self):
        with pytest.raises(DimensionMismatch):
            FeatureVector(3, [1.0, 2.0])

    def test_immutable(self):
        x = FeatureVector.dense([1.0, 2.0])
        with pytest.raises(AttributeError):
            x.dimension = 3
        with pytest.raises(ValueError):
            x.values[0] = 5.0


def test_tagged_instance_validates_label():
    x = FeatureVector.dense([1.0])
    assert TaggedInstance(x, 1, Domain.TARGET).is_target
    assert not TaggedInstance(x, 0, Domain.SOURCE).is_target
    with pytest.raises(BadLabel):
        TaggedInstance(x, -1, Domain.SOURCE)
