import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from facelink.core import (DefiningVector, DimensionMismatchError, FaceRecord, as_embedding,
                           distances_to, l2_distance, mean_vector)
from oracles import naive_mean

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@pytest.mark.parametrize("a, b, expected", [
    ((0, 0, 0), (0, 0, 0), 0.0),
    ((1, 0), (0, 0), 1.0),
    ((3, 4), (0, 0), 5.0),
])
def test_l2_distance_examples(a, b, expected):
    assert l2_distance(a, b) == expected


def test_l2_distance_dimension_mismatch_names_both_lengths():
    with pytest.raises(DimensionMismatchError, match=r"3 != 2"):
        l2_distance((1, 2, 3), (1, 2))


@pytest.mark.parametrize("vs, expected", [
    ([(1, 1)], (1, 1)),
    ([(0, 0), (2, 2)], (1, 1)),
    ([(1, 0), (0, 1), (-1, 0), (0, -1)], (0, 0)),
])
def test_mean_vector_examples(vs, expected):
    np.testing.assert_array_equal(mean_vector(vs), expected)


def test_mean_vector_empty_raises():
    with pytest.raises(ValueError):
        mean_vector([])


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6).flatmap(lambda d: st.tuples(
    arrays(float, d, elements=finite), arrays(float, d, elements=finite),
    arrays(float, d, elements=finite))))
def test_triangle_inequality(triple):
    a, b, c = triple
    assert l2_distance(a, c) <= l2_distance(a, b) + l2_distance(b, c) + 1e-9
    assert l2_distance(a, b) == l2_distance(b, a)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 5).flatmap(
    lambda d: st.lists(arrays(float, d, elements=finite), min_size=1, max_size=20)),
    st.randoms(use_true_random=False))
def test_mean_vector_matches_oracle_and_is_permutation_invariant(vs, rnd):
    got = mean_vector(vs)
    ref = naive_mean([v.tolist() for v in vs])
    np.testing.assert_allclose(got, ref, rtol=1e-9, atol=1e-12)
    shuffled = list(vs)
    rnd.shuffle(shuffled)
    np.testing.assert_array_equal(mean_vector(shuffled), got)


@given(arrays(float, 7, elements=finite), st.integers(1, 50))
def test_mean_of_copies_is_the_vector(x, k):
    np.testing.assert_allclose(mean_vector([x] * k), x, rtol=0, atol=1e-12)


def test_distances_to_agrees_with_scalar_kernel():
    rng = np.random.default_rng(0)
    M = rng.normal(size=(30, 9))
    p = rng.normal(size=9)
    np.testing.assert_array_equal(distances_to(p, M), [l2_distance(p, row) for row in M])


def test_as_embedding_rejects_non_finite():
    with pytest.raises(ValueError):
        as_embedding([0.0, math.nan])
    with pytest.raises(ValueError):
        as_embedding([math.inf])


def test_face_record_invariants():
    with pytest.raises(ValueError):
        FaceRecord("", "p", [0.0])
    with pytest.raises(ValueError):
        FaceRecord("a", "", [0.0])
    with pytest.raises(ValueError):
        FaceRecord("a", "p", [0.0], pixel_count=-1)
    r = FaceRecord("a", "p", [1.0, 2.0], 5)
    assert not r.embedding.flags.writeable
    assert r == FaceRecord("a", "p", np.array([1.0, 2.0]), 5)


def test_defining_vector_invariants():
    assert not DefiningVector.no_owner("a").has_owner
    with pytest.raises(ValueError):
        DefiningVector("a", None, 3)
    with pytest.raises(ValueError):
        DefiningVector("a", np.zeros(2), 0)
    assert DefiningVector("a", np.ones(2), 2) == DefiningVector("a", np.ones(2), 2)
