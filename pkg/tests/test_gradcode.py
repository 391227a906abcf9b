import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gcepc import (
    GcMatrix, ParameterError, InsufficientResultsError, SpanViolationError,
    combine_vector, construct_gc_matrix, verify_gc_matrix,
)
from gcepc.gradcode import SPAN_TOL

ALL_SHAPES = [(eta, kappa) for eta in range(1, 11) for kappa in range(eta)]


def test_single_worker():
    H = construct_gc_matrix(1, 0)
    assert np.array_equal(H.entries, [[1.0]])


def test_eta2_kappa1_rows_are_multiples_of_ones():
    H = construct_gc_matrix(2, 1)
    for row in H.entries:
        assert row[0] != 0 and row[0] == row[1]


def test_four_slot_shape():
    H = construct_gc_matrix(4, 2)
    assert H.entries.shape == (4, 4)
    assert all(np.count_nonzero(r) == 3 for r in H.entries)
    assert verify_gc_matrix(H).ok


def test_verify_trivial():
    rep = verify_gc_matrix(GcMatrix(1, 0, [[1.0]]))
    assert rep.support_ok and rep.span_ok


def test_verify_detects_wrong_support():
    rep = verify_gc_matrix(GcMatrix(2, 1, np.eye(2)))
    assert not rep.support_ok


def test_random_values_on_cyclic_support_fail_span(rng):
    eta, kappa = 5, 2
    for _ in range(20):
        E = np.zeros((eta, eta))
        for i in range(eta):
            for j in range(kappa + 1):
                E[i, (i + j) % eta] = rng.standard_normal()
        rep = verify_gc_matrix(GcMatrix(eta, kappa, E))
        assert rep.support_ok
        assert not rep.span_ok


def test_combine_trivial():
    cv = combine_vector(GcMatrix(1, 0, [[1.0]]), [0])
    assert np.array_equal(cv.g, [1.0])


def test_combine_all_ones_rows():
    cv = combine_vector(GcMatrix(2, 1, [[1.0, 1.0], [1.0, 1.0]]), [0])
    assert np.allclose(cv.g, [1.0, 0.0])


def test_combine_four_slot_subset():
    H = construct_gc_matrix(4, 2)
    cv = combine_vector(H, {1, 3})
    assert cv.support == (1, 3)
    assert cv.g[0] == 0 and cv.g[2] == 0
    assert np.allclose(cv.g @ H.entries, np.ones(4), atol=1e-12)


def test_combine_too_few():
    H = construct_gc_matrix(4, 2)
    with pytest.raises(InsufficientResultsError):
        combine_vector(H, [2])


def test_combine_span_violation():
    # Valid support, but rows {0, 1} do not reach the ones vector.
    E = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 3.0], [5.0, 0.0, 1.0]])
    with pytest.raises(SpanViolationError):
        combine_vector(GcMatrix(3, 1, E), [0, 1])


@pytest.mark.parametrize("eta, kappa", ALL_SHAPES)
def test_construction_verifies_exhaustively(eta, kappa):
    H = construct_gc_matrix(eta, kappa)
    assert [np.count_nonzero(r) for r in H.entries] == [kappa + 1] * eta
    for i in range(eta):
        assert set(np.flatnonzero(H.entries[i])) == set(H.support(i))
    assert np.max(np.abs(H.entries)) == 1.0
    for S in itertools.combinations(range(eta), eta - kappa):
        cv = combine_vector(H, S)
        assert cv.residual <= SPAN_TOL
        assert set(np.flatnonzero(cv.g)) <= set(S)


@given(st.sampled_from(ALL_SHAPES), st.data())
def test_superset_of_feasible_set_is_feasible(shape, data):
    eta, kappa = shape
    H = construct_gc_matrix(eta, kappa)
    S = data.draw(st.sets(st.integers(0, eta - 1), min_size=eta - kappa))
    cv = combine_vector(H, S)
    assert np.allclose(cv.g @ H.entries, 1.0, atol=1e-9)


def test_construction_deterministic_in_seed():
    a = construct_gc_matrix(6, 3, seed=4)
    b = construct_gc_matrix(6, 3, seed=4)
    assert np.array_equal(a.entries, b.entries)


def test_text_roundtrip():
    H = construct_gc_matrix(5, 2)
    text = H.to_text()
    assert text.splitlines()[0] == "5 2"
    back = GcMatrix.from_text(text)
    assert (back.eta, back.kappa) == (5, 2)
    assert np.array_equal(back.entries, H.entries)


def test_entries_read_only():
    H = construct_gc_matrix(3, 1)
    with pytest.raises(ValueError):
        H.entries[0, 0] = 0.0


def test_invalid_shape_rejected():
    with pytest.raises(ParameterError):
        construct_gc_matrix(3, 3)
