import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symwave.lattice import (DilationMatrix, IntMatrix, character_table, coset_reps, in_lattice,
                             is_dilation, lattice_shell, pairing, pairing_phase)
from symwave.symmetry import classification_table


def test_is_dilation_examples():
    assert is_dilation([[2]])
    assert is_dilation([[0, 2], [-2, 0]])
    assert not is_dilation([[2, 1], [1, 2]])
    assert not is_dilation([[1]])
    assert not is_dilation([[1, 1], [0, 2]])


def test_dilation_matrix_rejects_non_dilation():
    with pytest.raises(ValueError):
        DilationMatrix.of([[2, 1], [1, 2]])


def test_intmatrix_exact_arithmetic():
    A = IntMatrix.of([[0, 2], [-2, 0]])
    assert A.det() == 4
    assert (A @ A.adjugate()) == IntMatrix.of([[4, 0], [0, 4]])
    assert A @ (1, 1) == (2, -2)
    assert IntMatrix.of([[1, 1], [0, 1]]).is_unimodular()


def _pairwise_distinct(A, reps):
    Ainv = np.linalg.inv(np.asarray(A, float))
    for a, b in itertools.combinations(reps, 2):
        v = Ainv @ (np.array(a) - np.array(b))
        assert not np.allclose(v, np.round(v))


def test_coset_reps_examples():
    assert coset_reps([[2]]).reps == ((0,), (1,))
    r = coset_reps([[0, 2], [-2, 0]])
    assert r.q == 4 and r.reps[0] == (0, 0)
    _pairwise_distinct([[0, 2], [-2, 0]], r.reps)
    r = coset_reps([[1, -1], [1, 1]])
    assert r.q == 2
    _pairwise_distinct([[1, -1], [1, 1]], r.reps)
    d = coset_reps([[1, -1], [1, 1]], "dual")
    _pairwise_distinct(np.array([[1, -1], [1, 1]]).T, d.reps)


def test_coset_reps_sorted_and_zero_first():
    for A in ([[3, 1], [0, 2]], [[0, 2], [1, 0]], [[5]]):
        reps = coset_reps(A).reps
        assert list(reps) == sorted(reps)
        assert not any(reps[0])


def test_pairing_examples():
    assert pairing((1,), (1,), [[2]]) == pytest.approx(-1)
    assert pairing((0, 0), (1, 1), [[0, 2], [-2, 0]]) == 1
    assert pairing((1, 0), (1, 0), [[0, 2], [-2, 0]]) == 1
    assert pairing_phase((1, 0), (0, 1), [[0, 2], [-2, 0]]) == Fraction(1, 2)


def test_character_table_examples():
    T = character_table([[2]])
    assert np.allclose(T, [[1, 1], [1, -1]])
    T = character_table([[0, 2], [-2, 0]])
    assert T.shape == (4, 4)
    assert np.allclose(T[0], 1) and np.allclose(T[:, 0], 1)
    assert np.max(np.abs(T.conj().T @ T / 4 - np.eye(4))) < 1e-12


def test_character_orthogonality_over_table():
    for row in classification_table():
        T = character_table(row.A)
        q = row.det_abs
        assert np.max(np.abs(T.conj().T @ T / q - np.eye(q))) < 1e-12


def test_lattice_shell_counts():
    assert len(lattice_shell(2, 0)) == 1
    for r in (1, 2, 5):
        assert len(lattice_shell(2, r)) == (2 * r + 1) ** 2 - (2 * r - 1) ** 2
        assert len(lattice_shell(1, r)) == 2


ENTRY = st.integers(-4, 4)


def _small_dilations():
    out = [[[a]] for a in range(-12, 13) if abs(a) >= 2]
    for a, b, c, d in itertools.product(range(-3, 4), repeat=4):
        M = [[a, b], [c, d]]
        if 2 <= abs(a * d - b * c) <= 12 and is_dilation(M):
            out.append(M)
    return out


SMALL_DILATIONS = _small_dilations()


def dilations():
    return st.sampled_from(SMALL_DILATIONS)


@settings(max_examples=60, deadline=None)
@given(dilations())
def test_rep_count_equals_det(A):
    q = abs(IntMatrix.of(A).det())
    assert coset_reps(A).q == q
    assert coset_reps(A, "dual").q == q


@settings(max_examples=60, deadline=None)
@given(dilations(), st.data())
def test_pairing_well_defined(A, data):
    n = len(A)
    M = IntMatrix.of(A)
    xs = coset_reps(A).reps
    ys = coset_reps(A, "dual").reps
    x = data.draw(st.sampled_from(xs))
    y = data.draw(st.sampled_from(ys))
    g = tuple(data.draw(ENTRY) for _ in range(n))
    g2 = tuple(data.draw(ENTRY) for _ in range(n))
    x2 = tuple(a + b for a, b in zip(x, M @ g))
    y2 = tuple(a + b for a, b in zip(y, M.T() @ g2))
    assert pairing_phase(x2, y2, A) == pairing_phase(x, y, A)


@settings(max_examples=60, deadline=None)
@given(dilations())
def test_character_table_unitary(A):
    T = character_table(A)
    q = len(T)
    assert np.max(np.abs(T.conj().T @ T / q - np.eye(q))) < 1e-12


@settings(max_examples=60, deadline=None)
@given(dilations(), st.data())
def test_in_lattice_matches_float(A, data):
    n = len(A)
    v = tuple(data.draw(st.integers(-20, 20)) for _ in range(n))
    sol = np.linalg.solve(np.asarray(A, float), np.asarray(v, float))
    assert in_lattice(IntMatrix.of(A), v) == bool(np.allclose(sol, np.round(sol)))
