import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symwave.errors import NonConvergent, NotUniformlyPositive
from symwave.lattice import coset_reps
from symwave.torusfn import (GridFunction, LaurentPoly, ScaledLaurentPoly, _monomials, bracket,
                             cond_expect, cond_expect_pointwise, grid_inv_sqrt, grid_points,
                             lp_add, lp_adjoint, lp_compose_int, lp_mul)

QUINCUNX = [[1, -1], [1, 1]]
ROT2 = [[0, 2], [-2, 0]]


def e(*k):
    return LaurentPoly.monomial(k)


@st.composite
def polys(draw, n=2, radius=2, d=1):
    ks = draw(st.lists(st.tuples(*[st.integers(-radius, radius)] * n), min_size=1, max_size=6))
    cs = draw(st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
                       min_size=len(ks), max_size=len(ks)))
    return LaurentPoly(n, d, dict(zip(ks, cs)))


def test_adjoint_of_character():
    assert lp_adjoint(e(3)).max_abs_diff(e(-3)) == 0


def test_product_example():
    one = LaurentPoly.constant(1, 1)
    P = lp_mul(one + e(1), one - e(1))
    assert P.max_abs_diff(one - e(2)) == 0


def test_zero_coefficients_pruned():
    P = lp_add(e(1), -e(1))
    assert P.is_zero() and P.support() == []


@settings(max_examples=50, deadline=None)
@given(polys())
def test_adjoint_product_is_hermitian(P):
    Q = lp_mul(lp_adjoint(P), P)
    for k in Q.support():
        assert np.allclose(Q.coefficient(k), np.conj(Q.coefficient(tuple(-v for v in k))))


@settings(max_examples=50, deadline=None)
@given(polys(), polys())
def test_product_matches_pointwise(P, Q):
    x = np.random.default_rng(0).random((20, 2))
    assert np.allclose(lp_mul(P, Q).scalar(x), P.scalar(x) * Q.scalar(x), atol=1e-10)


def test_compose_int_examples():
    P = e(1, 0)
    assert lp_compose_int(P, np.eye(2, dtype=int)).max_abs_diff(P) == 0
    assert lp_compose_int(P, [[-1, 0], [0, -1]]).max_abs_diff(e(-1, 0)) == 0
    h = [[0, 1], [1, 0]]
    Q = e(2, -1) + e(0, 1) * 3
    assert lp_compose_int(lp_compose_int(Q, h), h).max_abs_diff(Q) == 0
    with pytest.raises(ValueError):
        lp_compose_int(P, [[2, 0], [0, 1]])


@settings(max_examples=30, deadline=None)
@given(polys())
def test_compose_int_is_evaluation_at_hx(P):
    h = np.array([[1, 1], [0, 1]])
    x = np.random.default_rng(1).random((16, 2))
    assert np.allclose(lp_compose_int(P, h).scalar(x), P.scalar(x @ h.T), atol=1e-10)


def test_monomials_match_exp():
    rng = np.random.default_rng(2)
    x = rng.random((10, 2)) * 4 - 2
    F = rng.integers(-32, 33, size=(7, 2)).astype(float)
    assert np.allclose(_monomials(x, F), np.exp(2j * np.pi * x @ F.T), atol=1e-11)


def test_records_roundtrip():
    P = e(1, 2) * (0.5 - 1j) + e(0, 0)
    assert LaurentPoly.from_records(P.to_records(), 2).max_abs_diff(P) == 0
    with pytest.raises(ValueError):
        LaurentPoly.from_records([{"freq": [0], "re": 1, "bogus": 2}], 1)


# ------------------------------------------------------------- cond_expect

def test_cond_expect_of_one():
    one = ScaledLaurentPoly.from_laurent(LaurentPoly.constant(1, 2), ROT2)
    assert cond_expect(one).max_abs_diff(LaurentPoly.constant(1, 2)) == 0


@pytest.mark.parametrize("A", [[[2]], [[3]], QUINCUNX, ROT2, [[2, 1], [-1, 1]]])
def test_characters_orthogonal_under_cond_expect(A):
    ys = coset_reps(A, "dual").reps
    n = len(ys[0])
    for i, yk in enumerate(ys):
        for j, yl in enumerate(ys):
            f = ScaledLaurentPoly.character(yk, A) * ScaledLaurentPoly.character(yl, A).adjoint()
            want = LaurentPoly.constant(1.0 if i == j else 0.0, n)
            assert cond_expect(f).max_abs_diff(want) < 1e-14


def test_cond_expect_half_frequency_vanishes():
    f = ScaledLaurentPoly.character((1,), [[2]])
    assert cond_expect(f).is_zero()


@settings(max_examples=30, deadline=None)
@given(polys())
def test_cond_expect_left_inverse_and_idempotent(P):
    S = ScaledLaurentPoly.from_laurent(P, QUINCUNX)
    EP = cond_expect(S)
    assert EP.max_abs_diff(P) < 1e-14
    assert cond_expect(ScaledLaurentPoly.from_laurent(EP, QUINCUNX)).max_abs_diff(EP) < 1e-14


@settings(max_examples=30, deadline=None)
@given(polys(radius=3))
def test_cond_expect_matches_averaging(P):
    A = ROT2
    S = ScaledLaurentPoly.dilated(P, A) * ScaledLaurentPoly.character((1, 0), A)
    reps = coset_reps(A, "primal").reps
    x = np.random.default_rng(3).random((12, 2))
    oracle = cond_expect_pointwise(lambda y: S(y)[:, 0, 0], A, reps, x)
    assert np.allclose(cond_expect(S).scalar(x), oracle, atol=1e-10)


# ------------------------------------------------------------- grids

def test_grid_inv_sqrt_examples():
    G = grid_inv_sqrt(GridFunction(8, 1, np.tile(4 * np.eye(2), (8, 1, 1))))
    assert np.allclose(G.samples, 0.5 * np.eye(2), atol=1e-15)
    G = grid_inv_sqrt(GridFunction(4, 2, np.full(16, 0.5)))
    assert np.allclose(G.samples[:, 0, 0], np.sqrt(2))


def test_grid_inv_sqrt_random_positive_field():
    rng = np.random.default_rng(4)
    M = rng.normal(size=(64, 3, 3)) + 1j * rng.normal(size=(64, 3, 3))
    S = M @ np.conj(np.swapaxes(M, 1, 2)) + 0.1 * np.eye(3)
    G = grid_inv_sqrt(GridFunction(8, 2, S)).samples
    assert np.max(np.abs(G @ S @ G - np.eye(3))) <= 1e-9
    assert np.max(np.abs(G @ G @ S - np.eye(3))) <= 1e-10


def test_grid_inv_sqrt_rejects_small_eigenvalue():
    s = np.ones(8)
    s[5] = 1e-9
    with pytest.raises(NotUniformlyPositive) as exc:
        grid_inv_sqrt(GridFunction(8, 1, s))
    assert exc.value.location == (5 / 8,)


def test_grid_function_validation():
    with pytest.raises(ValueError):
        GridFunction(2, 1, np.ones(2))
    with pytest.raises(ValueError):
        GridFunction(4, 1, np.array([1, 2, np.nan, 4]))


def test_interpolation_exact_for_band_limited():
    P = e(1, -2) * 0.3 + e(0, 1)
    G = GridFunction.from_function(P, 8, 2)
    x = np.random.default_rng(5).random((10, 2))
    assert np.allclose(G.interpolate(x)[:, 0, 0], P.scalar(x), atol=1e-12)


# ------------------------------------------------------------- bracket

def haar_phi(x):
    x = np.asarray(x)[:, 0]
    return np.exp(1j * np.pi * x) * np.sinc(x)


def test_bracket_of_zero():
    br = bracket(lambda x: np.zeros(len(x)), R=16, N=8)
    assert np.all(br.values == 0) and br.tail == 0


def test_bracket_haar_is_one():
    br = bracket(haar_phi, R=64, N=64)
    assert np.max(np.abs(br.scalar() - 1)) < 1e-6
    assert br.tail < 1e-6


def test_bracket_compact_support():
    def zeta(x):
        t = np.asarray(x)[:, 0]
        return np.where((t >= 0) & (t < 1), t * (1 - t) + 1j * t, 0)
    br = bracket(zeta, R=4, N=16, method="none", tail_tol=np.inf)
    x = grid_points(16, 1)
    assert np.allclose(br.scalar(), np.abs(zeta(x)) ** 2, atol=1e-15)


def test_bracket_nonconvergent():
    with pytest.raises(NonConvergent):
        bracket(lambda x: 1 / (1 + np.abs(np.asarray(x)[:, 0])) ** 0.6, R=16, N=4, tail_tol=1e-8)


def _bump2(x):
    x = np.asarray(x)
    return np.exp(-np.sum(x ** 2, axis=1)) * (1 + 0.5j * x[:, 0] - 0.2 * x[:, 1] ** 3)


def _bump2b(x):
    x = np.asarray(x)
    return np.exp(-0.7 * np.sum((x - 0.3) ** 2, axis=1)) * (x[:, 1] + 1j)


def test_bracket_hermitian_nonnegative_and_conjugate_symmetric():
    two = lambda x: np.stack([_bump2(x), _bump2b(x)], axis=1)
    br = bracket(two, R=8, N=8, n=2, method="none", tail_tol=np.inf)
    V = br.values
    assert np.max(np.abs(V - np.conj(np.swapaxes(V, 1, 2)))) < 1e-14
    assert np.min(np.linalg.eigvalsh(V)) > -1e-14
    ab = bracket(_bump2, _bump2b, R=8, N=8, n=2, method="none", tail_tol=np.inf)
    ba = bracket(_bump2b, _bump2, R=8, N=8, n=2, method="none", tail_tol=np.inf)
    assert np.allclose(ab.values, np.conj(ba.values), atol=1e-14)


@pytest.mark.parametrize("h", [[[-1, 0], [0, -1]], [[0, 1], [-1, 0]], [[1, 1], [0, 1]]])
def test_bracket_covariance_under_unimodular(h):
    h = np.array(h, dtype=float)
    x = grid_points(8, 2)
    hx = (x @ h.T) % 1.0
    W = lambda f: (lambda y: f(np.asarray(y) @ h.T))
    lhs = bracket(W(_bump2), W(_bump2b), R=10, n=2, points=x, method="none", tail_tol=np.inf)
    rhs = bracket(_bump2, _bump2b, R=10, n=2, points=hx, method="none", tail_tol=np.inf)
    assert np.allclose(lhs.values, rhs.values, atol=1e-12)
