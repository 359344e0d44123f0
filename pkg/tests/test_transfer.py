import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symwave.builtins import (cosine_filter, haar_filter, haar_spec, sec5_quincunx_spec,
                              sec5_spec)
from symwave.errors import NotPositive, NoUnitEigenvalue
from symwave.lattice import IntMatrix
from symwave.symmetry import group_closure
from symwave.torusfn import LaurentPoly, grid_points
from symwave.transfer import (FilterSpec, fixed_point, invariant_box, is_invariant,
                              normalize_filter, spectral_check, transfer_apply,
                              transfer_matrix, transfer_pointwise)

DILATIONS = {1: [[[2]], [[3]], [[-2]]], 2: [[[1, -1], [1, 1]], [[0, 2], [-2, 0]], [[2, 1], [-1, 1]]]}


def random_filter(rng, n, radius=2, terms=5):
    ks = {tuple(int(v) for v in rng.integers(-radius, radius + 1, size=n)) for _ in range(terms)}
    return LaurentPoly(n, 1, {k: complex(*rng.normal(size=2)) for k in ks})


def pointwise_oracle(m, u, A, x):
    return transfer_pointwise(m, u, A, x)[:, 0, 0]


def test_haar_box_and_matrix():
    box = invariant_box(haar_filter(), [[2]])
    assert box.J == [(-1,), (0,), (1,)]
    rep = transfer_matrix(haar_filter(), box.J, [[2]])
    ev = np.sort(np.linalg.eigvals(rep.matrix).real)
    assert np.allclose(ev, [0.5, 0.5, 1.0], atol=1e-10)
    R1 = transfer_apply(haar_filter(), LaurentPoly.constant(1, 1), [[2]])
    assert R1.max_abs_diff(LaurentPoly.constant(1, 1)) < 1e-15
    Re1 = transfer_apply(haar_filter(), LaurentPoly.monomial((1,)), [[2]])
    want = LaurentPoly(1, 1, {(0,): 0.5, (1,): 0.5})
    assert Re1.max_abs_diff(want) < 1e-15


def test_zero_filter():
    Z = LaurentPoly.zero(1)
    assert invariant_box(Z, [[2]]).J == [(0,)]
    assert transfer_apply(Z, LaurentPoly.constant(1, 1), [[2]]).is_zero()


def test_haar_spectral_conditions_and_fixed_point():
    spec = haar_spec()
    rep = transfer_matrix(spec.m_prime, invariant_box(spec.m_prime, spec.A).J, spec.A)
    sr = spectral_check(spec, rep=rep)
    assert sr.all_pass, sr.verdicts
    assert abs(sr.spectral_gap - 0.5) < 1e-10
    fp = fixed_point(rep)
    assert fp.u.max_abs_diff(LaurentPoly.constant(1, 1)) < 1e-12
    assert fp.cesaro_residual < 1e-2
    assert normalize_filter(spec.m_prime, fp.u, spec.A) is spec.m_prime


@pytest.mark.parametrize("seed", range(50))
def test_transfer_apply_matches_preimage_sum(seed):
    rng = np.random.default_rng(seed)
    n = 1 + seed % 2
    A = DILATIONS[n][seed % 3]
    m = random_filter(rng, n)
    u = random_filter(rng, n)
    x = grid_points(64 if n == 1 else 8, n)
    got = transfer_apply(m, u, A).scalar(x)
    assert np.max(np.abs(got - pointwise_oracle(m, u, A, x))) < 1e-10


def test_transfer_matrix_columns_match_apply():
    rng = np.random.default_rng(7)
    A = [[1, -1], [1, 1]]
    m = random_filter(rng, 2, radius=1)
    rep = transfer_matrix(m, invariant_box(m, A).J, A)
    for i, k in enumerate(rep.J[:10]):
        img = transfer_apply(m, LaurentPoly.monomial(k), A)
        assert np.allclose(rep.matrix[:, i], rep.from_poly(img))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_transfer_apply_is_linear(seed, c):
    rng = np.random.default_rng(seed)
    A = [[2, 1], [-1, 1]]
    m, u, v = (random_filter(rng, 2) for _ in range(3))
    lhs = transfer_apply(m, u * c + v, A)
    rhs = transfer_apply(m, u, A) * c + transfer_apply(m, v, A)
    assert lhs.max_abs_diff(rhs) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_transfer_preserves_positivity(seed):
    rng = np.random.default_rng(seed)
    A = [[1, -1], [1, 1]]
    m, p = random_filter(rng, 2), random_filter(rng, 2, radius=1)
    u = p.adjoint() * p
    x = rng.random((64, 2))
    assert np.min(transfer_apply(m, u, A).scalar(x).real) > -1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([[[2]], [[3]], [[1, -1], [1, 1]], [[0, 2], [-2, 0]]]))
def test_invariant_box_contains_images(seed, A):
    rng = np.random.default_rng(seed)
    m = random_filter(rng, len(A), terms=4)
    box = invariant_box(m, A)
    J = set(box.J)
    for k in box.J:
        assert set(transfer_apply(m, LaurentPoly.monomial(k), A).support()) <= J


def test_stated_configuration_has_no_unit_eigenvalue():
    spec = sec5_spec()
    box = invariant_box(spec.m_prime, spec.A)
    assert box.within_radius and abs(box.radius_bound - 5) < 1e-12
    assert box.max_norm() <= 5
    rep = transfer_matrix(spec.m_prime, box.J, spec.A)
    sr = spectral_check(spec, rep=rep)
    assert not sr.all_pass
    assert abs(np.max(np.abs(sr.eigenvalues)) - 0.5) < 1e-10
    with pytest.raises(NoUnitEigenvalue):
        fixed_point(rep)


def test_quincunx_candidate_fixed_point_touches_zero():
    spec = sec5_quincunx_spec()
    rep = transfer_matrix(spec.m_prime, invariant_box(spec.m_prime, spec.A).J, spec.A)
    sr = spectral_check(spec, rep=rep)
    assert sr.verdicts["2_peripheral_is_1"] and sr.verdicts["3_geom_mult_1"]
    with pytest.raises(NotPositive):
        fixed_point(rep)


def test_rescaled_configuration_passes(rescaled):
    an = rescaled["analysis"]
    assert an.passes, an.report.verdicts
    assert an.box.within_radius and an.box.size == 41
    assert an.fixed.min_value > 0.02 and an.fixed.grid_N == 128
    assert abs(an.prime_report.spectral_gap - 0.5) < 1e-10
    assert an.report.r1_residual < 1e-9
    assert an.theta < 1e-10
    assert max(an.invariance.values()) < 1e-12


def test_fixed_point_is_h_invariant(rescaled):
    an = rescaled["analysis"]
    h = IntMatrix.of([[-1, 0], [0, -1]])
    assert an.fixed.u.compose_int(h).max_abs_diff(an.fixed.u) < 1e-12
    x = np.random.default_rng(0).random((50, 2))
    u = an.fixed.u.scalar(x)
    assert np.allclose(transfer_apply(an.spec.m_prime, an.fixed.u, an.spec.A).scalar(x), u, atol=1e-12)


def test_cosine_filter_invariance_exact():
    H = group_closure([[[-1, 0], [0, -1]]])
    assert is_invariant(cosine_filter(), H) == 0
    assert is_invariant(haar_filter(), group_closure([[[-1]]])) > 0.5


def test_filter_spec_validation():
    H = group_closure([[[0, 1], [1, 0]]])
    with pytest.raises(ValueError):
        FilterSpec(cosine_filter(), [[0, 2], [2, 0]], H, np.ones(1))
    with pytest.raises(ValueError):
        FilterSpec(haar_filter(), [[2]], group_closure([[[1]]]), np.array([2.0]))
