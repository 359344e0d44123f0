import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symwave.builtins import haar_filter, sec5_quincunx_spec
from symwave.cascade import scaling_function
from symwave.errors import NotUniformlyPositive
from symwave.lattice import IntMatrix
from symwave.symmetry import group_closure
from symwave.torusfn import LaurentPoly, grid_points
from symwave.waveletgen import (Frame, align_to, characters, cocycle, gram_equivariance,
                                gram_frame, haar_wavelet_spatial, measured_gram, min_eig,
                                orthonormalize, polyphase, polyphase_equivariance,
                                polyphase_pointwise, probe_frames, sector_keys, spatial_samples,
                                sufficiency_flag, symmetry_check, wavelet_q2)

ROT2 = [[0, 2], [-2, 0]]
MINUS_I = group_closure([[[-1, 0], [0, -1]]])


def fake_poly(a, A=((2,),)):
    """PolyphaseVector stand-in carrying fixed samples only."""
    a = np.asarray(a, dtype=complex)
    P = polyphase(LaurentPoly.constant(1, len(A)), [list(r) for r in A], N=4)
    P.values = np.tile(a, (len(P.points), 1))
    P.evaluator = lambda x: np.tile(a, (len(np.atleast_2d(x)), 1))
    return P


def test_haar_polyphase_is_constant():
    poly = polyphase(haar_filter(), [[2]], N=16)
    assert np.allclose(poly.values, 1 / np.sqrt(2), atol=1e-15)
    for p in poly.exact:
        assert p.support() == [(0,)]
        assert abs(p.coefficient((0,))[0, 0] - 1 / np.sqrt(2)) < 1e-15


def test_constant_filter_polyphase():
    poly = polyphase(LaurentPoly.constant(1, 1), [[2]], N=8)
    assert np.allclose(poly.values, [1, 0], atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([[[2]], [[3]], [[1, -1], [1, 1]], ROT2]))
def test_exact_polyphase_matches_pointwise(seed, A):
    rng = np.random.default_rng(seed)
    n = len(A)
    ks = {tuple(int(v) for v in rng.integers(-2, 3, size=n)) for _ in range(5)}
    m = LaurentPoly(n, 1, {k: complex(*rng.normal(size=2)) for k in ks})
    poly = polyphase(m, A, N=4)
    x = rng.random((10, n))
    exact = np.stack([p.scalar(x) for p in poly.exact], axis=1)
    assert np.allclose(exact, polyphase_pointwise(m, A, x), atol=1e-12)


def test_reconstruction_from_polyphase(rescaled):
    fam = rescaled["family"]
    x = np.random.default_rng(0).normal(size=(30, 2))
    F = characters(fam.A, x)
    lhs = fam.phi.phi_scalar(x)
    rhs = np.sum(fam.poly(x) * F, axis=1) * fam.phi.U_phi(x)[:, 0]
    assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_unit_norm(haar, rescaled):
    assert haar["poly"].unit_norm_defect() < 1e-12
    assert rescaled["poly"].unit_norm_defect() < 1e-6


def test_haar_gram_is_half():
    a = np.full((4, 2), 1 / np.sqrt(2))
    G = gram_frame(a)
    assert np.allclose(G, 0.5, atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False),
                min_size=4, max_size=4).filter(lambda z: np.linalg.norm(z) > 1e-3))
def test_plain_gram_formula(z):
    a = np.asarray(z) / np.linalg.norm(z)
    G = gram_frame(a[None, :])[0]
    want = np.eye(3) - np.outer(np.conj(a[1:]), a[1:])
    assert np.allclose(G, want, atol=1e-12)
    lam, _ = min_eig(G[None])
    assert abs(lam - abs(a[0]) ** 2) < 1e-10


def test_degenerate_polyphase():
    fam_a = np.array([1.0, 0, 0, 0])
    assert np.allclose(gram_frame(fam_a[None, :]), np.eye(3))
    a = np.array([0, 0, 0, 1.0])
    G = gram_frame(a[None, :])
    assert min_eig(G)[0] < 1e-14
    poly = fake_poly(a, ROT2)
    cas = scaling_function(sec5_quincunx_spec(), K=3)
    with pytest.raises(NotUniformlyPositive):
        orthonormalize(cas, poly, Frame("plain"))
    assert probe_frames(poly).frame.drop == 3


def test_sector_keys_and_cocycle():
    keys = sector_keys(IntMatrix.of(ROT2), MINUS_I)
    assert len(set(keys)) == 4
    x = np.random.default_rng(1).random((5, 2))
    assert np.allclose(cocycle(IntMatrix.of(ROT2), IntMatrix.identity(2), x), 1)


def test_probe_on_rescaled_family(rescaled):
    pr = rescaled["family"].probe
    assert pr.ok and pr.min_eig >= 1e-2
    stages = [e["stage"] for e in pr.log]
    assert stages[:4] == ["plain", "exchange", "exchange", "exchange"]
    assert "twisted" in stages
    assert pr.log[0]["min_eig"] < 1e-2


def test_rescaled_family(rescaled):
    fam = rescaled["family"]
    assert fam.count == 3 and fam.labels == [1, 2, 3]
    assert fam.residuals["intrinsic_gram"] < 1e-6
    assert fam.residuals["intrinsic_v0"] < 1e-6
    assert fam.min_eig >= 1e-6
    x = grid_points(5, 2) + 0.013
    assert np.max(np.abs(fam.intrinsic_gram(x) - np.eye(3))) < 1e-10


def test_rescaled_symmetry(rescaled):
    fam = rescaled["family"]
    sym = symmetry_check(fam, rescaled["spec"].H)
    assert len(sym) == 6 and max(sym.values()) < 1e-6
    bad = symmetry_check(fam, rescaled["spec"].H, convention="plus")
    assert max(bad.values()) > 0.1


def test_equivariance(rescaled):
    poly, fam = rescaled["poly"], rescaled["family"]
    H = rescaled["spec"].H
    x = np.random.default_rng(2).random((40, 2))
    assert gram_equivariance(poly, fam.frame, H, x) < 1e-8
    assert polyphase_equivariance(poly, H, x) < 1e-8


def test_rescaled_measured_gram(rescaled):
    fam = rescaled["family"]
    out = measured_gram(fam, R=64, N=4)
    assert out["gram_residual"] < 1e-4 and out["v0_residual"] < 1e-4


def test_haar_q2_and_orthonormalize_agree(haar):
    q2 = wavelet_q2(haar["cascade"], haar["poly"])
    gen = orthonormalize(haar["cascade"], haar["poly"], Frame("plain"))
    x = np.linspace(-3, 3, 61)[:, None]
    c, res = align_to(gen.psi(x)[:, 0], q2.psi(x)[:, 0])
    assert abs(abs(c) - 1) < 1e-12 and res < 1e-10
    assert q2.residuals["intrinsic_gram"] < 1e-12
    out = measured_gram(q2, R=64, N=32)
    assert out["gram_residual"] < 1e-6 and out["v0_residual"] < 1e-6


def test_q2_rejects_wrong_shape(rescaled):
    with pytest.raises(ValueError):
        wavelet_q2(rescaled["cascade"], rescaled["poly"])


def test_q2_symmetry_on_quincunx():
    spec = sec5_quincunx_spec()
    cas = scaling_function(spec, K=20)
    poly = polyphase(spec.m_prime, spec.A, N=8)
    fam = wavelet_q2(cas, poly, check_unit=False)
    sym = symmetry_check(fam, spec.H, points=np.random.default_rng(3).normal(size=(60, 2)))
    assert max(sym.values()) < 1e-6


def test_sufficiency_flag():
    assert sufficiency_flag(1, 2) and sufficiency_flag(2, 4)
    assert not sufficiency_flag(4, 2)


def test_spatial_samples_gaussian():
    t = np.linspace(-1.5, 1.5, 7)
    ss = spatial_samples(lambda x: np.exp(-np.pi * x[:, 0] ** 2), 1, t, 6.0, 401)
    assert np.max(np.abs(ss.values[:, 0] - np.exp(-np.pi * t ** 2))) < 1e-10
    t2 = np.array([[0.0, 0.0], [0.5, -0.25]])
    ss2 = spatial_samples(lambda x: np.exp(-np.pi * np.sum(x ** 2, axis=1)), 2, t2, 5.0, 201)
    assert np.max(np.abs(ss2.values[:, 0] - np.exp(-np.pi * np.sum(t2 ** 2, axis=1)))) < 1e-10


def test_spatial_samples_zero():
    ss = spatial_samples(lambda x: np.zeros(len(x)), 1, [0.1, 0.2], 2.0, 33)
    assert np.all(ss.values == 0) and ss.error == 0


def test_haar_wavelet_oracle():
    assert list(haar_wavelet_spatial([-0.75, -0.25, 0.5])) == [-1.0, 1.0, 0.0]
