"""Wavelet families from an orthonormal scaling function (d = 1).

Everything lives in the orthonormal C(X)-basis {f_j U phi} of U V_0, where
f_j(x) = e^{2 pi i <A^{-1} x, y_j>} and y_j runs over the dual coset
representatives (y_0 = 0). A function sum_j c_j(x) f_j(x) U phi(x) with
Z^n-periodic coefficients is handled through c, so brackets of such
functions are c^T conj(c') pointwise.

phi = sum_j a_j f_j U phi defines the polyphase vector a. Projecting the
basis vectors off V_0 gives the frame (I - a a^H) e_k; its Gram field is
probed for uniform positivity and the frame is orthonormalized pointwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .cascade import CascadeResult
from .errors import NotUniformlyPositive
from .lattice import CosetSystem, DilationMatrix, coset_reps
from .symmetry import SymmetryGroup
from .torusfn import (LaurentPoly, ScaledLaurentPoly, TWO_PI_I, _as_points, bracket,
                      cond_expect, grid_points)

DELTA = 1e-6
ORTHO_TOL = 1e-6
ACCEPT = 1e-2
TWIST_CANDIDATES = (1j, 2j, 0.5j)


def characters(A, x) -> np.ndarray:
    """f_j(x) for every dual representative, shape (P, q)."""
    A = DilationMatrix.of(A)
    x = _as_points(x, A.n)
    Y = coset_reps(A, "dual").as_array()
    return np.exp(TWO_PI_I * (x @ A.inv().T) @ Y.T)


def cocycle(A, h, x) -> np.ndarray:
    """chi_{h,j}(x) = e^{2 pi i <A^{-1}(h - I) x, y_j>}, shape (P, q).

    f_j(h x) = chi_{h,j}(x) f_j(x); the factor is Z^n-periodic because h is
    affiliated to A.
    """
    A = DilationMatrix.of(A)
    x = _as_points(x, A.n)
    H = np.asarray(h.to_numpy(float) if hasattr(h, "to_numpy") else h, dtype=float)
    Y = coset_reps(A, "dual").as_array()
    Z = (A.inv() @ (H - np.eye(A.n))).T @ Y.T  # (n, q)
    return np.exp(TWO_PI_I * (x @ Z))


def sector_keys(A, H: SymmetryGroup) -> list:
    """Per coset index, the cocycle frequencies (A^{-1}(h - I))^T y_k over H.

    Indices with equal keys transform identically and may be mixed.
    """
    A = DilationMatrix.of(A)
    Y = coset_reps(A, "dual").as_array()
    keys = []
    for y in Y:
        key = []
        for h in H.elements:
            z = (A.inv() @ (h.to_numpy(float) - np.eye(A.n))).T @ y
            key.extend(np.round(z, 9) + 0.0)
        keys.append(tuple(float(v) for v in key))
    return keys


# ---------------------------------------------------------------- polyphase

def polyphase_pointwise(m, A, x) -> np.ndarray:
    """a_k(x) = q^{-1} sum_j m(A^{-1}(x - x_j)) conj(f_k(x - x_j)), shape (P, q)."""
    A = DilationMatrix.of(A)
    x = _as_points(x, A.n)
    reps = coset_reps(A, "primal").as_array()
    Y = coset_reps(A, "dual").as_array()
    Ainv_T = A.inv().T
    out = np.zeros((len(x), len(Y)), dtype=complex)
    for xj in reps:
        z = (x - xj) @ Ainv_T
        out += m(z)[:, 0, 0][:, None] * np.exp(-TWO_PI_I * z @ Y.T)
    return out / len(reps)


def polyphase_exact(m: LaurentPoly, A) -> list:
    """a_k = P(m~ conj(f_k)) as Laurent polynomials, m~ = m o A^{-1}."""
    A = DilationMatrix.of(A)
    mt = ScaledLaurentPoly.dilated(m, A.matrix)
    out = []
    for y in coset_reps(A, "dual").reps:
        fk = ScaledLaurentPoly.character(tuple(-v for v in y), A.matrix)
        out.append(cond_expect(mt * fk))
    return out


@dataclass
class PolyphaseVector:
    A: DilationMatrix
    primal: CosetSystem
    dual: CosetSystem
    evaluator: Callable
    points: np.ndarray
    values: np.ndarray  # (P, q)
    exact: Optional[list] = None

    @property
    def q(self) -> int:
        return self.values.shape[1]

    def __call__(self, x) -> np.ndarray:
        return self.evaluator(x)

    def unit_norm_defect(self) -> float:
        return float(np.max(np.abs(np.sum(np.abs(self.values) ** 2, axis=1) - 1)))

    def as_dict(self) -> dict:
        return {
            "q": self.q,
            "primal_reps": [list(r) for r in self.primal.reps],
            "dual_reps": [list(r) for r in self.dual.reps],
            "grid_points": len(self.points),
            "unit_norm_defect": self.unit_norm_defect(),
            "min_abs": [float(v) for v in np.min(np.abs(self.values), axis=0)],
        }


def polyphase(m, A, N: int = 64, points=None) -> PolyphaseVector:
    """Polyphase vector on a torus grid with an exact pointwise evaluator."""
    A = DilationMatrix.of(A)
    x = grid_points(N, A.n) if points is None else _as_points(points, A.n)
    ev = lambda y: polyphase_pointwise(m, A, y)  # noqa: E731
    exact = None
    if isinstance(m, LaurentPoly) and m.d == 1:
        exact = polyphase_exact(m, A)
    return PolyphaseVector(A, coset_reps(A, "primal"), coset_reps(A, "dual"), ev, x, ev(x), exact)


# ---------------------------------------------------------------- frames

@dataclass(frozen=True)
class Frame:
    """Choice of q - 1 vectors before projection off V_0.

    kind "plain" keeps e_k for k != drop; "recombined" multiplies these by a
    constant block matrix mix that only couples indices in one cocycle
    sector; "twisted" uses e_k + c conj(a_k) e_0 for k != 0.
    """

    kind: str
    drop: int = 0
    twist: Optional[complex] = None
    mix: Optional[tuple] = None

    def kept(self, q: int) -> list:
        return [k for k in range(q) if k != self.drop]

    def select(self, a: np.ndarray) -> np.ndarray:
        """(P, q, q - 1) coefficient vectors before projection."""
        P, q = a.shape
        kept = self.kept(q)
        T = np.zeros((P, q, q - 1), dtype=complex)
        for i, k in enumerate(kept):
            T[:, k, i] = 1.0
        if self.kind == "twisted":
            for i, k in enumerate(kept):
                T[:, self.drop, i] = self.twist * np.conj(a[:, k])
        if self.mix is not None:
            T = T @ np.asarray(self.mix, dtype=complex)
        return T

    def coefficients(self, a: np.ndarray) -> np.ndarray:
        """E = (I - a a^H) T, the projected frame in the basis f_j U phi."""
        T = self.select(a)
        return T - a[:, :, None] * np.einsum("pj,pji->pi", np.conj(a), T)[:, None, :]

    def describe(self) -> dict:
        out = {"kind": self.kind, "drop": self.drop}
        if self.twist is not None:
            out["twist"] = [float(np.real(self.twist)), float(np.imag(self.twist))]
        return out


def frame_gram(E: np.ndarray) -> np.ndarray:
    """G_{kk'} = <zeta_k, zeta_k'>' = sum_j E_jk conj(E_jk'), shape (P, r, r)."""
    return np.einsum("pjk,pjl->pkl", E, np.conj(E))


def gram_frame(a: np.ndarray, frame: Frame = Frame("plain")) -> np.ndarray:
    """Gram field of the projected frame at the polyphase samples a (P, q).

    For the plain frame dropping index 0 this is delta_kk' - conj(a_k) a_k'.
    """
    return frame_gram(frame.coefficients(np.asarray(a, dtype=complex)))


def min_eig(G: np.ndarray) -> tuple:
    ev = np.linalg.eigvalsh(0.5 * (G + np.conj(np.swapaxes(G, 1, 2))))[:, 0]
    i = int(np.argmin(ev))
    return float(ev[i]), i


def _block_mix(groups: list, kept: list, rng) -> np.ndarray:
    r = len(kept)
    M = np.zeros((r, r), dtype=complex)
    pos = {k: i for i, k in enumerate(kept)}
    for g in groups:
        idx = [pos[k] for k in g if k in pos]
        s = len(idx)
        if s == 0:
            continue
        Z = rng.normal(size=(s, s)) + 1j * rng.normal(size=(s, s))
        Q, _ = np.linalg.qr(Z)
        M[np.ix_(idx, idx)] = Q
    return M


@dataclass
class ProbeResult:
    frame: Optional[Frame]
    min_eig: float
    location: Optional[tuple]
    log: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.frame is not None

    def as_dict(self) -> dict:
        return {
            "passed": self.ok,
            "frame": self.frame.describe() if self.frame else None,
            "min_eig": self.min_eig,
            "location": list(self.location) if self.location is not None else None,
            "attempts": self.log,
        }


def probe_frames(poly: PolyphaseVector, H: Optional[SymmetryGroup] = None,
                 delta: float = DELTA, seed: int = 0, trials: int = 8,
                 accept: float = ACCEPT) -> ProbeResult:
    """Search for a frame whose Gram stays above delta on the grid.

    Stages in order: plain frame without the trivial coset; other dropped
    indices; seeded H-equivariant constant recombinations; twisted frames.
    A frame with minimum eigenvalue >= accept ends the search at once.
    Otherwise the best attempt overall is used if it clears delta, and
    reported with frame = None if it does not.
    """
    a = poly.values
    q = poly.q
    rng = np.random.default_rng(seed)
    log = []
    best = (-np.inf, None, None)

    def attempt(stage, fr):
        nonlocal best
        lam, i = min_eig(gram_frame(a, fr))
        loc = tuple(float(v) for v in poly.points[i])
        log.append({"stage": stage, **fr.describe(), "min_eig": lam})
        if lam > best[0]:
            best = (lam, fr, loc)
        return lam >= accept

    def result():
        fr = best[1] if best[0] >= delta else None
        return ProbeResult(fr, best[0], best[2], log)

    if q < 2:
        return ProbeResult(None, 0.0, None, [{"stage": "none", "reason": "q < 2"}])
    for r in range(q):
        if attempt("plain" if r == 0 else "exchange", Frame("plain", r)):
            return result()
    if H is not None and q > 2:
        keys = sector_keys(poly.A, H)
        groups: dict = {}
        for k, key in enumerate(keys):
            groups.setdefault(key, []).append(k)
        groups = list(groups.values())
        if all(len(g) == 1 for g in groups):
            log.append({"stage": "recombined", "skipped": "every cocycle sector is a singleton"})
        else:
            for r in range(q):
                kept = [k for k in range(q) if k != r]
                for _ in range(trials):
                    mix = _block_mix(groups, kept, rng)
                    fr = Frame("recombined", r, mix=tuple(map(tuple, mix)))
                    if attempt("recombined", fr):
                        return result()
    twists = list(TWIST_CANDIDATES) + [complex(*rng.normal(size=2)) for _ in range(trials)]
    for c in twists:
        if attempt("twisted", Frame("twisted", 0, twist=c)):
            return result()
    return result()


# ---------------------------------------------------------------- families

@dataclass
class WaveletFamily:
    """psi_i = sum_j C_ji f_j U phi with C = E M^{-1/2}, M = E^H E pointwise."""

    A: DilationMatrix
    phi: CascadeResult
    poly: PolyphaseVector
    frame: Frame
    labels: list  # coset index k attached to each wavelet
    min_eig: float
    probe: Optional[ProbeResult] = None
    residuals: dict = field(default_factory=dict)
    orthonormalized: bool = True

    @property
    def count(self) -> int:
        return len(self.labels)

    @property
    def dual(self) -> CosetSystem:
        return self.poly.dual

    def coefficients(self, x) -> np.ndarray:
        """C(x), shape (P, q, r)."""
        a = self.poly(x)
        E = self.frame.coefficients(a)
        if not self.orthonormalized:
            return E
        M = np.einsum("pji,pjk->pik", np.conj(E), E)
        ev, V = np.linalg.eigh(0.5 * (M + np.conj(np.swapaxes(M, 1, 2))))
        Mis = np.einsum("pij,pj,pkj->pik", V, np.clip(ev, 1e-300, None) ** -0.5, np.conj(V))
        return E @ Mis

    def psi(self, x) -> np.ndarray:
        """(P, r) values of the wavelets at frequency points x."""
        x = _as_points(x, self.A.n)
        C = self.coefficients(x)
        F = characters(self.A, x)
        U = self.phi.U_phi(x)[:, 0]
        return np.einsum("pji,pj->pi", C, F) * U[:, None]

    def twisted_psi(self, x, convention: str = "minus") -> np.ndarray:
        """conj(f_k) psi_k ("minus") or f_k psi_k ("plus"); should be H-invariant."""
        x = _as_points(x, self.A.n)
        F = characters(self.A, x)[:, self.labels]
        fac = np.conj(F) if convention == "minus" else F
        return fac * self.psi(x)

    def intrinsic_gram(self, x=None) -> np.ndarray:
        """C^T conj(C): the wavelet Gram given an orthonormal basis f_j U phi."""
        x = self.poly.points if x is None else x
        C = self.coefficients(x)
        return np.einsum("pji,pjk->pik", C, np.conj(C))

    def as_dict(self) -> dict:
        return {
            "count": self.count,
            "labels": self.labels,
            "dual_reps": [list(r) for r in self.dual.reps],
            "frame": self.frame.describe(),
            "gram_min_eig": self.min_eig,
            "probe": self.probe.as_dict() if self.probe else None,
            "residuals": self.residuals,
        }


def sufficiency_flag(n: int, q: int, d: int = 1) -> bool:
    """The existence hypothesis q >= n/(2d) + 1, echoed but never relied on."""
    return q >= n / (2 * d) + 1


def orthonormalize(phi: CascadeResult, poly: PolyphaseVector, frame: Frame,
                   delta: float = DELTA, probe: Optional[ProbeResult] = None) -> WaveletFamily:
    """Pointwise (E^H E)^{-1/2} orthonormalization of a projected frame.

    Raises NotUniformlyPositive when the Gram drops below delta on the grid.
    """
    if phi.d != 1:
        raise ValueError("wavelet construction is implemented for d = 1")
    G = gram_frame(poly.values, frame)
    lam, i = min_eig(G)
    if lam < delta:
        raise NotUniformlyPositive(lam, tuple(poly.points[i]))
    fam = WaveletFamily(poly.A, phi, poly, frame, frame.kept(poly.q), lam, probe)
    Gi = fam.intrinsic_gram()
    fam.residuals["intrinsic_gram"] = float(np.max(np.abs(Gi - np.eye(fam.count))))
    C = fam.coefficients(poly.points)
    fam.residuals["intrinsic_v0"] = float(np.max(np.abs(np.einsum("pji,pj->pi", C, np.conj(poly.values)))))
    return fam


def wavelet_q2(phi: CascadeResult, poly: PolyphaseVector, check_unit: bool = True) -> WaveletFamily:
    """psi = <f_1 U phi, phi>' U phi - <U phi, phi>' f_1 U phi = conj(a_1) U phi - conj(a_0) f_1 U phi."""
    if poly.q != 2 or phi.d != 1:
        raise ValueError("wavelet_q2 needs q = 2 and d = 1")
    a = poly.values
    defect = float(np.max(np.abs(np.sum(np.abs(a) ** 2, axis=1) - 1)))
    if check_unit and defect > ORTHO_TOL:
        raise ValueError(f"polyphase vector is not unit norm (defect {defect:.2e})")
    fam = _Q2Family(poly.A, phi, poly, Frame("plain", 0), [1], 1.0, None, orthonormalized=False)
    Gi = fam.intrinsic_gram()
    fam.residuals["intrinsic_gram"] = float(np.max(np.abs(Gi - 1)))
    return fam


class _Q2Family(WaveletFamily):
    def coefficients(self, x) -> np.ndarray:
        a = self.poly(x)
        return np.stack([np.conj(a[:, 1]), -np.conj(a[:, 0])], axis=1)[:, :, None]


def build_family(phi: CascadeResult, poly: PolyphaseVector, H: Optional[SymmetryGroup] = None,
                 delta: float = DELTA, seed: int = 0) -> WaveletFamily:
    """Probe for a uniformly positive frame and orthonormalize it."""
    pr = probe_frames(poly, H, delta, seed)
    if not pr.ok:
        raise NotUniformlyPositive(pr.min_eig, pr.location)
    return orthonormalize(phi, poly, pr.frame, delta, pr)


# ---------------------------------------------------------------- checks

def basis_gram(phi: CascadeResult, A, x, R: int = 64, tail_tol: float = 1e-3) -> tuple:
    """B_jj'(x) = <f_j U phi, f_j' U phi>'(x) from lattice sums of phi.

    Splitting Z^n into the cosets x_i + A Z^n gives
    B_jj'(x) = q^{-1} sum_i (f_j conj(f_j'))(x - x_i) <phi, phi>'(A^{-1}(x - x_i)).
    Returns (B (P, q, q), tail estimate).
    """
    A = DilationMatrix.of(A)
    x = _as_points(x, A.n)
    reps = coset_reps(A, "primal").as_array()
    q = len(reps)
    pts = np.concatenate([(x - xi) @ A.inv().T for xi in reps])
    br = bracket(phi.phi, R=R, n=A.n, points=pts, tail_tol=tail_tol)
    val = br.values[:, 0, 0].reshape(q, len(x))
    B = np.zeros((len(x), q, q), dtype=complex)
    for i, xi in enumerate(reps):
        F = characters(A, x - xi)
        B += (F[:, :, None] * np.conj(F[:, None, :])) * val[i][:, None, None]
    return B / q, br.tail


def measured_gram(family: WaveletFamily, R: int = 64, N: int = 16, points=None,
                  tail_tol: float = 1e-3, method: str = "factored") -> dict:
    """Wavelet Gram and overlap with phi recomputed from lattice sums.

    "direct" brackets the psi evaluators themselves. "factored" uses the
    periodicity of C: <psi_k, psi_k'>' = (C^T B conj(C))_kk' and
    <psi_k, phi>' = (C^T B conj(a))_k with B from basis_gram, which only
    needs lattice sums of the smoother phi.
    """
    n = family.A.n
    x = grid_points(N, n) if points is None else _as_points(points, n)
    if method == "direct":
        bp = bracket(family.psi, R=R, n=n, points=x, tail_tol=tail_tol)
        bo = bracket(family.psi, family.phi.phi, R=R, n=n, points=x, tail_tol=tail_tol)
        G, O, tail = bp.values, bo.values[:, :, 0], max(bp.tail, bo.tail)
    elif method == "factored":
        B, tail = basis_gram(family.phi, family.A, x, R, tail_tol)
        C = family.coefficients(x)
        G = np.einsum("pji,pjk,pkl->pil", C, B, np.conj(C))
        O = np.einsum("pji,pjk,pk->pi", C, B, np.conj(family.poly(x)))
    else:
        raise ValueError(f"unknown method {method!r}")
    out = {
        "method": method,
        "gram_residual": float(np.max(np.abs(G - np.eye(family.count)))),
        "v0_residual": float(np.max(np.abs(O))),
        "tail_estimate": float(tail),
        "R": R,
        "points": len(x),
    }
    family.residuals["measured"] = out
    return out


def default_symmetry_points(n: int, count: Optional[int] = None, box: float = 2.0) -> np.ndarray:
    count = count or (64 if n == 1 else 24)
    ax = np.linspace(-box, box, count) + 0.5 * box / count
    grids = np.meshgrid(*([ax] * n), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def symmetry_check(family: WaveletFamily, H: SymmetryGroup, points=None,
                   convention: str = "minus") -> dict:
    """max_x |(g_k)(h x) - g_k(x)| per (h, k), g_k = conj(f_k) psi_k.

    convention "plus" tests f_k psi_k instead, the frequency-side form of
    symmetry centres at +(A^T)^{-1} y_k.
    """
    x = default_symmetry_points(family.A.n) if points is None else _as_points(points, family.A.n)
    base = family.twisted_psi(x, convention)
    out = {}
    for h in H.elements:
        hx = x @ h.to_numpy(float).T
        diff = np.max(np.abs(family.twisted_psi(hx, convention) - base), axis=0)
        for i, k in enumerate(family.labels):
            out[f"h={[list(r) for r in h.entries]},k={k}"] = float(diff[i])
    family.residuals[f"symmetry_{convention}"] = float(max(out.values())) if out else 0.0
    return out


def gram_equivariance(poly: PolyphaseVector, frame: Frame, H: SymmetryGroup, points=None) -> float:
    """max |G(h x) - D^* G(x) D| with D = diag chi_{h,k}(x) over the kept indices."""
    x = poly.points if points is None else _as_points(points, poly.A.n)
    kept = frame.kept(poly.q)
    Gx = gram_frame(poly(x), frame)
    worst = 0.0
    for h in H.elements:
        hx = x @ h.to_numpy(float).T
        Ghx = gram_frame(poly(hx), frame)
        D = cocycle(poly.A, h, x)[:, kept]
        pred = D[:, :, None] * Gx * np.conj(D[:, None, :])
        worst = max(worst, float(np.max(np.abs(Ghx - pred))))
    return worst


def polyphase_equivariance(poly: PolyphaseVector, H: SymmetryGroup, points=None) -> float:
    """max |a_j(h x) - conj(chi_{h,j}(x)) a_j(x)|; zero when phi is H-invariant."""
    x = poly.points if points is None else _as_points(points, poly.A.n)
    ax = poly(x)
    worst = 0.0
    for h in H.elements:
        hx = x @ h.to_numpy(float).T
        worst = max(worst, float(np.max(np.abs(poly(hx) - np.conj(cocycle(poly.A, h, x)) * ax))))
    return worst


# ---------------------------------------------------------------- spatial side

@dataclass
class SpatialSamples:
    t: np.ndarray  # (T, n)
    values: np.ndarray  # (T, r)
    error: float
    box: float
    quadrature_N: int

    def as_dict(self) -> dict:
        return {"count": len(self.t), "quadrature_error": self.error, "box": self.box,
                "quadrature_N": self.quadrature_N}


def _trapezoid_weights(N: int, L: float) -> np.ndarray:
    w = np.full(N, 2 * L / (N - 1))
    w[0] = w[-1] = 0.5 * w[0]
    return w


def _transform(vals: np.ndarray, ax: np.ndarray, w: np.ndarray, t: np.ndarray, n: int) -> np.ndarray:
    if n == 1:
        E = np.exp(TWO_PI_I * np.outer(t[:, 0], ax))  # (T, N)
        return E @ (w[:, None] * vals)
    N = len(ax)
    V = vals.reshape(N, N, -1) * (w[:, None, None] * w[None, :, None])
    E1 = np.exp(TWO_PI_I * np.outer(t[:, 0], ax))
    E2 = np.exp(TWO_PI_I * np.outer(t[:, 1], ax))
    return np.einsum("ta,tb,abr->tr", E1, E2, V)


def spatial_samples(fn: Callable, n: int, t, box: float, quadrature_N: int) -> SpatialSamples:
    """Trapezoid quadrature of int fn(x) e^{2 pi i <x, t>} dx over [-box, box]^n.

    The error estimate is the change against the rule on every other node.
    quadrature_N should be odd so the coarse rule shares the endpoints.
    """
    t = _as_points(t, n)
    N = int(quadrature_N) | 1
    ax = np.linspace(-box, box, N)
    if n == 1:
        pts = ax.reshape(-1, 1)
    elif n == 2:
        g1, g2 = np.meshgrid(ax, ax, indexing="ij")
        pts = np.stack([g1.ravel(), g2.ravel()], axis=1)
    else:
        raise ValueError("spatial samples are implemented for n <= 2")
    vals = np.asarray(fn(pts), dtype=complex).reshape(len(pts), -1)
    fine = _transform(vals, ax, _trapezoid_weights(N, box), t, n)
    if n == 1:
        cv = vals[::2]
    else:
        cv = vals.reshape(N, N, -1)[::2, ::2].reshape(-1, vals.shape[1])
    Nc = (N + 1) // 2
    coarse = _transform(cv, ax[::2], _trapezoid_weights(Nc, box), t, n)
    err = float(np.max(np.abs(fine - coarse))) if fine.size else 0.0
    return SpatialSamples(t, fine, err, box, N)


def haar_wavelet_spatial(t) -> np.ndarray:
    """Step-function oracle: +1 on (-1/2, 0), -1 on (-1, -1/2)."""
    t = np.asarray(t, dtype=float).ravel()
    return np.where((t > -0.5) & (t < 0), 1.0, 0.0) - np.where((t > -1) & (t < -0.5), 1.0, 0.0)


def align_to(values: np.ndarray, reference: np.ndarray) -> tuple:
    """Best unimodular c minimizing |c values - reference|; returns (c, residual)."""
    inner = np.vdot(values, reference)
    c = inner / abs(inner) if abs(inner) > 0 else 1.0
    return c, float(np.max(np.abs(c * values - reference)))


def haar_alignment(values_fn: Callable, t: np.ndarray, jumps=(-1.0, -0.5, 0.0),
                   margin: float = 0.1, shifts=(-1.0, -0.5, 0.0, 0.5, 1.0)) -> dict:
    """Compare spatial samples against the Haar oracle over half-integer shifts.

    values_fn(t) gives sampled spatial values at the points t. Points within
    margin of a jump of the shifted oracle are excluded.
    """
    t = np.asarray(t, dtype=float).ravel()
    vals = np.asarray(values_fn(t.reshape(-1, 1))).ravel()
    best = None
    for s in shifts:
        ref = haar_wavelet_spatial(t - s)
        far = np.min(np.abs((t - s)[:, None] - np.array(jumps)[None, :]), axis=1) >= margin
        if not np.any(far):
            continue
        c, res = align_to(vals[far], ref[far])
        if best is None or res < best["residual"]:
            best = {"shift": s, "phase": [float(np.real(c)), float(np.imag(c))],
                    "residual": res, "points": int(np.sum(far))}
    return best
