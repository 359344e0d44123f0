"""Transfer operator of a low-pass filter.

The operator Ru(x) = q^{-1} sum_{A y = x mod Z^n} m*(y) u(y) m(y) acts on
Laurent polynomials by (Ru)_l = (m* u m)_{A^T l}. This module finds a
frequency box J with R K_J inside K_J, assembles the matrix of R there,
checks the five spectral conditions, finds the positive fixed point u and
normalizes a raw filter with it.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NoInvariantBox, NotPositive, NoUnitEigenvalue
from .lattice import DilationMatrix, IntMatrix, coset_reps, in_lattice
from .symmetry import SymmetryGroup, group_closure, is_affiliated
from .torusfn import LaurentPoly, TWO_PI_I, grid_points

EPS_PER = 1e-7
EPS_EIG = 1e-9
POS_TOL = 1e-8
R1_TOL = 1e-9
CESARO_K = 512


@dataclass
class FilterSpec:
    """Raw filter m', dilation A, symmetry group H and unit vector w."""

    m_prime: LaurentPoly
    A: DilationMatrix
    H: SymmetryGroup
    w: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        self.A = DilationMatrix.of(self.A)
        self.w = np.asarray(self.w, dtype=complex).reshape(-1)
        if self.m_prime.n != self.A.n:
            raise ValueError("filter and dilation dimensions differ")
        if len(self.w) != self.m_prime.d:
            raise ValueError("w must have length d")
        if abs(np.linalg.norm(self.w) - 1) > 1e-12:
            raise ValueError("w must be a unit vector")
        if self.H.n != self.A.n:
            raise ValueError("symmetry group dimension differs from A")
        self.affiliation = is_affiliated(self.A.matrix, self.H)
        if not self.affiliation.verdict:
            raise ValueError(f"H is not affiliated to A: {self.affiliation.as_dict()}")

    @property
    def n(self) -> int:
        return self.A.n

    @property
    def d(self) -> int:
        return self.m_prime.d

    @property
    def q(self) -> int:
        return self.A.q


# ---------------------------------------------------------------- K_J

@dataclass
class InvariantBox:
    J: list
    V: list
    steps: int
    radius_bound: Optional[float]  # norm radius from the contraction bound, when ||A^{-T}|| < 1
    within_radius: Optional[bool]

    @property
    def size(self) -> int:
        return len(self.J)

    def max_norm(self) -> float:
        return float(max(np.linalg.norm(k) for k in self.J))


def _lattice_image(A: IntMatrix, pts: set) -> set:
    """(A^T)^{-1} pts intersected with Z^n, exactly."""
    AT = A.T()
    D = AT.det()
    adj = AT.adjugate()
    out = set()
    for v in pts:
        w = adj @ v
        if all(x % D == 0 for x in w):
            out.add(tuple(x // D for x in w))
    return out


def difference_set(m: LaurentPoly) -> list:
    S = m.support()
    return sorted({tuple(a - b for a, b in zip(s, t)) for s in S for t in S})


def invariant_box(m: LaurentPoly, A) -> InvariantBox:
    """Smallest union-iterate J containing V = supp(m) - supp(m) with
    (A^T)^{-1}(J + V) cap Z^n inside J.
    """
    A = DilationMatrix.of(A)
    M = A.matrix
    V = difference_set(m)
    if not V:
        V = [(0,) * A.n]
    J = set(V)
    cap = 10 * len(J)
    steps = 0
    while True:
        sums = {tuple(a + b for a, b in zip(j, v)) for j in J for v in V}
        new = J | _lattice_image(M, sums)
        steps += 1
        if new == J:
            break
        J = new
        if steps > cap:
            raise NoInvariantBox(f"support iteration did not stabilize in {cap} steps")
    J = sorted(J, key=lambda k: (sum(abs(x) for x in k), k))
    J = sorted(J)
    nrm = np.linalg.norm(A.inv_T(), 2)
    bound = within = None
    if nrm < 1:
        vmax = max(np.linalg.norm(v) for v in V)
        bound = float(nrm * vmax / (1 - nrm) + 1)
        within = bool(all(np.linalg.norm(k) <= bound + 1e-12 for k in J))
    return InvariantBox(J, V, steps, bound, within)


# ---------------------------------------------------------------- R

def transfer_apply(m: LaurentPoly, u: LaurentPoly, A) -> LaurentPoly:
    """Exact (Ru)_l = (m* u m)_{A^T l}."""
    A = DilationMatrix.of(A).matrix
    if m.n != u.n or m.d != u.d:
        raise ValueError("dimension mismatch")
    w = m.adjoint() * u * m
    AT = A.T()
    D = AT.det()
    adj = AT.adjugate()
    out = {}
    for k, c in w.coeffs.items():
        if in_lattice(AT, k):
            out[tuple(v // D for v in (adj @ k))] = c
    return LaurentPoly(m.n, m.d, out)


def transfer_pointwise(m_eval: Callable, u_eval: Callable, A, x) -> np.ndarray:
    """q^{-1} sum_j m*(y_j) u(y_j) m(y_j), y_j = A^{-1}(x + x_j): the defining sum."""
    A = DilationMatrix.of(A)
    x = np.asarray(x, dtype=float).reshape(-1, A.n)
    Ainv = A.inv()
    reps = coset_reps(A.matrix, "primal").as_array()
    out = 0
    for r in reps:
        y = (x + r) @ Ainv.T
        My = m_eval(y)
        out = out + np.einsum("pba,pbc,pcd->pad", np.conj(My), u_eval(y), My)
    return out / len(reps)


@dataclass
class TransferMatrixRep:
    J: list
    d: int
    matrix: np.ndarray
    A: DilationMatrix

    def basis(self) -> list:
        """Index -> (k, a, b): coefficient of E_ab at frequency k."""
        return [(k, a, b) for k in self.J for a in range(self.d) for b in range(self.d)]

    def to_poly(self, vec: np.ndarray) -> LaurentPoly:
        d = self.d
        v = np.asarray(vec).reshape(len(self.J), d, d)
        return LaurentPoly(len(self.J[0]), d, {k: v[i] for i, k in enumerate(self.J)})

    def from_poly(self, P: LaurentPoly) -> np.ndarray:
        index = {k: i for i, k in enumerate(self.J)}
        v = np.zeros((len(self.J), self.d, self.d), dtype=complex)
        for k, c in P.coeffs.items():
            if k not in index:
                raise ValueError(f"frequency {k} outside J")
            v[index[k]] = c
        return v.reshape(-1)


def transfer_matrix(m: LaurentPoly, J: list, A) -> TransferMatrixRep:
    """Columns are transfer_apply of the basis e_k E_ab, k in J."""
    A = DilationMatrix.of(A)
    d = m.d
    J = [tuple(k) for k in J]
    rep = TransferMatrixRep(J, d, np.zeros((len(J) * d * d,) * 2, dtype=complex), A)
    col = 0
    for k in J:
        for a in range(d):
            for b in range(d):
                E = np.zeros((d, d), dtype=complex)
                E[a, b] = 1
                img = transfer_apply(m, LaurentPoly(m.n, d, {k: E}), A)
                try:
                    rep.matrix[:, col] = rep.from_poly(img)
                except ValueError as exc:
                    raise ValueError(f"J is not invariant: {exc}") from None
                col += 1
    return rep


# ---------------------------------------------------------------- spectra

@dataclass
class SpectralReport:
    eigenvalues: np.ndarray
    peripheral: np.ndarray
    geometric_multiplicity_one: int
    m0_spectrum: np.ndarray  # spectrum of q^{-1/2} m(0)
    algebraic_multiplicity_sqrt_q: int
    r1_residual: float
    w_residual: float
    m0: np.ndarray
    q: int
    verdicts: dict
    spectral_gap: float
    source: str  # how conditions (2), (3) were obtained

    @property
    def all_pass(self) -> bool:
        return all(self.verdicts.values())

    def failing(self) -> list:
        return [k for k, v in self.verdicts.items() if not v]

    def as_dict(self) -> dict:
        def cl(z):
            return [[float(np.real(v)), float(np.imag(v))] for v in z]
        return {
            "eigenvalues_top": cl(self.eigenvalues[:12]),
            "matrix_size": int(len(self.eigenvalues)),
            "peripheral": cl(self.peripheral),
            "geometric_multiplicity_of_1": self.geometric_multiplicity_one,
            "m0": cl(np.ravel(self.m0)),
            "sqrt_q": float(np.sqrt(self.q)),
            "spectrum_q^-1/2_m0": cl(self.m0_spectrum),
            "algebraic_multiplicity_sqrt_q": self.algebraic_multiplicity_sqrt_q,
            "R1_residual": self.r1_residual,
            "w_residual": self.w_residual,
            "spectral_gap": self.spectral_gap,
            "conditions_source": self.source,
            "verdicts": {k: bool(v) for k, v in self.verdicts.items()},
            "all_pass": self.all_pass,
        }


def _sorted_eigs(M: np.ndarray) -> np.ndarray:
    ev = np.linalg.eigvals(M)
    order = np.lexsort((np.round(np.angle(ev), 12), -np.round(np.abs(ev), 12)))
    return ev[order]


def _geometric_multiplicity(M: np.ndarray, lam: complex, tol: float = 1e-8) -> int:
    s = np.linalg.svd(M - lam * np.eye(len(M)), compute_uv=False)
    return int(np.sum(s < tol * max(1.0, s[0])))


def spectral_check(spec: FilterSpec, m_used=None, rep: Optional[TransferMatrixRep] = None,
                   grid_N: Optional[int] = None, eps_per: float = EPS_PER,
                   eps_eig: float = EPS_EIG) -> SpectralReport:
    """Evaluate conditions (1)-(5) for the filter m_used.

    If m_used is a normalization of spec.m_prime, conditions (2) and (3) are
    read off the matrix of R' (the two operators are conjugate). If m_used is
    a LaurentPoly, its own matrix is used. Condition (1) is always measured
    directly from the preimage sum on a grid.
    """
    A = spec.A
    q = A.q
    d = spec.d
    if m_used is None:
        m_used = spec.m_prime
    if isinstance(m_used, LaurentPoly):
        if rep is None or m_used is not spec.m_prime:
            rep = transfer_matrix(m_used, invariant_box(m_used, A).J, A)
        source = "own matrix"
        m_eval = m_used
    else:
        if rep is None:
            rep = transfer_matrix(spec.m_prime, invariant_box(spec.m_prime, A).J, A)
        source = "matrix of R' (conjugate to R)"
        m_eval = m_used
    ev = _sorted_eigs(rep.matrix)
    peripheral = ev[np.abs(ev) > 1 - eps_per]
    gm = _geometric_multiplicity(rep.matrix, 1.0)
    others = ev[np.abs(ev - 1) > eps_eig]
    gap = float(1 - np.max(np.abs(others))) if len(others) else 1.0

    N = grid_N or (64 if A.n == 1 else 32)
    x = grid_points(N, A.n)
    ident = lambda y: np.broadcast_to(np.eye(d, dtype=complex), (len(y), d, d))
    r1 = transfer_pointwise(m_eval, ident, A, x)
    r1_res = float(np.max(np.abs(r1 - np.eye(d))))

    m0 = m_eval(np.zeros((1, A.n)))[0]
    sq = np.sqrt(q)
    m0_spec = np.linalg.eigvals(m0 / sq)
    alg = int(np.sum(np.abs(np.linalg.eigvals(m0) - sq) < 1e-7 * sq))
    w_res = float(np.linalg.norm(m0 @ spec.w - sq * spec.w))
    on_circle = m0_spec[np.abs(np.abs(m0_spec) - 1) < eps_per]

    verdicts = {
        "1_R1_eq_1": r1_res < R1_TOL,
        "2_peripheral_is_1": bool(len(peripheral) > 0 and np.all(np.abs(peripheral - 1) < eps_eig)),
        "3_geom_mult_1": gm == 1,
        "4_m0_peripheral_is_1": bool(len(on_circle) > 0 and np.all(np.abs(on_circle - 1) < eps_per)),
        "5_alg_mult_sqrt_q": alg == 1,
    }
    return SpectralReport(ev, peripheral, gm, m0_spec, alg, r1_res, w_res, m0, q,
                          verdicts, gap, source)


# ---------------------------------------------------------------- fixed point

@dataclass
class FixedPoint:
    u: LaurentPoly
    eigenvalue: complex
    min_value: float
    min_location: tuple
    max_value: float
    grid_N: int
    cesaro_residual: float
    cesaro_K: int
    u_at_0: float
    imag_defect: float  # departure from a real (Hermitian) u before projection

    def as_dict(self) -> dict:
        return {
            "eigenvalue": [float(self.eigenvalue.real), float(self.eigenvalue.imag)],
            "min_over_grid": self.min_value,
            "min_location": [float(v) for v in self.min_location],
            "max_over_grid": self.max_value,
            "grid_N": self.grid_N,
            "cesaro_residual": self.cesaro_residual,
            "cesaro_K": self.cesaro_K,
            "u_at_0": self.u_at_0,
            "imag_defect": self.imag_defect,
            "terms": len(self.u.coeffs),
        }


def _field_values(u: LaurentPoly, x: np.ndarray) -> np.ndarray:
    """Smallest and largest eigenvalue of the Hermitian part of u at x."""
    U = u(x)
    H = 0.5 * (U + np.conj(np.swapaxes(U, 1, 2)))
    return np.linalg.eigvalsh(H)


def _hermitian_project(u: LaurentPoly) -> tuple:
    """Coefficientwise (c_k + c_{-k}^*)/2, i.e. the Hermitian part of u."""
    adj = u.adjoint()
    h = (u + adj) * 0.5
    return h, u.max_abs_diff(h)


def fixed_point(rep: TransferMatrixRep, grid_N: int = 128, pos_tol: float = POS_TOL,
                eps_eig: float = EPS_EIG, cesaro_K: int = CESARO_K) -> FixedPoint:
    """Eigenvector of eigenvalue 1 as a Laurent polynomial u.

    The phase makes the mean (k = 0 coefficient, trace for d > 1) real
    positive and the scale makes the grid maximum equal to 1.
    """
    ev, V = np.linalg.eig(rep.matrix)
    i = int(np.argmin(np.abs(ev - 1)))
    if abs(ev[i] - 1) > eps_eig:
        raise NoUnitEigenvalue(f"closest eigenvalue to 1 is {ev[i]:.6g}")
    u = rep.to_poly(V[:, i])
    n = len(rep.J[0])
    c0 = np.trace(u.coefficient((0,) * n))
    if abs(c0) < 1e-14:
        raise NotPositive(0.0, "mean of the fixed vector vanishes")
    u = u * (abs(c0) / c0)
    u, defect = _hermitian_project(u)
    x = grid_points(grid_N, n)
    vals = _field_values(u, x)
    top = float(np.max(vals[:, -1]))
    if top <= 0:
        u = u * -1.0
        vals = -vals[:, ::-1]
        top = float(np.max(vals[:, -1]))
    u = u * (1.0 / top)
    vals = vals / top
    lo = vals[:, 0]
    j = int(np.argmin(lo))
    min_val, min_loc = float(lo[j]), tuple(float(t) for t in x[j])

    # Cesaro average of R^k(1), compared after matching the k = 0 coefficient
    one = np.zeros(len(rep.matrix), dtype=complex)
    ones = LaurentPoly.constant(1.0, n, rep.d)
    one[:] = rep.from_poly(ones)
    acc = np.zeros_like(one)
    v = one.copy()
    for _ in range(cesaro_K):
        v = rep.matrix @ v
        acc += v
    acc /= cesaro_K
    C = rep.to_poly(acc)
    cu = np.trace(u.coefficient((0,) * n))
    cc = np.trace(C.coefficient((0,) * n))
    gx = grid_points(min(grid_N, 32), n)
    if abs(cc) > 1e-14:
        diff = C(gx) * (cu / cc) - u(gx)
        ces = float(np.max(np.abs(diff)))
    else:
        ces = float("inf")
    u0 = float(np.real(np.trace(u(np.zeros((1, n)))[0])))
    if min_val <= pos_tol:
        raise NotPositive(min_val, min_loc)
    return FixedPoint(u, complex(ev[i]), min_val, min_loc, float(np.max(vals[:, -1])), grid_N,
                      ces, cesaro_K, u0, defect)


# ---------------------------------------------------------------- normalization

def _hermitian_power(U: np.ndarray, p: float) -> np.ndarray:
    H = 0.5 * (U + np.conj(np.swapaxes(U, 1, 2)))
    ev, V = np.linalg.eigh(H)
    if np.min(ev) <= 0:
        raise NotPositive(float(np.min(ev)))
    return np.einsum("pij,pj,pkj->pik", V, ev ** p, np.conj(V))


class NormalizedFilter:
    """m(x) = u^{-1/2}(A x) m'(x) u^{1/2}(x), evaluable at any point.

    convention="paper" uses that order. convention="conjugate" uses
    u^{1/2}(x) m'(x) u^{-1/2}(A x), which is the order under which R1 = 1
    follows from R'u = u when d > 1. Both agree for d = 1.
    """

    def __init__(self, m_prime: LaurentPoly, u: LaurentPoly, A, convention: str = "paper"):
        if convention not in ("paper", "conjugate"):
            raise ValueError("convention must be 'paper' or 'conjugate'")
        self.m_prime = m_prime
        self.u = u
        self.A = DilationMatrix.of(A)
        self.n = m_prime.n
        self.d = m_prime.d
        self.convention = convention
        self._At = self.A.to_numpy().T

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, self.n)
        Ax = x @ self._At
        mp = self.m_prime(x)
        if self.d == 1:
            ux = np.real(self.u(x)[:, 0, 0])
            uAx = np.real(self.u(Ax)[:, 0, 0])
            if np.min(ux) <= 0 or np.min(uAx) <= 0:
                raise NotPositive(float(min(np.min(ux), np.min(uAx))))
            return mp * np.sqrt(ux / uAx)[:, None, None]
        if self.convention == "paper":
            return _hermitian_power(self.u(Ax), -0.5) @ mp @ _hermitian_power(self.u(x), 0.5)
        return _hermitian_power(self.u(x), 0.5) @ mp @ _hermitian_power(self.u(Ax), -0.5)

    def cascade_product(self, x, K: int) -> Optional[np.ndarray]:
        """Telescoped depth-K product for d = 1 (None otherwise).

        prod_j q^{-1/2} m(A^{-j} x) = [prod_j q^{-1/2} m'(A^{-j} x)] sqrt(u(A^{-K} x)/u(x)).
        """
        if self.d != 1:
            return None
        x = np.asarray(x, dtype=float).reshape(-1, self.n)
        Ainv_T = self.A.inv().T
        s = 1.0 / np.sqrt(self.A.q)
        y = x
        prod = np.ones(len(x), dtype=complex)
        for _ in range(K):
            y = y @ Ainv_T
            prod = prod * (s * self.m_prime(y)[:, 0, 0])
        ux = np.real(self.u(x)[:, 0, 0])
        uy = np.real(self.u(y)[:, 0, 0])
        return (prod * np.sqrt(uy / ux))[:, None, None]


def normalize_filter(m_prime: LaurentPoly, u: LaurentPoly, A, convention: str = "paper"):
    """Normalized filter; u = 1 returns m' itself."""
    one = LaurentPoly.constant(1.0, m_prime.n, m_prime.d)
    if u.max_abs_diff(one) == 0:
        return m_prime
    return NormalizedFilter(m_prime, u, A, convention)


def theta_residual(nf: NormalizedFilter, v: LaurentPoly, x) -> float:
    """max |R'(Theta v) - Theta(R v)| at x, with Theta v = u^{1/2} v u^{1/2}."""
    A = nf.A
    d = nf.d

    def half(y):
        return _hermitian_power(nf.u(y), 0.5)

    def theta_v(y):
        h = half(y)
        return h @ v(y) @ h

    lhs = transfer_pointwise(nf.m_prime, theta_v, A, x)
    Rv = transfer_pointwise(nf, v, A, x)
    h = half(x)
    rhs = h @ Rv @ h
    return float(np.max(np.abs(lhs - rhs)))


def is_invariant(m: LaurentPoly, H: SymmetryGroup) -> float:
    """max over h of the coefficient distance between m o h and m."""
    return max(m.compose_int(h).max_abs_diff(m) for h in H.elements)


# ---------------------------------------------------------------- pipeline

@dataclass
class TransferAnalysis:
    spec: FilterSpec
    box: InvariantBox
    rep: TransferMatrixRep
    prime_report: SpectralReport
    fixed: Optional[FixedPoint]
    fixed_error: Optional[str]
    m_used: object
    report: SpectralReport
    theta: Optional[float]
    invariance: dict = field(default_factory=dict)

    @property
    def passes(self) -> bool:
        return self.fixed is not None and self.report.all_pass

    def as_dict(self) -> dict:
        out = {
            "filter": self.spec.name,
            "A": [list(r) for r in self.spec.A.matrix.entries],
            "q": self.spec.q,
            "invariant_box": {
                "size": self.box.size,
                "max_norm": self.box.max_norm(),
                "steps": self.box.steps,
                "radius_bound": self.box.radius_bound,
                "within_radius": self.box.within_radius,
            },
            "raw_filter_spectrum": self.prime_report.as_dict(),
            "fixed_point": self.fixed.as_dict() if self.fixed else None,
            "fixed_point_error": self.fixed_error,
            "normalized_filter_spectrum": self.report.as_dict(),
            "theta_residual": self.theta,
            "invariance": self.invariance,
            "passes_conditions_1_to_5": self.passes,
        }
        return out


def analyze(spec: FilterSpec, grid_N: Optional[int] = None, pos_tol: float = POS_TOL,
            convention: str = "paper") -> TransferAnalysis:
    """Box, matrix, raw spectrum, fixed point, normalization, final verdicts."""
    box = invariant_box(spec.m_prime, spec.A)
    rep = transfer_matrix(spec.m_prime, box.J, spec.A)
    prime = spectral_check(spec, spec.m_prime, rep)
    N = grid_N or (256 if spec.n == 1 else 128)
    fixed = None
    err = None
    try:
        fixed = fixed_point(rep, N, pos_tol)
    except (NoUnitEigenvalue, NotPositive) as exc:
        err = f"{type(exc).__name__}: {exc}"
    theta = None
    inv = {"m_prime_coeff": float(is_invariant(spec.m_prime, spec.H))}
    if fixed is not None:
        m_used = normalize_filter(spec.m_prime, fixed.u, spec.A, convention)
        report = spectral_check(spec, m_used, rep)
        inv["u_coeff"] = float(is_invariant(fixed.u, spec.H))
        if isinstance(m_used, NormalizedFilter):
            rng = np.random.default_rng(0)
            x = rng.random((64, spec.n))
            v = LaurentPoly(spec.n, spec.d, {k: np.eye(spec.d) * (1.0 / (1 + sum(map(abs, k))))
                                             for k in box.J[:5]})
            theta = theta_residual(m_used, v, x)
            inv["m_pointwise"] = float(max(
                np.max(np.abs(m_used(x @ h.to_numpy(float).T) - m_used(x)))
                for h in spec.H.elements))
    else:
        m_used = spec.m_prime
        report = prime
    return TransferAnalysis(spec, box, rep, prime, fixed, err, m_used, report, theta, inv)
