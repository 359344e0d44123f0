"""Functions on the torus X = R^n / Z^n.

LaurentPoly holds exact trigonometric polynomials (scalar or d x d matrix
valued). ScaledLaurentPoly holds AG-periodic ones, whose frequencies live in
(A^T)^{-1} Z^n. GridFunction carries sampled fields such as square roots and
Gram matrices. The bracket product is a truncated lattice sum with a
Richardson tail correction.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Mapping, Optional

import numpy as np

from .errors import NonConvergent, NotUniformlyPositive
from .lattice import IntMatrix, in_lattice, lattice_shell

TWO_PI_I = 2j * np.pi


def _as_points(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or (x.ndim == 1 and n > 1):
        x = x.reshape(1, n) if x.size == n else x.reshape(-1, n)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.shape[-1] != n:
        raise ValueError(f"points must have trailing dimension {n}")
    return x.reshape(-1, n)


def _coef(c, d: int) -> np.ndarray:
    c = np.asarray(c, dtype=complex)
    if c.ndim == 0:
        c = c.reshape(1, 1)
    if c.shape != (d, d):
        raise ValueError(f"coefficient shape {c.shape} != {(d, d)}")
    return c


_POWER_TABLE_MAX = 32


def _monomials(x: np.ndarray, F: np.ndarray) -> np.ndarray:
    """e^{2 pi i <k, x>} for integer rows k of F, shape (P, K).

    Small degrees use per-axis power tables: one exponential per axis and
    products afterwards.
    """
    Fi = np.rint(F).astype(int)
    if Fi.size == 0 or np.abs(Fi).max() > _POWER_TABLE_MAX:
        return np.exp(TWO_PI_I * (x @ F.T))
    out = None
    for a in range(x.shape[1]):
        col = Fi[:, a]
        top = int(np.abs(col).max())
        base = np.exp(TWO_PI_I * x[:, a])
        pw = np.empty((len(x), top + 1), dtype=complex)
        pw[:, 0] = 1.0
        for j in range(1, top + 1):
            pw[:, j] = pw[:, j - 1] * base
        fac = pw[:, np.abs(col)]
        neg = col < 0
        fac[:, neg] = np.conj(fac[:, neg])
        out = fac if out is None else out * fac
    return out


class LaurentPoly:
    """Finitely supported map k -> c_k (d x d), read as sum_k c_k e^{2 pi i <k, x>}."""

    __slots__ = ("n", "d", "coeffs")

    def __init__(self, n: int, d: int = 1, coeffs: Optional[Mapping] = None):
        self.n = int(n)
        self.d = int(d)
        out = {}
        for k, c in (coeffs or {}).items():
            k = tuple(int(v) for v in np.atleast_1d(k))
            if len(k) != self.n:
                raise ValueError(f"frequency {k} has wrong dimension")
            c = _coef(c, self.d)
            if k in out:
                c = out[k] + c
            out[k] = c
        self.coeffs = {k: c for k, c in sorted(out.items()) if np.any(c != 0)}

    # construction
    @classmethod
    def zero(cls, n: int, d: int = 1) -> "LaurentPoly":
        return cls(n, d)

    @classmethod
    def constant(cls, value, n: int, d: int = 1) -> "LaurentPoly":
        v = np.asarray(value, dtype=complex)
        c = v * np.eye(d) if v.ndim == 0 else v
        return cls(n, d, {(0,) * n: c})

    @classmethod
    def monomial(cls, k, d: int = 1, coef=1.0) -> "LaurentPoly":
        k = tuple(int(v) for v in np.atleast_1d(k))
        c = np.asarray(coef, dtype=complex)
        c = c * np.eye(d) if c.ndim == 0 else c
        return cls(len(k), d, {k: c})

    # algebra
    def _check(self, other: "LaurentPoly"):
        if self.n != other.n or self.d != other.d:
            raise ValueError("dimension mismatch")

    def __add__(self, other):
        if not isinstance(other, LaurentPoly):
            other = LaurentPoly.constant(other, self.n, self.d)
        self._check(other)
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out[k] + c if k in out else c
        return LaurentPoly(self.n, self.d, out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly(self.n, self.d, {k: -c for k, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, LaurentPoly):
            s = complex(other)
            return LaurentPoly(self.n, self.d, {k: s * c for k, c in self.coeffs.items()})
        self._check(other)
        out: dict = {}
        for k1, c1 in self.coeffs.items():
            for k2, c2 in other.coeffs.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                p = c1 @ c2
                out[k] = out[k] + p if k in out else p
        return LaurentPoly(self.n, self.d, out)

    def __rmul__(self, other):
        return self * other

    def adjoint(self) -> "LaurentPoly":
        return LaurentPoly(self.n, self.d,
                           {tuple(-v for v in k): c.conj().T for k, c in self.coeffs.items()})

    def compose_int(self, h) -> "LaurentPoly":
        """(P o h)(x) = P(h x): frequency k becomes h^T k."""
        h = IntMatrix.of(h)
        if not h.is_unimodular():
            raise ValueError("compose_int needs |det h| = 1")
        hT = h.T()
        return LaurentPoly(self.n, self.d, {hT @ k: c for k, c in self.coeffs.items()})

    # queries
    def support(self) -> list:
        return list(self.coeffs)

    def coefficient(self, k) -> np.ndarray:
        k = tuple(int(v) for v in np.atleast_1d(k))
        return self.coeffs.get(k, np.zeros((self.d, self.d), dtype=complex))

    def freq_array(self) -> np.ndarray:
        if not self.coeffs:
            return np.zeros((0, self.n))
        return np.array(list(self.coeffs), dtype=float).reshape(-1, self.n)

    def coef_array(self) -> np.ndarray:
        if not self.coeffs:
            return np.zeros((0, self.d, self.d), dtype=complex)
        return np.array(list(self.coeffs.values()))

    def __call__(self, x) -> np.ndarray:
        """Values at points x of shape (P, n); returns (P, d, d)."""
        x = _as_points(x, self.n)
        if not self.coeffs:
            return np.zeros((len(x), self.d, self.d), dtype=complex)
        E = _monomials(x, self.freq_array())
        if self.d == 1:
            return (E @ self.coef_array()[:, 0, 0])[:, None, None]
        return np.einsum("pk,kab->pab", E, self.coef_array())

    def scalar(self, x) -> np.ndarray:
        """Values for d = 1 as a flat (P,) array."""
        if self.d != 1:
            raise ValueError("scalar() needs d = 1")
        return self(x)[:, 0, 0]

    def max_abs_diff(self, other: "LaurentPoly") -> float:
        self._check(other)
        keys = set(self.coeffs) | set(other.coeffs)
        if not keys:
            return 0.0
        return float(max(np.max(np.abs(self.coefficient(k) - other.coefficient(k))) for k in keys))

    def is_zero(self) -> bool:
        return not self.coeffs

    def to_records(self) -> list:
        recs = []
        for k, c in self.coeffs.items():
            if self.d == 1:
                recs.append({"freq": list(k), "re": float(c[0, 0].real), "im": float(c[0, 0].imag)})
            else:
                recs.append({"freq": list(k), "re": c.real.tolist(), "im": c.imag.tolist()})
        return recs

    @classmethod
    def from_records(cls, records, n: int, d: int = 1) -> "LaurentPoly":
        coeffs: dict = {}
        for r in records:
            if set(r) - {"freq", "re", "im"}:
                raise ValueError(f"unknown keys in coefficient record: {sorted(set(r) - {'freq', 're', 'im'})}")
            k = tuple(int(v) for v in r["freq"])
            c = np.asarray(r.get("re", 0.0), dtype=float) + 1j * np.asarray(r.get("im", 0.0), dtype=float)
            c = _coef(c, d)
            coeffs[k] = coeffs[k] + c if k in coeffs else c
        return cls(n, d, coeffs)

    def __repr__(self):
        return f"LaurentPoly(n={self.n}, d={self.d}, terms={len(self.coeffs)})"


def lp_add(P: LaurentPoly, Q: LaurentPoly) -> LaurentPoly:
    return P + Q


def lp_mul(P: LaurentPoly, Q: LaurentPoly) -> LaurentPoly:
    return P * Q


def lp_adjoint(P: LaurentPoly) -> LaurentPoly:
    return P.adjoint()


def lp_compose_int(P: LaurentPoly, h) -> LaurentPoly:
    return P.compose_int(h)


class ScaledLaurentPoly:
    """AG-periodic trigonometric polynomial.

    Key l stands for frequency (A^T)^{-1} l, so the value at x is
    sum_l c_l e^{2 pi i <l, A^{-1} x>}.
    """

    __slots__ = ("A", "n", "d", "coeffs")

    def __init__(self, A, d: int = 1, coeffs: Optional[Mapping] = None):
        self.A = IntMatrix.of(A)
        self.n = self.A.n
        self.d = int(d)
        out = {}
        for k, c in (coeffs or {}).items():
            k = tuple(int(v) for v in np.atleast_1d(k))
            c = _coef(c, self.d)
            out[k] = out[k] + c if k in out else c
        self.coeffs = {k: c for k, c in sorted(out.items()) if np.any(c != 0)}

    @classmethod
    def from_laurent(cls, P: LaurentPoly, A) -> "ScaledLaurentPoly":
        """Inclusion C(X) -> B: frequency k becomes l = A^T k."""
        A = IntMatrix.of(A)
        AT = A.T()
        return cls(A, P.d, {AT @ k: c for k, c in P.coeffs.items()})

    @classmethod
    def dilated(cls, P: LaurentPoly, A) -> "ScaledLaurentPoly":
        """P o A^{-1}: frequency k of P becomes key l = k."""
        return cls(A, P.d, dict(P.coeffs))

    @classmethod
    def character(cls, y, A, d: int = 1) -> "ScaledLaurentPoly":
        """f_y(x) = e^{2 pi i <A^{-1} x, y>}."""
        return cls(A, d, {tuple(int(v) for v in y): np.eye(d)})

    def _check(self, other):
        if self.A != other.A or self.d != other.d:
            raise ValueError("dilation or size mismatch")

    def __mul__(self, other):
        if isinstance(other, LaurentPoly):
            other = ScaledLaurentPoly.from_laurent(other, self.A)
        if not isinstance(other, ScaledLaurentPoly):
            s = complex(other)
            return ScaledLaurentPoly(self.A, self.d, {k: s * c for k, c in self.coeffs.items()})
        self._check(other)
        out: dict = {}
        for k1, c1 in self.coeffs.items():
            for k2, c2 in other.coeffs.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                p = c1 @ c2
                out[k] = out[k] + p if k in out else p
        return ScaledLaurentPoly(self.A, self.d, out)

    def __add__(self, other):
        if isinstance(other, LaurentPoly):
            other = ScaledLaurentPoly.from_laurent(other, self.A)
        self._check(other)
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out[k] + c if k in out else c
        return ScaledLaurentPoly(self.A, self.d, out)

    def adjoint(self) -> "ScaledLaurentPoly":
        return ScaledLaurentPoly(self.A, self.d,
                                 {tuple(-v for v in k): c.conj().T for k, c in self.coeffs.items()})

    def __call__(self, x) -> np.ndarray:
        x = _as_points(x, self.n)
        if not self.coeffs:
            return np.zeros((len(x), self.d, self.d), dtype=complex)
        Ainv = np.linalg.inv(self.A.to_numpy(float))
        L = np.array(list(self.coeffs), dtype=float).reshape(-1, self.n)
        E = np.exp(TWO_PI_I * ((x @ Ainv.T) @ L.T))
        return np.einsum("pk,kab->pab", E, np.array(list(self.coeffs.values())))


def cond_expect(f: ScaledLaurentPoly, A=None, primal_reps=None) -> LaurentPoly:
    """Conditional expectation B -> C(X): keep the keys l in A^T Z^n.

    Averaging over primal coset translates annihilates every other
    character; primal_reps is accepted for interface symmetry with
    cond_expect_pointwise.
    """
    A = f.A if A is None else IntMatrix.of(A)
    if A != f.A:
        raise ValueError("dilation mismatch")
    AT = A.T()
    D = AT.det()
    adj = AT.adjugate()
    out = {}
    for l, c in f.coeffs.items():
        if in_lattice(AT, l):
            out[tuple(v // D for v in (adj @ l))] = c
    return LaurentPoly(A.n, f.d, out)


def cond_expect_pointwise(f_eval: Callable, A, primal_reps, x) -> np.ndarray:
    """q^{-1} sum_j f(x - x_j), the averaging definition (test oracle)."""
    x = np.asarray(x, dtype=float)
    reps = np.array(primal_reps, dtype=float).reshape(len(primal_reps), -1)
    return sum(f_eval(x - r) for r in reps) / len(reps)


# ---------------------------------------------------------------- grids

def grid_points(N: int, n: int) -> np.ndarray:
    """Points j/N, j in {0..N-1}^n, C order (last axis fastest)."""
    ax = np.arange(N) / N
    return np.array(list(itertools.product(ax, repeat=n)), dtype=float).reshape(-1, n)


@dataclass
class GridFunction:
    """d x d samples on the uniform grid j/N of the n-torus."""

    N: int
    n: int
    samples: np.ndarray  # (N**n, d, d)

    def __post_init__(self):
        if self.N < 4:
            raise ValueError("grid resolution must be >= 4")
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim == 1:
            s = s.reshape(-1, 1, 1)
        if s.shape[0] != self.N ** self.n:
            raise ValueError("sample count does not match grid")
        if not np.all(np.isfinite(s)):
            raise ValueError("non-finite samples")
        self.samples = s

    @classmethod
    def from_function(cls, fn: Callable, N: int, n: int) -> "GridFunction":
        return cls(N, n, fn(grid_points(N, n)))

    @property
    def d(self) -> int:
        return self.samples.shape[1]

    def points(self) -> np.ndarray:
        return grid_points(self.N, self.n)

    def min_eig(self) -> tuple:
        H = 0.5 * (self.samples + np.conj(np.swapaxes(self.samples, 1, 2)))
        ev = np.linalg.eigvalsh(H)[:, 0]
        i = int(np.argmin(ev))
        return float(ev[i]), tuple(self.points()[i])

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.samples - np.conj(np.swapaxes(self.samples, 1, 2)))))

    def interpolate(self, x) -> np.ndarray:
        """Trigonometric interpolation of the samples at arbitrary points.

        Meant for smooth fields; the Nyquist mode is taken at -N/2.
        """
        x = _as_points(x, self.n)
        shape = (self.N,) * self.n
        vals = self.samples.reshape(shape + self.samples.shape[1:])
        C = np.fft.fftn(vals, axes=tuple(range(self.n))) / self.N ** self.n
        freqs = np.fft.fftfreq(self.N, 1.0 / self.N)
        K = np.array(list(itertools.product(freqs, repeat=self.n)), dtype=float)
        E = np.exp(TWO_PI_I * (x @ K.T))
        return np.einsum("pk,kab->pab", E, C.reshape((-1,) + self.samples.shape[1:]))


def inv_sqrt_hermitian(samples: np.ndarray, delta: float = 0.0, points=None):
    """Pointwise H^{-1/2} of a stack of Hermitian matrices (P, r, r)."""
    H = 0.5 * (samples + np.conj(np.swapaxes(samples, 1, 2)))
    ev, V = np.linalg.eigh(H)
    i = int(np.argmin(ev[:, 0]))
    if ev[i, 0] < delta:
        loc = tuple(points[i]) if points is not None else i
        raise NotUniformlyPositive(ev[i, 0], loc)
    return np.einsum("pij,pj,pkj->pik", V, ev ** -0.5, np.conj(V))


def grid_inv_sqrt(Gf: GridFunction, delta: float = 1e-6) -> GridFunction:
    """Pointwise inverse square root; NotUniformlyPositive below the floor."""
    return GridFunction(Gf.N, Gf.n, inv_sqrt_hermitian(Gf.samples, delta, Gf.points()))


# ---------------------------------------------------------------- bracket

@dataclass
class BracketValue:
    values: np.ndarray  # (P, r, s) tail-corrected bracket
    raw: np.ndarray  # (P, r, s) plain truncated sum
    points: np.ndarray  # (P, n)
    R: int
    tail: float  # error estimate of `values`
    last_shell: float  # max |contribution of the outermost shell|
    method: str
    N: Optional[int] = None

    def grid(self) -> GridFunction:
        if self.N is None:
            raise ValueError("bracket was not evaluated on a grid")
        n = self.points.shape[1]
        return GridFunction(self.N, n, self.values)

    def scalar(self) -> np.ndarray:
        return self.values[:, 0, 0]


def _vec(vals: np.ndarray, P: int, S: int) -> np.ndarray:
    vals = np.asarray(vals, dtype=complex)
    return vals.reshape(P, S, -1)


def tail_exponent(partial: np.ndarray) -> float:
    """Leading decay exponent p of S(R) - S from partial sums at R/4, R/2, R.

    Uses the median of log2 of successive difference ratios over entries with
    a non-negligible last difference, snapped to the nearest half-integer
    when within 0.15 of it.
    """
    d1 = partial[-2] - partial[-3]
    d2 = partial[-1] - partial[-2]
    mag = np.abs(d2)
    keep = mag > 1e-3 * mag.max() if mag.size and mag.max() > 0 else np.zeros(mag.shape, bool)
    keep &= np.abs(d1) > 0
    if not np.any(keep):
        return 1.0
    p = float(np.median(np.log2(np.abs(d1[keep]) / mag[keep])))
    snap = round(2 * p) / 2
    return snap if abs(p - snap) < 0.15 else p


def _extrapolate(Y: np.ndarray, h: np.ndarray, exps) -> np.ndarray:
    D = np.stack([np.ones_like(h)] + [h ** e for e in exps], axis=1)
    return np.linalg.solve(D, Y)[0] if D.shape[0] == D.shape[1] else np.linalg.lstsq(D, Y, rcond=None)[0][0]


def richardson(partial: np.ndarray, radii: np.ndarray):
    """Extrapolate partial sums S(R_i) at doubling radii to R -> infinity.

    Model S(R) = S + sum_j c_j h^{p + j s}, h = 1/(R + 1/2), with p shared by
    all entries (tail_exponent). For integral p the step is s = 1 and all
    given levels are used; otherwise s = 1/2 and only the largest four,
    since the smaller radii are not yet asymptotic there. The square-shell
    tails of the built-in filters follow these two patterns. The error
    estimate is the change when the smallest radius and the last
    correction are dropped; it is infinite when p <= 0.
    partial has shape (L >= 4, P, C) with real entries; returns
    (extrapolated (P, C), error estimate (P,)).
    """
    L, P, C = partial.shape
    h = 1.0 / (np.asarray(radii, dtype=float) + 0.5)
    p = tail_exponent(partial)
    Y = partial.reshape(L, P * C)
    if not p > 0:
        # partial sums are not settling: no limit to extrapolate to
        return Y[-1].reshape(P, C), np.full(P, np.inf)
    if float(p).is_integer():
        step, use = 1.0, L
    else:
        step, use = 0.5, 4
    ex = [p + j * step for j in range(use - 1)]
    full = _extrapolate(Y[-use:], h[-use:], ex)
    alt = _extrapolate(Y[-use + 1:], h[-use + 1:], ex[:-1])
    err = np.max(np.abs(full - alt).reshape(P, C), axis=1)
    return full.reshape(P, C), err


def bracket(zeta: Callable, eta: Optional[Callable] = None, R: int = 64, N: int = 64,
            n: int = 1, tail_tol: float = 1e-3, method: str = "richardson",
            points=None) -> BracketValue:
    """<zeta, eta>'(x) = sum_g zeta(x - g) conj(eta(x - g)) over ||g||_inf <= R.

    zeta and eta map points (M, n) to values (M,) or (M, r). The sum is
    accumulated shell by shell; with method "richardson" the partial sums at
    R/16, ..., R are extrapolated and the spread between two fits is the
    reported tail. NonConvergent is raised when the tail exceeds tail_tol.
    """
    same = eta is None
    eta = zeta if same else eta
    if points is None:
        X = grid_points(N, n)
    else:
        X = _as_points(points, n)
        N = None
    P = len(X)
    shell_sums = []
    for r in range(R + 1):
        g = lattice_shell(n, r).astype(float)
        S = len(g)
        pts = (X[:, None, :] - g[None, :, :]).reshape(-1, n)
        z = _vec(zeta(pts), P, S)
        e = z if same else _vec(eta(pts), P, S)
        shell_sums.append(np.einsum("psa,psb->pab", z, np.conj(e)))
    shells = np.array(shell_sums)  # (R+1, P, r, s)
    cum = np.cumsum(shells, axis=0)
    raw = cum[-1]
    last = float(np.max(np.abs(shells[-1]))) if R > 0 else 0.0
    shape = raw.shape
    if method == "richardson" and R >= 16:
        radii = np.array([R // 16, R // 8, R // 4, R // 2, R])
        sel = cum[radii]  # (5, P, r, s)
        comp = np.concatenate([sel.real.reshape(5, P, -1), sel.imag.reshape(5, P, -1)], axis=2)
        val, err = richardson(comp, radii)
        k = val.shape[1] // 2
        values = (val[:, :k] + 1j * val[:, k:]).reshape(shape)
        tail = float(np.max(err))
        used = "richardson"
    else:
        values = raw
        tail = last * max(R, 1)
        used = "none"
    if same:
        values = 0.5 * (values + np.conj(np.swapaxes(values, 1, 2)))
    if tail > tail_tol:
        raise NonConvergent(f"bracket tail estimate {tail:.3e} exceeds {tail_tol:.1e}", tail)
    return BracketValue(values, raw, X, R, tail, last, used, N)
