"""Exact integer lattice algebra on G = Z^n.

Coset systems for G/AG and for the dual quotient Z^n / A^T Z^n, the duality
pairing between them, and the resulting character table.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
import sympy
from sympy.matrices.normalforms import hermite_normal_form

EPS_EIG = 1e-9
_INT_LIMIT = 2**62


def _check_overflow(x: int) -> int:
    if abs(x) >= _INT_LIMIT:
        raise OverflowError(f"integer entry {x} exceeds the supported range")
    return x


@dataclass(frozen=True)
class IntMatrix:
    """Exact square integer matrix, stored as nested tuples of Python ints."""

    entries: tuple

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in row) for row in self.entries)
        n = len(rows)
        if n < 1 or any(len(r) != n for r in rows):
            raise ValueError("IntMatrix must be square with n >= 1")
        for r in rows:
            for v in r:
                _check_overflow(v)
        object.__setattr__(self, "entries", rows)

    @classmethod
    def of(cls, M) -> "IntMatrix":
        if isinstance(M, IntMatrix):
            return M
        if isinstance(M, DilationMatrix):
            return M.matrix
        arr = np.asarray(M)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        if arr.dtype.kind == "f":
            if not np.all(arr == np.round(arr)):
                raise ValueError("IntMatrix entries must be integers")
        return cls(tuple(tuple(int(v) for v in row) for row in arr.tolist()))

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.entries)

    def to_numpy(self, dtype=np.int64) -> np.ndarray:
        return np.array(self.entries, dtype=dtype)

    def T(self) -> "IntMatrix":
        return IntMatrix(tuple(zip(*self.entries)))

    def __matmul__(self, other):
        if isinstance(other, IntMatrix):
            b = other.entries
            n = self.n
            return IntMatrix(tuple(
                tuple(_check_overflow(sum(self.entries[i][k] * b[k][j] for k in range(n)))
                      for j in range(n)) for i in range(n)))
        v = tuple(int(x) for x in other)
        return tuple(sum(self.entries[i][k] * v[k] for k in range(self.n)) for i in range(self.n))

    def __neg__(self):
        return IntMatrix(tuple(tuple(-v for v in r) for r in self.entries))

    def __sub__(self, other: "IntMatrix") -> "IntMatrix":
        return IntMatrix(tuple(tuple(a - b for a, b in zip(r, s))
                               for r, s in zip(self.entries, other.entries)))

    def det(self) -> int:
        e = self.entries
        if self.n == 1:
            return e[0][0]
        if self.n == 2:
            return e[0][0] * e[1][1] - e[0][1] * e[1][0]
        return int(sympy.Matrix(e).det())

    def adjugate(self) -> "IntMatrix":
        """Integer matrix adj(M) with M adj(M) = det(M) I."""
        e = self.entries
        if self.n == 1:
            return IntMatrix(((1,),))
        if self.n == 2:
            return IntMatrix(((e[1][1], -e[0][1]), (-e[1][0], e[0][0])))
        return IntMatrix(tuple(tuple(int(v) for v in row)
                               for row in sympy.Matrix(e).adjugate().tolist()))

    def inverse_rational(self) -> tuple:
        d = self.det()
        if d == 0:
            raise ZeroDivisionError("singular matrix")
        adj = self.adjugate().entries
        return tuple(tuple(Fraction(v, d) for v in row) for row in adj)

    def is_unimodular(self) -> bool:
        return abs(self.det()) == 1

    def __repr__(self):
        return f"IntMatrix({[list(r) for r in self.entries]})"


@dataclass(frozen=True)
class DilationMatrix:
    """Integer matrix whose eigenvalues all lie outside the closed unit disk."""

    matrix: IntMatrix

    def __post_init__(self):
        if not is_dilation(self.matrix):
            raise ValueError(f"{self.matrix} is not a dilation matrix")

    @classmethod
    def of(cls, M) -> "DilationMatrix":
        if isinstance(M, DilationMatrix):
            return M
        return cls(IntMatrix.of(M))

    @property
    def n(self) -> int:
        return self.matrix.n

    @property
    def q(self) -> int:
        return abs(self.matrix.det())

    def to_numpy(self, dtype=float) -> np.ndarray:
        return self.matrix.to_numpy(dtype)

    def inv(self) -> np.ndarray:
        """Floating A^{-1}."""
        return np.linalg.inv(self.to_numpy())

    def inv_T(self) -> np.ndarray:
        """Floating (A^T)^{-1}."""
        return np.linalg.inv(self.to_numpy().T)


@dataclass(frozen=True)
class CosetSystem:
    kind: str  # "primal" (G/AG) or "dual" (Z^n / A^T Z^n)
    reps: tuple
    matrix: IntMatrix  # A for primal, A^T for dual

    @property
    def q(self) -> int:
        return len(self.reps)

    def as_array(self) -> np.ndarray:
        return np.array(self.reps, dtype=float).reshape(len(self.reps), -1)


def _exact_dilation_n2(M: IntMatrix) -> bool:
    """Schur-Cohn test on x^2 - t x + d: both roots strictly outside the unit circle."""
    (a, b), (c, e) = M.entries
    t = a + e
    d = a * e - b * c
    if d > 1:
        return abs(t) < d + 1
    if d < -1:
        return abs(t) < -d - 1
    return False


def is_dilation(M) -> bool:
    """True iff every eigenvalue of M has modulus greater than 1 + EPS_EIG.

    For n <= 2 the floating answer is cross-checked against an exact
    trace/determinant criterion; a disagreement raises.
    """
    M = IntMatrix.of(M)
    ev = np.linalg.eigvals(M.to_numpy(float))
    numeric = bool(np.all(np.abs(ev) > 1.0 + EPS_EIG))
    if M.n == 1:
        exact = abs(M.entries[0][0]) > 1
    elif M.n == 2:
        exact = _exact_dilation_n2(M)
    else:
        return numeric
    if exact != numeric:
        # only possible for eigenvalues within EPS_EIG of the unit circle
        if exact and np.min(np.abs(ev)) > 1.0:
            return False
        raise ArithmeticError(f"eigenvalue test disagreement for {M}")
    return exact


def in_lattice(M: IntMatrix, v: Sequence[int]) -> bool:
    """Exact test v in M Z^n, via adj(M) v = 0 mod det M."""
    d = M.det()
    w = M.adjugate() @ v
    return all(x % d == 0 for x in w)


def _hnf_box(M: IntMatrix) -> tuple:
    """Diagonal of the upper-triangular Hermite form of the column lattice M Z^n."""
    H = hermite_normal_form(sympy.Matrix(M.entries))
    if H.shape != (M.n, M.n):
        raise ValueError("matrix is singular")
    return tuple(abs(int(H[i, i])) for i in range(M.n))


def _reps_for(M: IntMatrix) -> tuple:
    # Upper-triangular Hermite basis: reduce coordinates from the last one up,
    # so {0 <= r_i < H_ii} is a complete residue system.
    diag = _hnf_box(M)
    reps = sorted(itertools.product(*(range(d) for d in diag)))
    return tuple(tuple(int(x) for x in r) for r in reps)


def coset_reps(A, kind: str = "primal") -> CosetSystem:
    """Representatives of G/AG ("primal") or Z^n/A^T Z^n ("dual").

    Reps are the lexicographically sorted box from the Hermite normal form;
    the first one is the zero vector.
    """
    A = DilationMatrix.of(A).matrix if not isinstance(A, IntMatrix) else A
    if kind == "primal":
        M = A
    elif kind == "dual":
        M = A.T()
    else:
        raise ValueError(f"unknown coset kind {kind!r}")
    return CosetSystem(kind, _reps_for(M), M)


def pairing_phase(x: Sequence[int], y: Sequence[int], A) -> Fraction:
    """Exact <A^{-1} x, y> mod 1 as a fraction in [0, 1)."""
    A = IntMatrix.of(A)
    d = A.det()
    ax = A.adjugate() @ x
    num = sum(int(a) * int(b) for a, b in zip(ax, y))
    return Fraction(num % abs(d), abs(d)) if d > 0 else Fraction((-num) % abs(d), abs(d))


def pairing(x: Sequence[int], y: Sequence[int], A) -> complex:
    """exp(2 pi i <A^{-1} x, y>), depending only on the cosets of x and y."""
    f = pairing_phase(x, y, A)
    if f == 0:
        return 1.0 + 0.0j
    return complex(np.exp(2j * np.pi * float(f)))


def character_table(A) -> np.ndarray:
    """T[j, k] = pairing(x_j, y_k) for the canonical coset systems of A."""
    A = IntMatrix.of(A)
    xs = coset_reps(A, "primal").reps
    ys = coset_reps(A, "dual").reps
    return np.array([[pairing(x, y, A) for y in ys] for x in xs], dtype=complex)


def lattice_points_box(n: int, radius: int) -> np.ndarray:
    """All integer vectors with sup-norm <= radius, in lexicographic order."""
    rng = range(-radius, radius + 1)
    return np.array(list(itertools.product(rng, repeat=n)), dtype=np.int64).reshape(-1, n)


def lattice_shell(n: int, r: int) -> np.ndarray:
    """Integer vectors with sup-norm exactly r, in lexicographic order."""
    if r == 0:
        return np.zeros((1, n), dtype=np.int64)
    pts = lattice_points_box(n, r)
    return pts[np.max(np.abs(pts), axis=1) == r]


def as_int_vectors(vs: Iterable) -> list:
    return [tuple(int(a) for a in v) for v in vs]
