"""Scaling functions from the infinite product of a low-pass filter.

P(x) = lim_K q^{-K/2} m(A^{-1} x) ... m(A^{-K} x) and phi_i(x) = <P(x) e_i, w>.
Checks: bracket orthonormality, H-invariance and the duality between the
integral over R^n and the torus integral of the bracket.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .lattice import DilationMatrix
from .symmetry import SymmetryGroup
from .torusfn import bracket, grid_points

DEFAULT_DEPTH = 30
CHUNK = 1 << 16


def product_eval(m, A, x, K: int = DEFAULT_DEPTH, fast: bool = True) -> np.ndarray:
    """Depth-K partial product, multiplied left to right; returns (P, d, d).

    A filter with a cascade_product method (normalized d = 1 filters) is
    evaluated through its telescoped form when fast is True.
    """
    A = DilationMatrix.of(A)
    x = np.asarray(x, dtype=float).reshape(-1, A.n)
    if fast and hasattr(m, "cascade_product"):
        out = m.cascade_product(x, K)
        if out is not None:
            return out
    d = m(x[:1]).shape[1] if len(x) else 1
    s = 1.0 / np.sqrt(A.q)
    Ainv_T = A.inv().T
    P = np.broadcast_to(np.eye(d, dtype=complex), (len(x), d, d)).copy()
    y = x
    for _ in range(K):
        y = y @ Ainv_T
        P = P @ (s * m(y))
    return P


def _chunked(fn: Callable, x: np.ndarray, chunk: int = CHUNK) -> np.ndarray:
    if len(x) <= chunk:
        return fn(x)
    return np.concatenate([fn(x[i:i + chunk]) for i in range(0, len(x), chunk)])


@dataclass
class CascadeResult:
    K: int
    m: object
    A: DilationMatrix
    w: np.ndarray
    convergence: list
    monotone_tail: bool
    spectral_ok: Optional[bool]
    orthonormality_residual: Optional[float] = None
    orthonormality_tail: Optional[float] = None
    invariance: dict = field(default_factory=dict)
    duality: Optional[dict] = None

    @property
    def n(self) -> int:
        return self.A.n

    @property
    def d(self) -> int:
        return len(self.w)

    def product(self, x) -> np.ndarray:
        return _chunked(lambda y: product_eval(self.m, self.A, y, self.K), np.asarray(x, float).reshape(-1, self.n))

    def phi(self, x) -> np.ndarray:
        """(P, d) values of phi_1..phi_d."""
        Pm = self.product(x)
        return np.einsum("pai,a->pi", Pm, np.conj(self.w))

    def phi_scalar(self, x) -> np.ndarray:
        return self.phi(x)[:, 0]

    def U_phi(self, x) -> np.ndarray:
        """(U phi)(x) = q^{-1/2} phi(A^{-1} x), shape (P, d)."""
        x = np.asarray(x, float).reshape(-1, self.n)
        return self.phi(x @ self.A.inv().T) / np.sqrt(self.A.q)

    def as_dict(self) -> dict:
        return {
            "depth": self.K,
            "convergence_tail": [float(v) for v in self.convergence[-5:]],
            "convergence_first": [float(v) for v in self.convergence[:3]],
            "monotone_tail": self.monotone_tail,
            "spectral_conditions_passed": self.spectral_ok,
            "orthonormality_residual": self.orthonormality_residual,
            "orthonormality_tail_estimate": self.orthonormality_tail,
            "invariance": self.invariance,
            "duality": self.duality,
        }


def probe_points(n: int, count: int = 32, box: float = 1.0) -> np.ndarray:
    ax = np.linspace(-box, box, count)
    grids = np.meshgrid(*([ax] * n), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _is_eventually_decreasing(seq, frac: float = 1 / 3) -> bool:
    tail = np.asarray(seq[int(len(seq) * (1 - frac)):], dtype=float)
    if len(tail) < 2:
        return True
    return bool(np.all(tail[1:] <= tail[:-1] * (1 + 1e-9) + 1e-14))


def scaling_function(spec, m_used=None, K: int = DEFAULT_DEPTH, box: float = 1.0,
                     probes: int = 32, spectral_ok: Optional[bool] = None) -> CascadeResult:
    """Cascade evaluators and the convergence record sup |P_k - P_{k-1}|.

    When the spectral conditions are known to fail the cascade still runs and
    spectral_ok=False is recorded alongside a warning.
    """
    m = spec.m_prime if m_used is None else m_used
    A = spec.A
    if spectral_ok is False:
        warnings.warn("spectral conditions fail; cascade limit is not guaranteed", RuntimeWarning)
    x = probe_points(A.n, probes, box)
    prev = product_eval(m, A, x, 0, fast=False)
    conv = []
    for k in range(1, K + 1):
        cur = product_eval(m, A, x, k)
        conv.append(float(np.max(np.abs(cur - prev))))
        prev = cur
    mono = _is_eventually_decreasing(conv)
    if not mono:
        warnings.warn("cascade convergence record is not monotone in its tail", RuntimeWarning)
    return CascadeResult(K, m, A, np.asarray(spec.w, dtype=complex), conv, mono, spectral_ok)


def orthonormality_check(result: CascadeResult, R: int = 64, N: int = 64,
                         tail_tol: float = 1e-3, points=None) -> tuple:
    """max over the grid and (i, j) of |<phi_i, phi_j>' - delta_ij|."""
    br = bracket(result.phi, R=R, N=N, n=result.n, tail_tol=tail_tol, points=points)
    res = float(np.max(np.abs(br.values - np.eye(result.d))))
    result.orthonormality_residual = res
    result.orthonormality_tail = br.tail
    return res, br


def invariance_check(result: CascadeResult, H: SymmetryGroup, points=None) -> dict:
    """max_x |phi_i(h x) - phi_i(x)| for every element h of H."""
    x = probe_points(result.n) if points is None else np.asarray(points, float).reshape(-1, result.n)
    base = result.phi(x)
    out = {}
    for h in H.elements:
        hx = x @ h.to_numpy(float).T
        out[str([list(r) for r in h.entries])] = float(np.max(np.abs(result.phi(hx) - base)))
    result.invariance = out
    return out


def duality_check(result: CascadeResult, R: int = 64, quadrature_N: int = 1 << 14,
                  grid_N: int = 64, scale: complex = 1.0) -> dict:
    """Integral of |phi|^2 over the box [-R-1/2, R+1/2]^n against the torus
    mean of the bracket truncated to ||g||_inf <= R.

    With the torus taken as [-1/2, 1/2)^n both sides cover the same region,
    so they agree up to quadrature error. scale multiplies phi on both sides.
    """
    n = result.n
    L = R + 0.5
    ax = np.linspace(-L, L, quadrature_N)
    if n == 1:
        vals = np.abs(scale * _chunked(result.phi_scalar, ax.reshape(-1, 1))) ** 2
        lhs = float(np.trapezoid(vals, ax))
    else:
        pts = probe_points(n, quadrature_N, L)
        vals = np.abs(scale * _chunked(result.phi_scalar, pts)) ** 2
        vals = vals.reshape((quadrature_N,) * n)
        for _ in range(n):
            vals = np.trapezoid(vals, ax, axis=0)
        lhs = float(vals)
    x = grid_points(grid_N, n) - 0.5
    br = bracket(lambda y: scale * result.phi(y), R=R, n=n, points=x,
                 method="none", tail_tol=np.inf)
    rhs = float(np.mean(np.real(br.raw[:, 0, 0])))
    out = {"box_integral": lhs, "torus_mean": rhs, "discrepancy": abs(lhs - rhs),
           "R": R, "quadrature_N": quadrature_N, "grid_N": grid_N}
    result.duality = out
    return out
