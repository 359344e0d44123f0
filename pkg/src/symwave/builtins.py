"""Named filter configurations."""
from __future__ import annotations

import numpy as np

from .lattice import DilationMatrix, IntMatrix
from .symmetry import group_closure
from .torusfn import LaurentPoly
from .transfer import FilterSpec

COSINE_VECTORS = ((1, 0), (0, 1), (1, -1), (2, 0))
SEC5_PREFACTOR = np.sqrt(2) / 4
STATED_A = ((0, 2), (-2, 0))
QUINCUNX_A = ((1, -1), (1, 1))


def haar_filter() -> LaurentPoly:
    """(1 + e^{2 pi i x}) / sqrt 2."""
    s = 1 / np.sqrt(2)
    return LaurentPoly(1, 1, {(0,): s, (1,): s})


def cosine_filter(prefactor: float = SEC5_PREFACTOR, vectors=COSINE_VECTORS) -> LaurentPoly:
    """prefactor * sum_j cos(2 pi <v_j, x>)."""
    coeffs: dict = {}
    for v in vectors:
        for s in (1, -1):
            k = tuple(s * a for a in v)
            coeffs[k] = coeffs.get(k, 0) + prefactor / 2
    return LaurentPoly(len(vectors[0]), 1, coeffs)


def _spec(m, A, gens, name) -> FilterSpec:
    A = DilationMatrix.of(A)
    H = group_closure(gens or [IntMatrix.identity(A.n)])
    return FilterSpec(m, A, H, np.ones(1), name)


def haar_spec() -> FilterSpec:
    return _spec(haar_filter(), [[2]], None, "haar")


def sec5_spec() -> FilterSpec:
    """Cosine filter with the printed prefactor and the printed dilation."""
    return _spec(cosine_filter(), STATED_A, [[[-1, 0], [0, -1]]], "paper-sec5")


def sec5_quincunx_spec() -> FilterSpec:
    """Printed cosine filter with a determinant-2 dilation affiliated to <-I>."""
    return _spec(cosine_filter(), QUINCUNX_A, [[[-1, 0], [0, -1]]], "paper-sec5-quincunx")


def sec5_rescaled_spec() -> FilterSpec:
    """Printed dilation, prefactor 1/2 so that m'(0) = 2 = sqrt(q)."""
    return _spec(cosine_filter(0.5), STATED_A, [[[-1, 0], [0, -1]]], "paper-sec5-rescaled")


BUILTINS = {
    "haar": haar_spec,
    "paper-sec5": sec5_spec,
    "paper-sec5-quincunx": sec5_quincunx_spec,
    "paper-sec5-rescaled": sec5_rescaled_spec,
}


def builtin(name: str) -> FilterSpec:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise KeyError(f"unknown builtin filter {name!r}; choose from {sorted(BUILTINS)}") from None


def sec5_candidates() -> list:
    """The configurations compared when resolving the m'(0) versus sqrt(q) mismatch."""
    return [sec5_spec(), sec5_quincunx_spec(), sec5_rescaled_spec()]
