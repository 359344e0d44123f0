"""Finite symmetry groups affiliated to a dilation.

Group closure and element orders, the three affiliation conditions, bounded
GL_2(Z) equivalence search, the built-in classification table for n = 2 and
an exhaustive census that recomputes it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .errors import NotFinite
from .lattice import DilationMatrix, IntMatrix, is_dilation

ORDER_CAP = 12


@dataclass(frozen=True)
class SymmetryGroup:
    """Finite matrix group with sorted elements; the identity is element 0."""

    elements: tuple
    generators: tuple

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def n(self) -> int:
        return self.elements[0].n

    @property
    def is_trivial(self) -> bool:
        return self.order == 1

    def key(self) -> frozenset:
        return frozenset(e.entries for e in self.elements)

    def structure(self) -> str:
        """Isomorphism type for groups of order <= 12 in GL_2(Z)."""
        orders = sorted(element_order(e) for e in self.elements)
        n = self.order
        if n == 1:
            return "trivial"
        if max(orders) == n:
            return f"Z/{n}"
        if n == 4:
            return "Z/2+Z/2"
        return f"D{n // 2}"


@dataclass(frozen=True)
class AffiliationReport:
    lattice_preserved: tuple
    commutes: tuple
    acts_trivially: tuple
    verdict: bool
    trivial: bool
    elements_checked: int

    def as_dict(self) -> dict:
        return {
            "lattice_preserved": list(self.lattice_preserved),
            "commutes": list(self.commutes),
            "acts_trivially": list(self.acts_trivially),
            "verdict": self.verdict,
            "trivial": self.trivial,
            "elements_checked": self.elements_checked,
        }


def _sort_key(M: IntMatrix):
    flat = [v for r in M.entries for v in r]
    ident = IntMatrix.identity(M.n).entries
    return (M.entries != ident, max(abs(v) for v in flat), flat)


def group_closure(generators: Sequence, cap: int = 64) -> SymmetryGroup:
    """All products of the generators; raises NotFinite past cap elements."""
    gens = [IntMatrix.of(g) for g in generators]
    if not gens:
        raise ValueError("need at least one generator")
    n = gens[0].n
    for g in gens:
        if not g.is_unimodular():
            raise ValueError(f"{g} is not invertible over Z")
    ident = IntMatrix.identity(n)
    seen = {ident.entries: ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for a in frontier:
            for g in gens:
                b = a @ g
                if b.entries not in seen:
                    seen[b.entries] = b
                    nxt.append(b)
                    if len(seen) > cap:
                        raise NotFinite(f"closure exceeds {cap} elements")
        frontier = nxt
    elems = tuple(sorted(seen.values(), key=_sort_key))
    return SymmetryGroup(elems, tuple(gens))


def element_order(h, cap: int = ORDER_CAP):
    """Smallest k <= cap with h^k = I, else math.inf."""
    h = IntMatrix.of(h)
    ident = IntMatrix.identity(h.n)
    p = h
    for k in range(1, cap + 1):
        if p == ident:
            return k
        p = p @ h
    return math.inf


def is_affiliated(A, H: SymmetryGroup) -> AffiliationReport:
    """Check hG = G, hA = Ah and A^{-1}(h - I) integral, exactly.

    Per-generator booleans are reported; the verdict runs over all elements.
    """
    A = IntMatrix.of(A)
    d = A.det()
    adj = A.adjugate()
    ident = IntMatrix.identity(A.n)

    def check(h: IntMatrix):
        lat = h.is_unimodular()
        com = (h @ A) == (A @ h)
        diff = adj @ (h - ident)
        triv = all(v % d == 0 for r in diff.entries for v in r)
        return lat, com, triv

    per_gen = [check(g) for g in H.generators]
    verdict = all(all(check(e)) for e in H.elements)
    return AffiliationReport(
        lattice_preserved=tuple(p[0] for p in per_gen),
        commutes=tuple(p[1] for p in per_gen),
        acts_trivially=tuple(p[2] for p in per_gen),
        verdict=verdict,
        trivial=H.is_trivial,
        elements_checked=H.order,
    )


# ---------------------------------------------------------------- equivalence

@lru_cache(maxsize=None)
def _unimodular(bound: int) -> np.ndarray:
    """All 2x2 integer matrices with entries in [-bound, bound] and det +-1.

    Ordered by max |entry| first so that simple intertwiners are found first.
    """
    r = np.arange(-bound, bound + 1)
    a, b, c, d = np.meshgrid(r, r, r, r, indexing="ij")
    a, b, c, d = (x.ravel() for x in (a, b, c, d))
    det = a * d - b * c
    keep = np.abs(det) == 1
    S = np.stack([a, b, c, d], axis=1)[keep]
    size = np.max(np.abs(S), axis=1)
    order = np.lexsort((S[:, 3], S[:, 2], S[:, 1], S[:, 0], size))
    S = S[order].reshape(-1, 2, 2)
    ident = np.array([[1, 0], [0, 1]])
    first = np.where(np.all(S == ident, axis=(1, 2)))[0]
    if first.size:
        S = np.concatenate([S[first], np.delete(S, first, axis=0)])
    return S


def _intertwiners(C1: np.ndarray, C2: np.ndarray, bound: int) -> np.ndarray:
    S = _unimodular(bound)
    lhs = S @ C1
    rhs = np.einsum("ij,kjl->kil", C2, S)
    return S[np.all(lhs == rhs, axis=(1, 2))]


def gl2z_equivalent(C1, C2, bound: int = 4) -> Optional[IntMatrix]:
    """Some S in GL_2(Z) with entries in [-bound, bound] and S C1 = C2 S, or None.

    None means "not found within the bound", not a proof of inequivalence.
    """
    C1 = IntMatrix.of(C1).to_numpy()
    C2 = IntMatrix.of(C2).to_numpy()
    if C1.shape != (2, 2):
        raise ValueError("gl2z_equivalent is for 2x2 matrices")
    hits = _intertwiners(C1, C2, bound)
    return IntMatrix.of(hits[0]) if len(hits) else None


def _inv_unimodular(S: np.ndarray) -> np.ndarray:
    det = S[0, 0] * S[1, 1] - S[0, 1] * S[1, 0]
    return det * np.array([[S[1, 1], -S[0, 1]], [-S[1, 0], S[0, 0]]])


def _group_array(H: SymmetryGroup) -> np.ndarray:
    return np.array([e.entries for e in H.elements], dtype=np.int64)


def _group_invariant(A: IntMatrix, H: SymmetryGroup) -> tuple:
    Ha = _group_array(H)
    An = A.to_numpy()
    tr_h = sorted(int(np.trace(h)) for h in Ha)
    det_h = sorted(int(round(np.linalg.det(h))) for h in Ha)
    tr_ah = sorted(int(np.trace(An @ h)) for h in Ha)
    return (A.det(), int(np.trace(An)), H.order, tuple(tr_h), tuple(det_h), tuple(tr_ah))


def pair_equivalent(pair1, pair2, bound: int = 4) -> Optional[IntMatrix]:
    """S with S A1 = A2 S and S H1 S^{-1} = H2 as sets, searched within bound."""
    A1, H1 = pair1
    A2, H2 = pair2
    A1, A2 = IntMatrix.of(A1), IntMatrix.of(A2)
    if _group_invariant(A1, H1) != _group_invariant(A2, H2):
        return None
    target = H2.key()
    H1a = _group_array(H1)
    for S in _intertwiners(A1.to_numpy(), A2.to_numpy(), bound):
        Si = _inv_unimodular(S)
        conj = np.einsum("ij,kjl,lm->kim", S, H1a, Si)
        if frozenset(tuple(map(tuple, c.tolist())) for c in conj) == target:
            return IntMatrix.of(S)
    return None


# ---------------------------------------------------------------- table

@dataclass(frozen=True)
class TableRow:
    item: int
    A: IntMatrix
    H: SymmetryGroup
    structure: str
    det_abs: int
    label: str


def _row(item, A, gens, structure, label) -> TableRow:
    A = IntMatrix.of(A)
    return TableRow(item, A, group_closure(gens), structure, abs(A.det()), label)


def classification_table(n_max: int = 6) -> list:
    """The six families of the n = 2 classification, expanded verbatim.

    Parametric families are instantiated for |n| <= n_max. Sign choices
    written with +- are expanded into separate rows.
    """
    mI = [[-1, 0], [0, -1]]
    rows = []
    for A in ([[0, 2], [1, 0]], [[0, 2], [-1, 0]], [[0, 2], [-1, 1]], [[0, -2], [1, -1]]):
        rows.append(_row(1, A, [mI], "Z/2", str(A)))
    item2 = [[[0, 2], [-2, 0]], [[0, 2], [-2, 2]], [[0, 2], [-2, -2]],
             [[0, 2], [2, 2]], [[0, 2], [2, -2]], [[2, 2], [0, -2]]]
    for k in range(2, n_max + 1, 2):
        item2 += [[[2, k], [0, 2]], [[-2, k], [0, -2]]]
    for A in item2:
        rows.append(_row(2, A, [mI], "Z/2", str(A)))
    for A in ([[1, -1], [1, 1]], [[-1, 1], [-1, -1]]):
        rows.append(_row(3, A, [[[0, 1], [-1, 0]]], "Z/4", str(A)))
    for A in ([[2, 1], [-1, 1]], [[-2, -1], [1, -1]], [[-1, -2], [2, 1]], [[1, 2], [-2, -1]]):
        rows.append(_row(4, A, [[[-1, -1], [1, 0]]], "Z/3", str(A)))
    for s1 in (2, -2):
        for s2 in (2, -2):
            A = [[s1, 0], [0, s2]]
            rows.append(_row(5, A, [[[1, 0], [0, -1]], [[-1, 0], [0, 1]]], "Z/2+Z/2", str(A)))
    for k in range(3, n_max + 1):
        for nn in (k, -k):
            for s in (2, -2):
                A = [[nn, 0], [0, s]]
                rows.append(_row(6, A, [[[1, 0], [0, -1]]], "Z/2", str(A)))
    return rows


# ---------------------------------------------------------------- census

@dataclass
class CensusClass:
    A: IntMatrix
    H: SymmetryGroup
    members: int
    table_rows: list = field(default_factory=list)
    table_class: Optional[int] = None

    @property
    def det_abs(self) -> int:
        return abs(self.A.det())

    def as_dict(self) -> dict:
        return {
            "A": [list(r) for r in self.A.entries],
            "det": self.A.det(),
            "H_order": self.H.order,
            "H_structure": self.H.structure(),
            "H_generators": [[list(r) for r in g.entries] for g in self.H.generators],
            "members": self.members,
            "table_rows": self.table_rows,
            "table_class": self.table_class,
        }


@dataclass
class CensusResult:
    max_entry: int
    bound: int
    classes: list
    table: list
    table_classes: list  # list of lists of row indices that are mutually equivalent
    unmatched: list  # census class indices without a table match
    undiscovered: list  # table class indices with no census match
    pairs_examined: int

    def expected(self) -> list:
        """Table classes having a row with all entries <= max_entry."""
        out = []
        for ti, tc in enumerate(self.table_classes):
            if any(max(abs(v) for r in self.table[i].A.entries for v in r) <= self.max_entry
                   for i in tc):
                out.append(ti)
        return out

    def missing(self) -> list:
        """Expected table classes the search did not find."""
        return [ti for ti in self.expected() if ti in self.undiscovered]

    @property
    def ok(self) -> bool:
        return not self.unmatched and not self.missing()

    def as_dict(self) -> dict:
        return {
            "max_entry": self.max_entry,
            "equivalence_bound": self.bound,
            "pairs_examined": self.pairs_examined,
            "class_count": len(self.classes),
            "classes": [c.as_dict() for c in self.classes],
            "table_classes": [[self.table[i].label for i in tc] for tc in self.table_classes],
            "expected_table_classes": self.expected(),
            "missing_table_classes": self.missing(),
            "unmatched_classes": list(self.unmatched),
            "ok": self.ok,
        }


def _all_2x2(B: int) -> np.ndarray:
    r = np.arange(-B, B + 1)
    a, b, c, d = np.meshgrid(r, r, r, r, indexing="ij")
    return np.stack([x.ravel() for x in (a, b, c, d)], axis=1).reshape(-1, 2, 2)


def _finite_order_elements(B: int) -> np.ndarray:
    M = _all_2x2(B)
    det = M[:, 0, 0] * M[:, 1, 1] - M[:, 0, 1] * M[:, 1, 0]
    M = M[np.abs(det) == 1]
    ident = np.eye(2, dtype=np.int64)
    P = M.copy()
    order = np.zeros(len(M), dtype=int)
    for k in range(1, 7):
        hit = (order == 0) & np.all(P == ident, axis=(1, 2))
        order[hit] = k
        P = P @ M
    keep = (order >= 2) & (order <= 6)
    return M[keep]


def _dilations(B: int) -> list:
    M = _all_2x2(B)
    t = M[:, 0, 0] + M[:, 1, 1]
    d = M[:, 0, 0] * M[:, 1, 1] - M[:, 0, 1] * M[:, 1, 0]
    ok = ((d > 1) & (np.abs(t) < d + 1)) | ((d < -1) & (np.abs(t) < -d - 1))
    M = M[ok]
    size = np.max(np.abs(M.reshape(-1, 4)), axis=1)
    l1 = np.sum(np.abs(M.reshape(-1, 4)), axis=1)
    flat = M.reshape(-1, 4)
    order = np.lexsort((flat[:, 3], flat[:, 2], flat[:, 1], flat[:, 0], l1, size))
    out = [IntMatrix.of(m) for m in M[order]]
    assert all(is_dilation(m) for m in out[:50])
    return out


def _affiliated_elements(A: IntMatrix, F: np.ndarray) -> np.ndarray:
    An = A.to_numpy()
    d = A.det()
    adj = A.adjugate().to_numpy()
    com = np.all(F @ An == np.einsum("ij,kjl->kil", An, F), axis=(1, 2))
    diff = np.einsum("ij,kjl->kil", adj, F - np.eye(2, dtype=np.int64))
    triv = np.all(diff % d == 0, axis=(1, 2))
    return F[com & triv]


def _maximal_groups(elems: np.ndarray) -> list:
    groups = {}
    mats = [IntMatrix.of(e) for e in elems]
    cands = [[g] for g in mats] + [[g, h] for i, g in enumerate(mats) for h in mats[i + 1:]]
    for gens in cands:
        try:
            G = group_closure(gens, cap=ORDER_CAP)
        except NotFinite:
            continue
        groups.setdefault(G.key(), G)
    keys = list(groups)
    maximal = [groups[k] for k in keys if not any(k < other for other in keys)]
    return sorted(maximal, key=lambda G: [_sort_key(e) for e in G.elements])


def census_n2(max_entry: int = 3, bound: int = 4, table: Optional[list] = None) -> CensusResult:
    """Exhaustive search for affiliated pairs (A, H) with entries <= max_entry.

    For each dilation the maximal finite affiliated subgroups generated by at
    most two elements of order <= 6 are kept; pairs are merged into classes by
    pair_equivalent and each class is tagged against the table.
    """
    if max_entry < 2:
        raise ValueError("max_entry must be >= 2")
    F = _finite_order_elements(max_entry)
    classes: list = []
    buckets: dict = {}
    examined = 0
    for A in _dilations(max_entry):
        elems = _affiliated_elements(A, F)
        if len(elems) == 0:
            continue
        for H in _maximal_groups(elems):
            examined += 1
            key = _group_invariant(A, H)
            for idx in buckets.get(key, []):
                c = classes[idx]
                if pair_equivalent((A, H), (c.A, c.H), bound) is not None:
                    c.members += 1
                    break
            else:
                buckets.setdefault(key, []).append(len(classes))
                classes.append(CensusClass(A, H, 1))

    table = classification_table() if table is None else table
    # group table rows into mutual equivalence classes
    table_classes: list = []
    for i, row in enumerate(table):
        for tc in table_classes:
            r0 = table[tc[0]]
            if pair_equivalent((row.A, row.H), (r0.A, r0.H), bound) is not None:
                tc.append(i)
                break
        else:
            table_classes.append([i])

    unmatched = []
    for ci, c in enumerate(classes):
        for ti, tc in enumerate(table_classes):
            r0 = table[tc[0]]
            if pair_equivalent((c.A, c.H), (r0.A, r0.H), bound) is not None:
                c.table_rows = list(tc)
                c.table_class = ti
                break
        if c.table_class is None:
            unmatched.append(ci)
    hit = {c.table_class for c in classes}
    undiscovered = [ti for ti in range(len(table_classes)) if ti not in hit]
    return CensusResult(max_entry, bound, classes, table, table_classes,
                        unmatched, undiscovered, examined)
