"""Graded chain complexes over the integers and the maps between them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import (DimensionMismatch, GradingMismatch, NotAChainMap, NotAComplex,
                     NotClosedUnderDifferential)
from .linalg import HomologyGroup, IntMatrix, block_matrix, homology_of_pair


class GradedComplex:
    """Free graded Z-module with differentials d_k : C_k -> C_{k-1}.

    ``basis`` maps each degree to an ordered list of generator labels.  Degrees
    missing from ``basis`` are zero groups; the support is made contiguous by
    padding.  ``differentials[k]`` has shape ``(len(basis[k-1]), len(basis[k]))``;
    missing entries are zero matrices.
    """

    def __init__(self, basis: Mapping[int, Sequence[str]],
                 differentials: Mapping[int, IntMatrix] | None = None,
                 name: str = ""):
        self.name = name
        self._basis = {int(k): list(v) for k, v in basis.items()}
        if self._basis:
            lo, hi = min(self._basis), max(self._basis)
            for k in range(lo, hi + 1):
                self._basis.setdefault(k, [])
        seen = set()
        for k, labels in self._basis.items():
            for lab in labels:
                if (k, lab) in seen:
                    raise DimensionMismatch(f"duplicate generator {lab!r} in degree {k}")
                seen.add((k, lab))
        self._d: dict[int, IntMatrix] = {}
        for k, M in (differentials or {}).items():
            expect = (self.rank(k - 1), self.rank(k))
            if M.shape != expect:
                raise DimensionMismatch(
                    f"d_{k} has shape {M.shape}, expected {expect}")
            if (self.rank(k) == 0 or self.rank(k - 1) == 0) and not M.is_zero():
                raise DimensionMismatch(f"d_{k} leaves the support")
            self._d[int(k)] = M

    # -- shape -------------------------------------------------------------
    @property
    def degrees(self) -> range:
        if not self._basis:
            return range(0)
        return range(min(self._basis), max(self._basis) + 1)

    def basis(self, k: int) -> list[str]:
        return list(self._basis.get(k, []))

    def rank(self, k: int) -> int:
        return len(self._basis.get(k, ()))

    def total_rank(self) -> int:
        return sum(len(v) for v in self._basis.values())

    def d(self, k: int) -> IntMatrix:
        M = self._d.get(k)
        return M if M is not None else IntMatrix.zeros(self.rank(k - 1), self.rank(k))

    def index(self, k: int, label: str) -> int:
        return self._basis[k].index(label)

    def boundary(self, k: int, label: str) -> dict[str, int]:
        """Nonzero coefficients of d(label) in degree k-1."""
        j = self.index(k, label)
        D = self.d(k)
        return {lab: D[i, j] for i, lab in enumerate(self.basis(k - 1)) if D[i, j]}

    def padded(self, degrees: Iterable[int]) -> "GradedComplex":
        basis = dict(self._basis)
        for k in degrees:
            basis.setdefault(k, [])
        return GradedComplex(basis, self._d, self.name)

    def __repr__(self) -> str:
        ranks = {k: self.rank(k) for k in self.degrees}
        return f"GradedComplex({self.name!r}, ranks={ranks})"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "basis": {str(k): self.basis(k) for k in self.degrees},
            "differentials": {str(k): self.d(k).tolist() for k in self.degrees
                              if self.rank(k) and self.rank(k - 1)},
        }


def _span(*complexes: GradedComplex) -> range:
    ks = [k for C in complexes for k in C.degrees]
    return range(min(ks), max(ks) + 1) if ks else range(0)


@dataclass
class BoundaryReport:
    """Per-degree maximal |entry| of d_{k-1} d_k with the offending positions."""

    max_abs: dict[int, int]
    nonzero: list[tuple[int, int, int, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.nonzero


def verify_boundary_squared(C: GradedComplex) -> BoundaryReport:
    out: dict[int, int] = {}
    bad = []
    for k in C.degrees:
        comp = C.d(k - 1) @ C.d(k)
        out[k] = comp.max_abs()
        bad.extend((k, i, j, v) for i, j, v in comp.nonzero())
    return BoundaryReport(out, bad)


def homology(C: GradedComplex) -> dict[int, HomologyGroup]:
    rep = verify_boundary_squared(C)
    if not rep.ok:
        k, i, j, v = rep.nonzero[0]
        raise NotAComplex(f"d∘d is nonzero from degree {k} (entry {i},{j} = {v})")
    return {k: homology_of_pair(C.d(k), C.d(k + 1)) for k in C.degrees}


def is_acyclic(C: GradedComplex) -> bool:
    return all(h.is_trivial() for h in homology(C).values())


class ChainMap:
    """Degree-preserving map; ``components[k]`` is ``target_k x source_k``."""

    def __init__(self, source: GradedComplex, target: GradedComplex,
                 components: Mapping[int, IntMatrix], name: str = ""):
        self.source = source
        self.target = target
        self.name = name
        self._f: dict[int, IntMatrix] = {}
        for k, M in components.items():
            expect = (target.rank(k), source.rank(k))
            if M.shape != expect:
                raise DimensionMismatch(f"f_{k} has shape {M.shape}, expected {expect}")
            self._f[int(k)] = M

    @property
    def degrees(self) -> range:
        return _span(self.source, self.target)

    def f(self, k: int) -> IntMatrix:
        M = self._f.get(k)
        return M if M is not None else IntMatrix.zeros(self.target.rank(k), self.source.rank(k))

    @classmethod
    def identity(cls, C: GradedComplex) -> "ChainMap":
        return cls(C, C, {k: IntMatrix.identity(C.rank(k)) for k in C.degrees}, "id")

    @classmethod
    def zero(cls, source: GradedComplex, target: GradedComplex) -> "ChainMap":
        return cls(source, target, {}, "0")


@dataclass
class MapReport:
    """Entries where f d - d f (or a similar commutator) fails to vanish."""

    nonzero: list[tuple[int, int, int, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.nonzero


def verify_chain_map(f: ChainMap) -> MapReport:
    bad = []
    for k in f.degrees:
        lhs = f.f(k - 1) @ f.source.d(k)
        rhs = f.target.d(k) @ f.f(k)
        bad.extend((k, i, j, v) for i, j, v in (lhs - rhs).nonzero())
    return MapReport(bad)


def mapping_cone(f: ChainMap) -> GradedComplex:
    """cone_k = source_{k-1} + target_k with differential [[-d, 0], [f, d]]."""
    rep = verify_chain_map(f)
    if not rep.ok:
        raise NotAChainMap(f"not a chain map: first failure {rep.nonzero[0]}")
    src, tgt = f.source, f.target
    span = _span(src, tgt)
    if not span:
        return GradedComplex({}, name="cone")
    ks = range(span.start, span.stop + 1)
    basis = {k: [f"s:{x}" for x in src.basis(k - 1)] + [f"t:{x}" for x in tgt.basis(k)]
             for k in ks}
    diffs = {}
    for k in ks:
        diffs[k] = block_matrix([
            [-src.d(k - 1), IntMatrix.zeros(src.rank(k - 2), tgt.rank(k))],
            [f.f(k - 1), tgt.d(k)],
        ])
    return GradedComplex(basis, diffs, name="cone")


def is_quasi_isomorphism(f: ChainMap) -> bool:
    return is_acyclic(mapping_cone(f))


def _subset_indices(C: GradedComplex, subset: Mapping[int, Iterable[str]]) -> dict[int, list[int]]:
    out = {}
    for k in C.degrees:
        wanted = set(subset.get(k, ()))
        unknown = wanted - set(C.basis(k))
        if unknown:
            raise DimensionMismatch(f"unknown generators in degree {k}: {sorted(unknown)}")
        out[k] = [i for i, lab in enumerate(C.basis(k)) if lab in wanted]
    return out


def _check_closed(C: GradedComplex, inside: dict[int, list[int]]) -> None:
    for k in C.degrees:
        D = C.d(k)
        rows_in = set(inside.get(k - 1, ()))
        for j in inside[k]:
            for i in range(D.rows):
                if D[i, j] and i not in rows_in:
                    raise NotClosedUnderDifferential(
                        f"d({C.basis(k)[j]}) hits {C.basis(k - 1)[i]} outside the subset")


def subcomplex(C: GradedComplex, subset: Mapping[int, Iterable[str]]) -> GradedComplex:
    inside = _subset_indices(C, subset)
    _check_closed(C, inside)
    basis = {k: [C.basis(k)[i] for i in inside[k]] for k in C.degrees}
    diffs = {k: C.d(k).submatrix(inside.get(k - 1, []), inside[k]) for k in C.degrees}
    return GradedComplex(basis, diffs, name=f"{C.name}|sub")


def quotient(C: GradedComplex, subset: Mapping[int, Iterable[str]]) -> GradedComplex:
    """C / span(subset); the subset must span a subcomplex."""
    inside = _subset_indices(C, subset)
    _check_closed(C, inside)
    keep = {k: [i for i in range(C.rank(k)) if i not in set(inside[k])] for k in C.degrees}
    basis = {k: [C.basis(k)[i] for i in keep[k]] for k in C.degrees}
    diffs = {k: C.d(k).submatrix(keep.get(k - 1, []), keep[k]) for k in C.degrees}
    return GradedComplex(basis, diffs, name=f"{C.name}/sub")


def projection(C: GradedComplex, Q: GradedComplex) -> ChainMap:
    """The quotient map C -> Q, matching generators by label."""
    comps = {}
    for k in C.degrees:
        rows = Q.basis(k)
        cols = C.basis(k)
        comps[k] = IntMatrix(len(rows), len(cols),
                             [1 if r == c else 0 for r in rows for c in cols])
    return ChainMap(C, Q, comps, "projection")


class Involution:
    """Degree-preserving automorphism A of a complex with A^2 = 1."""

    def __init__(self, complex: GradedComplex, components: Mapping[int, IntMatrix]):
        self.complex = complex
        self._a = {}
        for k, M in components.items():
            n = complex.rank(k)
            if M.shape != (n, n):
                raise DimensionMismatch(f"A_{k} has shape {M.shape}, expected {(n, n)}")
            self._a[int(k)] = M

    def a(self, k: int) -> IntMatrix:
        M = self._a.get(k)
        return M if M is not None else IntMatrix.identity(self.complex.rank(k))

    def as_chain_map(self) -> ChainMap:
        return ChainMap(self.complex, self.complex,
                        {k: self.a(k) for k in self.complex.degrees}, "involution")


@dataclass
class InvolutionReport:
    not_involutive: list[tuple[int, int, int, int]] = field(default_factory=list)
    not_commuting: list[tuple[int, int, int, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.not_involutive and not self.not_commuting


def verify_involution(A: Involution) -> InvolutionReport:
    C = A.complex
    sq, comm = [], []
    for k in C.degrees:
        n = C.rank(k)
        sq.extend((k, i, j, v) for i, j, v in (A.a(k) @ A.a(k) - IntMatrix.identity(n)).nonzero())
        c = A.a(k - 1) @ C.d(k) - C.d(k) @ A.a(k)
        comm.extend((k, i, j, v) for i, j, v in c.nonzero())
    return InvolutionReport(sq, comm)


def direct_sum(A: GradedComplex, B: GradedComplex) -> GradedComplex:
    span = _span(A, B)
    basis = {k: [f"0:{x}" for x in A.basis(k)] + [f"1:{x}" for x in B.basis(k)] for k in span}
    diffs = {}
    for k in span:
        diffs[k] = block_matrix([
            [A.d(k), IntMatrix.zeros(A.rank(k - 1), B.rank(k))],
            [IntMatrix.zeros(B.rank(k - 1), A.rank(k)), B.d(k)],
        ])
    return GradedComplex(basis, diffs, name=f"{A.name}+{B.name}")


def shift(C: GradedComplex, n: int) -> GradedComplex:
    """C[n]: the group in degree k is C_{k-n}; differentials are unchanged."""
    return GradedComplex({k + n: C.basis(k) for k in C.degrees},
                         {k + n: C.d(k) for k in C.degrees}, name=f"{C.name}[{n}]")


def require_same_grading(A: GradedComplex, B: GradedComplex) -> None:
    for k in _span(A, B):
        if A.basis(k) != B.basis(k):
            raise GradingMismatch(f"bases differ in degree {k}")
