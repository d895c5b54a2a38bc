"""Assemble the chain complexes and structural maps from a Morse instance.

Each variant is a block matrix over generator classes: interior points (o),
stable fixed points (s), unstable fixed points shifted down by one (u[-1]) and
the two side copies of each unstable point (u+, u-).  Blocks come from
:func:`morseq.instance.block`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .chain import ChainMap, GradedComplex, Involution, quotient
from .errors import GradingMismatch, InvalidInstance
from .instance import MorseInstance, M, validate
from .linalg import IntMatrix, block_matrix

VARIANTS = ("bar", "check-km", "hat-km", "check-stab", "hat-stab", "bold", "generalized")


@dataclass(frozen=True)
class Generator:
    label: str
    point: str
    block: str  # o, s, u1, u+, u-, u (u graded by ind)
    grading: int


def decorated(pid: str, side: int) -> str:
    return f"{pid}{'+' if side > 0 else '-'}"


def inventory(inst: MorseInstance, blocks: Sequence[str]) -> list[list[Generator]]:
    """Generators of each named block, in dataset order."""
    out = []
    for b in blocks:
        cls = "u" if b.startswith("u") else b
        gens = []
        for p in inst.points_of(cls):
            if b == "u1":
                gens.append(Generator(p.id, p.id, b, p.index - 1))
            elif b in ("u+", "u-"):
                gens.append(Generator(decorated(p.id, 1 if b == "u+" else -1), p.id, b, p.index))
            else:
                gens.append(Generator(p.id, p.id, b, p.index))
        out.append(gens)
    return out


def _zero(rows: list, cols: list) -> IntMatrix:
    return IntMatrix.zeros(len(rows), len(cols))


def _fill(grid, row_gens, col_gens) -> list[list[IntMatrix]]:
    return [[grid[i][j] if grid[i][j] is not None else _zero(row_gens[i], col_gens[j])
             for j in range(len(col_gens))] for i in range(len(row_gens))]


def _flatten(gens: list[list[Generator]]) -> list[Generator]:
    return [g for block in gens for g in block]


def assemble(gens: list[list[Generator]], grid, name: str) -> GradedComplex:
    """Place the block grid and cut it into per-degree differentials."""
    full = block_matrix(_fill(grid, gens, gens))
    flat = _flatten(gens)
    for i, j, v in full.nonzero():
        if flat[i].grading != flat[j].grading - 1:
            raise GradingMismatch(
                f"{name}: entry {flat[j].label} -> {flat[i].label} ({v}) "
                f"connects gradings {flat[j].grading} and {flat[i].grading}")
    return complex_from_matrix(flat, full, name)


def complex_from_matrix(flat: list[Generator], full: IntMatrix, name: str) -> GradedComplex:
    by_deg: dict[int, list[int]] = {}
    for n, g in enumerate(flat):
        by_deg.setdefault(g.grading, []).append(n)
    basis = {k: [flat[n].label for n in idx] for k, idx in by_deg.items()}
    diffs = {}
    for k, idx in by_deg.items():
        below = by_deg.get(k - 1, [])
        if below and idx:
            diffs[k] = full.submatrix(below, idx)
    return GradedComplex(basis, diffs, name=name)


def map_from_matrix(source: GradedComplex, target: GradedComplex, src_flat: list[Generator],
                    tgt_flat: list[Generator], full: IntMatrix, name: str) -> ChainMap:
    for i, j, v in full.nonzero():
        if tgt_flat[i].grading != src_flat[j].grading:
            raise GradingMismatch(f"{name}: entry {src_flat[j].label} -> {tgt_flat[i].label} "
                                  "changes the grading")
    comps = {}
    for k in set(source.degrees) | set(target.degrees):
        rows = [i for i, g in enumerate(tgt_flat) if g.grading == k]
        cols = [j for j, g in enumerate(src_flat) if g.grading == k]
        # the complex keeps generators of one degree in inventory order
        comps[k] = full.submatrix(rows, cols)
    return ChainMap(source, target, comps, name)


class Blocks:
    """Lazy access to the signed count blocks of an instance."""

    def __init__(self, inst: MorseInstance):
        self.inst = inst
        self._cache: dict[str, IntMatrix] = {}

    def __call__(self, selector: str) -> IntMatrix:
        if selector not in self._cache:
            self._cache[selector] = M(self.inst, selector)
        return self._cache[selector]

    def identity_u(self) -> IntMatrix:
        return IntMatrix.identity(len(self.inst.points_of("u")))


def _require(inst: MorseInstance, variant: str) -> None:
    rep = validate(inst)
    if not rep.ok:
        raise InvalidInstance(f"instance {inst.name!r} is invalid:\n{rep}", rep.problems)
    if variant == "generalized":
        if inst.kind != "generalized":
            raise InvalidInstance("the generalized complex needs a generalized instance")
    elif inst.kind == "generalized":
        raise InvalidInstance(f"variant {variant!r} is not defined for generalized instances")
    elif variant == "bold" and inst.kind != "closed-equivariant":
        raise InvalidInstance("the bold complex needs a closed-equivariant instance")


def _layout(inst: MorseInstance, variant: str):
    """(block names, grid) for every block-matrix variant."""
    B = Blocks(inst)
    I = B.identity_u()
    if variant == "bar":
        return ["s", "u1"], [[B("dbar_s^s"), B("dbar_s^u")],
                             [B("dbar_u^s"), B("dbar_u^u")]]
    if variant == "check-km":
        return ["o", "s"], [
            [B("d_o^o"), -(B("d_o^u") @ B("dbar_u^s"))],
            [B("d_s^o"), B("dbar_s^s") - B("d_s^u") @ B("dbar_u^s")],
        ]
    if variant == "hat-km":
        return ["o", "u"], [
            [B("d_o^o"), B("d_o^u")],
            [-(B("dbar_u^s") @ B("d_s^o")), -B("dbar_u^u") - B("dbar_u^s") @ B("d_s^u")],
        ]
    if variant == "check-stab":
        return ["o", "s", "u1", "u-"], [
            [B("d_o^o"), None, None, B("d_o^u")],
            [B("d_s^o"), B("dbar_s^s"), B("dbar_s^u"), B("d_s^u")],
            [None, B("dbar_u^s"), B("dbar_u^u"), I],
            [-(B("dbar_u^s") @ B("d_s^o")), None, None,
             -B("dbar_u^u") - B("dbar_u^s") @ B("d_s^u")],
        ]
    if variant == "bold":
        P, R = B("P_u^s"), B("R_u^s")
        Puu, Ruu = B("P_u^u"), B("R_u^u")
        return ["o", "s", "u1", "u+", "u-"], [
            [B("d_o^o"), None, None, B("d_o^u+"), B("d_o^u-")],
            [B("d_s^o"), B("dbar_s^s"), B("dbar_s^u"), B("d_s^u+"), B("d_s^u-")],
            [None, B("dbar_u^s"), B("dbar_u^u"), -I, I],
            [P @ B("d_s+^o") + R @ B("d_s-^o"), None, None,
             -Puu + P @ B("d_s+^u+") + R @ B("d_s-^u+"),
             Ruu + P @ B("d_s+^u-") + R @ B("d_s-^u-")],
            [-(P @ B("d_s-^o")) - R @ B("d_s+^o"), None, None,
             Ruu - P @ B("d_s-^u+") - R @ B("d_s+^u+"),
             -Puu - P @ B("d_s-^u-") - R @ B("d_s+^u-")],
        ]
    raise InvalidInstance(f"unknown variant {variant!r}")


def build(inst: MorseInstance, variant: str) -> GradedComplex:
    """The chain complex of the given variant.

    >>> from morseq.instance import builtin
    >>> build(builtin("torus"), "bold").boundary(2, "a+")
    {'b': 1, 'a': -1}
    """
    if variant not in VARIANTS:
        raise InvalidInstance(f"unknown variant {variant!r}; choose from {', '.join(VARIANTS)}")
    _require(inst, variant)
    name = f"{inst.name}:{variant}"
    if variant == "generalized":
        from .gluing import differential_from_gluing
        return differential_from_gluing(inst)
    if variant == "hat-stab":
        C = build(inst, "check-stab")
        Q = quotient(C, bar_subset(inst))
        Q.name = name
        return Q
    blocks, grid = _layout(inst, variant)
    return assemble(inventory(inst, blocks), grid, name)


def bar_subset(inst: MorseInstance) -> dict[int, list[str]]:
    """Generators of the bar subcomplex C^s + C^u[-1], keyed by degree."""
    out: dict[int, list[str]] = {}
    for g in _flatten(inventory(inst, ["s", "u1"])):
        out.setdefault(g.grading, []).append(g.label)
    return out


def psi(inst: MorseInstance) -> ChainMap:
    """check-stab -> check-km: [[1, 0, -d_o^u, 0], [0, 1, -d_s^u, 0]]."""
    _require(inst, "check-stab")
    B = Blocks(inst)
    src_gens = inventory(inst, ["o", "s", "u1", "u-"])
    tgt_gens = inventory(inst, ["o", "s"])
    no, ns = len(src_gens[0]), len(src_gens[1])
    grid = [[IntMatrix.identity(no), None, -B("d_o^u"), None],
            [None, IntMatrix.identity(ns), -B("d_s^u"), None]]
    full = block_matrix(_fill(grid, tgt_gens, src_gens))
    return map_from_matrix(build(inst, "check-stab"), build(inst, "check-km"),
                           _flatten(src_gens), _flatten(tgt_gens), full, "psi")


def hat_quotient_map(inst: MorseInstance) -> ChainMap:
    """check-stab -> hat-km: identity on C^o, zero on the bar part, p- -> p."""
    _require(inst, "check-stab")
    src_gens = inventory(inst, ["o", "s", "u1", "u-"])
    tgt_gens = inventory(inst, ["o", "u"])
    grid = [[IntMatrix.identity(len(src_gens[0])), None, None, None],
            [None, None, None, IntMatrix.identity(len(src_gens[3]))]]
    full = block_matrix(_fill(grid, tgt_gens, src_gens))
    return map_from_matrix(build(inst, "check-stab"), build(inst, "hat-km"),
                           _flatten(src_gens), _flatten(tgt_gens), full, "hat-quotient")


def induced_quotient_map(inst: MorseInstance) -> ChainMap:
    """The map hat-stab -> hat-km induced by :func:`hat_quotient_map`."""
    f = hat_quotient_map(inst)
    Q = build(inst, "hat-stab")
    comps = {}
    for k in Q.degrees:
        cols = [f.source.index(k, lab) for lab in Q.basis(k)]
        comps[k] = f.f(k).submatrix(range(f.target.rank(k)), cols)
    return ChainMap(Q, f.target, comps, "hat-quotient-induced")


def g_action(inst: MorseInstance) -> Involution:
    """The sigma-twisted reflection action on the bold complex.

    [p] -> sigma(p)[phi p] on C^o and C^s, [p] -> [p] on C^u[-1] and
    [p+-] -> sigma(p)[p-+] on the side copies.
    """
    _require(inst, "bold")
    C = build(inst, "bold")
    gens = inventory(inst, ["o", "s", "u1", "u+", "u-"])
    flat = _flatten(gens)
    pos = {(g.block, g.point): n for n, g in enumerate(flat)}
    n = len(flat)
    A = [[0] * n for _ in range(n)]
    for j, g in enumerate(flat):
        p = inst.point(g.point)
        if g.block in ("o", "s"):
            A[pos[(g.block, p.phi)]][j] = p.sigma
        elif g.block == "u1":
            A[j][j] = 1
        else:
            other = "u-" if g.block == "u+" else "u+"
            A[pos[(other, p.id)]][j] = p.sigma
    full = IntMatrix.from_rows(A, n)
    comps = {}
    for k in C.degrees:
        idx = [i for i, g in enumerate(flat) if g.grading == k]
        comps[k] = full.submatrix(idx, idx)
    return Involution(C, comps)


def preserves(A: Involution, subset: dict[int, list[str]]) -> bool:
    """True when A maps the span of ``subset`` into itself."""
    C = A.complex
    for k in C.degrees:
        inside = set(subset.get(k, ()))
        a = A.a(k)
        for j, lab in enumerate(C.basis(k)):
            if lab not in inside:
                continue
            for i, lab2 in enumerate(C.basis(k)):
                if a[i, j] and lab2 not in inside:
                    return False
    return True
