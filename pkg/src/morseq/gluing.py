"""Broken trajectories between generalized generators and their gluing verdicts.

Generators are critical points, plus two side copies p+ and p- of every unstable
fixed point.  A piece is one trajectory record read from a source generator to
a target generator:

* it leaves p+ or p- when the record has a departure side, and plain p otherwise;
* it lands on plain q, or on a side copy of q when the record has a xi class.
  Landing on a side copy keeps the grading.  This is an obstructed joint, and
  the side is the one the glued trajectory leaves through.

Every unstable p also has the degenerate pieces p* -> p (one per side *), with
sign -* and arrival side *.

An obstructed piece at position i > 1 glues when

    arrival_side(piece i-1) * (+1 for P, -1 for R) * landing side > 0

and the glued sign is the product of the record signs times the landing
side of every obstructed piece.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Optional

from .builders import inventory
from .chain import GradedComplex
from .errors import GradingMismatch, InvalidInstance, MalformedChain, UnknownGenerator
from .instance import MorseInstance, TrajectoryRecord, validate
from .linalg import IntMatrix

_ALPHABETS = {"lr": ("_l", "_r")}
_DEFAULT = ("+", "-")


@dataclass(frozen=True)
class Gen:
    point: str
    side: Optional[int] = None


@dataclass(frozen=True)
class Piece:
    record: TrajectoryRecord
    source: Gen
    target: Gen

    @property
    def obstructed(self) -> bool:
        return self.target.side is not None

    @property
    def trivial(self) -> bool:
        return self.record.source == self.record.target


@dataclass(frozen=True)
class BrokenTrajectory:
    pieces: tuple[Piece, ...]
    start_generator: str
    end_generator: str

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(p.record.id for p in self.pieces)

    def __len__(self) -> int:
        return len(self.pieces)


@dataclass(frozen=True)
class GluingVerdict:
    gluable: bool
    sign: Optional[int]
    witness: tuple[tuple[int, Optional[int], int, int], ...] = ()
    reason: str = ""
    # sign including the (-1)^m factor of the boundary orientation formula
    boundary_sign: Optional[int] = None


class GluingModel:
    """Generators, gradings and pieces of one instance."""

    def __init__(self, inst: MorseInstance):
        rep = validate(inst)
        if not rep.ok:
            raise InvalidInstance(f"instance {inst.name!r} is invalid:\n{rep}", rep.problems)
        self.inst = inst
        self.generalized = inst.kind == "generalized"
        self._alphabet = {}
        for t in inst.trajectories:
            if t.xi_class is not None and t.axis is not None:
                prev = self._alphabet.setdefault(t.target, t.axis)
                if prev != t.axis:
                    raise InvalidInstance(f"records into {t.target!r} use two different axes")
        self.generators = self._generators()
        self._by_label = {self.label(g): g for g in self.generators}
        self.pieces = self._pieces()
        self._out: dict[Gen, list[Piece]] = {}
        for pc in self.pieces:
            self._out.setdefault(pc.source, []).append(pc)

    # -- generators ---------------------------------------------------------
    def _generators(self) -> list[Gen]:
        if not self.generalized:
            out = []
            for block in inventory(self.inst, ["o", "s", "u1", "u+", "u-"]):
                for g in block:
                    side = {"u+": 1, "u-": -1}.get(g.block)
                    out.append(Gen(g.point, side))
            return out
        out = []
        for p in self.inst.points:
            if p.unstable:
                out += [Gen(p.id, 1), Gen(p.id, -1)]
            out.append(Gen(p.id))
        return out

    def label(self, g: Gen) -> str:
        if g.side is None:
            return g.point
        plus, minus = _ALPHABETS.get(self._alphabet.get(g.point), _DEFAULT)
        return g.point + (plus if g.side > 0 else minus)

    def gen(self, label: str) -> Gen:
        try:
            return self._by_label[label]
        except KeyError:
            raise UnknownGenerator(f"no generator {label!r} in {self.inst.name!r}") from None

    def grading(self, g: Gen) -> int:
        p = self.inst.point(g.point)
        if self.generalized:
            return p.grading + (1 if g.side is not None else 0)
        if g.side is None and p.unstable:
            return p.index - 1
        return p.index

    # -- pieces -------------------------------------------------------------
    def _pieces(self) -> list[Piece]:
        out = []
        for p in self.inst.points:
            if p.unstable:
                for side in (1, -1):
                    rec = TrajectoryRecord(id=f"{self.label(Gen(p.id, side))}>{p.id}",
                                           source=p.id, target=p.id, carrier="fixed",
                                           sign=-side, departure_side=side, arrival_side=side)
                    out.append(Piece(rec, Gen(p.id, side), Gen(p.id)))
        for t in self.inst.trajectories:
            src = Gen(t.source, t.departure_side)
            out.append(Piece(t, src, Gen(t.target)))
            if t.xi_class is not None:
                for side in (1, -1):
                    out.append(Piece(t, src, Gen(t.target, side)))
        known = set(self.generators)
        return [pc for pc in out if pc.source in known and pc.target in known]

    def drop(self, pc: Piece) -> int:
        return self.grading(pc.source) - self.grading(pc.target)

    def outgoing(self, g: Gen) -> list[Piece]:
        return self._out.get(g, [])

    # -- enumeration --------------------------------------------------------
    def chains_from(self, start: Gen, max_drop: int) -> Iterator[tuple[tuple[Piece, ...], int]]:
        """Every composable chain from ``start`` with pieces of drop 0 or 1."""
        def walk(g, path, dropped, seen):
            for pc in self.outgoing(g):
                dd = self.drop(pc)
                if dd not in (0, 1) or dropped + dd > max_drop:
                    continue
                if not path and pc.obstructed:
                    continue  # nothing precedes the obstructed joint
                if pc.target in seen:
                    continue
                new = path + (pc,)
                yield new, dropped + dd
                yield from walk(pc.target, new, dropped + dd, seen | {pc.target})
        yield from walk(start, (), 0, frozenset({start}))

    def enumerate_broken(self, start: str, end: str, total_drop: int,
                         gluable: bool = True) -> list[BrokenTrajectory]:
        s, e = self.gen(start), self.gen(end)
        if s == e:
            raise MalformedChain("start and end generators coincide")
        out = []
        for pieces, dropped in self.chains_from(s, total_drop):
            if dropped != total_drop or pieces[-1].target != e:
                continue
            bt = BrokenTrajectory(pieces, start, end)
            if gluable and not self.verdict(bt).gluable:
                continue
            out.append(bt)
        return out

    # -- verdicts -----------------------------------------------------------
    def verdict(self, bt: BrokenTrajectory) -> GluingVerdict:
        pcs = bt.pieces
        if not pcs:
            raise MalformedChain("empty chain")
        for a, b in zip(pcs, pcs[1:]):
            if a.target != b.source:
                raise MalformedChain(f"{a.record.id} does not end where {b.record.id} starts")
        for i, pc in enumerate(pcs):
            if self.drop(pc) not in (0, 1):
                raise MalformedChain(f"piece {pc.record.id} drops the grading by {self.drop(pc)}")
            if pc.obstructed and pc.record.xi_class is None:
                raise MalformedChain(f"piece {pc.record.id} lands on a side copy without a xi class")
            if pc.obstructed and i == 0:
                raise MalformedChain(f"obstructed piece {pc.record.id} has no predecessor")
        sign = 1
        for pc in pcs:
            sign *= pc.record.sign
        witness = []
        for i, pc in enumerate(pcs):
            if pc.record.xi_class is None or i == 0:
                continue
            f1 = pcs[i - 1].record.arrival_side
            f2 = 1 if pc.record.xi_class == "P" else -1
            if not pc.obstructed:
                return GluingVerdict(False, None, tuple(witness),
                                     f"{pc.record.id} is obstructed but lands on plain "
                                     f"{self.label(pc.target)}")
            f3 = pc.target.side
            witness.append((i + 1, f1, f2, f3))
            if f1 is None:
                return GluingVerdict(False, None, tuple(witness),
                                     f"{pcs[i - 1].record.id} has no arrival side")
            if f1 * f2 * f3 < 0:
                return GluingVerdict(False, None, tuple(witness),
                                     f"sign condition fails at {pc.record.id}")
            sign *= f3
        return GluingVerdict(True, sign, tuple(witness), "",
                             sign * (-1) ** len(pcs))

    # -- counts -------------------------------------------------------------
    def boundary_count(self, start: str, end: str) -> int:
        gap = self.grading(self.gen(start)) - self.grading(self.gen(end))
        if gap != 2:
            raise GradingMismatch(f"{start} -> {end} has grading gap {gap}, expected 2")
        return sum(self.verdict(bt).sign for bt in self.enumerate_broken(start, end, 2))

    def differential(self) -> GradedComplex:
        """Signed counts of gluable chains of grading drop 1."""
        basis: dict[int, list[str]] = {}
        for g in self.generators:
            basis.setdefault(self.grading(g), []).append(self.label(g))
        pos = {lab: i for k, labs in basis.items() for i, lab in enumerate(labs)}
        entries: dict[int, list[list[int]]] = {
            k: [[0] * len(basis[k]) for _ in basis.get(k - 1, [])] for k in basis}
        for g in self.generators:
            k = self.grading(g)
            for pieces, dropped in self.chains_from(g, 1):
                if dropped != 1:
                    continue
                bt = BrokenTrajectory(pieces, self.label(g), self.label(pieces[-1].target))
                v = self.verdict(bt)
                if v.gluable:
                    entries[k][pos[bt.end_generator]][pos[bt.start_generator]] += v.sign
        diffs = {k: IntMatrix(len(rows), len(basis[k]), [x for r in rows for x in r])
                 for k, rows in entries.items() if rows}
        return GradedComplex(basis, diffs, name=f"{self.inst.name}:generalized")

    def square_cross_check(self, C: Optional[GradedComplex] = None) -> list[dict]:
        """Compare d∘d entries with boundary counts on every grading-gap-2 pair."""
        C = C if C is not None else self.differential()
        rows = []
        for k in C.degrees:
            comp = C.d(k - 1) @ C.d(k)
            for j, src in enumerate(C.basis(k)):
                for i, tgt in enumerate(C.basis(k - 2)):
                    rows.append({"start": src, "end": tgt, "composite": comp[i, j],
                                 "count": self.boundary_count(src, tgt)})
        return rows


@lru_cache(maxsize=32)
def model(inst: MorseInstance) -> GluingModel:
    return GluingModel(inst)


def enumerate_broken(inst: MorseInstance, start: str, end: str, total_drop: int,
                     gluable: bool = True) -> list[BrokenTrajectory]:
    """Composable chains from ``start`` to ``end`` with the given grading drop.

    By default only gluable chains are returned; ``gluable=False`` lists every
    composable chain.
    """
    return model(inst).enumerate_broken(start, end, total_drop, gluable)


def verdict(inst: MorseInstance, bt: BrokenTrajectory) -> GluingVerdict:
    return model(inst).verdict(bt)


def boundary_count(inst: MorseInstance, start: str, end: str) -> int:
    return model(inst).boundary_count(start, end)


def differential_from_gluing(inst: MorseInstance) -> GradedComplex:
    return model(inst).differential()
