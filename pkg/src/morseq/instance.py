"""Combinatorial Morse flow data: critical points, trajectory records, count blocks.

A dataset lists critical points and individual rigid trajectories.  Every
count matrix used by the complex builders is derived from these records by
:func:`block`, so the gluing module can see the same data piece by piece.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

from .errors import InvalidInstance, ParseError, UnknownName, ValidationError
from .linalg import IntMatrix

KINDS = ("closed-equivariant", "boundary-double", "generalized")
BUILTINS = ("torus", "klein", "interval", "genus2")

# The normal side through which boundary-double "N-side" data leaves or
# enters the fixed locus.
N_SIDE = -1


@dataclass(frozen=True)
class CriticalPoint:
    id: str
    index: int
    locus: str  # "interior" | "fixed"
    phi: str
    sigma: int
    stability: Optional[str] = None  # "stable" | "unstable" on the fixed locus
    grading: Optional[int] = None  # generalized instances only

    @property
    def fixed(self) -> bool:
        return self.locus == "fixed"

    @property
    def unstable(self) -> bool:
        return self.fixed and self.stability == "unstable"

    @property
    def stable(self) -> bool:
        return self.fixed and self.stability == "stable"

    @property
    def boundary_index(self) -> int:
        """ind for stable points, ind - 1 for unstable ones."""
        return self.index - 1 if self.unstable else self.index

    @property
    def block(self) -> str:
        """Generator class: 'o' interior, 's' stable, 'u' unstable."""
        if not self.fixed:
            return "o"
        return "u" if self.unstable else "s"


@dataclass(frozen=True)
class TrajectoryRecord:
    id: str
    source: str
    target: str
    carrier: str  # "ambient" | "fixed"
    sign: int
    departure_side: Optional[int] = None
    arrival_side: Optional[int] = None
    xi_class: Optional[str] = None  # "P" | "R"
    axis: Optional[str] = None


@dataclass(frozen=True)
class MorseInstance:
    name: str
    kind: str
    points: tuple[CriticalPoint, ...]
    trajectories: tuple[TrajectoryRecord, ...]

    def point(self, pid: str) -> CriticalPoint:
        for p in self.points:
            if p.id == pid:
                return p
        raise KeyError(pid)

    def points_of(self, cls: str) -> list[CriticalPoint]:
        return [p for p in self.points if p.block == cls]

    def record(self, rid: str) -> TrajectoryRecord:
        for t in self.trajectories:
            if t.id == rid:
                return t
        raise KeyError(rid)

    def validate(self, strict: Optional[bool] = None) -> "ValidationReport":
        return validate(self, strict)


@dataclass
class ValidationReport:
    problems: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    def add(self, rid: str, msg: str) -> None:
        self.problems.append((rid, msg))

    def __str__(self) -> str:
        if self.ok:
            return "valid"
        return "\n".join(f"{rid}: {msg}" for rid, msg in self.problems)


def validate(inst: MorseInstance, strict: Optional[bool] = None) -> ValidationReport:
    """Check every structural rule; the report lists (record id, problem)."""
    rep = ValidationReport()
    gen = inst.kind == "generalized"
    if strict is None:
        strict = inst.kind == "closed-equivariant"
    if inst.kind not in KINDS:
        rep.add(inst.name, f"unknown kind {inst.kind!r}")

    pts: dict[str, CriticalPoint] = {}
    for p in inst.points:
        if p.id in pts:
            rep.add(p.id, "duplicate point id")
        pts[p.id] = p
    for p in inst.points:
        if p.index < 0:
            rep.add(p.id, "negative index")
        if p.locus not in ("interior", "fixed"):
            rep.add(p.id, f"unknown locus {p.locus!r}")
        if p.sigma not in (1, -1):
            rep.add(p.id, "sigma must be 1 or -1")
        if p.fixed and p.stability not in ("stable", "unstable"):
            rep.add(p.id, "fixed point needs a stability")
        if not p.fixed and p.stability is not None:
            rep.add(p.id, "interior point cannot carry a stability")
        if p.phi not in pts:
            rep.add(p.id, f"phi image {p.phi!r} is not a point")
        else:
            if pts[p.phi].phi != p.id:
                rep.add(p.id, "phi is not an involution")
            if (p.phi == p.id) != p.fixed:
                rep.add(p.id, "phi fixes exactly the fixed-locus points")
            if pts[p.phi].index != p.index:
                rep.add(p.id, "phi must preserve the index")
        if gen and p.grading is None:
            rep.add(p.id, "generalized instances need a grading on every point")
        if not gen and p.grading is not None:
            rep.add(p.id, "grading is only allowed in generalized instances")

    seen: set[str] = set()
    for t in inst.trajectories:
        if t.id in seen:
            rep.add(t.id, "duplicate trajectory id")
        seen.add(t.id)
        _check_record(t, pts, gen, rep)

    if strict and rep.ok:
        _check_equivariance(inst, pts, rep)
    return rep


def _check_record(t: TrajectoryRecord, pts: dict, gen: bool, rep: ValidationReport) -> None:
    if t.sign not in (1, -1):
        rep.add(t.id, "sign must be 1 or -1")
    for name, v in (("depart", t.departure_side), ("arrive", t.arrival_side)):
        if v not in (None, 1, -1):
            rep.add(t.id, f"{name} must be 1 or -1")
    if t.xi_class not in (None, "P", "R"):
        rep.add(t.id, "xi must be P or R")
    if t.axis is not None and not gen:
        rep.add(t.id, "axis is only allowed in generalized instances")
    if t.source not in pts or t.target not in pts:
        rep.add(t.id, "endpoint does not resolve")
        return
    if t.source == t.target:
        rep.add(t.id, "trajectory cannot start and end at the same point")
        return
    p, q = pts[t.source], pts[t.target]
    if t.carrier == "ambient":
        if p.index - q.index != 1:
            rep.add(t.id, "ambient trajectory must drop the index by exactly 1")
        if p.stable:
            rep.add(t.id, "nothing leaves a stable fixed point off the fixed locus")
        if q.unstable:
            rep.add(t.id, "nothing reaches an unstable fixed point off the fixed locus")
        if (t.departure_side is not None) != p.unstable:
            rep.add(t.id, "departure side is required exactly when leaving an unstable fixed point")
        if (t.arrival_side is not None) != q.stable:
            rep.add(t.id, "arrival side is required exactly when reaching a stable fixed point")
        if t.xi_class is not None:
            rep.add(t.id, "xi class only applies to fixed-locus trajectories")
    elif t.carrier == "fixed":
        if not (p.fixed and q.fixed):
            rep.add(t.id, "fixed-locus trajectory needs fixed endpoints")
            return
        if not gen:
            if p.boundary_index - q.boundary_index != 1:
                rep.add(t.id, "fixed-locus trajectory must drop the boundary index by exactly 1")
            if t.departure_side is not None or t.arrival_side is not None:
                rep.add(t.id, "fixed-locus trajectories carry no side labels")
        if (t.xi_class is not None) != q.unstable:
            rep.add(t.id, "xi class is required exactly when the target is unstable")
    else:
        rep.add(t.id, f"unknown carrier {t.carrier!r}")


def _check_equivariance(inst: MorseInstance, pts: dict, rep: ValidationReport) -> None:
    """Ambient records must come in phi-pairs with flipped sides and twisted signs."""
    def key(t):
        return (t.source, t.target, t.departure_side, t.arrival_side, t.sign)

    def image(t):
        p, q = pts[t.source], pts[t.target]
        flip = lambda s: None if s is None else -s  # noqa: E731
        return (p.phi, q.phi, flip(t.departure_side), flip(t.arrival_side),
                p.sigma * q.sigma * t.sign)

    ambient = [t for t in inst.trajectories if t.carrier == "ambient"]
    counts = Counter(key(t) for t in ambient)
    for t in ambient:
        if counts[image(t)] != counts[key(t)]:
            rep.add(t.id, "no matching phi-image record (sides flipped, sign twisted by sigma)")


# -- count blocks ----------------------------------------------------------

@dataclass(frozen=True)
class CountBlock:
    source_generators: tuple[str, ...]
    target_generators: tuple[str, ...]
    matrix: IntMatrix


_SELECTOR = re.compile(r"^(d|dbar|P|R)_([osu])([+-]?)\^([osu])([+-]?)$")


def parse_selector(selector: str) -> tuple[str, str, Optional[int], str, Optional[int]]:
    """'d_s+^u-' -> ('d', 's', 1, 'u', -1): kind, target class and side, source class and side."""
    m = _SELECTOR.match(selector.replace("−", "-"))
    if not m:
        raise InvalidInstance(f"unknown block selector {selector!r}")
    kind, tc, ts, sc, ss = m.groups()
    side = {"": None, "+": 1, "-": -1}
    tside, sside = side[ts], side[ss]
    if kind == "d":
        if tc == "u" or sc == "s":
            raise InvalidInstance(f"selector {selector!r} names an empty ambient block")
        if tside is not None and tc != "s":
            raise InvalidInstance(f"arrival split only applies to stable targets: {selector!r}")
        if sside is not None and sc != "u":
            raise InvalidInstance(f"departure split only applies to unstable sources: {selector!r}")
    else:
        if "o" in (tc, sc) or tside is not None or sside is not None:
            raise InvalidInstance(f"fixed-locus selector {selector!r} must connect s/u classes")
        if kind in ("P", "R") and tc != "u":
            raise InvalidInstance(f"{kind} blocks end at unstable points: {selector!r}")
    return kind, tc, tside, sc, sside


def block(inst: MorseInstance, selector: str) -> CountBlock:
    """Signed count matrix for one of the named linear maps.

    Selectors read ``kind_target^source`` with kind in d (ambient), dbar
    (fixed locus), P, R (fixed locus into unstable points, split by xi class).
    A side after ``s`` filters the arrival side, after ``u`` the departure
    side.  An unsplit ambient ``u`` source keeps only N-side records.

    >>> block(builtin("torus"), "d_s^u+").matrix.tolist()
    [[1, 0], [0, 1]]
    """
    kind, tc, tside, sc, sside = parse_selector(selector)
    src = inst.points_of(sc)
    tgt = inst.points_of(tc)
    si = {p.id: j for j, p in enumerate(src)}
    ti = {p.id: i for i, p in enumerate(tgt)}
    rows = [[0] * len(src) for _ in tgt]
    for t in inst.trajectories:
        if t.source not in si or t.target not in ti:
            continue
        if kind == "d":
            if t.carrier != "ambient":
                continue
            if sc == "u":
                want = N_SIDE if sside is None else sside
                if t.departure_side != want:
                    continue
            if tside is not None and t.arrival_side != tside:
                continue
        else:
            if t.carrier != "fixed":
                continue
            if kind in ("P", "R") and t.xi_class != kind:
                continue
        rows[ti[t.target]][si[t.source]] += t.sign
    return CountBlock(tuple(p.id for p in src), tuple(p.id for p in tgt),
                      IntMatrix(len(tgt), len(src), [x for r in rows for x in r]))


def M(inst: MorseInstance, selector: str) -> IntMatrix:
    """Shorthand for ``block(inst, selector).matrix``."""
    return block(inst, selector).matrix


# -- file format -----------------------------------------------------------

_POINT_FIELDS = ("id", "index", "locus", "stability", "phi", "sigma", "grading")
_TRAJ_FIELDS = ("id", "from", "to", "carrier", "sign", "depart", "arrive", "xi", "axis")


def _line_of(text: str, fieldname: str, value) -> Optional[int]:
    pattern = re.compile(r'"%s"\s*:\s*%s' % (re.escape(fieldname), re.escape(json.dumps(value))))
    m = pattern.search(text)
    if m is None:
        m = re.search(r'"%s"' % re.escape(fieldname), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _sign(value, text, fieldname, optional=False):
    if value is None and optional:
        return None
    # literal 1 / -1 only; booleans and 1.0 are rejected
    if type(value) is not int or value not in (1, -1):
        raise ParseError(f"expected 1 or -1, got {value!r}",
                         line=_line_of(text, fieldname, value), field=fieldname)
    return value


def _choice(value, options, text, fieldname, optional=False):
    if value is None and optional:
        return None
    if value not in options:
        raise ParseError(f"expected one of {list(options)}, got {value!r}",
                         line=_line_of(text, fieldname, value), field=fieldname)
    return value


def _int(value, text, fieldname, optional=False):
    if value is None and optional:
        return None
    if type(value) is not int:
        raise ParseError(f"expected an integer, got {value!r}",
                         line=_line_of(text, fieldname, value), field=fieldname)
    return value


def _str(value, text, fieldname):
    if not isinstance(value, str):
        raise ParseError(f"expected a string, got {value!r}",
                         line=_line_of(text, fieldname, value), field=fieldname)
    return value


def _reject_unknown(obj: dict, allowed, text, where):
    if not isinstance(obj, dict):
        raise ParseError(f"{where} must be an object")
    for k in obj:
        if k not in allowed:
            raise ParseError(f"unknown field in {where}", line=_line_of(text, k, obj[k]), field=k)


def loads(text: str, validate_instance: bool = True) -> MorseInstance:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    _reject_unknown(raw, ("name", "kind", "points", "trajectories"), text, "instance")
    for key in ("name", "kind", "points", "trajectories"):
        if key not in raw:
            raise ParseError("missing field", field=key)
    name = _str(raw["name"], text, "name")
    kind = _choice(raw["kind"], KINDS, text, "kind")
    if not isinstance(raw["points"], list) or not isinstance(raw["trajectories"], list):
        raise ParseError("points and trajectories must be lists")
    points = []
    for obj in raw["points"]:
        _reject_unknown(obj, _POINT_FIELDS, text, "point")
        for key in ("id", "index", "locus", "phi", "sigma"):
            if key not in obj:
                raise ParseError("missing point field", field=key)
        points.append(CriticalPoint(
            id=_str(obj["id"], text, "id"),
            index=_int(obj["index"], text, "index"),
            locus=_choice(obj["locus"], ("interior", "fixed"), text, "locus"),
            stability=_choice(obj.get("stability"), ("stable", "unstable"), text,
                              "stability", optional=True),
            phi=_str(obj["phi"], text, "phi"),
            sigma=_sign(obj["sigma"], text, "sigma"),
            grading=_int(obj.get("grading"), text, "grading", optional=True),
        ))
    trajectories = []
    for obj in raw["trajectories"]:
        _reject_unknown(obj, _TRAJ_FIELDS, text, "trajectory")
        for key in ("id", "from", "to", "carrier", "sign"):
            if key not in obj:
                raise ParseError("missing trajectory field", field=key)
        axis = obj.get("axis")
        trajectories.append(TrajectoryRecord(
            id=_str(obj["id"], text, "id"),
            source=_str(obj["from"], text, "from"),
            target=_str(obj["to"], text, "to"),
            carrier=_choice(obj["carrier"], ("ambient", "fixed"), text, "carrier"),
            sign=_sign(obj["sign"], text, "sign"),
            departure_side=_sign(obj.get("depart"), text, "depart", optional=True),
            arrival_side=_sign(obj.get("arrive"), text, "arrive", optional=True),
            xi_class=_choice(obj.get("xi"), ("P", "R"), text, "xi", optional=True),
            axis=None if axis is None else _str(axis, text, "axis"),
        ))
    inst = MorseInstance(name, kind, tuple(points), tuple(trajectories))
    if validate_instance:
        rep = validate(inst)
        if not rep.ok:
            raise ValidationError(f"instance {name!r} is invalid:\n{rep}", rep.problems)
    return inst


def load(path, validate_instance: bool = True) -> MorseInstance:
    return loads(Path(path).read_text(encoding="utf-8"), validate_instance)


def to_dict(inst: MorseInstance) -> dict:
    points = []
    for p in inst.points:
        d = {"id": p.id, "index": p.index, "locus": p.locus}
        if p.stability is not None:
            d["stability"] = p.stability
        d["phi"] = p.phi
        d["sigma"] = p.sigma
        if p.grading is not None:
            d["grading"] = p.grading
        points.append(d)
    trajectories = []
    for t in inst.trajectories:
        d = {"id": t.id, "from": t.source, "to": t.target, "carrier": t.carrier, "sign": t.sign}
        for key, v in (("depart", t.departure_side), ("arrive", t.arrival_side),
                       ("xi", t.xi_class), ("axis", t.axis)):
            if v is not None:
                d[key] = v
        trajectories.append(d)
    return {"name": inst.name, "kind": inst.kind, "points": points, "trajectories": trajectories}


def dumps(inst: MorseInstance) -> str:
    return json.dumps(to_dict(inst), indent=2, ensure_ascii=False) + "\n"


def save(inst: MorseInstance, path) -> None:
    rep = validate(inst)
    if not rep.ok:
        raise ValidationError(f"refusing to save invalid instance:\n{rep}", rep.problems)
    Path(path).write_text(dumps(inst), encoding="utf-8")


def builtin(name: str) -> MorseInstance:
    if name not in BUILTINS:
        raise UnknownName(f"no builtin dataset {name!r}; choose from {', '.join(BUILTINS)}")
    text = resources.files("morseq.data").joinpath(f"{name}.json").read_text(encoding="utf-8")
    return loads(text)


def resolve(source: str) -> MorseInstance:
    """A builtin name or a path to a JSON file."""
    if source in BUILTINS:
        return builtin(source)
    return load(source)


def with_records(inst: MorseInstance, records: Iterable[TrajectoryRecord]) -> MorseInstance:
    return MorseInstance(inst.name, inst.kind, inst.points, tuple(records))
