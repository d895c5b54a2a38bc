"""Command-line front end.

Exit codes: 0 success, 1 validation or computation failure, 2 usage error.
JSON reports are the stable contract; text output is for people.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional

from . import __version__
from .borel import borel_homology
from .builders import VARIANTS, build, g_action
from .chain import homology, verify_boundary_squared
from .errors import MorseqError, ParseError, ValidationError
from .instance import BUILTINS, builtin, load, validate


class UsageError(Exception):
    pass


def _instance(source: str, validate_instance: bool = True):
    if source in BUILTINS:
        return builtin(source)
    path = Path(source)
    if not path.is_file():
        raise UsageError(f"no builtin dataset or file named {source!r}")
    return load(path, validate_instance)


def _groups(groups: dict) -> dict:
    return {str(k): groups[k].to_dict() for k in sorted(groups)}


def cmd_list(args) -> tuple[int, dict]:
    rows = []
    for name in BUILTINS:
        inst = builtin(name)
        rows.append({"name": name, "kind": inst.kind, "points": len(inst.points),
                     "trajectories": len(inst.trajectories)})
    return 0, {"datasets": rows}


def cmd_validate(args) -> tuple[int, dict]:
    inst = _instance(args.source, validate_instance=False)
    rep = validate(inst, strict=None if not args.no_strict else False)
    return (0 if rep.ok else 1), {
        "instance": inst.name, "kind": inst.kind, "valid": rep.ok,
        "problems": [{"record": rid, "problem": msg} for rid, msg in rep.problems]}


def cmd_complex(args) -> tuple[int, dict]:
    inst = _instance(args.source)
    C = build(inst, args.variant)
    sq = verify_boundary_squared(C)
    body = {"instance": inst.name, "variant": args.variant,
            "basis": {str(k): C.basis(k) for k in C.degrees},
            "differential": {str(k): C.d(k).tolist() for k in C.degrees
                             if C.rank(k) and C.rank(k - 1)},
            "d_squared": "ok" if sq.ok else "nonzero"}
    if args.homology and sq.ok:
        body["homology"] = _groups(homology(C))
    return (0 if sq.ok else 1), body


def cmd_borel(args) -> tuple[int, dict]:
    inst = _instance(args.source)
    A = g_action(inst)
    groups = borel_homology(A.complex, A, args.kmax, args.columns)
    return 0, {"instance": inst.name, "kmax": args.kmax,
               "columns": args.columns if args.columns is not None else args.kmax + 1,
               "borel": _groups(groups)}


def cmd_glue_check(args) -> tuple[int, dict]:
    from .gluing import model
    inst = _instance(args.source)
    m = model(inst)
    if args.pair:
        a, b = args.pair
        gap = m.grading(m.gen(a)) - m.grading(m.gen(b))
        chains = []
        for bt in m.enumerate_broken(a, b, gap, gluable=False):
            v = m.verdict(bt)
            chains.append({"pieces": list(bt.ids), "gluable": v.gluable, "sign": v.sign,
                           "reason": v.reason})
        return 0, {"instance": inst.name, "start": a, "end": b, "drop": gap,
                   "chains": chains,
                   "count": sum(c["sign"] for c in chains if c["gluable"])}
    G = m.differential()
    body = {"instance": inst.name}
    ok = True
    if inst.kind != "generalized":
        B = build(inst, "bold") if inst.kind == "closed-equivariant" else None
        if B is not None:
            agree = all(B.basis(k) == G.basis(k) and B.d(k) == G.d(k) for k in B.degrees)
            body["matches_bold"] = agree
            ok &= agree
    rows = m.square_cross_check(G)
    bad = [r for r in rows if r["count"] != r["composite"] or r["count"] != 0]
    body["gap2_pairs"] = len(rows)
    body["disagreements"] = bad
    ok &= not bad
    body["status"] = "ok" if ok else "fail"
    return (0 if ok else 1), body


def cmd_flow_verify(args) -> tuple[int, dict]:
    from .flow import TorusChart, verify_against
    from .errors import Mismatch
    if args.source != "torus":
        raise UsageError("the flow verifier only knows the torus")
    try:
        rep = verify_against(builtin("torus"), TorusChart(), samples=args.samples,
                             step=args.step, arrival_eps=args.arrival_eps)
    except Mismatch as exc:
        return 1, {"instance": "torus", "matched": False, "diff": exc.diff}
    trajs = [{"source": t.source, "target": t.target, "carrier": t.carrier,
              "depart": t.depart, "arrive": t.arrive, "xi": t.xi}
             for t in rep.recovered.trajectories]
    return 0, {"instance": "torus", "matched": True, "energy_monotone": rep.recovered.monotone,
               "trajectories": trajs}


def _parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentParser(add_help=False)
    fmt.add_argument("--format", choices=("json", "text"), default="text")
    p = argparse.ArgumentParser(prog="morseq", parents=[fmt],
                                description="Equivariant Morse complexes over the integers.")
    p.add_argument("--version", action="version", version=f"morseq {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("list", parents=[fmt], help="list builtin datasets")
    s.set_defaults(func=cmd_list)

    s = sub.add_parser("validate", parents=[fmt], help="validate an instance")
    s.add_argument("source")
    s.add_argument("--no-strict", action="store_true", help="skip the equivariance check")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("complex", parents=[fmt], help="build a complex")
    s.add_argument("source")
    s.add_argument("--variant", choices=VARIANTS, required=True)
    s.add_argument("--homology", action="store_true")
    s.set_defaults(func=cmd_complex)

    s = sub.add_parser("borel", parents=[fmt], help="Borel equivariant homology")
    s.add_argument("source")
    s.add_argument("--kmax", type=int, default=5)
    s.add_argument("--columns", type=int, default=None, help="column limit (default kmax + 1)")
    s.set_defaults(func=cmd_borel)

    s = sub.add_parser("glue-check", parents=[fmt], help="cross-check the differential by gluing")
    s.add_argument("source")
    s.add_argument("--pair", nargs=2, metavar=("START", "END"))
    s.set_defaults(func=cmd_glue_check)

    s = sub.add_parser("flow-verify", parents=[fmt], help="numerical check of the torus data")
    s.add_argument("source")
    s.add_argument("--step", type=float, default=1e-3)
    s.add_argument("--samples", type=int, default=720)
    s.add_argument("--arrival-eps", type=float, default=1e-5)
    s.set_defaults(func=cmd_flow_verify)
    return p


def _style(text: str, ok: bool) -> str:
    if os.environ.get("MORSEQ_NO_COLOR") or not sys.stdout.isatty():
        return text
    return f"\033[{32 if ok else 31}m{text}\033[0m"


def _render_text(report: dict, code: int) -> str:
    lines = []
    for key, value in report.items():
        if key in ("version", "command"):
            continue
        if isinstance(value, dict) and value and all(isinstance(v, dict) for v in value.values()):
            lines.append(f"{key}:")
            for k, v in value.items():
                if set(v) == {"betti", "torsion"}:
                    parts = (["Z" if v["betti"] == 1 else f"Z^{v['betti']}"] if v["betti"] else [])
                    parts += [f"Z/{t}" for t in v["torsion"]]
                    v = " + ".join(parts) or "0"
                lines.append(f"  {k}: {v}")
        elif isinstance(value, list):
            lines.append(f"{key}: {len(value)} item(s)")
            lines.extend(f"  {json.dumps(v, ensure_ascii=False)}" for v in value)
        else:
            lines.append(f"{key}: {value}")
    lines.append(_style("ok" if code == 0 else "FAILED", code == 0))
    return "\n".join(lines)


def main(argv: Optional[list[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        code, body = args.func(args)
    except UsageError as exc:
        print(f"morseq: error: {exc}", file=sys.stderr)
        return 2
    except (ParseError, ValidationError, MorseqError) as exc:
        code, body = 1, {"error": type(exc).__name__, "message": str(exc)}
    report = {"version": __version__, "command": argv}
    report.update(body)
    if args.format == "json":
        print(json.dumps(report, indent=2, ensure_ascii=False))
    else:
        print(_render_text(report, code))
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
