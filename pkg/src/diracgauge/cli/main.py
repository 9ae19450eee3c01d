"""Command-line entry point."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from .commands import SCHEMA, run
from .dsl import ParseError, parse


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--timing", action="store_true", help="include wall-clock time in the report")
    common.add_argument("--seed", type=int, default=0, help="seed for the sampling oracle")

    ap = argparse.ArgumentParser(prog="diracgauge", description="Exact gauging of Dirac sigma models.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="check an integrability condition")
    p.add_argument("what", choices=["poisson", "dirac", "gjac"])
    p.add_argument("model", type=Path, help="model description file")

    for name, extra in (("symmetries", "symmetry generators in g or g~"),
                        ("extend", "solve for the equivariant extension")):
        p = sub.add_parser(name, parents=[common], help=extra)
        p.add_argument("model", type=Path)
        p.add_argument("--degree", type=int, default=None)
        p.add_argument("--algebra", choices=["g", "gtilde"], default="g" if name == "symmetries" else None,
                       required=name == "extend")
        if name == "extend":
            p.add_argument("--assert-orbit-nondegenerate", dest="assert_orbit", action="store_true")
            p.add_argument("--slack", type=int, default=None,
                           help="extra coefficient degrees to try before giving up")

    p = sub.add_parser("gauge", parents=[common], help="assemble and emit the gauged action")
    p.add_argument("model", type=Path)
    p.add_argument("--degree", type=int, default=None)
    p.add_argument("--emit", dest="emit_format", choices=["latex", "json"], default=None)
    p.add_argument("--out", type=Path, default=None, help="write the emitted action here")
    p.add_argument("--assert-orbit-nondegenerate", dest="assert_orbit", action="store_true")

    p = sub.add_parser("standard-extend", parents=[common], help="check the four standard extension conditions")
    p.add_argument("model", type=Path)

    p = sub.add_parser("oracle", parents=[common], help="sample the model's defining identity")
    p.add_argument("model", type=Path)
    p.add_argument("--samples", type=int, default=20)
    return ap


def _fail_parse(command: str, exc: ParseError) -> int:
    doc = {"schema": SCHEMA, "command": command, "status": "parse-error",
           "error": {"message": exc.message, "line": exc.line, "column": exc.col}}
    print(json.dumps(doc, indent=2))
    print(f"error: {exc}", file=sys.stderr)
    return 2


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    command = args.command
    try:
        text = args.model.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: cannot read {args.model}: {exc}", file=sys.stderr)
        return 2
    try:
        spec = parse(text)
    except ParseError as exc:
        label = f"check {args.what}" if command == "check" else command
        return _fail_parse(label, exc)

    opts = {}
    if command == "check":
        opts["what"] = args.what
    if getattr(args, "degree", None) is not None:
        opts["degree"] = args.degree
    for key in ("algebra", "assert_orbit", "emit_format", "samples", "slack"):
        if getattr(args, key, None) is not None:
            opts[key] = getattr(args, key)
    rep = run(command, spec, seed=args.seed, timing=args.timing, **opts)

    out = getattr(args, "out", None)
    if rep.emitted is not None and out is None:
        print(rep.emitted)
    else:
        if rep.emitted is not None:
            out.write_text(rep.emitted + "\n", encoding="utf-8")
        print(rep.to_json())
    return rep.exit_code


if __name__ == "__main__":
    sys.exit(main())
