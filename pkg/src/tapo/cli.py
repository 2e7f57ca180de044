"""Command-line interface: batch scenario runs, interactive sessions, KB
checking, and the HTTP session service."""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import presheaf, scenario as scn, service
from .dsl import ParseError, parse_kb_document
from .syntax import TapoError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tapo",
        description="Run, check, and serve layered knowledge-state scenarios.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario file in batch mode")
    run_p.add_argument("file")
    run_p.add_argument("--fuel", type=int, default=None,
                       help="loop-unfolding budget (overrides the file and TAPO_FUEL)")
    run_p.add_argument("--trace", metavar="OUT",
                       help="write the run trace as JSON")
    run_p.add_argument("--emit-derivations", metavar="DIR",
                       help="write per-step proof trees into DIR")

    int_p = sub.add_parser("interactive",
                           help="run a scenario, asking the human for answers")
    int_p.add_argument("file")
    int_p.add_argument("--fuel", type=int, default=None)

    check_p = sub.add_parser("check",
                             help="parse a KB file and run invariant and "
                                  "functoriality checks")
    check_p.add_argument("file")

    serve_p = sub.add_parser("serve", help="start the HTTP session service")
    serve_p.add_argument("--bind", default="127.0.0.1:8420", metavar="HOST:PORT")
    serve_p.add_argument("--fuel", type=int, default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "interactive":
            return scn.interactive_run(args.file, args.fuel)
        if args.command == "check":
            return _cmd_check(args)
        if args.command == "serve":
            service.serve(args.bind, args.fuel)
            return 0
    except (ParseError, TapoError) as err:
        print(f"error: {err}", file=sys.stderr)
        return scn.EXIT_ERROR
    return 0


def _cmd_run(args) -> int:
    result = scn.run_file(args.file, args.fuel,
                          emit_derivations=args.emit_derivations is not None)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as handle:
            json.dump(result.trace.to_json(), handle, indent=2)
    if args.emit_derivations:
        os.makedirs(args.emit_derivations, exist_ok=True)
        for summary in result.summaries:
            for i, tree in enumerate(summary.derivations):
                path = os.path.join(args.emit_derivations,
                                    f"step{summary.index}_{i}.json")
                with open(path, "w", encoding="utf-8") as handle:
                    json.dump(tree, handle, indent=2)
    for failure in result.failures:
        print(f"FAIL {failure}")
    checked = len(result.scenario.expectations)
    if result.ok:
        print(f"ok: {result.scenario.name} ({checked} expectations)")
    else:
        print(f"failed: {result.scenario.name} "
              f"({len(result.failures)} problems)", file=sys.stderr)
    return result.exit_status


def _cmd_check(args) -> int:
    with open(args.file, encoding="utf-8") as handle:
        doc = parse_kb_document(handle.read())
    doc.signature.validate()
    for ctx, obj in sorted(doc.objects.items()):
        obj.state.validate()
        for frame in obj.obox.values():
            frame.validate()
    print(f"parsed: {len(doc.objects)} contexts, "
          f"{sum(len(o.state.abox) for o in doc.objects.values())} assertions, "
          f"{sum(len(o.pbox) for o in doc.objects.values())} programs, "
          f"{sum(len(o.obox) for o in doc.objects.values())} frames")
    family = presheaf.StateFamily(doc.signature.contexts, doc.objects,
                                  doc.restrictions)
    family.validate()
    report = presheaf.check_functoriality(family)
    print(json.dumps(report.to_json(), indent=2))
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
