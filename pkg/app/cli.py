# app/cli.py
"""Command-line front end.

    python -m app.cli mutate d3.json --sequence 3,1,2 --out mutated.json
    python -m app.cli fixpoints X0 --ranks 2,2,3,4
    python -m app.cli ifun GrBlock --ranks 1,2,0 --subsets "[[1]]" --box 1
    python -m app.cli check building-block --r 1 --n 2 --m 0
    python -m app.cli cycle --ranks 2,2,3,4

Exit status: 0 pass, 1 identity failure, 2 usage or configuration error.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

load_dotenv()
from app.core.config import settings
from app.core.errors import CONFIGURATION_ERRORS, EngineError, UsageError
from app.core.store import ReportStore, dump_json, write_text_atomic

logger = logging.getLogger("app.cli")

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class _Parser(argparse.ArgumentParser):
    """argparse that reports problems as UsageError instead of exiting."""

    def error(self, message: str):
        raise UsageError(message)


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--verbose", "-v", action="store_true", help="log per-degree terms and domain bounds")
    common.add_argument("--out", help="output path (a directory for check and cycle)")
    return common


def _check_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--box", type=int, default=None, help=f"comparison box radius (default {settings.DEFAULT_BOX})")
    parser.add_argument("--trials", type=int, default=None, help=f"generic points per pair (default {settings.DEFAULT_TRIALS})")
    parser.add_argument("--seed", type=int, default=None, help=f"master seed (default {settings.DEFAULT_SEED})")
    parser.add_argument("--jobs", type=int, default=None, help="worker processes")
    parser.add_argument("--select", default="all", help='fixed points: all, distinguished or "sample k"')
    parser.add_argument("--no-audit", action="store_true", help="skip the boundary-slack audit")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="quiver-duality", description="Quiver mutation and exact duality checks")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    common = _common()

    p = sub.add_parser("mutate", parents=[common], help="mutate a quiver file along a node sequence")
    p.add_argument("file", help="quiver file (JSON)")
    p.add_argument("--sequence", "--node", dest="sequence", required=True, help="node or sequence, e.g. 3,1,2")
    p.add_argument("--rule", choices=("paper", "conjecture", "none"), default="paper")
    p.add_argument("--log", help="write the per-step Kähler-map log here")
    p.add_argument("--no-potential", action="store_true", help="skip potential rewriting")

    p = sub.add_parser("fixpoints", parents=[common], help="list torus-fixed points of a family")
    p.add_argument("family")
    p.add_argument("--ranks", required=True)

    p = sub.add_parser("ifun", parents=[common], help="restricted I-function of one fixed point")
    p.add_argument("family")
    p.add_argument("--ranks", required=True)
    p.add_argument("--point", type=int, default=0, help="index into the enumeration")
    p.add_argument("--subsets", help='explicit point as JSON, e.g. "[[1]]"')
    p.add_argument("--box", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--no-prune", action="store_true")

    p = sub.add_parser("check", parents=[common], help="verify one duality identity")
    p.add_argument("identity", help="building-block, star, d3-cycle or a chain step such as Z1->Z2")
    p.add_argument("--ranks")
    p.add_argument("--r", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--reverse", action="store_true", help="check with the sides exchanged")
    _check_options(p)

    p = sub.add_parser("cycle", parents=[common], help="cumulative chain maps and every D3 chain step")
    p.add_argument("--ranks", default="2,2,3,4")
    _check_options(p)
    return parser


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else settings.log_level_value,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        write_text_atomic(out, text)
        logger.info(f"Wrote {out}")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_mutate(args) -> int:
    from app.api.services.catalogue import parse_int_list
    from app.api.services.quiver import emit_quiver, kahler_map_for, mutate_sequence, parse_quiver, quiver_to_json
    from app.core.errors import QuiverFileError

    try:
        text = Path(args.file).read_text(encoding="utf-8")
    except OSError as exc:
        raise QuiverFileError(f"Cannot read {args.file}: {exc.strerror}") from exc
    q = parse_quiver(text)
    sequence = parse_int_list(args.sequence, "sequence")
    results = mutate_sequence(q, sequence, not args.no_potential)

    log: List[Dict[str, Any]] = []
    for result in results:
        entry = {"mutation": result.to_json(), "quiver": quiver_to_json(result.quiver)}
        if args.rule != "none":
            try:
                entry["kahler_map"] = kahler_map_for(result, args.rule).to_json()
            except EngineError as exc:
                entry["kahler_map"] = None
                entry["kahler_error"] = exc.to_dict()
        log.append(entry)
    if args.log:
        write_text_atomic(args.log, dump_json({"sequence": list(sequence), "steps": log}))
    _emit(emit_quiver(results[-1].quiver), args.out)
    return EXIT_PASS


def cmd_fixpoints(args) -> int:
    from app.api.services.catalogue import parse_int_list
    from app.api.services.fixed_points import fixed_point_listing

    listing = fixed_point_listing(args.family, parse_int_list(args.ranks))
    _emit(dump_json(listing), args.out)
    return EXIT_PASS if listing["cardinality"]["ok"] else EXIT_FAIL


def cmd_ifun(args) -> int:
    from app.api.services.catalogue import parse_int_list
    from app.api.services.ifunctions import restricted_series

    subsets = None
    if args.subsets:
        try:
            subsets = json.loads(args.subsets)
        except json.JSONDecodeError as exc:
            raise UsageError(f"--subsets is not JSON: {exc.msg}") from exc
    payload = restricted_series(
        args.family,
        parse_int_list(args.ranks),
        args.point,
        subsets,
        args.box,
        args.seed,
        not args.no_prune,
    )
    _emit(dump_json(payload), args.out)
    return EXIT_PASS


def _spec_from(args, identity: str, ranks):
    from app.api.services.duality import CheckSpec

    overrides = {
        key: value
        for key, value in (("box", args.box), ("trials", args.trials), ("seed", args.seed), ("jobs", args.jobs))
        if value is not None
    }
    if args.no_audit:
        overrides["audit"] = False
    return CheckSpec(
        identity=identity,
        ranks=tuple(ranks),
        selection=args.select,
        reverse=getattr(args, "reverse", False),
        **overrides,
    )


def _run_and_store(spec, out: Optional[str]) -> int:
    from app.api.crud import report_crud
    from app.api.services.duality import PASS, timed_check

    report, seconds = timed_check(spec)
    store = ReportStore(out) if out else ReportStore()
    name = report_crud.save_report(store, report, seconds)
    logger.info(f"{name}: {report['verdict']} in {seconds:.2f}s")
    print(f"{report['identity']} {report['verdict']} ({store.path_for(name)})")
    return EXIT_PASS if report["verdict"] == PASS else EXIT_FAIL


def cmd_check(args) -> int:
    from app.api.services.catalogue import parse_int_list

    if args.ranks:
        ranks = parse_int_list(args.ranks)
    elif args.r is not None and args.n is not None:
        ranks = (args.r, args.n, args.m)
    else:
        raise UsageError("check needs --ranks, or --r and --n for the building block")
    return _run_and_store(_spec_from(args, args.identity, ranks), args.out)


def cmd_cycle(args) -> int:
    from app.api.services.catalogue import parse_int_list

    return _run_and_store(_spec_from(args, "d3-cycle", parse_int_list(args.ranks)), args.out)


COMMANDS = {
    "mutate": cmd_mutate,
    "fixpoints": cmd_fixpoints,
    "ifun": cmd_ifun,
    "check": cmd_check,
    "cycle": cmd_cycle,
}


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if not args.command:
            raise UsageError("No command given; use one of " + ", ".join(COMMANDS))
        configure_logging(args.verbose)
        return COMMANDS[args.command](args)
    except CONFIGURATION_ERRORS as exc:
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return EXIT_USAGE
    except EngineError as exc:
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    raise SystemExit(main())
