"""Command-line entry point: ``edgelift {check,simulate,matching,rank}``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .admissibility import CERTIFIED, INCONCLUSIVE, REFUTED
from .errors import DisconnectedGraph, EdgeLiftError, SchemaError
from .scenario import dumps, load_scenario, run_check, run_matching, run_rank, run_simulate

EXIT_CODES = {CERTIFIED: 0, REFUTED: 2, INCONCLUSIVE: 3}
EXIT_ERROR = 1

log = logging.getLogger("edgelift")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("scenario", help="path to a scenario JSON file")
    common.add_argument("--seed", type=int)
    common.add_argument("--samples", type=int, help="number of sampled states for rank tests")
    common.add_argument("--tree-cap", type=int, help="maximum spanning trees to examine")
    common.add_argument("--dt", type=float)
    common.add_argument("--t-final", type=float)
    common.add_argument("--out", default="out", help="output directory")

    ap = argparse.ArgumentParser(prog="edgelift", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common],
                   help="certify admissibility (exit 0 certified, 2 refuted, 3 inconclusive)")
    sub.add_parser("simulate", parents=[common], help="simulate and write CSV + metrics JSON")
    sub.add_parser("matching", parents=[common], help="write H_T and its matching as DOT + JSON")
    sub.add_parser("rank", parents=[common], help="print sampled ranks of A and J")
    return ap


def _fail(kind: str, message: str, **extra) -> int:
    print(dumps({"error": kind, "message": message, **extra}), end="")
    return EXIT_ERROR


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("EDGELIFT_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    try:
        scn = load_scenario(args.scenario).with_overrides(
            seed=args.seed, samples=args.samples, tree_cap=args.tree_cap,
            dt=args.dt, t_final=args.t_final)
    except OSError as exc:
        return _fail("IOError", str(exc))
    except SchemaError as exc:
        return _fail("SchemaError", exc.reason, path=exc.path)

    try:
        if args.command == "check":
            report = run_check(scn).to_dict()
            report["scenario_digest"] = scn.digest()
            print(dumps(report), end="")
            return EXIT_CODES[report["verdict"]]
        if args.command == "rank":
            print(dumps(run_rank(scn)), end="")
            return 0
        if args.command == "matching":
            print(dumps(run_matching(scn, args.out)), end="")
            return 0
        report = run_simulate(scn, args.out)
        print(dumps(report.to_dict()), end="")
        return EXIT_ERROR if report.terminated else 0
    except DisconnectedGraph as exc:
        return _fail("DisconnectedGraph", str(exc))
    except (EdgeLiftError, OSError, ValueError) as exc:
        log.debug("command failed", exc_info=True)
        return _fail(type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
