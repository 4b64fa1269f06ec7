"""Command line: ``d2dalloc gen | solve | compare | sweep``.

Exit codes: 0 success, 2 bad input or I/O failure, 3 invariant violation.
``D2DALLOC_CONFIG_DIR`` names a directory whose ``gen.json`` / ``sweep.json``
are used when ``--config`` / ``--spec`` are omitted.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import io as dio
from .dp import DpOptions, StateBudgetExceeded, dp_solve
from .exhaustive import BudgetExceeded, EnumOptions, exhaustive_solve
from .greedy import GreedyOptions, greedy_solve
from .harness import InvariantViolation, SweepSpec, rows_to_csv, run_compare, run_sweep, summary_path
from .scenario import GenConfig, generate

CONFIG_DIR_ENV = "D2DALLOC_CONFIG_DIR"
EXIT_OK, EXIT_INPUT, EXIT_INVARIANT = 0, 2, 3

log = logging.getLogger("d2dalloc")


class InputError(Exception):
    pass


def _default_file(name: str):
    root = os.environ.get(CONFIG_DIR_ENV)
    if root and (Path(root) / name).is_file():
        return Path(root) / name
    return None


def cmd_gen(args) -> int:
    path = args.config or _default_file("gen.json")
    cfg = GenConfig.from_dict(dio.load_json(path)) if path else GenConfig()
    if args.seed is not None:
        cfg = cfg.replace(master_seed=args.seed)
    dio.save_scenario(args.out, generate(cfg))
    return EXIT_OK


def cmd_solve(args) -> int:
    scenario = dio.load_scenario(args.scenario)
    if args.algo == "dp":
        if args.restrict_sharing:
            log.info("dp: --restrict-sharing applied to the DP feasible sets")
        res = dp_solve(scenario, DpOptions(force_d2d_mode_only=args.force_d2d_mode,
                                           restrict_one_d2d_per_channel=args.restrict_sharing,
                                           per_hop_qos=args.per_hop_qos))
    elif args.algo == "greedy":
        res = greedy_solve(scenario, GreedyOptions(restrict_one_d2d_per_channel=args.restrict_sharing,
                                                   force_d2d_mode_only=args.force_d2d_mode))
    else:
        res = exhaustive_solve(scenario, EnumOptions(restrict_one_d2d_per_channel=args.restrict_sharing,
                                                     force_d2d_mode_only=args.force_d2d_mode,
                                                     budget=args.budget))
    doc = dio.result_to_dict(res)
    if args.out:
        dio.save_json(args.out, doc)
    else:
        sys.stdout.write(dio.dumps(doc))
    return EXIT_OK


def cmd_compare(args) -> int:
    scenario = dio.load_scenario(args.scenario)
    rows, problems = run_compare(scenario, args.algos.split(","), budget=args.budget, check=False)
    text = rows_to_csv(rows)
    if args.out:
        dio.write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    for p in problems:
        log.error("invariant violated: %s", p)
    return EXIT_INVARIANT if problems else EXIT_OK


def cmd_sweep(args) -> int:
    path = args.spec or _default_file("sweep.json")
    if not path:
        raise InputError("no sweep spec given")
    spec = SweepSpec.from_dict(dio.load_json(path))
    if args.seed is not None:
        spec.base = spec.base.replace(master_seed=args.seed)
    output = args.out or spec.output
    if not output:
        raise InputError("sweep needs an output path (--out or 'output' in the spec)")
    outcome = run_sweep(spec, workers=args.workers, output=output)
    log.info("wrote %d rows to %s and %s", len(outcome.rows), output, summary_path(output))
    for p in outcome.problems:
        log.error("invariant violated: %s", p)
    return EXIT_INVARIANT if outcome.problems else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="d2dalloc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random scenario")
    p.add_argument("--config", type=Path)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="solve one scenario")
    p.add_argument("--algo", choices=("dp", "greedy", "exhaustive"), required=True)
    p.add_argument("--scenario", type=Path, required=True)
    p.add_argument("--restrict-sharing", action="store_true")
    p.add_argument("--force-d2d-mode", action="store_true")
    p.add_argument("--per-hop-qos", action="store_true")
    p.add_argument("--budget", type=int, default=10 ** 6)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("compare", help="run several algorithms on one scenario")
    p.add_argument("--scenario", type=Path, required=True)
    p.add_argument("--algos", default="dp,greedy,greedy+restricted")
    p.add_argument("--budget", type=int, default=10 ** 6)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="run a seeded parameter sweep")
    p.add_argument("--spec", type=Path)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InvariantViolation as exc:
        log.error("invariant violated: %s", exc)
        return EXIT_INVARIANT
    except (InputError, OSError, ValueError, KeyError, TypeError, json.JSONDecodeError,
            BudgetExceeded, StateBudgetExceeded) as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
