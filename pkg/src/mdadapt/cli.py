"""Command-line interface.

Subcommands map one-to-one onto pipeline stages plus `run` (all stages)
and `compare` (align finished reports). Flag values override config-file
values.
"""

import argparse
import sys

from . import __version__
from .errors import MdadaptError
from .fileio import read_report
from .pipeline import (
    STAGES,
    apply_condition,
    compare_conditions,
    load_config,
    run_experiment,
    write_comparison,
)

_STAGE_COMMANDS = {
    "gen": ["data"],
    "partition": ["partition"],
    "train": ["train"],
    "extract": ["extract"],
    "backend": ["backend"],
    "score": ["score"],
    "eval": ["eval"],
}


def _add_common_flags(parser):
    parser.add_argument("--config", help="experiment config file (key = value lines)")
    parser.add_argument("--seed", type=int, help="root random seed")
    parser.add_argument("--out", help="output directory for all artifacts")
    parser.add_argument("--lambda", dest="grl_lambda", type=float,
                        help="gradient-reversal trade-off weight")
    parser.add_argument("--condition", help="adaptation condition preset "
                        "(DAT, MS-DAT, MT-DAT, MDAT, *-KMEANS)")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mdadapt",
        description="Multi-domain adversarial adaptation experiments for "
        "speaker verification on vector inputs.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, stages in _STAGE_COMMANDS.items():
        p = sub.add_parser(name, help=f"run the {stages[0]} stage")
        _add_common_flags(p)

    p_run = sub.add_parser("run", help="run the full pipeline")
    _add_common_flags(p_run)
    p_run.add_argument("--stages", help="comma-separated subset of stages to run "
                       f"({','.join(STAGES)})")

    p_cmp = sub.add_parser("compare", help="summarize finished reports")
    p_cmp.add_argument("reports", nargs="+", help="report.tsv files; the first "
                       "is the reference condition")
    p_cmp.add_argument("--out-file", default="comparison.tsv",
                       help="where to write the summary table")
    return parser


def _config_from_args(args):
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise MdadaptError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.grl_lambda is not None:
        overrides["grl_lambda"] = args.grl_lambda
    cfg = load_config(args.config, overrides)
    if args.condition:
        cfg = apply_condition(cfg, args.condition)
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "compare":
            reports = [read_report(path) for path in args.reports]
            rows = compare_conditions(reports)
            write_comparison(rows, args.out_file)
            best = next(row for row in rows if row["best"])
            print(f"wrote {args.out_file}; best condition: {best['condition']} "
                  f"(EER {best['eer']:.2f}%)")
            return 0
        cfg = _config_from_args(args)
        if args.command == "run":
            stages = args.stages.split(",") if args.stages else None
            report = run_experiment(cfg, stages=stages)
        else:
            report = run_experiment(cfg, stages=_STAGE_COMMANDS[args.command])
        if report:
            print(f"condition {report['condition']}: "
                  f"baseline EER {report['baseline.eer']}%, "
                  f"adapted EER {report['adapted.eer']}% "
                  f"(reduction {report['relative_reduction.eer']}%)")
        return 0
    except MdadaptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
