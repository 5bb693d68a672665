"""Command-line entry point.

Exit codes: 0 success, 2 config error, 3 property-check failure,
4 solver hard-failure rate above 20%.
"""

import argparse
import os
import sys

from .checks import SUITES, run_suite
from .errors import ConfigError
from .harness import (
    format_summary,
    load_config,
    parse_records,
    read_csv_lines,
    run_sweep,
    summarize,
    write_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PROPERTY = 3
EXIT_FAILURE_RATE = 4

FAILURE_RATE_LIMIT = 0.2


def _cmd_run(args):
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_path = os.path.join(args.out, cfg.output_path)
    existing = None
    if args.resume and os.path.exists(out_path):
        try:
            existing = read_csv_lines(out_path)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG

    lines, failure_rate = run_sweep(cfg, jobs=args.jobs, existing_lines=existing)
    write_csv(out_path, lines)
    print(f"{cfg.experiment_id}: wrote {len(lines)} rows to {out_path}")
    if failure_rate > FAILURE_RATE_LIMIT:
        print(
            f"solver failure rate {failure_rate:.1%} exceeds {FAILURE_RATE_LIMIT:.0%}",
            file=sys.stderr,
        )
        return EXIT_FAILURE_RATE
    return EXIT_OK


def _cmd_check(args):
    names = list(SUITES) if args.suite == "all" else [args.suite]
    results = []
    for name in names:
        results.extend((name, r) for r in run_suite(name, seed=args.seed))
    width = max(len(r.name) for _, r in results)
    ok = True
    for suite, r in results:
        status = "pass" if r.passed else "FAIL"
        ok &= r.passed
        print(f"[{suite:>12}] {r.name.ljust(width)}  {status}  {r.detail}")
    return EXIT_OK if ok else EXIT_PROPERTY


def _cmd_report(args):
    try:
        lines = read_csv_lines(args.csv)
        rows = summarize(parse_records(lines))
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(format_summary(rows))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="phaselab",
        description="Phase-retrieval experiment sweeps and property checks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a sweep config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--resume", action="store_true")
    p_run.add_argument("--out", required=True)
    p_run.set_defaults(func=_cmd_run)

    p_check = sub.add_parser("check", help="run a property suite")
    p_check.add_argument(
        "--suite", required=True, choices=sorted(SUITES) + ["all"]
    )
    p_check.add_argument("--seed", type=int, default=0)
    p_check.set_defaults(func=_cmd_check)

    p_report = sub.add_parser("report", help="summarize a result CSV")
    p_report.add_argument("--csv", required=True)
    p_report.set_defaults(func=_cmd_report)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
