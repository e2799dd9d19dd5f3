#!/usr/bin/env python
"""
conemorse - command line entry point.

    app.py s2-example --family {s,t,metric-eps,exact-alpha,perfect} [--param P]
                      [--grid NPHI NTHETA] [--mode {analytic,numeric,both}] [--step H]
                      [--cells-csv PATH]
    app.py morse-report INPUT
    app.py randcheck --trials N --seed S [--max-degrees D] [--max-dim K] [--ell L ...]

Every command takes --format {json,csv} and --out PATH. Exit codes: 0 success,
2 invalid input, 3 a numerical invariant failed.
"""
import argparse
import logging
import sys

from commands.morse_report import cmd_morse_report, morse_report_payload
from commands.randcheck import COLUMNS as RANDCHECK_COLUMNS
from commands.randcheck import cmd_randcheck
from commands.s2_example import FAMILIES, MODES, cmd_s2_example
from components.report_writer import emit, render
from config.settings import RunConfig, configure_logging, get_settings
from core.errors import NUMERICAL_EXIT, VALIDATION_EXIT, ConeMorseError
from core.morse_core import ConeMorseReport

logger = logging.getLogger(__name__)


def build_parser():
    parser = argparse.ArgumentParser(prog="conemorse", description="Cone Morse inequalities on finite data.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", dest="output_format", choices=RunConfig.FORMATS, default="json")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    s2 = sub.add_parser("s2-example", parents=[common], help="worked examples on the round sphere")
    s2.add_argument("--family", choices=FAMILIES, required=True)
    s2.add_argument("--param", type=float, default=None)
    s2.add_argument("--grid", type=int, nargs=2, metavar=("NPHI", "NTHETA"), default=None)
    s2.add_argument("--mode", choices=MODES, default="analytic")
    s2.add_argument("--step", type=float, default=None)
    s2.add_argument("--cells-csv", dest="cells_csv", default=None)

    report = sub.add_parser("morse-report", parents=[common], help="report on a Morse dataset")
    report.add_argument("input", help="JSON file or bundled dataset name")

    rand = sub.add_parser("randcheck", parents=[common], help="cone identities on random chain maps")
    rand.add_argument("--trials", type=int, default=100)
    rand.add_argument("--seed", type=int, required=True)
    rand.add_argument("--max-degrees", dest="max_degrees", type=int, default=6)
    rand.add_argument("--max-dim", dest="max_dim", type=int, default=5)
    rand.add_argument("--ell", dest="ell_list", type=int, nargs="+", default=None)
    return parser


def config_from_args(args, threads):
    params = {k: v for k, v in vars(args).items()
              if k not in ("command", "output_format", "out", "seed")}
    if args.command == "randcheck":
        if args.trials < 0 or args.max_degrees < 1 or args.max_dim < 0:
            raise ValueError("trials, max-degrees and max-dim must be non-negative (max-degrees >= 1)")
        if args.ell_list and any(ell < 0 for ell in args.ell_list):
            raise ValueError("--ell values must be non-negative")
    return RunConfig(command=args.command, params=params, output_format=args.output_format,
                     out=args.out, seed=getattr(args, "seed", None), threads=threads)


def failure_output(error):
    """(payload, rows) attached to a failing command, if any."""
    report = getattr(error, "report", None)
    if isinstance(report, ConeMorseReport):
        return morse_report_payload(report), report.to_rows()
    if isinstance(report, dict):
        return report, []
    return None


def run(config):
    """Dispatch ``config`` to its command; returns (payload, rows, csv columns)."""
    if config.command == 's2-example':
        payload, rows = cmd_s2_example(config)
        return payload, rows, None
    elif config.command == 'morse-report':
        payload, rows = cmd_morse_report(config)
        return payload, rows, None
    elif config.command == 'randcheck':
        payload, rows = cmd_randcheck(config)
        return payload, rows, RANDCHECK_COLUMNS
    raise ValueError(f"unknown command '{config.command}'")


def main(argv=None):
    """Parse arguments, run the command and return the exit code."""
    args = build_parser().parse_args(argv)
    try:
        settings = get_settings()
        configure_logging(settings.log_level)
        config = config_from_args(args, settings.threads)
        payload, rows, columns = run(config)
    except ConeMorseError as e:
        logger.error(f"{type(e).__name__}: {e}")
        output = failure_output(e)
        if output is not None:
            emit(render(output[0], output[1], args.output_format), args.out)
        return e.exit_code
    except (ValueError, OSError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return VALIDATION_EXIT

    emit(render(payload, rows, config.output_format, columns), config.out)
    if config.command == 'randcheck' and payload["failed"]:
        logger.error(f"randcheck: {payload['failed']} trial(s) failed, seeds {payload['failing_seeds']}")
        return NUMERICAL_EXIT
    return 0


if __name__ == "__main__":
    sys.exit(main())
