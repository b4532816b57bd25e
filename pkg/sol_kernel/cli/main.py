"""
Command-line front end

    sol run script.sol [--int-range -20..40] [--json]
    sol suite teleport [--option instances=50]
    sol list-suites
    sol print script.sol
"""

import argparse
import sys
import time
from typing import List, Optional

from ..logic.errors import ScriptError
from ..utils.config import MODES, Settings, load_settings, parse_int_range
from ..utils.log import log_error, set_debug
from .parser import parse, print_script
from .runner import ERROR, REFUTED, VALID, DirectiveResult, Report, SUITES, run_script, run_suite


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file with a \"settings\" object (default: $SOL_CONFIG)")
    parser.add_argument("--int-range", type=parse_int_range, help="Int enumeration range, e.g. -20..40")
    parser.add_argument("--tol", type=float, help="Numeric tolerance")
    parser.add_argument("--samples", type=int, help="Operator samples per free operator variable")
    parser.add_argument("--seed", type=int, help="Random seed")
    parser.add_argument("--max-dim", type=int, help="Largest matrix dimension evaluated")
    parser.add_argument("--max-states", type=int, help="Cap on enumerated classical states")
    parser.add_argument("--workers", type=int, help="Threads for entailment enumeration")
    parser.add_argument("--mode", choices=MODES, help="Entailment mode")
    parser.add_argument("--json", action="store_true", help="Print the JSON report")
    parser.add_argument("--timing", action="store_true", help="Include timings in the report")
    parser.add_argument("--debug", action="store_true", help="Print [DEBUG] lines")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sol", description="Symbolic Operator Logic kernel")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run a .sol script")
    run.add_argument("script")
    _common(run)

    suite = commands.add_parser("suite", help="Run a built-in suite")
    suite.add_argument("name", choices=sorted(SUITES))
    suite.add_argument("--option", action="append", default=[], metavar="KEY=N",
                       help="Integer suite option, e.g. instances=50")
    _common(suite)

    commands.add_parser("list-suites", help="List the built-in suites")

    show = commands.add_parser("print", help="Parse a script and print it in canonical form")
    show.add_argument("script")
    return parser


def settings_from_args(args: argparse.Namespace) -> Settings:
    settings = load_settings(args.config)
    settings = settings.with_overrides(
        int_range=args.int_range,
        tolerance=args.tol,
        samples=args.samples,
        seed=args.seed,
        max_dim=args.max_dim,
        max_states=args.max_states,
        workers=args.workers,
        mode=args.mode,
        debug_mode=True if args.debug else None,
    )
    set_debug(settings.debug_mode)
    return settings


def _options(pairs: List[str]) -> dict:
    options = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep:
            raise ValueError(f"Invalid option '{pair}', expected KEY=N")
        options[key.strip()] = int(value)
    return options


def _suite_report(name: str, settings: Settings, options: dict, timing: bool) -> Report:
    report = Report(f"suite {name}", settings)
    started = time.perf_counter()
    text = f"suite {name}" + "".join(f" {k} = {v}" for k, v in options.items()) + ";"
    try:
        suite = run_suite(name, settings, **options)
    except ScriptError as e:
        report.directives.append(DirectiveResult("suite", ERROR, text, 0, str(e)))
        return report
    total, failed = len(suite.outcomes), len(suite.failures)
    report.directives.append(DirectiveResult(
        "suite", VALID if suite.passed else REFUTED, text, 0, f"{total - failed}/{total} checks passed",
        suite.to_json(), time.perf_counter() - started,
    ))
    if timing:
        report.timing = time.perf_counter() - started
    return report


def _emit(report: Report, as_json: bool) -> int:
    print(report.dumps() if as_json else report.render())
    return report.exit_code


def _join_ranges(argv: List[str]) -> List[str]:
    # argparse reads "-20..40" as an option, so glue it to its flag
    out: List[str] = []
    for arg in argv:
        if out and out[-1] == "--int-range" and arg.startswith("-"):
            out[-1] = f"--int-range={arg}"
        else:
            out.append(arg)
    return out


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_ranges(argv))

    if args.command == "list-suites":
        for name in sorted(SUITES):
            print(f"{name:<20} {SUITES[name][1]}")
        return 0

    if args.command == "print":
        try:
            with open(args.script, "r", encoding="utf-8") as handle:
                print(print_script(parse(handle.read(), args.script)), end="")
        except (OSError, ScriptError) as e:
            log_error(str(e))
            return 3
        return 0

    try:
        settings = settings_from_args(args)
    except (OSError, ValueError) as e:
        log_error(f"Invalid configuration: {e}")
        return 3

    if args.command == "run":
        return _emit(run_script(args.script, settings, args.timing), args.json)

    try:
        options = _options(args.option)
    except ValueError as e:
        log_error(str(e))
        return 3
    return _emit(_suite_report(args.name, settings, options, args.timing), args.json)


if __name__ == "__main__":
    sys.exit(main())
