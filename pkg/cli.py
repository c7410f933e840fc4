"""
trajminer - командная строка trajectory-miner.

    trajminer discover data/mini_log.xes --algorithm inductive
    trajminer --workers 4 conformance sepsis.xes.gz --diagnostics
    trajminer --config data/sepsis_config.json cohorts
"""
import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

import commands.pipeline  # noqa: F401  регистрирует подкоманды
from commands.router import EXIT_INVALID_CONFIG, dispatch_command, list_commands
from config import ALGORITHMS, INPUT_FORMATS, LOG_FORMATS, LOG_LEVELS, build_config
from errors import ConfigError
from monitoring import MetricsHandler
from utils import format_exception, setup_logging
from version import get_build, get_version

logger = logging.getLogger("trajminer")

# флаги подкоманд -> ключи RunConfig
_CONFIG_FLAGS = {
    "input": "input_path",
    "input_format": "input_format",
    "algorithm": "algorithm",
    "noise_threshold": "noise_threshold",
    "split_attribute": "split_attribute",
    "model": "model_path",
    "max_states": "max_alignment_states",
}
_HEURISTICS_FLAGS = (
    "dependency_threshold",
    "long_distance_threshold",
    "and_threshold",
    "min_activity_frequency",
)


def _add_input(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("input", nargs="?", help="event log (.xes, .csv, optionally .gz)")
    parser.add_argument("--format", dest="input_format", choices=INPUT_FORMATS,
                        help="log format (default: by file name)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trajminer",
        description="Process mining of patient trajectories: discovery, conformance, analytics",
    )
    parser.add_argument("--version", action="store_true", help="print version and exit")
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--log-level", choices=LOG_LEVELS, help="diagnostic verbosity (default INFO)")
    parser.add_argument("--log-format", choices=LOG_FORMATS, help="text or json diagnostics")
    parser.add_argument("--log-file", help="also write diagnostics to this file")
    parser.add_argument("--workers", type=int, help="threads for per-variant work (default 1)")
    parser.add_argument("-o", "--output-dir", help="directory for outputs (default: out)")
    parser.add_argument("--diagnostics", action="store_const", const=True,
                        help="include per-case details in reports")

    sub = parser.add_subparsers(dest="command", metavar="command")
    helps = {c.name: c.help for c in list_commands()}
    parsers = {name: sub.add_parser(name, help=text) for name, text in helps.items()}

    for name in ("convert", "discover", "conformance", "variants", "guidelines", "cohorts", "rules"):
        _add_input(parsers[name])

    parsers["convert"].add_argument("--output", help="target XES file (default: <output-dir>/log.xes)")

    discover = parsers["discover"]
    discover.add_argument("--algorithm", choices=ALGORITHMS, help="discovery algorithm (default inductive)")
    discover.add_argument("--noise", dest="noise_threshold", type=float,
                          help="inductive miner noise threshold in [0, 1] (default 0.0)")
    discover.add_argument("--dependency-threshold", type=float, help="heuristics: dependency threshold")
    discover.add_argument("--long-distance-threshold", type=float, help="heuristics: long-distance threshold")
    discover.add_argument("--and-threshold", type=float, help="heuristics: AND threshold")
    discover.add_argument("--min-activity-frequency", type=int,
                          help="heuristics: drop activities with fewer occurrences")
    discover.add_argument("--split-attribute", help="also discover one model per value of this event attribute")

    conformance = parsers["conformance"]
    conformance.add_argument("--model", help="PNML model (default: bundled systematic model)")
    conformance.add_argument("--max-states", type=int, help="alignment state budget per variant")

    parsers["variants"].add_argument("--top", type=int, help="show only the N most frequent variants")

    export = parsers["export"]
    source = export.add_mutually_exclusive_group()
    source.add_argument("--model", help="PNML model (default: bundled systematic model)")
    source.add_argument("--tree", help='process tree notation, e.g. Seq(a, Xor(b, tau))')
    return parser


def collect_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Значения флагов, заданных явно, в виде ключей RunConfig"""
    overrides: Dict[str, Any] = {
        "log_level": args.log_level,
        "log_format": args.log_format,
        "log_file": args.log_file,
        "workers": args.workers,
        "output_dir": args.output_dir,
        "diagnostics": args.diagnostics,
    }
    for flag, key in _CONFIG_FLAGS.items():
        overrides[key] = getattr(args, flag, None)
    return {k: v for k, v in overrides.items() if v is not None}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.version:
        print(f"trajminer {get_version()} (build {get_build()})")
        return 0
    if not args.command:
        parser.print_help(sys.stderr)
        return EXIT_INVALID_CONFIG

    try:
        config = build_config(args.config, collect_overrides(args))
        heuristics = {k: getattr(args, k, None) for k in _HEURISTICS_FLAGS}
        config.heuristics = {**config.heuristics, **{k: v for k, v in heuristics.items() if v is not None}}
    except ConfigError as e:
        setup_logging()
        logger.error(format_exception(e))
        return EXIT_INVALID_CONFIG

    setup_logging(config.log_level, config.log_file, config.log_format)
    logging.getLogger().addHandler(MetricsHandler())
    if logger.isEnabledFor(logging.DEBUG):
        logger.debug("trajminer %s", get_version())
    return dispatch_command(args.command, config, args)


if __name__ == "__main__":
    sys.exit(main())
