# cli.py
import argparse
import json
import logging
import sys

from typing import List, Optional

from dspolariton.config import COMMANDS, load_dotenv_if_exists, load_run_config
from dspolariton.exceptions import (
    ConfigError,
    ConvergenceError,
    DSPolaritonError,
    IntegrationError,
)
from dspolariton.runner import run
from dspolariton.utils import list_presets

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_SOLVER = 4
EXIT_IO = 5

LOG_FORMAT = "[%(name)s] %(message)s"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dspolariton",
        description="Dressed-state polariton lasing and superradiance simulator.",
    )
    parser.add_argument("command", nargs="?", choices=COMMANDS, help="what to compute (default: run.command)")
    parser.add_argument("--config", metavar="PATH", help="key = value or YAML run configuration")
    parser.add_argument("--preset", metavar="NAME", choices=list_presets(), help="start from a shipped preset")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--margin", type=float, help="numeric reading of '>>' in validity conditions")
    parser.add_argument("--tol", type=float, help="solver tolerance (gap equation, integrator rel_tol)")
    parser.add_argument(
        "--set",
        dest="overrides",
        metavar="KEY=VALUE",
        action="append",
        default=[],
        help="override one configuration key (repeatable)",
    )
    parser.add_argument("--workers", type=int, help="process pool size for phase diagrams")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="log solver details")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="log warnings and errors only")
    return parser


def _report_failure(error: Exception, status: int) -> int:
    payload = {
        "error": type(error).__name__,
        "message": str(error),
        "line": getattr(error, "line", None),
    }
    print(json.dumps(payload), file=sys.stderr)
    return status


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)
    load_dotenv_if_exists()
    logger.debug("arguments: %s", vars(args))

    try:
        config = load_run_config(args.preset, args.config, args.overrides)
        if args.command:
            config.set("run.command", args.command)
        if args.margin is not None:
            config.set("run.margin", args.margin)
        if args.tol is not None:
            config.set("run.tol", args.tol)
        if args.out:
            config.set("output.dir", args.out)
        if args.workers is not None and args.workers < 1:
            raise ConfigError(f"--workers must be positive, got {args.workers}")

        if config.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE

        run(config, workers=args.workers)
    except ConfigError as e:
        return _report_failure(e, EXIT_CONFIG)
    except (ConvergenceError, IntegrationError) as e:
        return _report_failure(e, EXIT_SOLVER)
    except OSError as e:
        return _report_failure(e, EXIT_IO)
    except (DSPolaritonError, ValueError) as e:
        return _report_failure(e, EXIT_ERROR)

    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
