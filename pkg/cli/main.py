# =============================================================================
# CLI MAIN ENTRY POINT
# =============================================================================
"""
Command-line entry point.

    python -m cli.main spectrum --fixture linebundle-generic --grid 64
    python -m cli.main check --suite paper

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 acceptance
failure. Every failure is also reported as one JSON line on stderr.
"""

import argparse
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from src.wedgetrace.config import RunConfig, load_run_config
from src.wedgetrace.errors import EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION, WedgeTraceError

from .commands import COMMANDS
from .config import Settings, get_settings
from .schemas import Command, Diagnostic
from .services import RunContext, WorkerPool, parse_strip

logger = logging.getLogger("wedgetrace")

EVENT_FIELDS = ("stage", "wall_time", "residual", "y", "fixture")


# =============================================================================
# LOGGING SETUP
# =============================================================================

class NdjsonFormatter(logging.Formatter):
    """One JSON object per record: ts, level, logger, event and known extras."""

    def format(self, record: logging.LogRecord) -> str:
        event = {
            "ts": datetime.fromtimestamp(record.created, tz=timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "event": record.getMessage(),
        }
        for key in EVENT_FIELDS:
            if hasattr(record, key):
                event[key] = getattr(record, key)
        return json.dumps(event, ensure_ascii=False, default=str)


def setup_logging(settings: Settings, level: Optional[str] = None) -> None:
    handler = logging.StreamHandler(sys.stderr)
    if settings.LOG_FORMAT.lower() == "json":
        handler.setFormatter(NdjsonFormatter())
    else:
        handler.setFormatter(logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s', datefmt='%Y-%m-%d %H:%M:%S'))
    root = logging.getLogger()
    for old in list(root.handlers):
        root.removeHandler(old)
    root.addHandler(handler)
    root.setLevel((level or settings.LOG_LEVEL).upper())
    logging.captureWarnings(True)


# =============================================================================
# ARGUMENTS
# =============================================================================

class ArgumentError(ValueError):
    """Invalid command line."""


class _Parser(argparse.ArgumentParser):
    """Raises ArgumentError instead of exiting, so main can report it."""

    def error(self, message):
        raise ArgumentError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="wedgetrace",
        description="Boundary spectra, trace frames, pairings and variable-order norms for wedge operators.",
    )
    parser.add_argument("command", choices=[c.value for c in Command])
    parser.add_argument("--config", type=Path, help="JSON run configuration")
    parser.add_argument("--fixture", help="registered fixture name")
    parser.add_argument("--grid", type=int, help="number of y grid points")
    parser.add_argument("--nodes", type=int, help="contour quadrature nodes")
    parser.add_argument("--strip", help="strip as 'gamma,m'")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--threads", type=int, help="worker threads (default WEDGETRACE_THREADS)")
    parser.add_argument("--suite", default="paper", help="acceptance suite for check")
    parser.add_argument("--section", type=Path, help="boundary section CSV for varorder")
    parser.add_argument("--log-level", type=str.upper, choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="override LOG_LEVEL")
    return parser


def parse_args(argv: Optional[List[str]]) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def load_config(path: Optional[Path], settings: Settings) -> RunConfig:
    """--config, else the default config file if present, else built-in defaults."""
    if path is not None:
        return load_run_config(path)
    if settings.default_config_path.exists():
        return load_run_config(settings.default_config_path)
    logger.info("No configuration file; using defaults")
    return RunConfig()


def output_directory(args: argparse.Namespace, config: RunConfig, settings: Settings) -> Path:
    if args.out is not None:
        return args.out
    if "outputs" in config.model_fields_set:
        return Path(config.outputs.directory)
    return settings.OUTPUT_DIR


def build_context(args: argparse.Namespace, settings: Settings) -> RunContext:
    for name in ("grid", "nodes", "threads"):
        value = getattr(args, name)
        if value is not None and value < 1:
            raise ValueError(f"--{name} must be positive, got {value}")
    config = load_config(args.config, settings)
    return RunContext(
        config=config,
        settings=settings,
        pool=WorkerPool(settings.thread_count(args.threads)),
        out_dir=output_directory(args, config, settings),
        fixture_name=args.fixture,
        strip_override=parse_strip(args.strip) if args.strip else None,
        grid=args.grid,
        nodes=args.nodes,
        suite=args.suite,
        section_path=args.section,
    )


def report(error: str, message: str, context: Optional[dict] = None) -> None:
    diagnostic = Diagnostic(error=error, message=message, context=context or {})
    sys.stderr.write(json.dumps(diagnostic.model_dump(mode="json"), ensure_ascii=False, default=str) + "\n")


# =============================================================================
# MAIN
# =============================================================================

def main(argv: Optional[List[str]] = None) -> int:
    settings = get_settings()
    try:
        args = parse_args(argv)
    except ArgumentError as e:
        report("invalid_arguments", str(e))
        return EXIT_VALIDATION
    setup_logging(settings, args.log_level)
    command = Command(args.command)

    logger.info("=" * 60)
    logger.info(f"{settings.APP_NAME} v{settings.APP_VERSION}: {command.value}")
    logger.info("=" * 60)
    try:
        ctx = build_context(args, settings)
        artifacts = COMMANDS[command](ctx)
        artifacts.commit(ctx.out_dir)
    except ValidationError as e:
        report("invalid_config", "configuration failed validation", {"errors": e.errors(include_url=False)})
        return EXIT_VALIDATION
    except WedgeTraceError as e:
        logger.error(f"Numerical failure: {e.message}")
        report(e.code, e.message, e.context)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as e:
        report("invalid_input", str(e))
        return EXIT_VALIDATION

    if artifacts.exit_code != EXIT_OK:
        report("acceptance_failed", f"suite {ctx.suite} failed; see acceptance.json",
               {"output": str(ctx.out_dir / "acceptance.json")})
    else:
        logger.info(f"✅ {command.value} finished")
    return artifacts.exit_code


if __name__ == "__main__":
    sys.exit(main())
