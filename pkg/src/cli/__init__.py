"""
Command-Line Interface

Dispatches subcommands and maps failures to exit codes:
1 usage, 2 validation, 3 I/O, 4 numeric.
"""

import sys
from typing import Optional, Sequence

from config.config import LOG_BACKUP_COUNT, MAX_LOG_SIZE_MB
from config.logging_config import get_logger, setup_logging
from ..core_model.errors import NumericError, ValidationError
from .commands import COMMANDS, read_json_config
from .parser import EXIT_IO, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, CliArgumentParser, build_parser

logger = get_logger("cli")

# These subcommands read --config as their own dataclass config
DATACLASS_CONFIG_COMMANDS = ("synth", "train")


def parse_arguments(parser: CliArgumentParser, argv: Optional[Sequence[str]]):
    """
    Parse argv; for subcommands without a dataclass config, --config holds
    defaults for that subcommand's own options (explicit flags still win).
    """
    args = parser.parse_args(argv)
    if args.config and args.command not in DATACLASS_CONFIG_COMMANDS:
        subparser = parser.subcommands[args.command]
        data = read_json_config(args.config)
        known = {action.dest for action in subparser._actions}
        unknown = set(data) - known
        if unknown:
            subparser.error(f"unknown keys in {args.config}: {sorted(unknown)}")
        subparser.set_defaults(**data)
        args = parser.parse_args(argv)
    return args


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand and return its exit code."""
    parser = build_parser()
    try:
        args = parse_arguments(parser, argv)
        setup_logging(args.log_level, args.log_file, MAX_LOG_SIZE_MB, LOG_BACKUP_COUNT)
        return COMMANDS[args.command](args) or EXIT_OK
    except SystemExit as e:
        # argparse: --help/--version exit 0, usage errors exit EXIT_USAGE
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    except ValidationError as e:
        logger.error(f"Validation failed: {e}")
        return EXIT_VALIDATION
    except NumericError as e:
        logger.error(f"Numeric failure: {e}")
        return EXIT_NUMERIC
    except OSError as e:
        logger.error(f"I/O failure: {e}")
        return EXIT_IO


def main(argv: Optional[Sequence[str]] = None):
    sys.exit(run(argv))


__all__ = ['run', 'main', 'build_parser', 'COMMANDS']
