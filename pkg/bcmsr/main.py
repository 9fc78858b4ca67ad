import argparse
import logging
import sys
from typing import List, Optional

from bcmsr.core.config import APP_DESCRIPTION, APP_TITLE, APP_VERSION
from bcmsr.core.errors import ArtifactWriteError, BcmsrError, InvalidArgumentError
from bcmsr.core.utils import load_json, read_text, setup_logging
from bcmsr.models.schemas import RunConfig
from bcmsr.routes import COMMANDS

logger = logging.getLogger("bcmsr")

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3

# RunConfig fields that map onto a differently named flag
CONFIG_FLAGS = {"example": "example", "output_format": "format", "output_path": "out", "grid": "grid"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bcmsr", description=APP_TITLE, epilog=APP_DESCRIPTION)
    parser.add_argument("--version", action="version", version=f"%(prog)s {APP_VERSION}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for debug output")
    parser.add_argument("-q", "--quiet", action="store_true", help="only report errors")
    parser.add_argument("--config", default=None, help="JSON run configuration; flags override its values")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def apply_config(args: argparse.Namespace, path: str) -> RunConfig:
    """Fill every flag left unset on the command line from the config file."""
    data = load_json(read_text(path))
    if not isinstance(data, dict):
        raise InvalidArgumentError(f"{path} must hold a JSON object")
    config = RunConfig.model_validate({"command": args.command, **data})
    if config.command != args.command:
        raise InvalidArgumentError(f"{path} configures {config.command!r}, not {args.command!r}")

    for field in config.model_fields_set & set(CONFIG_FLAGS):
        flag = CONFIG_FLAGS[field]
        if hasattr(args, flag) and getattr(args, flag) is None:
            setattr(args, flag, getattr(config, field))
    for name, value in config.params.items():
        flag = name.replace("-", "_")
        if not hasattr(args, flag):
            raise InvalidArgumentError(f"{path}: {args.command} has no parameter {name!r}")
        if getattr(args, flag) is None:
            setattr(args, flag, value)
    logger.debug("merged configuration from %s", path)
    return config


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the command line"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    setup_logging(args.verbose, args.quiet)
    try:
        if args.config:
            apply_config(args, args.config)
        return args.handler(args)
    except ArtifactWriteError as exc:
        logger.error("%s", exc)
        return EXIT_IO
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        return EXIT_IO
    except (BcmsrError, ValueError) as exc:
        logger.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
