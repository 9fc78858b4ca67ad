"""``bcmsr fme``: Fourier-Motzkin elimination on a system in the inequality text format."""

import argparse
import logging
from typing import List, Optional

from bcmsr.core.errors import InvalidArgumentError
from bcmsr.core.polyregion import fme_project, format_system, parse_system, prune_redundant
from bcmsr.core.utils import read_text, write_artifact

logger = logging.getLogger(__name__)


def _names(text: Optional[str]) -> List[str]:
    return [name.strip() for name in (text or "").split(",") if name.strip()]


def register(subparsers) -> argparse.ArgumentParser:
    parser = subparsers.add_parser("fme", help="eliminate variables from an inequality system")
    parser.add_argument("input", help="system file in the inequality text format")
    target = parser.add_mutually_exclusive_group()
    target.add_argument("--eliminate", default=None, help="comma separated variables to remove")
    target.add_argument("--keep", default=None, help="comma separated variables to keep")
    parser.add_argument("--order", default=None, help="explicit elimination order")
    parser.add_argument("--out", default=None)
    parser.set_defaults(handler=run)
    return parser


def run(args: argparse.Namespace) -> int:
    system = parse_system(read_text(args.input))
    if args.keep is not None:
        keep = _names(args.keep)
    else:
        eliminate = _names(args.eliminate)
        unknown = [name for name in eliminate if name not in system.variables]
        if unknown:
            raise InvalidArgumentError(f"cannot eliminate {unknown}: not among {list(system.variables)}")
        keep = [name for name in system.variables if name not in eliminate]
    order = _names(args.order) or None

    result = prune_redundant(fme_project(system, keep, order))
    logger.info("%d rows over %d variables -> %d rows over %s", len(system), len(system.variables), len(result), keep)
    write_artifact(format_system(result), args.out)
    if any(row.is_contradiction for row in result.rows):
        logger.warning("the system is infeasible; the output keeps the row 0 <= -1")
    return 0
