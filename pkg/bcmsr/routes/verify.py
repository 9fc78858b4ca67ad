"""``bcmsr verify``: run the invariant suite and write a JSON report."""

import argparse
import logging

from bcmsr.core.utils import dump_json, write_artifact
from bcmsr.services.verify import CHECKS, VerifyOptions, run_verify

logger = logging.getLogger(__name__)


def register(subparsers) -> argparse.ArgumentParser:
    parser = subparsers.add_parser("verify", help="run the verification suite")
    parser.add_argument("--only", default=None, help=f"comma separated subset of: {', '.join(CHECKS)}")
    parser.add_argument("--grid-points", type=int, default=None, help="points per parameter axis of the Dueck grids")
    parser.add_argument("--grid", type=int, default=None, help="simplex grid resolution of the sum-rate check")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument(
        "--inject-perturbation",
        type=float,
        nargs="?",
        const=-1e-3,
        default=None,
        help="shift a closed-form inner-bound constant (default -1e-3) to force a failure",
    )
    parser.add_argument("--out", default=None)
    parser.set_defaults(handler=run)
    return parser


def run(args: argparse.Namespace) -> int:
    defaults = VerifyOptions()
    options = VerifyOptions(
        grid_points=args.grid_points if args.grid_points is not None else defaults.grid_points,
        sweep_resolution=args.grid if args.grid is not None else defaults.sweep_resolution,
        seed=args.seed if args.seed is not None else defaults.seed,
        perturbation=args.inject_perturbation or 0.0,
    )
    only = [name.strip() for name in args.only.split(",") if name.strip()] if args.only else None
    report = run_verify(only, options)

    write_artifact(dump_json(report), args.out)
    for check in report.checks:
        status = "pass" if check.passed else "FAIL"
        line = f"{status:4} {check.name}: deviation {check.deviation:.3e} (tol {check.tolerance:.1e}) {check.detail}"
        if args.out:
            print(line)
        else:
            logger.info(line)
    return 0 if report.passed else 1
