"""``bcmsr sweep``: maximum secrecy sum rates of every bound along the noise level p."""

import argparse
import logging
from typing import List

import numpy as np

from bcmsr.core.config import GRID_RESOLUTION, SWEEP_P_POINTS
from bcmsr.core.errors import InvalidArgumentError
from bcmsr.core.utils import dump_json, render_series_svg, to_csv, write_artifact
from bcmsr.routes.region import add_channel_arguments, dueck_params
from bcmsr.services.channels import sweep_blackwell_sumrate, sweep_dueck_sumrate

logger = logging.getLogger(__name__)

COLUMNS = ("p", "sum_in1", "sum_in2", "sum_out", "sum_nofb")


def p_grid(args: argparse.Namespace) -> List[float]:
    """Explicit ``--p-values`` win over ``--p-points`` equally spaced values in [0, 1/2]."""
    if args.p_values is not None:
        values = [float(v) for v in args.p_values.split(",") if v.strip()]
    else:
        points = SWEEP_P_POINTS if args.p_points is None else args.p_points
        values = [float(v) for v in np.linspace(0.0, 0.5, points)] if points > 0 else []
    if not values:
        raise InvalidArgumentError("the p grid is empty")
    return values


def register(subparsers) -> argparse.ArgumentParser:
    parser = subparsers.add_parser("sweep", help="sum-rate sweep over the noise level p")
    add_channel_arguments(parser)
    parser.add_argument("--p-points", type=int, default=None, help=f"equally spaced p values in [0, 1/2] (default {SWEEP_P_POINTS})")
    parser.add_argument("--p-values", default=None, help="comma separated p values")
    parser.add_argument("--grid", type=int, default=None, help=f"simplex grid resolution (default {GRID_RESOLUTION})")
    parser.add_argument("--format", choices=["json", "csv", "svg"], default=None)
    parser.add_argument("--out", default=None)
    parser.set_defaults(handler=run)
    return parser


def run(args: argparse.Namespace) -> int:
    example = args.example or "blackwell"
    grid = p_grid(args)
    resolution = args.grid if args.grid is not None else GRID_RESOLUTION
    if example == "blackwell":
        rows = sweep_blackwell_sumrate(grid, resolution)
        metadata = f"example=blackwell grid_resolution={resolution}"
    else:
        # q and r stay fixed; p only needs a placeholder for validation
        base = dueck_params(args, p=0.0)
        rows = sweep_dueck_sumrate(base.noise_case, grid, base.q, base.r)
        metadata = f"example=dueck{base.noise_case} q={base.q:g} r={base.r:g} grid_resolution=closed-form"

    output_format = args.format or "csv"
    if output_format == "json":
        content = dump_json({"example": example, "metadata": metadata, "rows": rows})
    elif output_format == "svg":
        series = [(name, [getattr(row, name) for row in rows]) for name in COLUMNS[1:]]
        content = render_series_svg(grid, series, "p", f"maximum secrecy sum rate, {metadata}")
    else:
        content = to_csv(COLUMNS, ([getattr(row, name) for name in COLUMNS] for row in rows), comments=[metadata])
    write_artifact(content, args.out)
    if args.out:
        print(f"sweep: {len(rows)} noise levels ({metadata})")
    return 0
