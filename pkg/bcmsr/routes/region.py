"""``bcmsr region``: the four secrecy regions of an example channel or of a supplied distribution."""

import argparse
import logging
from typing import Any, Dict, List, Optional

from bcmsr.core.errors import InvalidArgumentError
from bcmsr.core.polyregion import HalfSpaceSystem, minimal_system2d, vertices2d
from bcmsr.core.probcore import JointPmf
from bcmsr.core.utils import dump_json, load_json, read_text, render_regions_svg, to_csv, write_artifact
from bcmsr.models.schemas import (
    BlackwellParams,
    DistributionRecord,
    DueckParams,
    RegionRecord,
    RowRecord,
)
from bcmsr.services.bounds import (
    AUX_VARIABLES,
    SchemeDistribution,
    region_inner1,
    region_inner2,
    region_nofeedback,
    region_outer,
)
from bcmsr.services.channels import blackwell_closed, dueck_closed, max_sum_rate
from bcmsr.services.crosscheck import crosscheck_blackwell, crosscheck_dueck

logger = logging.getLogger(__name__)

BOUNDS = ("nofeedback", "inner1", "inner2", "outer")
DUECK_FIELDS = ("p", "q", "r", "alpha1", "alpha2", "alpha3")
BLACKWELL_FIELDS = ("p", "alpha", "beta", "alpha1", "alpha2")


def add_channel_arguments(parser: argparse.ArgumentParser) -> None:
    """Flags shared by every command that builds an example channel."""
    parser.add_argument("--example", choices=["dueck1", "dueck2", "blackwell"], default=None)
    parser.add_argument("--case", type=int, choices=[1, 2], default=None, help="Dueck noise case; overrides the example suffix")
    parser.add_argument("--p", type=float, default=None)
    parser.add_argument("--q", type=float, default=None)
    parser.add_argument("--r", type=float, default=None)
    parser.add_argument("--alpha", type=float, default=None, help="Blackwell P(U1=1, U2=0)")
    parser.add_argument("--beta", type=float, default=None, help="Blackwell P(U1=0, U2=1)")
    parser.add_argument("--alpha1", type=float, default=None)
    parser.add_argument("--alpha2", type=float, default=None)
    parser.add_argument("--alpha3", type=float, default=None)


def _given(args: argparse.Namespace, fields) -> Dict[str, Any]:
    return {name: getattr(args, name) for name in fields if getattr(args, name, None) is not None}


def dueck_params(args: argparse.Namespace, **overrides) -> DueckParams:
    case = args.case if args.case is not None else (2 if args.example == "dueck2" else 1)
    values = {**_given(args, DUECK_FIELDS), **overrides}
    return DueckParams(noise_case=case, **values)


def blackwell_params(args: argparse.Namespace, **overrides) -> BlackwellParams:
    return BlackwellParams(**{**_given(args, BLACKWELL_FIELDS), **overrides})


def load_distribution(path: str) -> SchemeDistribution:
    """Read a DistributionRecord file; V0, V1 and V2 columns make it an extended distribution."""
    record = DistributionRecord.model_validate(load_json(read_text(path)))
    pmf = JointPmf([(v.name, v.size) for v in record.variables], record.table)
    if all(name in pmf for name in AUX_VARIABLES):
        return SchemeDistribution.from_extended(pmf)
    return SchemeDistribution(pmf)


def _row_records(system: HalfSpaceSystem) -> List[RowRecord]:
    return [RowRecord(label=row.label, text=row.to_text(system.variables), rhs=float(row.rhs)) for row in system.rows]


def region_record(bound: str, source: str, system: HalfSpaceSystem) -> RegionRecord:
    """Rows as stated plus the facets, the subset of rows that bound an edge of the polygon."""
    polygon = vertices2d(system)
    return RegionRecord(
        bound=bound,
        source=source,
        variables=tuple(system.variables),
        rows=_row_records(system),
        facets=_row_records(minimal_system2d(system)),
        vertices=polygon.float_vertices,
        max_sum_rate=max_sum_rate(system),
    )


def generic_regions(dist: SchemeDistribution) -> Dict[str, HalfSpaceSystem]:
    if not dist.has_extension:
        logger.info("no V0, V1, V2 columns; the hybrid bound uses constant auxiliaries")
        dist = dist.with_constant_auxiliaries()
    return {
        "nofeedback": region_nofeedback(dist),
        "inner1": region_inner1(dist),
        "inner2": region_inner2(dist),
        "outer": region_outer(dist),
    }


def _title(args: argparse.Namespace, params: Optional[Dict[str, Any]]) -> str:
    if args.dist:
        return f"distribution {args.dist}"
    inner = ", ".join(f"{k}={v:g}" for k, v in params.items() if isinstance(v, float))
    return f"{args.example} ({inner})"


def register(subparsers) -> argparse.ArgumentParser:
    parser = subparsers.add_parser("region", help="evaluate the four secrecy regions")
    add_channel_arguments(parser)
    parser.add_argument("--dist", default=None, help="JSON distribution over Q, U1, U2, X, Y1, Y2 [, V0, V1, V2]")
    parser.add_argument("--crosscheck", action="store_true", help="compare closed forms with the generic evaluators")
    parser.add_argument("--format", choices=["json", "csv", "svg"], default=None)
    parser.add_argument("--out", default=None)
    parser.set_defaults(handler=run)
    return parser


def run(args: argparse.Namespace) -> int:
    """Compute, then emit the regions in the requested format"""
    if (args.example is None) == (args.dist is None):
        raise InvalidArgumentError("region needs exactly one of --example or --dist")

    params: Optional[Dict[str, Any]] = None
    checks = []
    if args.dist:
        if args.crosscheck:
            raise InvalidArgumentError("--crosscheck applies to the example channels only")
        systems = generic_regions(load_distribution(args.dist))
        source = "generic"
    elif args.example == "blackwell":
        blackwell = blackwell_params(args)
        params = blackwell.model_dump()
        systems = {bound: blackwell_closed(bound, blackwell) for bound in BOUNDS}
        source = "closed"
        if args.crosscheck:
            checks = [crosscheck_blackwell(bound, blackwell) for bound in BOUNDS]
    else:
        dueck = dueck_params(args)
        params = dueck.model_dump()
        systems = {bound: dueck_closed(bound, dueck) for bound in BOUNDS}
        source = "closed"
        if args.crosscheck:
            checks = [crosscheck_dueck(bound, dueck) for bound in BOUNDS]

    records: List[RegionRecord] = [region_record(bound, source, systems[bound]) for bound in BOUNDS]
    for record in records:
        logger.info("%s: %d vertices, max sum rate %.6f", record.bound, len(record.vertices), record.max_sum_rate)

    output_format = args.format or "json"
    if output_format == "csv":
        rows = [
            (record.bound, record.source, index, x, y)
            for record in records
            for index, (x, y) in enumerate(record.vertices)
        ]
        content = to_csv(("bound", "source", "vertex", "R1", "R2"), rows)
    elif output_format == "svg":
        content = render_regions_svg([(record.bound, record.vertices) for record in records], _title(args, params))
    else:
        payload: Dict[str, Any] = {"example": args.example, "params": params, "regions": records}
        if args.dist:
            payload["distribution"] = args.dist
        if checks:
            payload["crosscheck"] = checks
        content = dump_json(payload)
    if checks and output_format != "json":
        logger.warning("cross-check results are only written in the json format")
    write_artifact(content, args.out)
    return 0
