"""
Label-by-label comparison of closed-form regions with the generic evaluators.

The generic value of a row is authoritative. A closed-form row that
deviates from it by more than the tolerance is reported as flagged, never
corrected.
"""

import logging
from typing import Dict, List, Optional, Sequence

from bcmsr.core.config import REGION_TOL
from bcmsr.core.errors import InvalidArgumentError
from bcmsr.core.polyregion import HalfSpaceSystem
from bcmsr.models.schemas import BlackwellParams, CrossCheckReport, CrossCheckRow, DueckParams
from bcmsr.services.bounds import (
    region_inner1,
    region_inner2,
    region_nofeedback,
    region_outer_relaxed,
)
from bcmsr.services.channels import (
    V0_CHOICES,
    blackwell_closed,
    blackwell_distribution,
    blackwell_input_pmf,
    dueck_closed,
    dueck_distribution,
)

logger = logging.getLogger(__name__)


def row_constants(system: HalfSpaceSystem) -> Dict[str, float]:
    return {label: float(row.rhs) for label, row in system.labels.items()}


def _generic_constants(systems: Sequence[HalfSpaceSystem]) -> Dict[str, float]:
    """Row-wise maximum over several generic systems sharing labels."""
    merged: Dict[str, float] = {}
    for system in systems:
        for label, value in row_constants(system).items():
            merged[label] = max(merged.get(label, value), value)
    return merged


def compare(
    bound: str,
    closed: HalfSpaceSystem,
    generic: Sequence[HalfSpaceSystem],
    tol: float = REGION_TOL,
) -> CrossCheckReport:
    """
    Classify every label of ``closed`` and ``generic``.

    With several generic systems the row-wise maximum is the reference, as
    for a bound stated as a union over auxiliary choices.
    """
    closed_values = row_constants(closed)
    generic_values = _generic_constants(generic)
    rows: List[CrossCheckRow] = []
    for label, value in closed_values.items():
        reference: Optional[float] = generic_values.get(label)
        if reference is None:
            rows.append(CrossCheckRow(label=label, closed=value, generic=None, deviation=None, status="closed-only"))
            continue
        deviation = value - reference
        status = "reproduced" if abs(deviation) <= tol else "flagged"
        rows.append(CrossCheckRow(label=label, closed=value, generic=reference, deviation=deviation, status=status))
    for label, reference in generic_values.items():
        if label not in closed_values:
            rows.append(CrossCheckRow(label=label, closed=None, generic=reference, deviation=None, status="generic-only"))
    report = CrossCheckReport(bound=bound, rows=rows)
    for row in report.flagged:
        logger.info("%s row %s flagged: closed %.9f vs generic %.9f", bound, row.label, row.closed, row.generic)
    return report


def generic_dueck(bound: str, params: DueckParams) -> List[HalfSpaceSystem]:
    """Generic systems the closed Dueck region of ``bound`` is compared against."""
    if bound == "inner1":
        return [region_inner1(dueck_distribution(params, extended=False))]
    if bound == "inner2":
        return [region_inner2(dueck_distribution(params, v0=v0)) for v0 in V0_CHOICES]
    if bound == "nofeedback":
        return [region_nofeedback(dueck_distribution(params, extended=False))]
    if bound == "outer":
        # the printed outer region is a cut-set bound, not a per-distribution evaluation
        return []
    raise InvalidArgumentError(f"unknown bound {bound!r}")


def crosscheck_dueck(bound: str, params: DueckParams, tol: float = REGION_TOL) -> CrossCheckReport:
    closed = dueck_closed(bound, params)
    generic = generic_dueck(bound, params)
    return compare(f"dueck{params.noise_case}-{bound}", closed, generic, tol)


def generic_blackwell(bound: str, params: BlackwellParams) -> List[HalfSpaceSystem]:
    """Generic systems for the closed Blackwell region of ``bound``; the outer one uses (alpha1, alpha2)."""
    if bound == "inner1":
        return [region_inner1(blackwell_distribution(params, extended=False))]
    if bound == "inner2":
        return [region_inner2(blackwell_distribution(params))]
    if bound == "nofeedback":
        return [region_nofeedback(blackwell_distribution(params, extended=False))]
    if bound == "outer":
        return [region_outer_relaxed(blackwell_input_pmf(params))]
    raise InvalidArgumentError(f"unknown bound {bound!r}")


def crosscheck_blackwell(bound: str, params: BlackwellParams, tol: float = REGION_TOL) -> CrossCheckReport:
    closed = blackwell_closed(bound, params)
    return compare(f"blackwell-{bound}", closed, generic_blackwell(bound, params), tol)
