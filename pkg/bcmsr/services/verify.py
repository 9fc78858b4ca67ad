"""
Named invariant checks behind ``bcmsr verify``.

Every check returns a ``CheckResult`` with the worst measured deviation.
Rows the generic evaluator does not reproduce by construction are listed
in the notes, not failed.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from bcmsr.core.config import (
    COLLAPSE_SAMPLES,
    DEFAULT_SEED,
    FME_SAMPLE_POINTS,
    GRID_RESOLUTION,
    REGION_TOL,
    STRICT_INCLUSION_GAP,
    VERIFY_GRID_POINTS,
)
from bcmsr.core.errors import BcmsrError, InvalidArgumentError
from bcmsr.core.polyregion import (
    HalfSpaceSystem,
    LinearInequality,
    Region2D,
    is_subset,
    low_discrepancy_points,
    membership_disagreements,
    region_equal,
    vertices2d,
)
from bcmsr.core.probcore import Alphabet, build_pmf, entropy, random_kernel, split_symbol
from bcmsr.models.schemas import (
    BlackwellParams,
    CheckResult,
    CrossCheckReport,
    DueckParams,
    KeySimConfig,
    VerifyReport,
)
from bcmsr.services.bounds import (
    INNER1_LABELS,
    INNER2_LABELS,
    Q,
    U1,
    U2,
    V0,
    V1,
    V2,
    SchemeDistribution,
    WynerZivDistribution,
    X,
    Y1,
    Y2,
    derive_inner2,
    derive_wynerziv,
    random_scheme_distribution,
    region_inner1,
    region_inner2,
    region_nofeedback,
    region_outer,
    region_wynerziv,
)
from bcmsr.services.channels import (
    blackwell_closed,
    blackwell_feedback_arrays,
    dueck_closed,
    dueck_distribution,
    simplex_grid,
    sweep_blackwell_sumrate,
)
from bcmsr.services.crosscheck import compare, generic_blackwell, generic_dueck, row_constants
from bcmsr.services.keysim import color_uniformity, draw_coloring, run_key_extraction, run_otp_roundtrip

logger = logging.getLogger(__name__)

FEEDBACK_ORDER = ("nofeedback", "inner1", "inner2", "outer")
INDEPENDENT_OUTPUTS = [[0.25, 0.25], [0.25, 0.25]]
IDENTICAL_OUTPUTS = [[0.5, 0.0], [0.0, 0.5]]


@dataclass(frozen=True)
class VerifyOptions:
    grid_points: int = VERIFY_GRID_POINTS
    sweep_resolution: int = GRID_RESOLUTION
    seed: int = DEFAULT_SEED
    # added to the closed-form Dueck key1 constant before comparison
    perturbation: float = 0.0


@dataclass
class _RowTally:
    name: str
    points: int = 0
    worst: float = 0.0
    where: str = ""
    flagged: Dict[str, float] = field(default_factory=dict)

    def add(self, where: str, report: CrossCheckReport, required: Sequence[str]) -> None:
        self.points += 1
        for row in report.rows:
            if row.label in required:
                deviation = abs(row.deviation) if row.deviation is not None else math.inf
                if deviation > self.worst:
                    self.worst, self.where = deviation, f"{where} row {row.label}"
            elif row.status == "flagged":
                self.flagged[row.label] = max(self.flagged.get(row.label, 0.0), abs(row.deviation))

    def result(self) -> CheckResult:
        detail = f"{self.points} parameter points"
        if self.where:
            detail += f", worst at {self.where}"
        notes = [f"{label} flagged, max deviation {value:.6g}" for label, value in sorted(self.flagged.items())]
        return CheckResult(
            name=self.name,
            passed=self.worst <= REGION_TOL,
            deviation=self.worst,
            tolerance=REGION_TOL,
            detail=detail,
            notes=notes,
        )


def shift_row(system: HalfSpaceSystem, label: str, delta: float) -> HalfSpaceSystem:
    """Copy of ``system`` with ``delta`` added to the constant of row ``label``."""
    if not delta:
        return system
    rows = [
        LinearInequality.build(row.coefficients, float(row.rhs) + delta, row.label) if row.label == label else row
        for row in system.rows
    ]
    return system.with_rows(rows)


def _dueck_grid(points: int) -> Iterator[DueckParams]:
    values = np.linspace(0.0, 0.5, points)
    for case in (1, 2):
        for p in values:
            for q in values:
                for r in values:
                    yield DueckParams(noise_case=case, p=float(p), q=float(q), r=float(r))


def _where(params: DueckParams) -> str:
    return f"case {params.noise_case} p={params.p:g} q={params.q:g} r={params.r:g}"


def _dueck_rows_check(name: str, bound: str, required: Sequence[str], options: VerifyOptions) -> CheckResult:
    tally = _RowTally(name)
    for params in _dueck_grid(options.grid_points):
        closed = dueck_closed(bound, params)
        if bound == "inner1":
            closed = shift_row(closed, "key1", options.perturbation)
        tally.add(_where(params), compare(bound, closed, generic_dueck(bound, params)), required)
    return tally.result()


def check_dueck_inner1_rows(options: VerifyOptions) -> CheckResult:
    return _dueck_rows_check("dueck-inner1-rows", "inner1", ("key1", "key2", "sum"), options)


def check_dueck_inner2_rows(options: VerifyOptions) -> CheckResult:
    return _dueck_rows_check("dueck-inner2-rows", "inner2", ("key1", "key2", "aux1", "aux2", "sum"), options)


def check_dueck_nofeedback_rows(options: VerifyOptions) -> CheckResult:
    return _dueck_rows_check("dueck-nofeedback-rows", "nofeedback", ("cap1", "cap2"), options)


def check_blackwell_rows(options: VerifyOptions) -> CheckResult:
    """
    Inner1 key rows are compared only where the bracketed secrecy term is
    nonnegative; its sum row is reported, not compared.
    """
    tally = _RowTally("blackwell-rows")
    alphas, betas = simplex_grid(options.grid_points)
    for p in np.linspace(0.0, 0.5, options.grid_points):
        for a, b in zip(alphas, betas):
            params = BlackwellParams(p=float(p), alpha=float(a), beta=float(b), alpha1=float(a), alpha2=float(b))
            bracket = float(blackwell_feedback_arrays(params.p, params.alpha, params.beta)["nofeedback"]["cap1"])
            required = {
                "inner1": ("cap1", "cap2") + (("key1", "key2") if bracket >= 0.0 else ()),
                "inner2": INNER2_LABELS,
                "nofeedback": ("cap1", "cap2"),
                "outer": ("cap1", "cap2"),
            }
            where = f"p={params.p:g} alpha={params.alpha:g} beta={params.beta:g}"
            for bound, labels in required.items():
                report = compare(bound, blackwell_closed(bound, params), generic_blackwell(bound, params))
                tally.add(f"{bound} {where}", report, labels)
    return tally.result()


def _excess(region: Region2D, system: HalfSpaceSystem) -> float:
    """Largest violation of a row of ``system`` at a vertex of ``region``."""
    worst = 0.0
    for point in region.points():
        for row in system.rows:
            worst = max(worst, row.lhs(point) - float(row.rhs))
    return worst


def _dueck_regions(params: DueckParams) -> Dict[str, Region2D]:
    return {bound: vertices2d(dueck_closed(bound, params)) for bound in FEEDBACK_ORDER}


def check_dueck_inclusion(options: VerifyOptions) -> CheckResult:
    worst, where = 0.0, ""
    for params in _dueck_grid(options.grid_points):
        regions = _dueck_regions(params)
        for small, large in zip(FEEDBACK_ORDER, FEEDBACK_ORDER[1:]):
            excess = _excess(regions[small], regions[large].inequalities)
            if excess > worst:
                worst, where = excess, f"{small} in {large} at {_where(params)}"

    regions = _dueck_regions(DueckParams(noise_case=1, p=0.05, q=0.05, r=0.05))
    gaps = [
        _excess(regions[large], regions[small].inequalities)
        for small, large in zip(FEEDBACK_ORDER, FEEDBACK_ORDER[1:])
    ]
    strict = min(gaps) >= STRICT_INCLUSION_GAP
    return CheckResult(
        name="inclusion-dueck",
        passed=worst <= REGION_TOL and strict,
        deviation=worst,
        tolerance=REGION_TOL,
        detail=f"worst inclusion violation {worst:.3e}" + (f" ({where})" if where else ""),
        notes=["strict vertex gaps at case 1, p=q=r=0.05: " + ", ".join(f"{g:.6f}" for g in gaps)],
    )


def _symmetric_excess(a: Region2D, b: Region2D) -> float:
    return max(_excess(a, b.inequalities), _excess(b, a.inequalities))


def check_equality_case1(options: VerifyOptions) -> CheckResult:
    regions = _dueck_regions(DueckParams(noise_case=1, p=0.25, q=0.2, r=0.3))
    equal = region_equal(regions["inner2"], regions["outer"])
    inner1_inside = is_subset(regions["inner1"], regions["outer"].inequalities) and not region_equal(
        regions["inner1"], regions["outer"]
    )
    noisy = _dueck_regions(DueckParams(noise_case=1, p=0.05, q=0.05, r=0.05))
    distinct = not region_equal(noisy["inner2"], noisy["outer"])
    return CheckResult(
        name="equality-case1",
        passed=equal and inner1_inside and distinct,
        deviation=_symmetric_excess(regions["inner2"], regions["outer"]),
        tolerance=REGION_TOL,
        detail=f"inner2 = outer: {equal}; inner1 strictly inside: {inner1_inside}; distinct at p=q=r=0.05: {distinct}",
    )


def check_equality_case2(options: VerifyOptions) -> CheckResult:
    regions = _dueck_regions(DueckParams(noise_case=2, p=0.25, q=0.2, r=0.3))
    equal = region_equal(regions["inner1"], regions["inner2"]) and region_equal(regions["inner2"], regions["outer"])
    noisy = _dueck_regions(DueckParams(noise_case=2, p=0.05, q=0.05, r=0.05))
    distinct = not (region_equal(noisy["inner1"], noisy["inner2"]) and region_equal(noisy["inner2"], noisy["outer"]))
    deviation = max(
        _symmetric_excess(regions["inner1"], regions["inner2"]),
        _symmetric_excess(regions["inner2"], regions["outer"]),
    )
    return CheckResult(
        name="equality-case2",
        passed=equal and distinct,
        deviation=deviation,
        tolerance=REGION_TOL,
        detail=f"feedback bounds coincide: {equal}; distinct at p=q=r=0.05: {distinct}",
    )


SMALL_NOISE_LEVELS = (0.0025, 0.005, 0.0075)


def coarse_noise_grid() -> List[float]:
    return [round(float(p), 10) for p in np.arange(0.0, 0.5 + 1e-9, 0.02)]


def sumrate_noise_grid() -> List[float]:
    """The 0.02-step grid on [0, 0.5] plus the small noise levels below its first step, where the hybrid bound leads."""
    return sorted(set(coarse_noise_grid()) | set(SMALL_NOISE_LEVELS))


def check_sumrate_crossing(options: VerifyOptions) -> CheckResult:
    rows = sweep_blackwell_sumrate(sumrate_noise_grid(), options.sweep_resolution)
    shortfall = max(row.sum_nofb - max(row.sum_in1, row.sum_in2) for row in rows)
    key_ahead = [row.p for row in rows if row.sum_in1 > row.sum_in2 + REGION_TOL]
    hybrid_ahead = [row.p for row in rows if row.sum_in2 > row.sum_in1 + REGION_TOL]
    coarse = set(coarse_noise_grid())
    coarse_ahead = [p for p in hybrid_ahead if p in coarse]
    if coarse_ahead:
        crossing = f"inner2 also leads on the 0.02-step grid at p in {coarse_ahead}"
    else:
        crossing = f"no crossing on the 0.02-step grid alone; inner2 leads only at p in {hybrid_ahead}"
    useless = [row for row in rows if row.p == 0.5]
    zeros = all(max(r.sum_in1, r.sum_in2, r.sum_out, r.sum_nofb) <= REGION_TOL for r in useless)
    passed = shortfall <= REGION_TOL and bool(key_ahead) and bool(hybrid_ahead) and zeros
    return CheckResult(
        name="sumrate-crossing",
        passed=passed,
        deviation=max(shortfall, 0.0),
        tolerance=REGION_TOL,
        detail=f"{len(rows)} noise levels at grid resolution {options.sweep_resolution}; {crossing}",
        notes=[
            f"inner1 ahead at p in {key_ahead}",
            f"inner2 ahead at p in {hybrid_ahead}",
        ],
    )


def wynerziv_example_distribution(seed: int = DEFAULT_SEED) -> WynerZivDistribution:
    """Quaternary source with random side-information channels and random descriptions."""
    rng = np.random.default_rng(seed)
    return WynerZivDistribution(build_pmf([
        (Alphabet(X, 4), (), np.array([0.4, 0.3, 0.2, 0.1])),
        (Alphabet(Y1, 2), (X,), random_kernel(rng, (4,), 2)),
        (Alphabet(Y2, 2), (X,), random_kernel(rng, (4,), 2)),
        (Alphabet(V0, 2), (X,), random_kernel(rng, (4,), 2)),
        (Alphabet(V1, 2), (X, V0), random_kernel(rng, (4, 2), 2)),
        (Alphabet(V2, 2), (X, V0), random_kernel(rng, (4, 2), 2)),
    ]))


def check_fme_wynerziv(options: VerifyOptions) -> CheckResult:
    dist = wynerziv_example_distribution(options.seed)
    derived = derive_wynerziv(dist)
    stated = region_wynerziv(dist)
    reach = 1.5 * entropy(dist.pmf, X)
    points = low_discrepancy_points([reach] * len(stated.variables), FME_SAMPLE_POINTS)
    disagreements = membership_disagreements(derived, stated, points)
    return CheckResult(
        name="fme-wynerziv",
        passed=disagreements == 0,
        deviation=float(disagreements),
        tolerance=0.0,
        detail=f"{disagreements} of {FME_SAMPLE_POINTS} sample points disagree; derived system has {len(derived)} rows",
    )


def check_fme_inner2(options: VerifyOptions) -> CheckResult:
    worst, details = 0.0, []
    passed = True
    for case in (1, 2):
        dist = dueck_distribution(DueckParams(noise_case=case, p=0.05, q=0.05, r=0.05))
        derived = vertices2d(derive_inner2(dist))
        stated = vertices2d(region_inner2(dist))
        equal = region_equal(derived, stated)
        passed = passed and equal
        worst = max(worst, _symmetric_excess(derived, stated))
        details.append(f"case {case}: {len(derived.vertices)} vertices, equal={equal}")
    return CheckResult(
        name="fme-inner2",
        passed=passed,
        deviation=worst,
        tolerance=REGION_TOL,
        detail="; ".join(details),
    )


def check_collapse(options: VerifyOptions) -> CheckResult:
    rng = np.random.default_rng(options.seed)
    worst = 0.0
    for _ in range(COLLAPSE_SAMPLES):
        dist = random_scheme_distribution(rng)
        hybrid = row_constants(region_inner2(dist.with_constant_auxiliaries()))
        key = row_constants(region_inner1(dist))
        worst = max(worst, max(abs(hybrid[label] - key[label]) for label in INNER1_LABELS))
    return CheckResult(
        name="collapse",
        passed=worst <= REGION_TOL,
        deviation=worst,
        tolerance=REGION_TOL,
        detail=f"{COLLAPSE_SAMPLES} random distributions with constant compression auxiliaries",
    )


SPLIT_VARIABLES = (Q, U1, U2, X)


def bound_row_constants(dist: SchemeDistribution) -> Dict[Tuple[str, str], float]:
    """Every row constant of the four bounds, keyed by (bound, row label)."""
    systems = {
        "nofeedback": region_nofeedback(dist),
        "inner1": region_inner1(dist),
        "inner2": region_inner2(dist.with_constant_auxiliaries()),
        "outer": region_outer(dist),
    }
    return {(bound, label): value for bound, system in systems.items() for label, value in row_constants(system).items()}


def check_scaling_invariance(options: VerifyOptions) -> CheckResult:
    """Splitting one symbol of Q, U1, U2 or X in two leaves every row constant unchanged."""
    rng = np.random.default_rng(options.seed)
    worst = 0.0
    for index in range(COLLAPSE_SAMPLES):
        dist = random_scheme_distribution(rng)
        name = SPLIT_VARIABLES[index % len(SPLIT_VARIABLES)]
        symbol = int(rng.integers(dist.pmf.size_of(name)))
        split = SchemeDistribution(split_symbol(dist.pmf, name, symbol, float(rng.uniform(0.1, 0.9))))
        before, after = bound_row_constants(dist), bound_row_constants(split)
        worst = max(worst, max(abs(before[key] - after[key]) for key in before))
    return CheckResult(
        name="scaling-invariance",
        passed=worst <= REGION_TOL,
        deviation=worst,
        tolerance=REGION_TOL,
        detail=f"{COLLAPSE_SAMPLES} random distributions, one symbol of {', '.join(SPLIT_VARIABLES)} split per draw",
    )

def check_keysim(options: VerifyOptions) -> CheckResult:
    blocklength, rate = 8, 0.75
    independent = KeySimConfig(blocklength=blocklength, key_rate=rate, channel=INDEPENDENT_OUTPUTS, seed=options.seed)
    identical = KeySimConfig(blocklength=blocklength, key_rate=rate, channel=IDENTICAL_OUTPUTS, seed=options.seed)

    secret = run_key_extraction(independent)
    exposed = run_key_extraction(identical)
    pad = run_otp_roundtrip(independent, message_bits=4)
    public_pad = run_otp_roundtrip(identical, message_bits=4)
    uniformity = color_uniformity(draw_coloring(2, blocklength, 16, options.seed))

    floor = 0.95 * blocklength * rate
    shortfall = max(0.0, floor - secret.conditional_key_entropy)
    passed = (
        shortfall == 0.0
        and exposed.conditional_key_entropy <= 1e-12
        and pad.decode_ok
        and public_pad.decode_ok
        and pad.leakage_per_bit <= 0.05
        and abs(public_pad.leakage_per_bit - 1.0) <= 1e-9
        and uniformity.passed
    )
    return CheckResult(
        name="keysim",
        passed=passed,
        deviation=shortfall,
        tolerance=0.0,
        detail=(
            f"H(K|Y2^N) independent {secret.conditional_key_entropy:.6f} (floor {floor:.2f}), "
            f"identical {exposed.conditional_key_entropy:.3e}"
        ),
        notes=[
            f"one-time pad leakage per bit: independent {pad.leakage_per_bit:.6f}, "
            f"identical {public_pad.leakage_per_bit:.6f}; decode failures {pad.decode_failures + public_pad.decode_failures}",
            f"color histogram chi-square {uniformity.statistic:.3f} <= {uniformity.critical:.3f}: {uniformity.passed}",
        ],
    )


CHECKS: Dict[str, Callable[[VerifyOptions], CheckResult]] = {
    "dueck-inner1-rows": check_dueck_inner1_rows,
    "dueck-inner2-rows": check_dueck_inner2_rows,
    "dueck-nofeedback-rows": check_dueck_nofeedback_rows,
    "blackwell-rows": check_blackwell_rows,
    "inclusion-dueck": check_dueck_inclusion,
    "equality-case1": check_equality_case1,
    "equality-case2": check_equality_case2,
    "sumrate-crossing": check_sumrate_crossing,
    "fme-wynerziv": check_fme_wynerziv,
    "fme-inner2": check_fme_inner2,
    "collapse": check_collapse,
    "scaling-invariance": check_scaling_invariance,
    "keysim": check_keysim,
}


def run_verify(only: Optional[Sequence[str]] = None, options: Optional[VerifyOptions] = None) -> VerifyReport:
    """Run the named checks (all of them by default) in registry order."""
    options = options or VerifyOptions()
    names: Tuple[str, ...] = tuple(CHECKS) if not only else tuple(only)
    unknown = [name for name in names if name not in CHECKS]
    if unknown:
        raise InvalidArgumentError(f"unknown checks {unknown}; available: {', '.join(CHECKS)}")

    results = []
    for name in names:
        try:
            result = CHECKS[name](options)
        except BcmsrError as exc:
            logger.exception("check %s raised", name)
            result = CheckResult(name=name, passed=False, detail=f"{type(exc).__name__}: {exc}")
        logger.info("check %s: %s (deviation %.3e)", name, "pass" if result.passed else "FAIL", result.deviation)
        results.append(result)
    return VerifyReport(passed=all(r.passed for r in results), checks=results)
