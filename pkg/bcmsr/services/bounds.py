"""
Generic region evaluators.

Every evaluator maps one explicit joint distribution to a labelled
``HalfSpaceSystem``. ``min``/``max`` and positive-part constructs are
resolved numerically, so every row has a constant right-hand side.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from bcmsr.core.config import FACTORIZATION_TOL, SNAP_TO_ZERO_TOL
from bcmsr.core.errors import InvalidArgumentError, ModelError
from bcmsr.core.polyregion import HalfSpaceSystem, fme_project
from bcmsr.core.probcore import (
    Alphabet,
    JointPmf,
    Names,
    as_names,
    build_pmf,
    cond_mutual_info,
    conditional_entropy,
    extend,
    marginalize,
    markov_deviation,
    point_mass,
    random_kernel,
)

logger = logging.getLogger(__name__)

Q, U1, U2, X, Y1, Y2 = "Q", "U1", "U2", "X", "Y1", "Y2"
V0, V1, V2 = "V0", "V1", "V2"
BASE_VARIABLES = (Q, U1, U2, X, Y1, Y2)
AUX_VARIABLES = (V0, V1, V2)
WYNERZIV_VARIABLES = (V0, V1, V2, X, Y1, Y2)

RATES = ("R1", "R2")
WYNERZIV_RATES = ("R0", "R1", "R2")

INNER1_LABELS = ("key1", "key2", "cap1", "cap2", "sum")
INNER2_LABELS = ("key1", "key2", "cap1", "cap2", "aux1", "aux2", "sum")
OUTER_LABELS = ("cap1", "cap2")
WYNERZIV_LABELS = ("rate01", "rate02", "total")


@dataclass(frozen=True)
class FactorizationViolation:
    """Largest conditional-probability deviation of one named Markov condition."""

    condition: str
    deviation: float


@dataclass(frozen=True)
class SchemeDistribution:
    """
    Joint pmf over (Q, U1, U2, X, Y1, Y2), optionally extended with the
    feedback-compression auxiliaries (V0, V1, V2).
    """

    pmf: JointPmf
    extended: Optional[JointPmf] = None

    def __post_init__(self):
        if set(self.pmf.names) != set(BASE_VARIABLES):
            raise ModelError(f"scheme pmf must be over {BASE_VARIABLES}, got {self.pmf.names}")
        if self.extended is not None:
            expected = set(BASE_VARIABLES + AUX_VARIABLES)
            if set(self.extended.names) != expected:
                raise ModelError(f"extended pmf must be over {sorted(expected)}, got {self.extended.names}")
            base = self.extended.marginal_table(self.pmf.names)
            if not np.allclose(base, self.pmf.table, atol=FACTORIZATION_TOL, rtol=0.0):
                raise ModelError("extended pmf does not marginalize to the scheme pmf")

    @classmethod
    def from_extended(cls, extended: JointPmf) -> "SchemeDistribution":
        return cls(marginalize(extended, BASE_VARIABLES), extended)

    @property
    def has_extension(self) -> bool:
        return self.extended is not None

    def with_constant_auxiliaries(self) -> "SchemeDistribution":
        """Extension where V0, V1 and V2 are constants."""
        pmf = self.pmf
        for name in AUX_VARIABLES:
            alphabet = Alphabet(name, 1)
            pmf = extend(pmf, alphabet, (), point_mass(alphabet))
        return SchemeDistribution(self.pmf, pmf)


@dataclass(frozen=True)
class WynerZivDistribution:
    """Joint pmf over (V0, V1, V2, X, Y1, Y2) for distributed compression with side information."""

    pmf: JointPmf

    def __post_init__(self):
        if set(self.pmf.names) != set(WYNERZIV_VARIABLES):
            raise ModelError(f"Wyner-Ziv pmf must be over {WYNERZIV_VARIABLES}, got {self.pmf.names}")


def _info(pmf: JointPmf, a: Names, b: Names, c: Names = ()) -> float:
    """I(a; b | c) where conditioning variables repeated in a or b are dropped from them."""
    a, b, c = as_names(a), as_names(b), as_names(c)
    a = tuple(n for n in a if n not in c)
    b = tuple(n for n in b if n not in c and n not in a)
    if not a or not b:
        return 0.0
    return cond_mutual_info(pmf, a, b, c)


def _entropy(pmf: JointPmf, a: Names, given: Names = ()) -> float:
    given = as_names(given)
    return conditional_entropy(pmf, tuple(n for n in as_names(a) if n not in given), given)


def clamp_rate(value: float) -> float:
    """Positive part with values below ``SNAP_TO_ZERO_TOL`` snapped to exactly 0."""
    value = float(value)
    return 0.0 if value < SNAP_TO_ZERO_TOL else value


def _upper_rows(rows: Sequence[Tuple[str, Mapping[str, int], float]], variables=RATES) -> HalfSpaceSystem:
    return HalfSpaceSystem.build(
        variables, [(coefs, clamp_rate(rhs), label) for label, coefs, rhs in rows]
    )


def factorization_deviations(dist: SchemeDistribution) -> Dict[str, float]:
    """Max deviation of each Markov condition the inner bounds rely on."""
    pmf = dist.pmf
    deviations = {
        "channel": markov_deviation(pmf, (Y1, Y2), X, (Q, U1, U2)),
        "encoder": markov_deviation(pmf, X, (U1, U2), Q),
    }
    if dist.extended is not None:
        deviations["auxiliary"] = markov_deviation(dist.extended, AUX_VARIABLES, (Q, U1, U2, Y1, Y2), X)
    return deviations


def verify_factorization(dist: SchemeDistribution, tol: float = FACTORIZATION_TOL) -> List[FactorizationViolation]:
    """Violated conditions only; an empty list means the distribution factors."""
    return [
        FactorizationViolation(condition, deviation)
        for condition, deviation in factorization_deviations(dist).items()
        if deviation > tol
    ]


def _require(dist: SchemeDistribution, conditions: Sequence[str]) -> None:
    deviations = factorization_deviations(dist)
    broken = {c: deviations[c] for c in conditions if deviations.get(c, 0.0) > FACTORIZATION_TOL}
    if broken:
        detail = ", ".join(f"{c} ({d:.3e})" for c, d in broken.items())
        raise ModelError(f"distribution violates the required factorization: {detail}")


def _key_and_cap(pmf: JointPmf, user: int, side: Tuple[str, ...] = (), other_side: Tuple[str, ...] = ()):
    """Key-assisted and plain per-user bounds; ``side`` holds the user's auxiliary, if any."""
    own_u, own_y = (U1, Y1) if user == 1 else (U2, Y2)
    other_u, other_y = (U2, Y2) if user == 1 else (U1, Y1)
    cap = _info(pmf, own_u, (own_y,) + side, Q)
    marton = _info(pmf, U1, U2, Q)
    leak = _info(pmf, own_u, (other_y,) + other_side, (Q, other_u))
    key = _entropy(pmf, own_y, (Q, U1, U2, other_y) + other_side)
    return clamp_rate(cap - marton - leak) + key, cap


def region_inner1(dist: SchemeDistribution) -> HalfSpaceSystem:
    """Secret-key feedback inner bound evaluated at one distribution."""
    _require(dist, ("channel", "encoder"))
    pmf = dist.pmf
    key1, cap1 = _key_and_cap(pmf, 1)
    key2, cap2 = _key_and_cap(pmf, 2)
    common = min(_info(pmf, Q, Y1), _info(pmf, Q, Y2))
    total = common + cap1 + cap2 - _info(pmf, U1, U2, Q)
    logger.debug("inner1 rows: key=(%.6f, %.6f) cap=(%.6f, %.6f) sum=%.6f", key1, key2, cap1, cap2, total)
    return _upper_rows([
        ("key1", {"R1": 1}, key1),
        ("key2", {"R2": 1}, key2),
        ("cap1", {"R1": 1}, cap1),
        ("cap2", {"R2": 1}, cap2),
        ("sum", {"R1": 1, "R2": 1}, total),
    ])


def region_inner2(dist: SchemeDistribution) -> HalfSpaceSystem:
    """Hybrid feedback inner bound; all terms are evaluated on the extended pmf."""
    if dist.extended is None:
        raise ModelError("the hybrid inner bound needs a distribution extended with V0, V1, V2")
    _require(dist, ("channel", "encoder", "auxiliary"))
    pmf = dist.extended
    view = (Q, U1, U2, Y1, Y2)

    key1, cap1 = _key_and_cap(pmf, 1, (V1,), (V2,))
    key2, cap2 = _key_and_cap(pmf, 2, (V2,), (V1,))
    common = min(_info(pmf, Q, (Y1, V1)), _info(pmf, Q, (Y2, V2)))
    aux1 = common + cap1 - _info(pmf, (V0, V1), view, Y1)
    aux2 = common + cap2 - _info(pmf, (V0, V2), view, Y2)
    compression = (
        _info(pmf, V1, view, (Y1, V0))
        + _info(pmf, V2, view, (Y2, V0))
        + max(_info(pmf, V0, view, Y1), _info(pmf, V0, view, Y2))
    )
    total = common + cap1 + cap2 - _info(pmf, U1, U2, Q) - compression
    logger.debug(
        "inner2 rows: key=(%.6f, %.6f) cap=(%.6f, %.6f) aux=(%.6f, %.6f) sum=%.6f",
        key1, key2, cap1, cap2, aux1, aux2, total,
    )
    return _upper_rows([
        ("key1", {"R1": 1}, key1),
        ("key2", {"R2": 1}, key2),
        ("cap1", {"R1": 1}, cap1),
        ("cap2", {"R2": 1}, cap2),
        ("aux1", {"R1": 1}, aux1),
        ("aux2", {"R2": 1}, aux2),
        ("sum", {"R1": 1, "R2": 1}, total),
    ])


def region_outer(dist: SchemeDistribution) -> HalfSpaceSystem:
    """
    Outer-bound rows at one distribution.

    Only the channel condition is required: P(q, u1, u2) may be arbitrary.
    """
    _require(dist, ("channel",))
    pmf = dist.pmf
    cap1 = min(
        _info(pmf, U1, Y1, Q) - _info(pmf, U1, Y2, Q),
        _info(pmf, U1, Y1, (Q, U2)) - _info(pmf, U1, Y2, (Q, U2)),
        _entropy(pmf, Y1, (Q, U2, Y2)),
    )
    cap2 = min(
        _info(pmf, U2, Y2, Q) - _info(pmf, U2, Y1, Q),
        _info(pmf, U2, Y2, (Q, U1)) - _info(pmf, U2, Y1, (Q, U1)),
        _entropy(pmf, Y2, (Q, U1, Y1)),
    )
    return _upper_rows([("cap1", {"R1": 1}, cap1), ("cap2", {"R2": 1}, cap2)])


def region_outer_relaxed(pmf: JointPmf) -> HalfSpaceSystem:
    """R_j <= min{I(X;Y_j), H(Y_j|Y_other)}, which dominates every outer-bound row."""
    for name in (X, Y1, Y2):
        pmf.axis(name)
    cap1 = min(_info(pmf, X, Y1), _entropy(pmf, Y1, Y2))
    cap2 = min(_info(pmf, X, Y2), _entropy(pmf, Y2, Y1))
    return _upper_rows([("cap1", {"R1": 1}, cap1), ("cap2", {"R2": 1}, cap2)])


def region_nofeedback(dist: SchemeDistribution) -> HalfSpaceSystem:
    """Mutual-secrecy region without feedback: Marton coding plus random binning."""
    _require(dist, ("channel", "encoder"))
    pmf = dist.pmf
    marton = _info(pmf, U1, U2, Q)
    cap1 = _info(pmf, U1, Y1, Q) - marton - _info(pmf, U1, Y2, (Q, U2))
    cap2 = _info(pmf, U2, Y2, Q) - marton - _info(pmf, U2, Y1, (Q, U1))
    return _upper_rows([("cap1", {"R1": 1}, cap1), ("cap2", {"R2": 1}, cap2)])


def _require_wynerziv(dist: WynerZivDistribution) -> None:
    deviation = markov_deviation(dist.pmf, AUX_VARIABLES, X, (Y1, Y2))
    if deviation > FACTORIZATION_TOL:
        raise ModelError(f"(V0, V1, V2) -> X -> (Y1, Y2) is violated by {deviation:.3e}")


def region_wynerziv(dist: WynerZivDistribution) -> HalfSpaceSystem:
    """Generalized Wyner-Ziv rate region over (R0, R1, R2); rows are lower bounds."""
    _require_wynerziv(dist)
    pmf = dist.pmf
    total = (
        _info(pmf, X, V1, (Y1, V0))
        + _info(pmf, X, V2, (Y2, V0))
        + max(_info(pmf, X, V0, Y1), _info(pmf, X, V0, Y2))
    )
    rows = [
        ("rate01", {"R0": 1, "R1": 1}, _info(pmf, X, (V0, V1), Y1)),
        ("rate02", {"R0": 1, "R2": 1}, _info(pmf, X, (V0, V2), Y2)),
        ("total", {"R0": 1, "R1": 1, "R2": 1}, total),
    ]
    return HalfSpaceSystem.build(
        WYNERZIV_RATES,
        [({k: -v for k, v in coefs.items()}, -clamp_rate(rhs), label) for label, coefs, rhs in rows],
    )


def _compression_rows(pmf: JointPmf, source: Tuple[str, ...], prefix: str) -> HalfSpaceSystem:
    """
    Covering and packing rows of the superposition Wyner-Ziv code.

    ``{prefix}0..2`` are the index rates, ``{prefix}01``, ``{prefix}02``,
    ``{prefix}10``, ``{prefix}20`` their sub-index splits and
    ``{prefix}p0..2`` the binning rates. The own-index parts ``{prefix}00``,
    ``{prefix}11``, ``{prefix}22`` are substituted away.
    """
    def r(suffix: str) -> str:
        return f"{prefix}{suffix}"

    variables = [r(s) for s in ("0", "1", "2", "00", "01", "02", "10", "11", "20", "22", "p0", "p1", "p2")]
    rows = [
        (
            {r("p0"): -1, r("00"): -1},
            -clamp_rate(_info(pmf, source, V0)),
            f"{prefix}_cover0",
        )
    ]
    for j, side in ((1, Y1), (2, Y2)):
        aux = V1 if j == 1 else V2
        own = _info(pmf, aux, (V0, side))
        rows += [
            (
                {r(f"p{j}"): -1, r(f"0{j}"): -1, r(f"{j}{j}"): -1},
                -clamp_rate(_info(pmf, aux, source + (V0,))),
                f"{prefix}_cover{j}",
            ),
            ({r(f"p{j}"): 1}, clamp_rate(own), f"{prefix}_pack{j}"),
            (
                {r("p0"): 1, r(f"{j}0"): -1, r(f"p{j}"): 1},
                clamp_rate(_info(pmf, V0, side) + own),
                f"{prefix}_joint{j}",
            ),
            ({r("p0"): -1, r(f"{j}0"): 1}, 0, f"{prefix}_bin{j}"),
        ]
    system = HalfSpaceSystem.build(variables, rows)
    system = system.substitute(r("00"), {r("0"): 1, r("01"): -1, r("02"): -1})
    system = system.substitute(r("11"), {r("1"): 1, r("10"): -1})
    return system.substitute(r("22"), {r("2"): 1, r("20"): -1})


def _compression_auxiliaries(prefix: str) -> Tuple[str, ...]:
    return tuple(f"{prefix}{s}" for s in ("01", "02", "10", "20", "p0", "p1", "p2"))


def wynerziv_rate_system(dist: WynerZivDistribution) -> HalfSpaceSystem:
    """Un-eliminated covering/packing constraints of the generalized Wyner-Ziv code."""
    _require_wynerziv(dist)
    return _compression_rows(dist.pmf, (X,), "R")


def inner2_rate_system(dist: SchemeDistribution) -> HalfSpaceSystem:
    """
    Rate constraints of the hybrid feedback scheme before elimination.

    Variables: target rates R1, R2; key-protected parts R12, R22 (the
    remaining parts are R1 - R12 and R2 - R22); binning rates R1p, R2p;
    Marton rates R1pp, R2pp; common randomness rate Rc; compression
    index rates Rt0, Rt1, Rt2 with their splits and binning rates.
    """
    if dist.extended is None:
        raise ModelError("the hybrid scheme needs a distribution extended with V0, V1, V2")
    _require(dist, ("channel", "encoder", "auxiliary"))
    pmf = dist.extended
    view = (Q, U1, U2, Y1, Y2)
    compression = _compression_rows(pmf, view, "Rt")

    marton = _info(pmf, U1, U2, Q)
    rows = [({"R1pp": -1, "R2pp": -1}, -clamp_rate(marton), "marton")]
    for j in (1, 2):
        own_u, own_y, own_v = (U1, Y1, V1) if j == 1 else (U2, Y2, V2)
        other_u, other_y, other_v = (U2, Y2, V2) if j == 1 else (U1, Y1, V1)
        decode = _info(pmf, own_u, (own_v, own_y), Q)
        eavesdrop = _info(pmf, own_u, (other_y, other_v), (Q, other_u))
        key = _entropy(pmf, own_y, (other_y, other_v, Q, U1, U2))
        rows += [
            ({"Rc": 1, "Rt0": 1}, clamp_rate(_info(pmf, Q, (own_v, own_y))), f"common{j}"),
            (
                {f"R{j}": 1, f"R{j}p": 1, f"R{j}pp": 1, f"Rt{j}": 1},
                clamp_rate(decode),
                f"decode{j}",
            ),
            ({f"R{j}2": 1, f"R{j}p": 1, f"Rt{j}": 1}, clamp_rate(eavesdrop), f"confuse{j}"),
            # may be negative: a surplus of key entropy
            ({f"R{j}p": -1, f"R{j}pp": -1, f"Rt{j}": -1}, key - marton - eavesdrop, f"secrecy{j}"),
            ({f"R{j}2": 1, f"R{j}": -1}, 0, f"split{j}"),
        ]
    variables = list(RATES) + ["R12", "R22", "R1p", "R2p", "R1pp", "R2pp", "Rc"]
    variables += [v for v in compression.variables if v not in variables]
    return HalfSpaceSystem.build(variables, list(compression.rows) + rows)


def derive_region(system: HalfSpaceSystem, keep: Sequence[str], stages: Sequence[Sequence[str]] = ()) -> HalfSpaceSystem:
    """
    Project ``system`` onto ``keep`` by Fourier-Motzkin elimination.

    Each entry of ``stages`` is eliminated in turn before the remaining
    variables, which keeps intermediate row counts small.
    """
    current = system
    for stage in stages:
        unknown = [v for v in stage if v not in current.variables]
        if unknown:
            raise InvalidArgumentError(f"stage variables {unknown} are not in the system")
        current = fme_project(current, [v for v in current.variables if v not in stage])
    return fme_project(current, keep)


def derive_inner2(dist: SchemeDistribution) -> HalfSpaceSystem:
    """Hybrid-scheme region at ``dist`` obtained by eliminating every auxiliary rate."""
    return derive_region(inner2_rate_system(dist), RATES, stages=[_compression_auxiliaries("Rt")])


def derive_wynerziv(dist: WynerZivDistribution) -> HalfSpaceSystem:
    return derive_region(wynerziv_rate_system(dist), WYNERZIV_RATES)


def random_scheme_distribution(
    rng: np.random.Generator,
    q_size: int = 2,
    u_sizes: Tuple[int, int] = (2, 2),
    x_size: int = 3,
    y_sizes: Tuple[int, int] = (2, 2),
    concentration: float = 1.0,
) -> SchemeDistribution:
    """A Dirichlet-random distribution that factors as the inner bounds require."""
    return SchemeDistribution(build_pmf([
        (Alphabet(Q, q_size), (), random_kernel(rng, (), q_size, concentration)),
        (Alphabet(U1, u_sizes[0]), (Q,), random_kernel(rng, (q_size,), u_sizes[0], concentration)),
        (Alphabet(U2, u_sizes[1]), (Q, U1), random_kernel(rng, (q_size, u_sizes[0]), u_sizes[1], concentration)),
        (Alphabet(X, x_size), (U1, U2), random_kernel(rng, u_sizes, x_size, concentration)),
        (Alphabet(Y1, y_sizes[0]), (X,), random_kernel(rng, (x_size,), y_sizes[0], concentration)),
        (Alphabet(Y2, y_sizes[1]), (X, Y1), random_kernel(rng, (x_size, y_sizes[0]), y_sizes[1], concentration)),
    ]))
