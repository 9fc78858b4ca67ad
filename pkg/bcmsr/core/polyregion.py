"""
Linear-inequality systems over named rate variables.

Rows are ``sum(c_i * x_i) <= b`` with exact ``Fraction`` coefficients.
Fourier-Motzkin elimination works on the exact rows; membership tests
evaluate in floating point with an absolute tolerance.
"""

import logging
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import qmc

from bcmsr.core.config import RATIONAL_MAX_DENOMINATOR, REGION_TOL, SAMPLE_MEMBERSHIP_POINTS
from bcmsr.core.errors import (
    InvalidArgumentError,
    SystemParseError,
    UnboundedRegionError,
    UnknownVariableError,
)

logger = logging.getLogger(__name__)

Number = Union[int, float, Fraction, str]
Point = Union[Mapping[str, float], Sequence[float]]


def rationalize(value: Number) -> Fraction:
    """Exact rational for ints/fractions/strings, nearest rational within 1e-12 for floats."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidArgumentError(f"not a number: {value!r}") from exc
    number = float(value)
    if not math.isfinite(number):
        raise InvalidArgumentError(f"coefficients must be finite, got {value!r}")
    return Fraction(number).limit_denominator(RATIONAL_MAX_DENOMINATOR)


@dataclass(frozen=True, eq=False)
class LinearInequality:
    """``sum(coefficients[v] * v) <= rhs``; zero coefficients are never stored."""

    coefficients: Mapping[str, Fraction]
    rhs: Fraction
    label: Optional[str] = None

    @classmethod
    def build(cls, coefficients: Mapping[str, Number], rhs: Number, label: Optional[str] = None) -> "LinearInequality":
        coefs = {}
        for name, value in coefficients.items():
            value = rationalize(value)
            if value:
                coefs[name] = coefs.get(name, Fraction(0)) + value
        coefs = {k: v for k, v in coefs.items() if v}
        return cls(MappingProxyType(coefs), rationalize(rhs), label)

    @classmethod
    def at_least(cls, coefficients: Mapping[str, Number], bound: Number, label: Optional[str] = None) -> "LinearInequality":
        """``sum(c * v) >= bound`` stored with negated coefficients."""
        return cls.build({k: -rationalize(v) for k, v in coefficients.items()}, -rationalize(bound), label)

    def coefficient(self, name: str) -> Fraction:
        return self.coefficients.get(name, Fraction(0))

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(self.coefficients)

    @property
    def is_constant(self) -> bool:
        return not self.coefficients

    @property
    def is_trivial(self) -> bool:
        return self.is_constant and self.rhs >= 0

    @property
    def is_contradiction(self) -> bool:
        return self.is_constant and self.rhs < 0

    def key(self) -> Tuple:
        return tuple(sorted(self.coefficients.items()))

    def lhs(self, point: Mapping[str, float]) -> float:
        return sum(float(c) * float(point[name]) for name, c in self.coefficients.items())

    def scaled(self, factor: Fraction) -> "LinearInequality":
        if factor <= 0:
            raise InvalidArgumentError("rows can only be scaled by positive factors")
        return LinearInequality(
            MappingProxyType({k: v * factor for k, v in self.coefficients.items()}),
            self.rhs * factor,
            self.label,
        )

    def normalized(self) -> "LinearInequality":
        if self.is_constant:
            return LinearInequality(MappingProxyType({}), Fraction(-1 if self.rhs < 0 else 0), self.label)
        return self.scaled(1 / max(abs(c) for c in self.coefficients.values()))

    def to_text(self, order: Sequence[str] = ()) -> str:
        names = [n for n in order if n in self.coefficients]
        names += [n for n in self.coefficients if n not in names]
        parts: List[str] = []
        for name in names:
            c = self.coefficients[name]
            sign = "-" if c < 0 else "+"
            magnitude = abs(c)
            term = name if magnitude == 1 else f"{magnitude}*{name}"
            if not parts:
                parts.append(term if sign == "+" else f"-{term}")
            else:
                parts.append(f"{sign} {term}")
        lhs = " ".join(parts) if parts else "0"
        text = f"{lhs} <= {self.rhs}"
        return f"{self.label}: {text}" if self.label else text

    def __repr__(self) -> str:
        return f"LinearInequality({self.to_text()})"


def _combine(positive: LinearInequality, negative: LinearInequality, var: str) -> LinearInequality:
    a = positive.coefficient(var)
    b = -negative.coefficient(var)
    names = set(positive.coefficients) | set(negative.coefficients)
    coefs = {n: positive.coefficient(n) * b + negative.coefficient(n) * a for n in names}
    coefs.pop(var, None)
    return LinearInequality.build(coefs, positive.rhs * b + negative.rhs * a)


@dataclass(frozen=True)
class HalfSpaceSystem:
    """
    Finite list of rows over ordered rate variables.

    When ``nonnegative`` is set every variable implicitly carries ``v >= 0``.
    """

    variables: Tuple[str, ...]
    rows: Tuple[LinearInequality, ...]
    nonnegative: bool = True

    def __post_init__(self):
        if len(set(self.variables)) != len(self.variables):
            raise InvalidArgumentError(f"duplicate variables in {self.variables}")
        known = set(self.variables)
        for row in self.rows:
            for name in row.coefficients:
                if name not in known:
                    raise UnknownVariableError(name, self.variables)

    @classmethod
    def build(
        cls,
        variables: Sequence[str],
        rows: Iterable[Union[LinearInequality, Tuple]],
        nonnegative: bool = True,
    ) -> "HalfSpaceSystem":
        built = []
        for row in rows:
            if not isinstance(row, LinearInequality):
                row = LinearInequality.build(*row)
            built.append(row)
        return cls(tuple(variables), tuple(built), nonnegative)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def labels(self) -> Dict[str, LinearInequality]:
        return {row.label: row for row in self.rows if row.label}

    def row(self, label: str) -> LinearInequality:
        try:
            return self.labels[label]
        except KeyError:
            raise InvalidArgumentError(f"no row labelled {label!r}") from None

    def rhs(self, label: str) -> float:
        return float(self.row(label).rhs)

    def with_rows(self, rows: Iterable[LinearInequality]) -> "HalfSpaceSystem":
        return HalfSpaceSystem(self.variables, tuple(rows), self.nonnegative)

    def substitute(self, name: str, expression: Mapping[str, Number]) -> "HalfSpaceSystem":
        """Replace ``name`` by a linear expression in (possibly new) variables."""
        if name not in self.variables:
            raise UnknownVariableError(name, self.variables)
        expression = {k: rationalize(v) for k, v in expression.items()}
        variables = [v for v in self.variables if v != name]
        variables += [v for v in expression if v not in variables]
        rows = []
        for row in self.rows:
            c = row.coefficient(name)
            if not c:
                rows.append(row)
                continue
            coefs = dict(row.coefficients)
            del coefs[name]
            for v, e in expression.items():
                coefs[v] = coefs.get(v, Fraction(0)) + c * e
            rows.append(LinearInequality.build(coefs, row.rhs, row.label))
        if self.nonnegative:
            rows.append(LinearInequality.at_least(expression, 0, label=f"{name}_nonneg"))
        return HalfSpaceSystem(tuple(variables), tuple(rows), self.nonnegative)

    def to_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """Float matrix ``A`` and vector ``b`` with ``A x <= b``, nonnegativity excluded."""
        index = {v: i for i, v in enumerate(self.variables)}
        matrix = np.zeros((len(self.rows), len(self.variables)))
        bound = np.zeros(len(self.rows))
        for i, row in enumerate(self.rows):
            for name, c in row.coefficients.items():
                matrix[i, index[name]] = float(c)
            bound[i] = float(row.rhs)
        return matrix, bound

    def to_text(self) -> str:
        lines = [f"# variables: {', '.join(self.variables)}"]
        lines.append(f"# nonnegative: {'yes' if self.nonnegative else 'no'}")
        lines.extend(row.to_text(self.variables) for row in self.rows)
        return "\n".join(lines) + "\n"


_NUMBER = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?(?:/\d+)?"
_NAME = r"[A-Za-z_][A-Za-z0-9_']*"
_TERM = re.compile(rf"(?P<sign>[+-]?)(?P<coef>{_NUMBER})?(?P<star>\*)?(?P<name>{_NAME})?")
_RHS = re.compile(rf"[+-]?{_NUMBER}")
_LABEL = re.compile(rf"^\s*(?P<label>[A-Za-z_][\w\-']*)\s*:\s*(?P<body>.*)$")
_RELATION = re.compile(r"(<=|>=)")


def _parse_side(text: str, line_number: int) -> Tuple[Dict[str, Fraction], Fraction]:
    compact = re.sub(r"\s+", "", text)
    if not compact:
        raise SystemParseError("empty side of inequality", line_number)
    coefs: Dict[str, Fraction] = {}
    constant = Fraction(0)
    pos = 0
    while pos < len(compact):
        match = _TERM.match(compact, pos)
        if not match or match.end() == pos:
            raise SystemParseError(f"cannot parse term at {compact[pos:]!r}", line_number)
        sign, coef, star, name = match.group("sign", "coef", "star", "name")
        if pos > 0 and not sign:
            raise SystemParseError(f"missing operator before {compact[pos:]!r}", line_number)
        if star and not name:
            raise SystemParseError(f"dangling '*' in {text.strip()!r}", line_number)
        if not coef and not name:
            raise SystemParseError(f"empty term in {text.strip()!r}", line_number)
        value = Fraction(coef) if coef else Fraction(1)
        if sign == "-":
            value = -value
        if name:
            coefs[name] = coefs.get(name, Fraction(0)) + value
        else:
            constant += value
        pos = match.end()
    return coefs, constant


def parse_system(text: str, nonnegative: Optional[bool] = None) -> HalfSpaceSystem:
    """
    Parse the inequality text format.

    One row per line, ``[label:] c1*R1 + c2*R2 <= b`` (``>=`` is accepted and
    negated). ``#`` starts a comment; ``# variables: a, b`` fixes variable
    order and ``# nonnegative: yes|no`` sets the implicit bounds.
    """
    declared: List[str] = []
    flag = True
    rows: List[LinearInequality] = []
    seen: List[str] = []
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            directive = line[1:].strip()
            if directive.lower().startswith("variables:"):
                declared = [v.strip() for v in directive.split(":", 1)[1].split(",") if v.strip()]
            elif directive.lower().startswith("nonnegative:"):
                value = directive.split(":", 1)[1].strip().lower()
                if value not in {"yes", "no", "true", "false"}:
                    raise SystemParseError(f"nonnegative must be yes or no, got {value!r}", line_number)
                flag = value in {"yes", "true"}
            continue
        line = line.split("#", 1)[0].strip()
        if not line:
            continue

        label = None
        labelled = _LABEL.match(line)
        if labelled:
            label, line = labelled.group("label"), labelled.group("body")
        parts = _RELATION.split(line)
        if len(parts) != 3:
            raise SystemParseError("expected exactly one '<=' or '>=' relation", line_number)
        left, relation, right = parts
        lhs, lhs_const = _parse_side(left, line_number)
        right = right.strip()
        if not _RHS.fullmatch(re.sub(r"\s+", "", right)):
            raise SystemParseError(f"right-hand side must be a number, got {right!r}", line_number)
        rhs = Fraction(re.sub(r"\s+", "", right)) - lhs_const
        if relation == ">=":
            lhs = {k: -v for k, v in lhs.items()}
            rhs = -rhs
        for name in lhs:
            if name not in seen:
                seen.append(name)
        rows.append(LinearInequality.build(lhs, rhs, label))

    missing = [n for n in seen if declared and n not in declared]
    if missing:
        raise SystemParseError(f"variables {missing} used but not declared")
    variables = declared or seen
    return HalfSpaceSystem(tuple(variables), tuple(rows), flag if nonnegative is None else nonnegative)


def format_system(system: HalfSpaceSystem) -> str:
    return system.to_text()


def _nonnegativity_row(var: str) -> LinearInequality:
    return LinearInequality.build({var: -1}, 0, label=f"{var}_nonneg")


def prune_redundant(system: HalfSpaceSystem) -> HalfSpaceSystem:
    """
    Remove duplicate and dominated rows.

    A contradiction collapses the system to the single row ``0 <= -1``.
    Under implicit nonnegativity, a row is dropped when another row has
    coefficient-wise larger coefficients and a smaller right-hand side.
    """
    normalized = [row.normalized() for row in system.rows]
    if any(row.is_contradiction for row in normalized):
        return system.with_rows([LinearInequality.build({}, -1)])

    best: Dict[Tuple, LinearInequality] = {}
    order: List[Tuple] = []
    for row in normalized:
        if row.is_trivial:
            continue
        if system.nonnegative and all(c < 0 for c in row.coefficients.values()) and row.rhs >= 0:
            continue
        key = row.key()
        current = best.get(key)
        if current is None:
            best[key] = row
            order.append(key)
        elif row.rhs < current.rhs or (row.rhs == current.rhs and current.label is None and row.label):
            best[key] = row
    rows = [best[k] for k in order]

    if system.nonnegative:
        kept = []
        for i, row in enumerate(rows):
            dominated = False
            for j, other in enumerate(rows):
                if i == j or other.rhs > row.rhs:
                    continue
                names = set(row.coefficients) | set(other.coefficients)
                if all(other.coefficient(n) >= row.coefficient(n) for n in names):
                    dominated = True
                    break
            if not dominated:
                kept.append(row)
        rows = kept
    return system.with_rows(rows)


def fme_eliminate(system: HalfSpaceSystem, var: str) -> HalfSpaceSystem:
    """Exact projection of the feasible set away from ``var``."""
    if var not in system.variables:
        raise UnknownVariableError(var, system.variables)
    rows = list(system.rows)
    if system.nonnegative:
        rows.append(_nonnegativity_row(var))

    zero, positive, negative = [], [], []
    for row in rows:
        c = row.coefficient(var)
        if c == 0:
            zero.append(row)
        elif c > 0:
            positive.append(row)
        else:
            negative.append(row)

    combined = list(zero)
    combined.extend(_combine(p, n, var) for p in positive for n in negative)
    logger.debug(
        "eliminate %s: %d zero, %d positive, %d negative -> %d rows",
        var, len(zero), len(positive), len(negative), len(combined),
    )
    reduced = HalfSpaceSystem(
        tuple(v for v in system.variables if v != var), tuple(combined), system.nonnegative
    )
    return prune_redundant(reduced)


def _elimination_cost(system: HalfSpaceSystem, var: str) -> int:
    positive = sum(1 for row in system.rows if row.coefficient(var) > 0)
    negative = sum(1 for row in system.rows if row.coefficient(var) < 0) + int(system.nonnegative)
    return positive * negative - positive - negative


def fme_project(
    system: HalfSpaceSystem,
    keep: Sequence[str],
    order: Optional[Sequence[str]] = None,
) -> HalfSpaceSystem:
    """
    Eliminate every variable outside ``keep``.

    Without an explicit ``order`` the variable with the smallest row growth
    goes first.
    """
    for name in keep:
        if name not in system.variables:
            raise UnknownVariableError(name, system.variables)
    pending = [v for v in system.variables if v not in keep]
    if order is not None:
        if sorted(order) != sorted(pending):
            raise InvalidArgumentError(f"elimination order {list(order)} must list exactly {pending}")
        pending = list(order)

    logger.info("projecting %d rows onto %s, eliminating %d variables", len(system), list(keep), len(pending))
    current = prune_redundant(system)
    while pending:
        var = pending[0] if order is not None else min(pending, key=lambda v: _elimination_cost(current, v))
        pending.remove(var)
        current = fme_eliminate(current, var)
    variables = tuple(v for v in keep)
    return HalfSpaceSystem(variables, current.rows, current.nonnegative)


@dataclass(frozen=True)
class Region2D:
    """A bounded 2-D region with its extreme points in counter-clockwise order."""

    inequalities: HalfSpaceSystem
    vertices: Tuple[Tuple[Fraction, Fraction], ...]

    @property
    def is_empty(self) -> bool:
        return not self.vertices

    @property
    def names(self) -> Tuple[str, str]:
        return self.inequalities.variables  # type: ignore[return-value]

    @property
    def float_vertices(self) -> List[Tuple[float, float]]:
        return [(float(x), float(y)) for x, y in self.vertices]

    def points(self) -> List[Dict[str, float]]:
        x, y = self.names
        return [{x: vx, y: vy} for vx, vy in self.float_vertices]


def _cross(o, a, b) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _convex_hull(points: Iterable[Tuple[Fraction, Fraction]]) -> List[Tuple[Fraction, Fraction]]:
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower: List = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: List = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    return hull if len(hull) > 1 else pts[:1]


def _is_feasible(system: HalfSpaceSystem) -> bool:
    reduced = system
    for var in system.variables:
        reduced = fme_eliminate(reduced, var)
    return not any(row.is_contradiction for row in reduced.rows)


def vertices2d(system: HalfSpaceSystem) -> Region2D:
    """Exact vertex enumeration of a bounded 2-D system."""
    if len(system.variables) != 2:
        raise InvalidArgumentError(f"vertices2d needs exactly 2 variables, got {system.variables}")
    x, y = system.variables
    if any(row.is_contradiction for row in system.rows):
        return Region2D(system, ())

    lines = [(row.coefficient(x), row.coefficient(y), row.rhs) for row in system.rows if not row.is_constant]
    if system.nonnegative:
        lines += [(Fraction(-1), Fraction(0), Fraction(0)), (Fraction(0), Fraction(-1), Fraction(0))]

    def feasible(p) -> bool:
        return all(a * p[0] + b * p[1] <= c for a, b, c in lines)

    candidates = []
    for i in range(len(lines)):
        a1, b1, c1 = lines[i]
        for j in range(i + 1, len(lines)):
            a2, b2, c2 = lines[j]
            det = a1 * b2 - a2 * b1
            if det == 0:
                continue
            p = ((c1 * b2 - c2 * b1) / det, (a1 * c2 - a2 * c1) / det)
            if feasible(p):
                candidates.append(p)

    directions = [(-b, a) for a, b, _ in lines] + [(b, -a) for a, b, _ in lines]
    unbounded = not lines or any(all(a * d[0] + b * d[1] <= 0 for a, b, _ in lines) for d in directions)
    if unbounded and (candidates or _is_feasible(system)):
        raise UnboundedRegionError(f"region over ({x}, {y}) is unbounded")

    return Region2D(system, tuple(_convex_hull(candidates)))


def minimal_system2d(system: HalfSpaceSystem) -> HalfSpaceSystem:
    """Keep only rows that support an edge (or the single vertex) of the polygon."""
    region = vertices2d(system)
    if region.is_empty:
        return prune_redundant(system)
    x, y = system.variables
    needed = 2 if len(region.vertices) >= 3 else 1
    kept = []
    for row in prune_redundant(system).rows:
        tight = sum(
            1 for vx, vy in region.vertices if row.coefficient(x) * vx + row.coefficient(y) * vy == row.rhs
        )
        if tight >= needed:
            kept.append(row)
    return system.with_rows(kept)


def _point_dict(system: HalfSpaceSystem, point: Point) -> Dict[str, float]:
    if isinstance(point, Mapping):
        missing = [v for v in system.variables if v not in point]
        if missing:
            raise InvalidArgumentError(f"point is missing coordinates {missing}")
        return {v: float(point[v]) for v in system.variables}
    values = list(point)
    if len(values) != len(system.variables):
        raise InvalidArgumentError(f"point has {len(values)} coordinates, system has {len(system.variables)}")
    return {v: float(val) for v, val in zip(system.variables, values)}


def contains(system: HalfSpaceSystem, point: Point, tol: float = REGION_TOL) -> bool:
    """True iff every row (and nonnegativity, if implicit) holds within ``tol``."""
    coords = _point_dict(system, point)
    if system.nonnegative and any(v < -tol for v in coords.values()):
        return False
    return all(row.lhs(coords) <= float(row.rhs) + tol for row in system.rows)


def is_subset(a: Region2D, b: HalfSpaceSystem, tol: float = REGION_TOL) -> bool:
    """Convexity reduces inclusion to checking the vertices of ``a``."""
    names = a.names
    return all(contains(b, dict(zip(names, v)), tol) for v in a.float_vertices)


def region_equal(a: Region2D, b: Region2D, tol: float = REGION_TOL) -> bool:
    return is_subset(a, b.inequalities, tol) and is_subset(b, a.inequalities, tol)


def membership(system: HalfSpaceSystem, points: np.ndarray, tol: float = REGION_TOL) -> np.ndarray:
    """Vectorized ``contains`` over the rows of ``points`` (columns in variable order)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    matrix, bound = system.to_arrays()
    inside = np.all(points @ matrix.T <= bound + tol, axis=1) if len(bound) else np.ones(len(points), bool)
    if system.nonnegative:
        inside &= np.all(points >= -tol, axis=1)
    return inside


def low_discrepancy_points(upper: Sequence[float], count: int = SAMPLE_MEMBERSHIP_POINTS) -> np.ndarray:
    """Deterministic Halton points filling the box ``[0, upper]``."""
    sampler = qmc.Halton(d=len(upper), scramble=False)
    return sampler.random(count) * np.asarray(upper, dtype=float)


def membership_disagreements(
    a: HalfSpaceSystem,
    b: HalfSpaceSystem,
    points: np.ndarray,
    tol: float = REGION_TOL,
) -> int:
    """Number of points inside exactly one of ``a`` and ``b`` (same variable order)."""
    if tuple(a.variables) != tuple(b.variables):
        raise InvalidArgumentError(f"variable orders differ: {a.variables} vs {b.variables}")
    return int(np.count_nonzero(membership(a, points, tol) != membership(b, points, tol)))
