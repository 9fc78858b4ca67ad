"""
Finite-alphabet probability tables and information measures.

All measures are in bits. Entries below ``ZERO_PROB_TOL`` count as exact
zeros, so ``0 log 0 = 0`` everywhere.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np

from bcmsr.core.config import MI_CLAMP_TOL, PMF_SUM_TOL, ZERO_PROB_TOL
from bcmsr.core.errors import InvalidArgumentError, UnknownVariableError

logger = logging.getLogger(__name__)

Names = Union[str, Iterable[str]]


@dataclass(frozen=True)
class Alphabet:
    """A named finite alphabet ``{0, ..., size-1}``."""

    name: str
    size: int

    def __post_init__(self):
        if not self.name:
            raise InvalidArgumentError("alphabet name must be non-empty")
        if int(self.size) != self.size or self.size < 1:
            raise InvalidArgumentError(f"alphabet {self.name!r} needs a positive size, got {self.size}")


def as_names(names: Names) -> Tuple[str, ...]:
    if isinstance(names, str):
        return (names,)
    seen: List[str] = []
    for name in names:
        if name not in seen:
            seen.append(name)
    return tuple(seen)


class JointPmf:
    """
    Dense joint pmf over a labeled product of alphabets.

    The table is copied and frozen on construction. Variables are addressed
    by name; every operation reorders axes internally.
    """

    __slots__ = ("_variables", "_axis", "_table", "_entropy_cache")

    def __init__(self, variables: Sequence[Union[Alphabet, Tuple[str, int]]], table):
        alphabets = tuple(v if isinstance(v, Alphabet) else Alphabet(*v) for v in variables)
        names = [a.name for a in alphabets]
        if len(set(names)) != len(names):
            raise InvalidArgumentError(f"variable names must be unique: {names}")

        shape = tuple(a.size for a in alphabets)
        array = np.array(table, dtype=float)
        if array.shape != shape:
            if array.size != int(np.prod(shape, dtype=np.int64)):
                raise InvalidArgumentError(f"table of {array.size} cells does not fit shape {shape}")
            array = array.reshape(shape)
        if not np.all(np.isfinite(array)) or np.any(array < 0):
            raise InvalidArgumentError("probabilities must be finite and nonnegative")
        total = float(array.sum())
        if abs(total - 1.0) > PMF_SUM_TOL:
            raise InvalidArgumentError(f"probabilities sum to {total!r}, not 1")
        array.setflags(write=False)

        self._variables = alphabets
        self._axis = {name: i for i, name in enumerate(names)}
        self._table = array
        self._entropy_cache: Dict[frozenset, float] = {}

    @property
    def variables(self) -> Tuple[Alphabet, ...]:
        return self._variables

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(a.name for a in self._variables)

    @property
    def table(self) -> np.ndarray:
        return self._table

    @property
    def shape(self) -> Tuple[int, ...]:
        return self._table.shape

    def __contains__(self, name: str) -> bool:
        return name in self._axis

    def __repr__(self) -> str:
        inner = ", ".join(f"{a.name}:{a.size}" for a in self._variables)
        return f"JointPmf({inner})"

    def size_of(self, name: str) -> int:
        return self._variables[self.axis(name)].size

    def axis(self, name: str) -> int:
        try:
            return self._axis[name]
        except KeyError:
            raise UnknownVariableError(name, self.names) from None

    def marginal_table(self, names: Names) -> np.ndarray:
        """Marginal table with axes in the order given by ``names``."""
        keep = as_names(names)
        axes = [self.axis(n) for n in keep]
        drop = tuple(i for i in range(self._table.ndim) if i not in axes)
        summed = self._table.sum(axis=drop) if drop else self._table
        # summed keeps the original relative order of the kept axes
        order = sorted(axes)
        return np.transpose(summed, [order.index(a) for a in axes])

    def entropy_of(self, names: Names) -> float:
        key = frozenset(as_names(names))
        if not key:
            return 0.0
        cached = self._entropy_cache.get(key)
        if cached is None:
            cached = _table_entropy(self.marginal_table(sorted(key, key=self.axis)))
            self._entropy_cache[key] = cached
        return cached


def xlog2x(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    out = np.zeros_like(values)
    mask = values > ZERO_PROB_TOL
    out[mask] = values[mask] * np.log2(values[mask])
    return out


def _table_entropy(table: np.ndarray) -> float:
    flat = np.ravel(table)
    flat = flat[flat > ZERO_PROB_TOL]
    return float(-(flat * np.log2(flat)).sum())


def marginalize(pmf: JointPmf, keep: Names) -> JointPmf:
    """Sum out every variable not in ``keep``."""
    names = as_names(keep)
    if not names:
        raise InvalidArgumentError("marginalize needs at least one variable to keep")
    for name in names:
        pmf.axis(name)
    ordered = [n for n in pmf.names if n in names]
    table = pmf.marginal_table(ordered)
    table = table / table.sum()
    return JointPmf([pmf.variables[pmf.axis(n)] for n in ordered], table)


def entropy(pmf: JointPmf, variables: Names) -> float:
    """Joint entropy H(variables) in bits."""
    names = as_names(variables)
    if not names:
        raise InvalidArgumentError("entropy needs a non-empty variable set")
    for name in names:
        pmf.axis(name)
    return pmf.entropy_of(names)


def conditional_entropy(pmf: JointPmf, a: Names, given: Names = ()) -> float:
    """H(a | given)."""
    a, given = as_names(a), as_names(given)
    _require_disjoint(a, given)
    value = entropy(pmf, a + given) - (pmf.entropy_of(given) if given else 0.0)
    return 0.0 if abs(value) <= MI_CLAMP_TOL else value


def cond_mutual_info(pmf: JointPmf, a: Names, b: Names, c: Names = ()) -> float:
    """I(a; b | c) = H(a,c) + H(b,c) - H(a,b,c) - H(c), clamped near zero."""
    a, b, c = as_names(a), as_names(b), as_names(c)
    if not a or not b:
        raise InvalidArgumentError("mutual information needs non-empty a and b")
    _require_disjoint(a, b, c)
    for name in a + b + c:
        pmf.axis(name)
    value = (
        pmf.entropy_of(a + c)
        + pmf.entropy_of(b + c)
        - pmf.entropy_of(a + b + c)
        - pmf.entropy_of(c)
    )
    if abs(value) <= MI_CLAMP_TOL:
        return 0.0
    if value < 0:
        logger.warning("negative mutual information %.3e for I(%s;%s|%s)", value, a, b, c)
    return value


def mutual_info(pmf: JointPmf, a: Names, b: Names) -> float:
    return cond_mutual_info(pmf, a, b, ())


def _require_disjoint(*groups: Tuple[str, ...]) -> None:
    seen: set = set()
    for group in groups:
        overlap = seen.intersection(group)
        if overlap:
            raise InvalidArgumentError(f"variable sets overlap on {sorted(overlap)}")
        seen.update(group)


def _check_probability(name: str, value) -> np.ndarray:
    array = np.asarray(value, dtype=float)
    if np.any(~np.isfinite(array)) or np.any(array < 0) or np.any(array > 1):
        raise InvalidArgumentError(f"{name} must lie in [0, 1], got {value!r}")
    return array


def _scalar_or_array(array: np.ndarray):
    return float(array) if array.ndim == 0 else array


def binary_entropy(a):
    """h(a) = -a log a - (1-a) log(1-a); accepts scalars or arrays."""
    a = _check_probability("a", a)
    return _scalar_or_array(-(xlog2x(a) + xlog2x(1.0 - a)))


def binary_convolve(a, b):
    """a * b = a(1-b) + (1-a)b, the flip probability of two cascaded BSCs."""
    a = _check_probability("a", a)
    b = _check_probability("b", b)
    return _scalar_or_array(np.clip(a * (1.0 - b) + (1.0 - a) * b, 0.0, 1.0))


def ternary_entropy(a, b):
    """h(a, b, 1-a-b) in bits; accepts scalars or broadcastable arrays."""
    a = _check_probability("a", a)
    b = _check_probability("b", b)
    rest = 1.0 - a - b
    if np.any(rest < -PMF_SUM_TOL):
        raise InvalidArgumentError(f"({a}, {b}) is not a point of the probability simplex")
    rest = np.clip(rest, 0.0, 1.0)
    return _scalar_or_array(-(xlog2x(a) + xlog2x(b) + xlog2x(rest)))


def markov_deviation(pmf: JointPmf, head: Names, middle: Names, tail: Names) -> float:
    """
    Max |P(head | middle, tail) - P(head | middle)| over cells where
    P(middle, tail) > 0. Zero iff head - middle - tail is a Markov chain.
    """
    head, middle, tail = as_names(head), as_names(middle), as_names(tail)
    _require_disjoint(head, middle, tail)
    if not head or not tail:
        return 0.0
    nh, nm = len(head), len(middle)
    full = pmf.marginal_table(head + middle + tail)
    head_axes = tuple(range(nh))
    tail_axes = tuple(range(nh + nm, full.ndim))

    p_mt = full.sum(axis=head_axes, keepdims=True)
    p_hm = full.sum(axis=tail_axes, keepdims=True)
    p_m = p_hm.sum(axis=head_axes, keepdims=True)

    support = np.broadcast_to(p_mt > ZERO_PROB_TOL, full.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond_full = np.where(p_mt > ZERO_PROB_TOL, full / p_mt, 0.0)
        cond_reduced = np.where(p_m > ZERO_PROB_TOL, p_hm / p_m, 0.0)
    gap = np.abs(cond_full - np.broadcast_to(cond_reduced, full.shape))
    return float(gap[support].max()) if support.any() else 0.0


def point_mass(alphabet: Alphabet, symbol: int = 0) -> np.ndarray:
    vector = np.zeros(alphabet.size)
    vector[symbol] = 1.0
    return vector


def deterministic_kernel(parent_sizes: Sequence[int], size: int, fn: Callable[..., int]) -> np.ndarray:
    """One-hot kernel P(v | parents) for ``v = fn(*parents)``."""
    kernel = np.zeros(tuple(parent_sizes) + (size,))
    for index in np.ndindex(*parent_sizes):
        kernel[index + (fn(*index),)] = 1.0
    return kernel


def extend(pmf: JointPmf, alphabet: Alphabet, parents: Names, kernel) -> JointPmf:
    """
    Append a variable drawn from ``kernel[parents..., new]`` given ``parents``.

    The new variable is conditionally independent of everything else given
    its parents.
    """
    parents = as_names(parents)
    if alphabet.name in pmf:
        raise InvalidArgumentError(f"variable {alphabet.name!r} already present")
    kernel = np.asarray(kernel, dtype=float)
    expected = tuple(pmf.size_of(p) for p in parents) + (alphabet.size,)
    if kernel.shape != expected:
        raise InvalidArgumentError(f"kernel shape {kernel.shape} != {expected}")
    if np.any(kernel < 0) or not np.allclose(kernel.sum(axis=-1), 1.0, atol=PMF_SUM_TOL * 10):
        raise InvalidArgumentError(f"kernel for {alphabet.name!r} is not a conditional pmf")

    ndim = len(pmf.names)
    # place kernel axes onto the parents' positions plus a trailing new axis
    parent_axes = [pmf.axis(p) for p in parents]
    order = np.argsort(parent_axes)
    aligned = np.transpose(kernel, list(order) + [len(parents)])
    shape = [1] * ndim + [alphabet.size]
    for axis in parent_axes:
        shape[axis] = pmf.size_of(pmf.names[axis])
    table = pmf.table[..., None] * aligned.reshape(shape)
    return JointPmf(pmf.variables + (alphabet,), table)


def build_pmf(factors: Sequence[Tuple[Alphabet, Names, object]]) -> JointPmf:
    """
    Build a joint pmf from a chain-rule factor list.

    Each factor is ``(alphabet, parents, kernel)``; the first factor must have
    no parents and its kernel is the marginal pmf.
    """
    if not factors:
        raise InvalidArgumentError("build_pmf needs at least one factor")
    alphabet, parents, marginal = factors[0]
    if as_names(parents):
        raise InvalidArgumentError("the first factor cannot have parents")
    pmf = JointPmf([alphabet], marginal)
    for alphabet, parents, kernel in factors[1:]:
        pmf = extend(pmf, alphabet, parents, kernel)
    return pmf


def split_symbol(pmf: JointPmf, name: str, symbol: int, fraction: float) -> JointPmf:
    """Duplicate ``symbol`` of ``name``; the copy receives ``1 - fraction`` of its mass."""
    if not 0.0 < fraction < 1.0:
        raise InvalidArgumentError(f"fraction must lie in (0, 1), got {fraction}")
    axis = pmf.axis(name)
    size = pmf.size_of(name)
    if not 0 <= symbol < size:
        raise InvalidArgumentError(f"symbol {symbol} outside alphabet {name!r} of size {size}")
    original = np.take(pmf.table, [symbol], axis=axis)
    table = np.concatenate([pmf.table, original * (1.0 - fraction)], axis=axis)
    index = [slice(None)] * table.ndim
    index[axis] = symbol
    table[tuple(index)] *= fraction
    alphabets = list(pmf.variables)
    alphabets[axis] = Alphabet(name, size + 1)
    return JointPmf(alphabets, table)


def random_kernel(rng: np.random.Generator, parent_sizes: Sequence[int], size: int, concentration: float = 1.0) -> np.ndarray:
    """Dirichlet-distributed conditional pmf, used by property tests and demos."""
    shape = tuple(parent_sizes)
    return rng.dirichlet(np.full(size, concentration), size=shape if shape else None)
