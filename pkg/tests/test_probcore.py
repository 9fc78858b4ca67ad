import math

import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from bcmsr.core.errors import InvalidArgumentError, UnknownVariableError
from bcmsr.core.probcore import (
    Alphabet,
    JointPmf,
    binary_convolve,
    binary_entropy,
    build_pmf,
    cond_mutual_info,
    conditional_entropy,
    deterministic_kernel,
    entropy,
    marginalize,
    markov_deviation,
    mutual_info,
    random_kernel,
    split_symbol,
    ternary_entropy,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def random_triple(seed: int, sizes=(2, 3, 2)) -> JointPmf:
    """A generic pmf over (A, B, C) with full support."""
    rng = np.random.default_rng(seed)
    table = rng.dirichlet(np.ones(int(np.prod(sizes)))).reshape(sizes)
    return JointPmf([("A", sizes[0]), ("B", sizes[1]), ("C", sizes[2])], table)


def random_chain(seed: int) -> JointPmf:
    """A -> B -> C built from random kernels."""
    rng = np.random.default_rng(seed)
    return build_pmf([
        (Alphabet("A", 3), (), random_kernel(rng, (), 3)),
        (Alphabet("B", 2), ("A",), random_kernel(rng, (3,), 2)),
        (Alphabet("C", 3), ("B",), random_kernel(rng, (2,), 3)),
    ])


def test_binary_entropy_known_values():
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(0.5) == pytest.approx(1.0)
    assert binary_entropy(0.05) == pytest.approx(0.286397, abs=1e-6)


def test_binary_entropy_accepts_arrays():
    values = binary_entropy(np.array([0.0, 0.5, 1.0]))
    assert values == pytest.approx([0.0, 1.0, 0.0])


def test_binary_convolve():
    assert binary_convolve(0.05, 0.05) == pytest.approx(0.095)
    assert binary_convolve(0.0, 0.3) == pytest.approx(0.3)
    assert binary_convolve(0.5, 0.1) == pytest.approx(0.5)


def test_ternary_entropy_uniform():
    assert ternary_entropy(1 / 3, 1 / 3) == pytest.approx(math.log2(3))


@pytest.mark.parametrize("bad", [-0.1, 1.5, float("nan")])
def test_probability_domain_is_checked(bad):
    with pytest.raises(InvalidArgumentError):
        binary_entropy(bad)


def test_ternary_entropy_rejects_points_off_the_simplex():
    with pytest.raises(InvalidArgumentError):
        ternary_entropy(0.7, 0.6)


def test_pmf_must_sum_to_one():
    with pytest.raises(InvalidArgumentError):
        JointPmf([("A", 2)], [0.5, 0.6])


def test_pmf_rejects_negative_entries():
    with pytest.raises(InvalidArgumentError):
        JointPmf([("A", 2)], [1.5, -0.5])


def test_pmf_rejects_duplicate_names():
    with pytest.raises(InvalidArgumentError):
        JointPmf([("A", 2), ("A", 2)], np.full(4, 0.25))


def test_unknown_variable_is_a_lookup_error():
    pmf = JointPmf([("A", 2)], [0.5, 0.5])
    with pytest.raises(UnknownVariableError) as info:
        entropy(pmf, "B")
    assert isinstance(info.value, LookupError)
    assert "A" in str(info.value)


def test_overlapping_sets_are_rejected():
    pmf = random_triple(1)
    with pytest.raises(InvalidArgumentError):
        cond_mutual_info(pmf, "A", ("A", "B"))


def test_table_is_read_only():
    pmf = JointPmf([("A", 2)], [0.5, 0.5])
    with pytest.raises(ValueError):
        pmf.table[0] = 1.0


def test_marginalize_keeps_pmf_order():
    pmf = random_triple(7)
    marginal = marginalize(pmf, ("C", "A"))
    assert marginal.names == ("A", "C")
    assert marginal.table == pytest.approx(pmf.table.sum(axis=1))


@given(seeds)
def test_chain_rule(seed):
    pmf = random_triple(seed)
    joint = entropy(pmf, ("A", "B", "C"))
    chained = entropy(pmf, "A") + conditional_entropy(pmf, "B", "A") + conditional_entropy(pmf, "C", ("A", "B"))
    assert joint == pytest.approx(chained, abs=1e-10)


@given(seeds)
def test_mutual_information_is_nonnegative_and_symmetric(seed):
    pmf = random_triple(seed)
    assert mutual_info(pmf, "A", "B") >= 0.0
    assert cond_mutual_info(pmf, "A", "C", "B") >= 0.0
    assert mutual_info(pmf, "A", ("B", "C")) == pytest.approx(mutual_info(pmf, ("B", "C"), "A"), abs=1e-12)


@given(seeds)
def test_entropy_bounds(seed):
    pmf = random_triple(seed)
    assert 0.0 <= entropy(pmf, "B") <= math.log2(3) + 1e-12
    assert conditional_entropy(pmf, "B", "A") <= entropy(pmf, "B") + 1e-12


@given(seeds)
def test_data_processing(seed):
    pmf = random_chain(seed)
    assert markov_deviation(pmf, "A", "B", "C") == pytest.approx(0.0, abs=1e-12)
    assert mutual_info(pmf, "A", "C") <= mutual_info(pmf, "A", "B") + 1e-12
    assert cond_mutual_info(pmf, "A", "C", "B") == 0.0


def test_markov_deviation_detects_dependence():
    # C = A xor B with A and B independent fair bits
    pmf = build_pmf([
        (Alphabet("A", 2), (), [0.5, 0.5]),
        (Alphabet("B", 2), (), [0.5, 0.5]),
        (Alphabet("C", 2), ("A", "B"), deterministic_kernel((2, 2), 2, lambda a, b: a ^ b)),
    ])
    assert markov_deviation(pmf, "A", "B", "C") == pytest.approx(0.5)


@given(seeds, st.floats(min_value=0.05, max_value=0.95))
def test_splitting_a_symbol_keeps_information(seed, fraction):
    pmf = random_triple(seed)
    split = split_symbol(pmf, "A", 0, fraction)
    assert split.size_of("A") == 3
    assert mutual_info(split, "A", "B") == pytest.approx(mutual_info(pmf, "A", "B"), abs=1e-10)
    assert entropy(split, ("B", "C")) == pytest.approx(entropy(pmf, ("B", "C")), abs=1e-12)


def test_deterministic_kernel_is_one_hot():
    kernel = deterministic_kernel((2, 3), 4, lambda a, b: (a + b) % 4)
    assert kernel.shape == (2, 3, 4)
    assert np.all(kernel.sum(axis=-1) == 1.0)
    assert kernel[1, 2, 3] == 1.0


def test_build_pmf_rejects_parents_on_first_factor():
    with pytest.raises(InvalidArgumentError):
        build_pmf([(Alphabet("A", 2), ("B",), [0.5, 0.5])])


def test_extend_validates_kernel_shape():
    with pytest.raises(InvalidArgumentError):
        build_pmf([
            (Alphabet("A", 2), (), [0.5, 0.5]),
            (Alphabet("B", 2), ("A",), np.full((3, 2), 0.5)),
        ])


def test_entropy_is_memoized_per_subset():
    pmf = random_triple(3)
    first = pmf.entropy_of(("A", "C"))
    assert pmf.entropy_of(("C", "A")) == first
