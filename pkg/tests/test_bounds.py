import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from bcmsr.core.errors import InvalidArgumentError, ModelError
from bcmsr.core.polyregion import is_subset, low_discrepancy_points, membership_disagreements, region_equal, vertices2d
from bcmsr.core.probcore import JointPmf, entropy, split_symbol
from bcmsr.services.bounds import (
    BASE_VARIABLES,
    INNER1_LABELS,
    INNER2_LABELS,
    OUTER_LABELS,
    WYNERZIV_LABELS,
    SchemeDistribution,
    clamp_rate,
    derive_inner2,
    derive_region,
    derive_wynerziv,
    factorization_deviations,
    inner2_rate_system,
    random_scheme_distribution,
    region_inner1,
    region_inner2,
    region_nofeedback,
    region_outer,
    region_outer_relaxed,
    region_wynerziv,
    verify_factorization,
    wynerziv_rate_system,
)
from bcmsr.services.verify import SPLIT_VARIABLES, bound_row_constants, wynerziv_example_distribution

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def scheme(seed: int) -> SchemeDistribution:
    return random_scheme_distribution(np.random.default_rng(seed))


def unstructured(seed: int) -> SchemeDistribution:
    """A full-support joint with no Markov structure at all."""
    rng = np.random.default_rng(seed)
    sizes = (2, 2, 2, 3, 2, 2)
    table = rng.dirichlet(np.ones(int(np.prod(sizes)))).reshape(sizes)
    return SchemeDistribution(JointPmf(list(zip(BASE_VARIABLES, sizes)), table))


@pytest.mark.parametrize(
    "value, expected",
    [(-0.2, 0.0), (5e-13, 0.0), (0.0, 0.0), (0.3, 0.3)],
)
def test_clamp_rate(value, expected):
    assert clamp_rate(value) == expected


def test_scheme_distribution_checks_variables():
    pmf = JointPmf([("Q", 2)], [0.5, 0.5])
    with pytest.raises(ModelError):
        SchemeDistribution(pmf)


@given(seeds)
def test_random_schemes_factor(seed):
    dist = scheme(seed)
    assert verify_factorization(dist) == []
    extended = dist.with_constant_auxiliaries()
    assert extended.has_extension
    assert set(factorization_deviations(extended)) == {"channel", "encoder", "auxiliary"}


def test_unstructured_distributions_are_refused():
    dist = unstructured(5)
    violated = {violation.condition for violation in verify_factorization(dist)}
    assert "channel" in violated
    with pytest.raises(ModelError):
        region_inner1(dist)


def test_outer_rows_are_labelled():
    dist = scheme(11)
    assert [row.label for row in region_outer(dist).rows] == list(OUTER_LABELS)


@given(seeds)
def test_rows_are_labelled_and_nonnegative(seed):
    dist = scheme(seed)
    inner1 = region_inner1(dist)
    inner2 = region_inner2(dist.with_constant_auxiliaries())
    assert tuple(row.label for row in inner1.rows) == INNER1_LABELS
    assert tuple(row.label for row in inner2.rows) == INNER2_LABELS
    for system in (inner1, inner2, region_nofeedback(dist), region_outer(dist)):
        assert all(row.rhs >= 0 for row in system.rows)


@given(seeds)
def test_hybrid_bound_collapses_to_key_bound(seed):
    dist = scheme(seed)
    hybrid = region_inner2(dist.with_constant_auxiliaries())
    key = region_inner1(dist)
    for label in INNER1_LABELS:
        assert hybrid.rhs(label) == pytest.approx(key.rhs(label), abs=1e-9)


@given(seeds, st.sampled_from(SPLIT_VARIABLES), st.floats(min_value=0.05, max_value=0.95))
def test_splitting_a_symbol_leaves_every_bound_unchanged(seed, name, fraction):
    dist = scheme(seed)
    split = SchemeDistribution(split_symbol(dist.pmf, name, 0, fraction))
    assert split.pmf.size_of(name) == dist.pmf.size_of(name) + 1
    before, after = bound_row_constants(dist), bound_row_constants(split)
    assert before.keys() == after.keys()
    for key, value in before.items():
        assert after[key] == pytest.approx(value, abs=1e-9), key


@given(seeds)
def test_feedback_contains_the_nofeedback_region(seed):
    dist = scheme(seed)
    plain = vertices2d(region_nofeedback(dist))
    assert is_subset(plain, region_inner1(dist))


@given(seeds)
def test_relaxed_outer_rows_dominate(seed):
    dist = scheme(seed)
    outer, relaxed = region_outer(dist), region_outer_relaxed(dist.pmf)
    for label in OUTER_LABELS:
        assert outer.rhs(label) <= relaxed.rhs(label) + 1e-12


def test_hybrid_bound_needs_an_extension():
    dist = scheme(3)
    with pytest.raises(ModelError):
        region_inner2(dist)
    with pytest.raises(ModelError):
        inner2_rate_system(dist)


def test_extension_must_marginalize_to_the_scheme():
    first, second = scheme(1), scheme(2).with_constant_auxiliaries()
    with pytest.raises(ModelError):
        SchemeDistribution(first.pmf, second.extended)


def test_wynerziv_rows_are_lower_bounds():
    dist = wynerziv_example_distribution(0)
    region = region_wynerziv(dist)
    assert tuple(row.label for row in region.rows) == WYNERZIV_LABELS
    assert all(row.rhs <= 0 for row in region.rows)
    # every rate at H(X) is always achievable
    reach = entropy(dist.pmf, "X")
    assert all(row.lhs({"R0": reach, "R1": reach, "R2": reach}) <= row.rhs for row in region.rows)


def test_wynerziv_rate_system_variables():
    system = wynerziv_rate_system(wynerziv_example_distribution(0))
    assert {"R0", "R1", "R2", "R01", "R02", "R10", "R20", "Rp0", "Rp1", "Rp2"} <= set(system.variables)
    assert "R00" not in system.variables


def test_derive_region_rejects_unknown_stage():
    system = wynerziv_rate_system(wynerziv_example_distribution(0))
    with pytest.raises(InvalidArgumentError):
        derive_region(system, ["R0", "R1", "R2"], stages=[["nope"]])


@pytest.mark.slow
def test_derived_wynerziv_region_matches_stated_rows():
    dist = wynerziv_example_distribution(0)
    reach = 1.5 * entropy(dist.pmf, "X")
    points = low_discrepancy_points([reach] * 3, 2000)
    assert membership_disagreements(derive_wynerziv(dist), region_wynerziv(dist), points) == 0


@pytest.mark.slow
def test_derived_hybrid_region_matches_stated_rows(dueck_extended):
    derived = vertices2d(derive_inner2(dueck_extended))
    stated = vertices2d(region_inner2(dueck_extended))
    assert region_equal(derived, stated)
