import math

import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st
from pydantic import ValidationError

from bcmsr.core.errors import InvalidArgumentError
from bcmsr.core.polyregion import vertices2d
from bcmsr.core.probcore import (
    Alphabet,
    JointPmf,
    build_pmf,
    conditional_entropy,
    deterministic_kernel,
    entropy,
    extend,
    markov_deviation,
    mutual_info,
)
from bcmsr.models.schemas import BlackwellParams, DueckParams
from bcmsr.services.bounds import verify_factorization
from bcmsr.services.channels import (
    blackwell_closed,
    blackwell_distribution,
    blackwell_input_pmf,
    blackwell_output_entropy,
    blackwell_sum_rates,
    dueck_closed,
    dueck_distribution,
    dueck_entropy_form,
    dueck_noise_pmf,
    max_sum_rate,
    simplex_grid,
    sweep_blackwell_sumrate,
    sweep_dueck_sumrate,
)

noise = st.floats(min_value=0.0, max_value=0.5)
BOUNDS = ("nofeedback", "inner1", "inner2", "outer")


def test_dueck_case1_constants(dueck_noisy):
    inner1 = dueck_closed("inner1", dueck_noisy)
    assert inner1.rhs("key1") == pytest.approx(0.833455, abs=1e-6)
    assert inner1.rhs("key2") == pytest.approx(0.833455, abs=1e-6)
    assert inner1.rhs("sum") == pytest.approx(1.974264, abs=1e-6)

    inner2 = dueck_closed("inner2", dueck_noisy)
    assert inner2.rhs("key1") == pytest.approx(1.119852, abs=1e-6)
    assert inner2.rhs("key2") == pytest.approx(1.286397, abs=1e-6)
    assert inner2.rhs("sum") == pytest.approx(2.140809, abs=1e-6)

    outer = dueck_closed("outer", dueck_noisy)
    assert outer.rhs("cap1") == pytest.approx(1.427206, abs=1e-6)

    plain = dueck_closed("nofeedback", dueck_noisy)
    assert plain.rhs("cap1") == pytest.approx(0.713603, abs=1e-6)
    assert plain.rhs("cap2") == pytest.approx(0.547058, abs=1e-6)


def test_dueck_key_bound_is_a_square(dueck_noisy):
    side = dueck_closed("inner1", dueck_noisy).rhs("key1")
    region = vertices2d(dueck_closed("inner1", dueck_noisy))
    expected = np.array([(0.0, 0.0), (side, 0.0), (side, side), (0.0, side)])
    assert np.array(region.float_vertices) == pytest.approx(expected)


def test_dueck_sum_rates(dueck_noisy):
    (row,) = sweep_dueck_sumrate(1, [0.05], q=0.05, r=0.05)
    assert row.sum_in1 == pytest.approx(2 * 0.833455, abs=1e-5)
    assert row.sum_in2 == pytest.approx(2.140809, abs=1e-6)
    assert row.sum_out == pytest.approx(2.140809, abs=1e-6)
    assert row.sum_nofb == pytest.approx(0.713603 + 0.547058, abs=1e-5)


@given(st.sampled_from([1, 2]), noise, noise, noise, st.sampled_from(BOUNDS))
def test_binary_entropy_form_matches_noise_entropies(case, p, q, r, bound):
    params = DueckParams(noise_case=case, p=p, q=q, r=r)
    closed, direct = dueck_closed(bound, params), dueck_entropy_form(bound, params)
    for row, other in zip(closed.rows, direct.rows):
        assert row.label == other.label
        assert float(row.rhs) == pytest.approx(float(other.rhs), abs=1e-9)


def test_noise_cases_order_the_noises():
    case1 = dueck_noise_pmf(DueckParams(noise_case=1, p=0.1, q=0.2, r=0.3))
    case2 = dueck_noise_pmf(DueckParams(noise_case=2, p=0.1, q=0.2, r=0.3))
    assert markov_deviation(case1, "Z0", "Z1", "Z2") == pytest.approx(0.0, abs=1e-12)
    assert markov_deviation(case2, "Z1", "Z0", "Z2") == pytest.approx(0.0, abs=1e-12)


def test_closed_dueck_regions_need_balanced_inputs():
    params = DueckParams(p=0.1, q=0.1, r=0.1, alpha1=0.3)
    with pytest.raises(InvalidArgumentError):
        dueck_closed("inner1", params)


def test_dueck_params_are_validated():
    with pytest.raises(ValidationError):
        DueckParams(p=0.7, q=0.1, r=0.1)


def test_dueck_distribution_factors(dueck_noisy):
    assert verify_factorization(dueck_distribution(dueck_noisy, extended=False)) == []


def dueck_channel_pmf(params: DueckParams) -> JointPmf:
    """Inputs, noises and the four binary outputs Y10, Y11, Y20, Y21 as separate variables."""
    inputs = build_pmf([
        (Alphabet(name, 2), (), np.array([alpha, 1.0 - alpha]))
        for name, alpha in (("X0", params.alpha1), ("X1", params.alpha2), ("X2", params.alpha3))
    ])
    noise = dueck_noise_pmf(params)
    pmf = JointPmf(inputs.variables + noise.variables, inputs.table[..., None, None, None] * noise.table)
    xor = deterministic_kernel((2, 2), 2, lambda a, b: a ^ b)
    for name, parents in (("Y10", ("X0", "Z0")), ("Y11", ("X1", "Z1")), ("Y20", ("X0", "Z0")), ("Y21", ("X2", "Z2"))):
        pmf = extend(pmf, Alphabet(name, 2), parents, xor)
    return pmf


def test_per_output_channel_matches_the_scheme(dueck_noisy):
    outputs = dueck_channel_pmf(dueck_noisy)
    scheme = dueck_distribution(dueck_noisy, extended=False).pmf
    inputs = ("X0", "X1", "X2")
    assert conditional_entropy(outputs, "Y20", "Y10") == pytest.approx(0.0, abs=1e-12)
    assert mutual_info(outputs, inputs, ("Y10", "Y11")) == pytest.approx(mutual_info(scheme, "X", "Y1"), abs=1e-12)
    assert mutual_info(outputs, inputs, ("Y20", "Y21")) == pytest.approx(mutual_info(scheme, "X", "Y2"), abs=1e-12)


def test_unknown_v0_choice(dueck_noisy):
    with pytest.raises(InvalidArgumentError):
        dueck_distribution(dueck_noisy, v0="Z1Z2")


def test_blackwell_params_live_on_the_simplex():
    with pytest.raises(ValidationError):
        BlackwellParams(p=0.1, alpha=0.7, beta=0.5)


def test_useless_blackwell_channel_has_trivial_regions():
    params = BlackwellParams(p=0.5)
    for bound in BOUNDS:
        assert vertices2d(blackwell_closed(bound, params)).float_vertices == [(0.0, 0.0)]


def test_blackwell_distribution_factors(blackwell_default):
    dist = blackwell_distribution(blackwell_default)
    assert verify_factorization(dist) == []


@given(noise, st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_blackwell_output_entropy_matches_the_joint(p, a1, a2):
    a2 = min(a2, 1.0 - a1)
    pmf = blackwell_input_pmf(BlackwellParams(p=p, alpha1=a1, alpha2=a2))
    assert float(blackwell_output_entropy(p, a1, a2)) == pytest.approx(entropy(pmf, ("Y1", "Y2")), abs=1e-9)


def test_simplex_grid_counts_and_refines():
    a, b = simplex_grid(3)
    assert len(a) == 6
    assert np.all(a + b <= 1.0 + 1e-12)
    coarse = set(zip(*simplex_grid(5)))
    fine = set(zip(*simplex_grid(9)))
    assert coarse <= fine
    with pytest.raises(InvalidArgumentError):
        simplex_grid(1)


def test_max_sum_rate_of_the_useless_channel():
    assert max_sum_rate(blackwell_closed("inner1", BlackwellParams(p=0.5))) == 0.0


def test_blackwell_sweep_properties():
    rows = sweep_blackwell_sumrate([0.0, 0.1, 0.25, 0.5], grid_resolution=41)
    for row in rows:
        assert max(row.sum_in1, row.sum_in2) >= row.sum_nofb - 1e-12
    useless = rows[-1]
    assert useless.p == 0.5
    assert max(useless.sum_in1, useless.sum_in2, useless.sum_out, useless.sum_nofb) <= 1e-12


def test_noiseless_blackwell_sum_rate_is_positive():
    row = blackwell_sum_rates(0.0, resolution=21)
    assert row.sum_in1 > 0.5
    assert row.sum_out <= math.log2(3) + 1e-12


def test_sweep_rejects_noise_outside_range():
    with pytest.raises(InvalidArgumentError):
        sweep_blackwell_sumrate([0.7], grid_resolution=11)
