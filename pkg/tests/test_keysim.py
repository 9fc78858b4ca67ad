import math

import numpy as np
import pytest
from pydantic import ValidationError

from bcmsr.core.errors import DegenerateColoringWarning, InvalidArgumentError, SimulationModeError
from bcmsr.core.probcore import binary_entropy
from bcmsr.models.schemas import KeySimConfig
from bcmsr.services.keysim import (
    color_uniformity,
    conditional_entropy_ceiling,
    draw_coloring,
    key_alphabet_size,
    key_rate_frontier,
    key_statistics,
    run_key_extraction,
    run_otp_roundtrip,
    sample_blocks,
)

INDEPENDENT = [[0.25, 0.25], [0.25, 0.25]]
IDENTICAL = [[0.5, 0.0], [0.0, 0.5]]


def config(channel=INDEPENDENT, **overrides) -> KeySimConfig:
    values = {"blocklength": 8, "key_rate": 0.75, "channel": channel, "seed": 0}
    values.update(overrides)
    return KeySimConfig(**values)


@pytest.mark.parametrize("n, rate, gamma", [(8, 0.75, 64), (4, 0.0, 1), (3, 0.5, 3), (10, 1.0, 1024)])
def test_key_alphabet_size(n, rate, gamma):
    assert key_alphabet_size(n, rate) == gamma


def test_config_validation():
    with pytest.raises(ValidationError):
        config(channel=[[0.5, 0.2], [0.1, 0.1]])
    with pytest.raises(ValidationError):
        config(channel=[[0.5, 0.5], [0.0]])
    with pytest.raises(ValidationError):
        config(blocklength=100, key_rate=1.0)


def test_colorings_are_reproducible():
    first = draw_coloring(2, 8, 64, seed=3)
    again = draw_coloring(2, 8, 64, seed=3)
    other = draw_coloring(2, 8, 64, seed=4)
    assert np.array_equal(first.table, again.table)
    assert not np.array_equal(first.table, other.table)


def test_balanced_coloring_is_a_bijection_at_full_size():
    coloring = draw_coloring(2, 6, 64, method="balanced")
    assert sorted(coloring.table) == list(range(64))


def test_balanced_coloring_is_perfectly_uniform():
    coloring = draw_coloring(3, 4, 9, method="balanced")
    result = color_uniformity(coloring)
    assert result.statistic == 0.0
    assert result.passed


def test_random_coloring_passes_chi_square():
    assert color_uniformity(draw_coloring(2, 8, 16, seed=0)).passed


def test_universal_coloring_agrees_on_blocks_and_indices():
    coloring = draw_coloring(3, 5, 20, seed=1, method="universal")
    indices = np.arange(coloring.space)
    colors = coloring.of_indices(indices)
    assert colors.min() >= 0 and colors.max() < 20
    assert np.array_equal(colors, coloring.of_blocks(coloring.blocks_of(indices)))


def test_block_indices_invert_blocks_of():
    coloring = draw_coloring(3, 4, 5)
    indices = np.array([0, 1, 17, 80])
    assert np.array_equal(coloring.block_indices(coloring.blocks_of(indices)), indices)


def test_too_many_colors_warns():
    with pytest.warns(DegenerateColoringWarning):
        draw_coloring(2, 3, 16)


def test_unknown_coloring_method():
    with pytest.raises(InvalidArgumentError):
        draw_coloring(2, 3, 4, method="greedy")


def test_key_statistics_of_an_independent_fair_key():
    keys = np.array([0, 1, 0, 1])
    views = np.array([0, 0, 1, 1])
    stats = key_statistics(keys, views, np.full(4, 0.25), gamma=2)
    assert stats.key_entropy == pytest.approx(1.0)
    assert stats.conditional_entropy == pytest.approx(1.0)
    assert stats.uniformity_distance == pytest.approx(0.0)


def test_key_statistics_of_an_exposed_key():
    keys = np.array([0, 1, 2, 3])
    stats = key_statistics(keys, keys, np.full(4, 0.25), gamma=4)
    assert stats.conditional_entropy == pytest.approx(0.0, abs=1e-12)
    assert stats.uniformity_distance == pytest.approx(0.75)


def test_balanced_key_is_exactly_uniform_given_independent_view():
    report = run_key_extraction(config(coloring="balanced"))
    assert report.gamma == 64
    assert report.trials == 0
    assert report.conditional_key_entropy == pytest.approx(6.0, abs=1e-9)
    assert report.leakage == pytest.approx(0.0, abs=1e-9)
    assert report.slack == pytest.approx(0.0, abs=1e-9)


def test_random_key_reaches_most_of_its_length():
    report = run_key_extraction(config())
    assert report.conditional_key_entropy >= 0.95 * 8 * 0.75


def test_identical_outputs_expose_the_key():
    report = run_key_extraction(config(channel=IDENTICAL))
    assert report.conditional_key_entropy == pytest.approx(0.0, abs=1e-12)
    assert report.leakage == pytest.approx(report.empirical_key_entropy)
    assert report.entropy_ceiling == pytest.approx(min(6.0, 2 * math.log2(9)))


def test_exhaustive_mode_has_a_size_limit():
    with pytest.raises(SimulationModeError):
        run_key_extraction(config(blocklength=13, key_rate=0.5))


def test_monte_carlo_mode_has_a_size_limit():
    with pytest.raises(SimulationModeError):
        run_key_extraction(config(blocklength=25, key_rate=0.2, coloring="universal", mode="monte_carlo", trials=10))


def test_monte_carlo_is_reproducible():
    settings = config(mode="monte_carlo", trials=2000, workers=3)
    first, second = run_key_extraction(settings), run_key_extraction(settings)
    assert first == second
    assert first.trials == 2000
    assert first.standard_error is not None and first.standard_error >= 0.0


def test_sampling_splits_trials_over_workers():
    y1, y2 = sample_blocks(config(mode="monte_carlo", trials=1001, workers=4))
    assert y1.shape == (1001, 8)
    assert y2.shape == (1001, 8)
    assert set(np.unique(y1)) <= {0, 1}


def test_one_time_pad_with_an_independent_eavesdropper():
    report = run_otp_roundtrip(config(trials=2000), message_bits=4)
    assert report.decode_ok
    assert report.decode_failures == 0
    assert report.leakage_per_bit <= 0.05


def test_one_time_pad_leaks_everything_to_an_identical_receiver():
    report = run_otp_roundtrip(config(channel=IDENTICAL, trials=500), message_bits=4)
    assert report.decode_ok
    assert report.leakage_per_bit == pytest.approx(1.0, abs=1e-9)


def test_one_time_pad_needs_enough_key_bits():
    with pytest.raises(InvalidArgumentError):
        run_otp_roundtrip(config(), message_bits=7)


def test_frontier_of_a_balanced_coloring():
    rows = key_rate_frontier(INDEPENDENT, 8, [0.0, 0.25, 0.5], coloring="balanced")
    assert [row.gamma for row in rows] == [1, 4, 16]
    assert [row.normalized_entropy for row in rows] == pytest.approx([1.0, 1.0, 1.0])


def test_entropy_ceiling_is_capped_by_key_length():
    assert conditional_entropy_ceiling(config()) == pytest.approx(6.0)


@pytest.mark.parametrize("blocklength, rate, trials", [(8, 0.75, 4000), (6, 0.5, 4000), (4, 0.5, 2000)])
def test_monte_carlo_agrees_with_enumeration(blocklength, rate, trials):
    correlated = [[0.4, 0.1], [0.1, 0.4]]
    exact = run_key_extraction(config(channel=correlated, blocklength=blocklength, key_rate=rate, seed=7))
    sampled = run_key_extraction(
        config(channel=correlated, blocklength=blocklength, key_rate=rate, seed=7, mode="monte_carlo", trials=trials, workers=2)
    )
    assert sampled.standard_error > 0.0
    assert abs(sampled.conditional_key_entropy - exact.conditional_key_entropy) <= 3 * sampled.standard_error
    assert sampled.empirical_key_entropy == pytest.approx(exact.empirical_key_entropy, abs=1e-9)


def test_monte_carlo_sees_an_exposed_key_exactly():
    report = run_key_extraction(config(channel=IDENTICAL, mode="monte_carlo", trials=500))
    assert report.conditional_key_entropy == pytest.approx(0.0, abs=1e-12)
    assert report.standard_error == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("mode", ["exhaustive", "monte_carlo"])
def test_pad_from_an_uneven_key_is_not_uniform(mode):
    # gamma = 3 over 16 blocks: colors hold 6, 5 and 5 blocks, so P(pad = 1) = 5/16
    settings = config(blocklength=4, key_rate=0.4, coloring="balanced", mode=mode, trials=1000)
    report = run_otp_roundtrip(settings, message_bits=1)
    assert report.decode_ok
    assert report.pad_nonuniformity == pytest.approx(1.0 - binary_entropy(5 / 16), abs=1e-9)
    assert report.view_leakage == pytest.approx(0.0, abs=1e-9)
    assert report.message_leakage == pytest.approx(report.pad_nonuniformity + report.view_leakage)
