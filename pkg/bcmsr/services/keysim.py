"""
Secret keys from the fed-back output block.

The legal receiver's block y1^N is colored into one of gamma = round(2^(N*R))
key values; the eavesdropping receiver observes y2^N. The simulator reports
how close K is to uniform given y2^N, either exactly by enumerating every
block pair or by sampling, and runs a one-time pad on top of the key.
"""

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import reduce
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import toeplitz
from scipy.stats import chi2

from bcmsr.core.config import (
    BOOTSTRAP_RESAMPLES,
    BOOTSTRAP_STREAM,
    COLORING_STREAM,
    DEFAULT_SEED,
    MC_BATCH_CELLS,
    MESSAGE_STREAM,
    TABLE_COLORING_LIMIT,
)
from bcmsr.core.errors import DegenerateColoringWarning, InvalidArgumentError, SimulationModeError
from bcmsr.core.probcore import JointPmf, conditional_entropy, xlog2x
from bcmsr.models.schemas import (
    ColoringMethod,
    FrontierRow,
    KeySimConfig,
    KeySimReport,
    OtpReport,
)

logger = logging.getLogger(__name__)


def _generator(*words: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(words))))


def key_alphabet_size(blocklength: int, key_rate: float) -> int:
    """gamma = round(2^(N*R)), at least 1."""
    return max(1, int(round(2.0 ** (blocklength * key_rate))))


@dataclass(frozen=True)
class Coloring:
    """
    A gamma-coloring of Y1 blocks of length N with colors 0 .. gamma-1.

    Table colorings store one color per block index; the universal coloring
    stores a binary Toeplitz matrix applied to the bits of the block.
    """

    method: ColoringMethod
    y1_size: int
    blocklength: int
    gamma: int
    table: Optional[np.ndarray] = None
    matrix: Optional[np.ndarray] = None

    @property
    def space(self) -> int:
        return self.y1_size**self.blocklength

    def block_indices(self, blocks: np.ndarray) -> np.ndarray:
        """Base-|Y1| index of each row of ``blocks``, first symbol most significant."""
        weights = self.y1_size ** np.arange(self.blocklength - 1, -1, -1, dtype=np.int64)
        return np.asarray(blocks, dtype=np.int64) @ weights

    def blocks_of(self, indices: np.ndarray) -> np.ndarray:
        digits = np.unravel_index(np.asarray(indices, dtype=np.int64), (self.y1_size,) * self.blocklength)
        return np.stack(digits, axis=-1)

    def of_blocks(self, blocks: np.ndarray) -> np.ndarray:
        blocks = np.atleast_2d(np.asarray(blocks, dtype=np.int64))
        if self.gamma == 1:
            return np.zeros(len(blocks), dtype=np.int64)
        if self.table is not None:
            return self.table[self.block_indices(blocks)]
        width = self.matrix.shape[1] // self.blocklength
        bits = (blocks[..., None] >> np.arange(width)) & 1
        hashed = (bits.reshape(len(blocks), -1) @ self.matrix.T) % 2
        value = hashed @ (np.int64(1) << np.arange(hashed.shape[1], dtype=np.int64))
        return value % self.gamma

    def of_indices(self, indices: np.ndarray) -> np.ndarray:
        indices = np.asarray(indices, dtype=np.int64)
        if self.table is not None:
            return self.table[indices]
        return self.of_blocks(self.blocks_of(indices))


def draw_coloring(
    y1_size: int,
    blocklength: int,
    gamma: int,
    seed: int = DEFAULT_SEED,
    method: ColoringMethod = "random",
) -> Coloring:
    """
    Draw a reproducible gamma-coloring of the |Y1|^N blocks.

    ``random`` colors every block independently and uniformly, ``balanced``
    folds a random permutation modulo gamma (a bijection when gamma equals
    the number of blocks) and ``universal`` hashes the block bits with a
    random Toeplitz matrix.
    """
    if gamma < 1:
        raise InvalidArgumentError(f"gamma must be at least 1, got {gamma}")
    if y1_size < 1 or blocklength < 1:
        raise InvalidArgumentError(f"need |Y1| >= 1 and N >= 1, got {y1_size} and {blocklength}")
    space = y1_size**blocklength
    if gamma > space:
        message = f"{gamma} colors for only {space} blocks; the key entropy is capped at log2 {space}"
        logger.warning(message)
        warnings.warn(message, DegenerateColoringWarning, stacklevel=2)

    rng = _generator(seed, COLORING_STREAM)
    if method == "universal":
        width = max(1, math.ceil(math.log2(y1_size)))
        out_bits = max(1, math.ceil(math.log2(gamma)))
        bits = rng.integers(0, 2, size=out_bits + blocklength * width - 1, dtype=np.int64)
        matrix = toeplitz(bits[:out_bits], np.concatenate([bits[:1], bits[out_bits:]]))
        return Coloring(method, y1_size, blocklength, gamma, matrix=matrix)
    if method not in ("random", "balanced"):
        raise InvalidArgumentError(f"unknown coloring method {method!r}")
    if space > TABLE_COLORING_LIMIT:
        raise InvalidArgumentError(
            f"{space} blocks exceed the table limit {TABLE_COLORING_LIMIT}; use the universal coloring"
        )
    if method == "random":
        table = rng.integers(0, gamma, size=space, dtype=np.int64)
    else:
        table = rng.permutation(space).astype(np.int64) % gamma
    return Coloring(method, y1_size, blocklength, gamma, table=table)


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    critical: float
    degrees_of_freedom: int

    @property
    def passed(self) -> bool:
        return self.statistic <= self.critical


def color_uniformity(coloring: Coloring, quantile: float = 0.99) -> ChiSquareResult:
    """Chi-square statistic of the color histogram over all blocks against the uniform multinomial."""
    colors = coloring.of_indices(np.arange(coloring.space))
    counts = np.bincount(colors, minlength=coloring.gamma).astype(float)
    expected = coloring.space / coloring.gamma
    statistic = float(((counts - expected) ** 2 / expected).sum())
    dof = coloring.gamma - 1
    return ChiSquareResult(statistic, float(chi2.ppf(quantile, dof)) if dof else 0.0, dof)


@dataclass(frozen=True)
class KeyStatistics:
    key_entropy: float
    conditional_entropy: float
    uniformity_distance: float


def _entropy(weights: np.ndarray) -> float:
    return float(-xlog2x(weights).sum())


def key_statistics(keys: np.ndarray, views: np.ndarray, weights: np.ndarray, gamma: int) -> KeyStatistics:
    """
    H(K), H(K | view) and the mean total-variation distance of K | view
    from uniform on gamma values, for cells (key, view) of the given mass.
    """
    _, key_labels = np.unique(keys, return_inverse=True)
    view_values, view_labels = np.unique(views, return_inverse=True)
    codes = key_labels.astype(np.int64).ravel() * len(view_values) + view_labels.ravel()
    cells, cell_labels = np.unique(codes, return_inverse=True)
    mass = np.bincount(cell_labels.ravel(), weights=weights)
    mass = mass / mass.sum()
    key_of_cell, view_of_cell = cells // len(view_values), cells % len(view_values)
    p_key = np.bincount(key_of_cell, weights=mass)
    p_view = np.bincount(view_of_cell, weights=mass)

    ceiling = math.log2(gamma)
    key_entropy = min(max(_entropy(p_key), 0.0), ceiling)
    conditional = _entropy(mass) - _entropy(p_view)
    conditional = min(max(conditional, 0.0), key_entropy)

    given_view = mass / p_view[view_of_cell]
    spread = np.bincount(view_of_cell, weights=np.abs(given_view - 1.0 / gamma))
    seen = np.bincount(view_of_cell)
    distance = float((p_view * 0.5 * (spread + (gamma - seen) / gamma)).sum())
    return KeyStatistics(key_entropy, conditional, distance)


@dataclass(frozen=True)
class SampledKeyView:
    """Mean of the exact H(K | y2^N) over sampled eavesdropper blocks."""

    conditional_entropy: float
    standard_error: float
    uniformity_distance: float


def _channel_pmf(config: KeySimConfig) -> np.ndarray:
    return np.asarray(config.channel, dtype=float)


def _enumerate_blocks(config: KeySimConfig) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Every (y1^N index, y2^N index) pair with positive probability and its probability."""
    if not config.exhaustive_capable:
        raise SimulationModeError(
            f"exhaustive mode needs (|Y1||Y2|)^N <= limit, got {config.exhaustive_cells} cells"
        )
    per_symbol = _channel_pmf(config)
    joint = per_symbol
    for _ in range(config.blocklength - 1):
        joint = np.kron(joint, per_symbol)
    flat = joint.ravel()
    support = np.flatnonzero(flat)
    width = joint.shape[1]
    return support // width, support % width, flat[support]


def _sample_worker(config: KeySimConfig, worker: int, trials: int) -> Tuple[np.ndarray, np.ndarray]:
    per_symbol = _channel_pmf(config).ravel()
    rng = _generator(config.seed, worker)
    draws = rng.choice(per_symbol.size, size=(trials, config.blocklength), p=per_symbol)
    return draws // config.y2_size, draws % config.y2_size


def sample_blocks(config: KeySimConfig) -> Tuple[np.ndarray, np.ndarray]:
    """
    ``config.trials`` i.i.d. block pairs split over ``config.workers`` streams.

    Worker w draws from the Philox stream keyed by (seed, w); results are
    concatenated in worker order.
    """
    shares = [len(part) for part in np.array_split(np.arange(config.trials), config.workers)]
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        parts = list(pool.map(lambda job: _sample_worker(config, *job), enumerate(shares)))
    y1 = np.concatenate([p[0] for p in parts])
    y2 = np.concatenate([p[1] for p in parts])
    return y1, y2


def _block_colors(config: KeySimConfig, coloring: Coloring) -> np.ndarray:
    """Color of every y1^N block, by block index."""
    if coloring.space > TABLE_COLORING_LIMIT:
        raise SimulationModeError(
            f"monte carlo mode needs |Y1|^N <= {TABLE_COLORING_LIMIT}, got {coloring.space} blocks"
        )
    return coloring.of_indices(np.arange(coloring.space))


def _exact_key_entropy(config: KeySimConfig, colors: np.ndarray, gamma: int) -> float:
    """H(K) from the product law of y1^N."""
    marginal = _channel_pmf(config).sum(axis=1)
    blocks = reduce(np.kron, [marginal] * config.blocklength)
    return min(_entropy(np.bincount(colors, weights=blocks, minlength=gamma)), math.log2(gamma))


def _posterior_rows(config: KeySimConfig, y2_blocks: np.ndarray) -> np.ndarray:
    """P(y1^N | y2^N) for each row of ``y2_blocks``, columns in block-index order."""
    per_symbol = _channel_pmf(config)
    p_y2 = per_symbol.sum(axis=0)
    posterior = np.divide(per_symbol, p_y2, out=np.zeros_like(per_symbol), where=p_y2 > 0)
    rows = posterior[:, y2_blocks[:, 0]].T
    for position in range(1, config.blocklength):
        column = posterior[:, y2_blocks[:, position]].T
        rows = (rows[:, :, None] * column[:, None, :]).reshape(len(y2_blocks), -1)
    return rows


def _bootstrap_error(values: np.ndarray, seed: int) -> float:
    if len(values) < 2:
        return 0.0
    rng = _generator(seed, BOOTSTRAP_STREAM)
    n = len(values)
    means = [values[rng.integers(0, n, size=n)].mean() for _ in range(BOOTSTRAP_RESAMPLES)]
    return float(np.std(means, ddof=1))


def sampled_key_view(
    config: KeySimConfig,
    colors: np.ndarray,
    gamma: int,
    y2_blocks: np.ndarray,
) -> SampledKeyView:
    """
    Average the exact H(K | y2^N) over the sampled y2^N blocks.

    Each sampled block contributes the entropy of its key posterior, so the
    mean is an unbiased estimate of H(K | Y2^N) and the bootstrap error of
    that mean is its only uncertainty.
    """
    views, inverse = np.unique(y2_blocks, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    batch = max(1, MC_BATCH_CELLS // len(colors))
    entropies, distances = [], []
    for start in range(0, len(views), batch):
        rows = _posterior_rows(config, views[start : start + batch])
        count = len(rows)
        codes = (np.arange(count, dtype=np.int64)[:, None] * gamma + colors[None, :]).ravel()
        p_key = np.bincount(codes, weights=rows.ravel(), minlength=count * gamma).reshape(count, gamma)
        entropies.append(-xlog2x(p_key).sum(axis=1))
        distances.append(0.5 * np.abs(p_key - 1.0 / gamma).sum(axis=1))
    per_sample = np.concatenate(entropies)[inverse]
    distance = np.concatenate(distances)[inverse]
    return SampledKeyView(
        conditional_entropy=float(per_sample.mean()),
        standard_error=_bootstrap_error(per_sample, config.seed),
        uniformity_distance=float(distance.mean()),
    )


def conditional_entropy_ceiling(config: KeySimConfig) -> float:
    """min{log2 gamma, N H(Y1|Y2) + |Y1| log2(N+1)}."""
    pmf = JointPmf([("Y1", config.y1_size), ("Y2", config.y2_size)], _channel_pmf(config))
    gamma = key_alphabet_size(config.blocklength, config.key_rate)
    types_bound = config.blocklength * conditional_entropy(pmf, "Y1", "Y2") + config.y1_size * math.log2(
        config.blocklength + 1
    )
    return min(math.log2(gamma), types_bound)


def _coloring_for(config: KeySimConfig) -> Coloring:
    gamma = key_alphabet_size(config.blocklength, config.key_rate)
    return draw_coloring(config.y1_size, config.blocklength, gamma, config.seed, config.coloring)


def run_key_extraction(config: KeySimConfig) -> KeySimReport:
    """Measure H(K), H(K | Y2^N), leakage and uniformity of the colored key."""
    coloring = _coloring_for(config)
    gamma = coloring.gamma
    logger.info(
        "key extraction: mode=%s coloring=%s N=%d R=%.4f gamma=%d",
        config.mode, config.coloring, config.blocklength, config.key_rate, gamma,
    )
    standard_error = None
    if config.mode == "exhaustive":
        y1_index, views, weights = _enumerate_blocks(config)
        stats = key_statistics(coloring.of_indices(y1_index), views, weights, gamma)
        trials = 0
    else:
        colors = _block_colors(config, coloring)
        _, y2 = sample_blocks(config)
        view = sampled_key_view(config, colors, gamma, y2)
        stats = KeyStatistics(_exact_key_entropy(config, colors, gamma), view.conditional_entropy, view.uniformity_distance)
        standard_error = view.standard_error
        trials = len(y2)

    report = KeySimReport(
        mode=config.mode,
        coloring=config.coloring,
        blocklength=config.blocklength,
        key_rate=config.key_rate,
        gamma=gamma,
        trials=trials,
        empirical_key_entropy=stats.key_entropy,
        conditional_key_entropy=stats.conditional_entropy,
        uniformity_distance=stats.uniformity_distance,
        leakage=max(stats.key_entropy - stats.conditional_entropy, 0.0),
        standard_error=standard_error,
        entropy_ceiling=conditional_entropy_ceiling(config),
        slack=math.log2(gamma) - stats.conditional_entropy,
    )
    logger.debug("key extraction report: %s", report.summary())
    return report


def run_otp_roundtrip(config: KeySimConfig, message_bits: int) -> OtpReport:
    """
    One-time pad with the low ``message_bits`` bits of the key.

    The legal receiver recolors its own block to decrypt. The leakage
    I(W; W xor P, Y2^N) = b - H(P | Y2^N) of the pad P = K mod 2^b splits
    into b - H(P), which is nonzero when gamma is not a multiple of 2^b,
    and H(P) - H(P | Y2^N), what the eavesdropper's block reveals.
    """
    available = math.floor(config.blocklength * config.key_rate + 1e-12)
    if message_bits < 0 or message_bits > available:
        raise InvalidArgumentError(f"message of {message_bits} bits does not fit a {available}-bit key")
    coloring = _coloring_for(config)
    modulus = np.int64(1) << np.int64(message_bits)

    y1, y2 = sample_blocks(config)
    key_sent = coloring.of_blocks(y1) % modulus
    shares = [len(part) for part in np.array_split(np.arange(len(y1)), config.workers)]
    messages = np.concatenate([
        _generator(config.seed, MESSAGE_STREAM, worker).integers(0, modulus, size=share, dtype=np.int64)
        for worker, share in enumerate(shares)
    ])
    ciphertext = messages ^ key_sent
    decoded = ciphertext ^ (coloring.of_blocks(y1) % modulus)
    failures = int(np.count_nonzero(decoded != messages))

    if message_bits == 0:
        pad_entropy = conditional = 0.0
    elif config.mode == "exhaustive":
        y1_index, views, weights = _enumerate_blocks(config)
        stats = key_statistics(coloring.of_indices(y1_index) % modulus, views, weights, int(modulus))
        pad_entropy, conditional = stats.key_entropy, stats.conditional_entropy
    else:
        pads = _block_colors(config, coloring) % modulus
        pad_entropy = _exact_key_entropy(config, pads, int(modulus))
        conditional = sampled_key_view(config, pads, int(modulus), y2).conditional_entropy
    nonuniformity = max(message_bits - pad_entropy, 0.0)
    view_leakage = max(pad_entropy - conditional, 0.0)
    leakage = nonuniformity + view_leakage
    logger.info("one-time pad: %d bits, %d decode failures, leakage %.6f", message_bits, failures, leakage)
    return OtpReport(
        message_bits=message_bits,
        trials=len(y1),
        decode_ok=failures == 0,
        decode_failures=failures,
        message_leakage=leakage,
        pad_nonuniformity=nonuniformity,
        view_leakage=view_leakage,
        leakage_per_bit=leakage / message_bits if message_bits else 0.0,
    )


def key_rate_frontier(
    channel: Sequence[Sequence[float]],
    blocklength: int,
    rate_grid: Sequence[float],
    seed: int = DEFAULT_SEED,
    coloring: ColoringMethod = "random",
) -> List[FrontierRow]:
    """Exact H(K | Y2^N) / log2 gamma along a grid of key rates."""
    rows = []
    for rate in rate_grid:
        config = KeySimConfig(
            blocklength=blocklength,
            key_rate=rate,
            channel=[list(row) for row in channel],
            seed=seed,
            mode="exhaustive",
            coloring=coloring,
        )
        report = run_key_extraction(config)
        normalized = 1.0 if report.gamma == 1 else report.conditional_key_entropy / math.log2(report.gamma)
        rows.append(FrontierRow(
            rate=rate,
            gamma=report.gamma,
            conditional_key_entropy=report.conditional_key_entropy,
            normalized_entropy=normalized,
        ))
    return rows
