"""
The two worked examples: a Dueck-type channel with three parallel binary
components and a Blackwell-type channel with ternary input.

Each example has a distribution constructor for the generic evaluators in
``bounds`` and closed-form regions written from the published formulas.
The Blackwell closed forms are vectorized so that sum-rate sweeps evaluate
whole simplex grids at once.
"""

import logging
from typing import Dict, Iterable, List, Literal, Sequence, Tuple

import numpy as np

from bcmsr.core.config import GRID_RESOLUTION
from bcmsr.core.errors import InvalidArgumentError
from bcmsr.core.polyregion import HalfSpaceSystem, vertices2d
from bcmsr.core.probcore import (
    Alphabet,
    JointPmf,
    binary_convolve,
    binary_entropy,
    build_pmf,
    conditional_entropy,
    deterministic_kernel,
    entropy,
    extend,
    ternary_entropy,
    xlog2x,
)
from bcmsr.models.schemas import BlackwellParams, DueckParams, SweepRow
from bcmsr.services.bounds import (
    RATES,
    Q,
    SchemeDistribution,
    U1,
    U2,
    V0,
    V1,
    V2,
    X,
    Y1,
    Y2,
    clamp_rate,
)

logger = logging.getLogger(__name__)

V0Choice = Literal["Z0Z1", "Z0Z2"]
V0_CHOICES: Tuple[str, ...] = ("Z0Z1", "Z0Z2")


def _bsc(flip: float) -> np.ndarray:
    return np.array([[1.0 - flip, flip], [flip, 1.0 - flip]])


def _bernoulli_zero(prob_zero: float) -> np.ndarray:
    return np.array([prob_zero, 1.0 - prob_zero])


def _split_joint_kernel(joint: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Split ``P(a, b | parents)`` into ``P(a | parents)`` and ``P(b | parents, a)``.

    Where ``P(a | parents) = 0`` the second kernel is filled uniformly.
    """
    first = joint.sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        second = np.where(first[..., None] > 0, joint / first[..., None], 1.0 / joint.shape[-1])
    return first, second


def _rows(rows: Iterable[Tuple[str, Dict[str, int], float]]) -> HalfSpaceSystem:
    return HalfSpaceSystem.build(RATES, [(coefs, clamp_rate(rhs), label) for label, coefs, rhs in rows])


# --- Dueck-type example -----------------------------------------------------


def dueck_noise_pmf(params: DueckParams) -> JointPmf:
    """Joint law of the noises (Z0, Z1, Z2) for either Markov ordering."""
    z0, z1, z2 = Alphabet("Z0", 2), Alphabet("Z1", 2), Alphabet("Z2", 2)
    parent_of_z2 = "Z1" if params.noise_case == 1 else "Z0"
    return build_pmf([
        (z0, (), _bernoulli_zero(1.0 - params.p)),
        (z1, ("Z0",), _bsc(params.q)),
        (z2, (parent_of_z2,), _bsc(params.r)),
    ])


def _dueck_output_kernel(params: DueckParams) -> np.ndarray:
    """P(y1, y2 | x) with x = 4*x0 + 2*x1 + x2, y1 = 2*y10 + y11, y2 = 2*y20 + y21."""
    noise = dueck_noise_pmf(params).table
    kernel = np.zeros((8, 4, 4))
    for x in range(8):
        x0, x1, x2 = x >> 2, (x >> 1) & 1, x & 1
        for z0, z1, z2 in np.ndindex(2, 2, 2):
            y10 = x0 ^ z0
            kernel[x, 2 * y10 + (x1 ^ z1), 2 * y10 + (x2 ^ z2)] += noise[z0, z1, z2]
    return kernel


def dueck_distribution(params: DueckParams, v0: V0Choice = "Z0Z1", extended: bool = True) -> SchemeDistribution:
    """
    Scheme distribution of the Dueck-type channel.

    Q = X0, U1 = (X0, X1), U2 = (X0, X2) and X = (X0, X1, X2). Carrying X0
    inside U1 and U2 keeps Q -> (U1, U2) -> X a Markov chain while every
    term conditioned on Q matches the plain choice U1 = X1, U2 = X2. The
    extension uses V1 = (X0, X1), V2 = (X0, X2) and V0 = (Z0, Z1) or
    (Z0, Z2), both recovered from the fed-back outputs.
    """
    if v0 not in V0_CHOICES:
        raise InvalidArgumentError(f"v0 must be one of {V0_CHOICES}, got {v0!r}")
    # Uj = 2 * x0 + xj, so given Q = x0 only the two symbols 2 * x0 and 2 * x0 + 1 occur
    u1_kernel, u2_kernel = np.zeros((2, 4)), np.zeros((2, 4))
    for q in range(2):
        u1_kernel[q, 2 * q : 2 * q + 2] = _bernoulli_zero(params.alpha2)
        u2_kernel[q, 2 * q : 2 * q + 2] = _bernoulli_zero(params.alpha3)

    x_kernel = deterministic_kernel((4, 4), 8, lambda u1, u2: 4 * (u1 >> 1) + 2 * (u1 & 1) + (u2 & 1))
    y1_kernel, y2_kernel = _split_joint_kernel(_dueck_output_kernel(params))
    pmf = build_pmf([
        (Alphabet(Q, 2), (), _bernoulli_zero(params.alpha1)),
        (Alphabet(U1, 4), (Q,), u1_kernel),
        (Alphabet(U2, 4), (Q,), u2_kernel),
        (Alphabet(X, 8), (U1, U2), x_kernel),
        (Alphabet(Y1, 4), (X,), y1_kernel),
        (Alphabet(Y2, 4), (X, Y1), y2_kernel),
    ])
    if not extended:
        return SchemeDistribution(pmf)

    # V0 = (Z0, Zj) with Z0 = Y10 xor X0 and Zj = Yj1 xor Xj
    own_u, own_y = (U1, Y1) if v0 == "Z0Z1" else (U2, Y2)
    noise_kernel = deterministic_kernel(
        (2, 4, 4), 4, lambda q, u, y: 2 * ((y >> 1) ^ q) + ((y & 1) ^ (u & 1))
    )
    identity = deterministic_kernel((4,), 4, lambda u: u)
    full = extend(pmf, Alphabet(V0, 4), (Q, own_u, own_y), noise_kernel)
    full = extend(full, Alphabet(V1, 4), (U1,), identity)
    full = extend(full, Alphabet(V2, 4), (U2,), identity)
    logger.debug("dueck case %d distribution with V0=%s: %d cells", params.noise_case, v0, full.table.size)
    return SchemeDistribution(pmf, full)


def _require_balanced(params: DueckParams) -> None:
    if not params.balanced_inputs:
        raise InvalidArgumentError(
            "closed-form Dueck regions hold for alpha1 = alpha2 = alpha3 = 1/2, "
            f"got ({params.alpha1}, {params.alpha2}, {params.alpha3})"
        )


def _dueck_h_terms(params: DueckParams) -> Dict[str, float]:
    """
    Noise entropies in binary-entropy form.

    ``z2_given_z0`` is H(Z2|Z0) and ``z1_given_z02`` is H(Z1|Z0,Z2), and so on.
    """
    hp, hq, hr = binary_entropy(params.p), binary_entropy(params.q), binary_entropy(params.r)
    if params.noise_case == 1:
        hrq = binary_entropy(binary_convolve(params.r, params.q))
        return {
            "z0": hp,
            "z1_given_z0": hq,
            "z2_given_z0": hrq,
            "z1_given_z02": hq + hr - hrq,
            "z2_given_z01": hr,
        }
    return {"z0": hp, "z1_given_z0": hq, "z2_given_z0": hr, "z1_given_z02": hq, "z2_given_z01": hr}


def dueck_entropy_terms(params: DueckParams) -> Dict[str, float]:
    """The same noise entropies evaluated directly on the noise pmf."""
    noise = dueck_noise_pmf(params)
    return {
        "z0": entropy(noise, "Z0"),
        "z1_given_z0": conditional_entropy(noise, "Z1", "Z0"),
        "z2_given_z0": conditional_entropy(noise, "Z2", "Z0"),
        "z1_given_z02": conditional_entropy(noise, "Z1", ("Z0", "Z2")),
        "z2_given_z01": conditional_entropy(noise, "Z2", ("Z0", "Z1")),
    }


def _dueck_rows(bound: str, t: Dict[str, float]) -> List[Tuple[str, Dict[str, int], float]]:
    h0 = t["z0"]
    h01 = h0 + t["z1_given_z0"]
    h02 = h0 + t["z2_given_z0"]
    h012 = h01 + t["z2_given_z01"]
    cut1 = ({"R1": 1}, 2.0 - h01)
    cut2 = ({"R2": 1}, 2.0 - h02)
    if bound == "inner1":
        return [
            ("key1", {"R1": 1}, 1.0 - t["z1_given_z0"] + t["z1_given_z02"]),
            ("key2", {"R2": 1}, 1.0 - t["z2_given_z0"] + t["z2_given_z01"]),
            ("cap1",) + cut1,
            ("cap2",) + cut2,
            ("sum", {"R1": 1, "R2": 1}, 3.0 + h0 - h01 - h02),
        ]
    if bound == "inner2":
        # the cut rows here are the compression-limited rows of the hybrid bound
        return [
            ("key1", {"R1": 1}, 1.0 + t["z1_given_z02"]),
            ("key2", {"R2": 1}, 1.0 + t["z2_given_z01"]),
            ("aux1",) + cut1,
            ("aux2",) + cut2,
            ("sum", {"R1": 1, "R2": 1}, 3.0 - h012),
        ]
    if bound == "outer":
        return [("cap1",) + cut1, ("cap2",) + cut2, ("sum", {"R1": 1, "R2": 1}, 3.0 - h012)]
    if bound == "nofeedback":
        return [
            ("cap1", {"R1": 1}, 1.0 - t["z1_given_z0"]),
            ("cap2", {"R2": 1}, 1.0 - t["z2_given_z0"]),
        ]
    raise InvalidArgumentError(f"unknown bound {bound!r}")


def dueck_closed(bound: str, params: DueckParams) -> HalfSpaceSystem:
    _require_balanced(params)
    return _rows(_dueck_rows(bound, _dueck_h_terms(params)))


def dueck_entropy_form(bound: str, params: DueckParams) -> HalfSpaceSystem:
    """Closed form written with joint noise entropies instead of h(.) terms."""
    _require_balanced(params)
    return _rows(_dueck_rows(bound, dueck_entropy_terms(params)))


def dueck_closed_inner1(params: DueckParams) -> HalfSpaceSystem:
    return dueck_closed("inner1", params)


def dueck_closed_inner2(params: DueckParams) -> HalfSpaceSystem:
    return dueck_closed("inner2", params)


def dueck_closed_outer(params: DueckParams) -> HalfSpaceSystem:
    return dueck_closed("outer", params)


def dueck_closed_nofeedback(params: DueckParams) -> HalfSpaceSystem:
    return dueck_closed("nofeedback", params)


# --- Blackwell-type example -------------------------------------------------


def _blackwell_auxiliary_law(alpha: float, beta: float) -> np.ndarray:
    """P(u1, u2 | q) indexed [q, u1, u2]; the pair (0, 1) never occurs."""
    middle = max(1.0 - alpha - beta, 0.0)
    law = np.zeros((2, 2, 2))
    law[0, 0, 0], law[0, 1, 0], law[0, 1, 1] = alpha, middle, beta
    law[1, 0, 0], law[1, 1, 0], law[1, 1, 1] = beta, middle, alpha
    return law


def _blackwell_output_kernels(p: float) -> Tuple[np.ndarray, np.ndarray]:
    """P(y1 | x) and P(y2 | x): Y1 = [X >= 1] xor Z1, Y2 = [X = 2] xor Z2."""
    noisy = _bsc(p)
    return noisy[[0, 1, 1]], noisy[[0, 0, 1]]


def blackwell_distribution(params: BlackwellParams, extended: bool = True) -> SchemeDistribution:
    """
    Scheme distribution of the Blackwell-type channel with X = U1 + U2.

    The extension sets V0 = (Z1, Z2), V1 = U1 and V2 = U2; the noises are
    recovered from the fed-back outputs as Zj = Yj xor Uj.
    """
    u1_kernel, u2_kernel = _split_joint_kernel(_blackwell_auxiliary_law(params.alpha, params.beta))
    y1_kernel, y2_kernel = _blackwell_output_kernels(params.p)
    pmf = build_pmf([
        (Alphabet(Q, 2), (), np.array([0.5, 0.5])),
        (Alphabet(U1, 2), (Q,), u1_kernel),
        (Alphabet(U2, 2), (Q, U1), u2_kernel),
        (Alphabet(X, 3), (U1, U2), deterministic_kernel((2, 2), 3, lambda a, b: a + b)),
        (Alphabet(Y1, 2), (X,), y1_kernel),
        (Alphabet(Y2, 2), (X,), y2_kernel),
    ])
    if not extended:
        return SchemeDistribution(pmf)
    noise_kernel = deterministic_kernel((2, 2, 2, 2), 4, lambda u1, u2, y1, y2: 2 * (y1 ^ u1) + (y2 ^ u2))
    identity = deterministic_kernel((2,), 2, lambda u: u)
    full = extend(pmf, Alphabet(V0, 4), (U1, U2, Y1, Y2), noise_kernel)
    full = extend(full, Alphabet(V1, 2), (U1,), identity)
    full = extend(full, Alphabet(V2, 2), (U2,), identity)
    return SchemeDistribution(pmf, full)


def blackwell_input_pmf(params: BlackwellParams) -> JointPmf:
    """Joint law of (X, Y1, Y2) for the input pmf (alpha1, alpha2, 1 - alpha1 - alpha2)."""
    y1_kernel, y2_kernel = _blackwell_output_kernels(params.p)
    x_law = np.array([params.alpha1, params.alpha2, max(1.0 - params.alpha1 - params.alpha2, 0.0)])
    return build_pmf([
        (Alphabet(X, 3), (), x_law),
        (Alphabet(Y1, 2), (X,), y1_kernel),
        (Alphabet(Y2, 2), (X,), y2_kernel),
    ])


def _h(a):
    return binary_entropy(np.clip(a, 0.0, 1.0))


def _star(a, b):
    return binary_convolve(np.clip(a, 0.0, 1.0), np.clip(b, 0.0, 1.0))


def blackwell_feedback_arrays(p, alpha, beta) -> Dict[str, Dict[str, np.ndarray]]:
    """
    Row constants of the key, hybrid and non-feedback Blackwell bounds,
    broadcast over arrays of (p, alpha, beta). Values are not clamped.
    """
    p, alpha, beta = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (p, alpha, beta)))
    rest = np.clip(1.0 - alpha - beta, 0.0, 1.0)
    hp = _h(p)
    mean_output = 0.5 * _h(_star(alpha, p)) + 0.5 * _h(_star(beta, p))
    # (1-b) log 1/(1-b) + (1-a) log 1/(1-a) - (1-a-b) log 1/(1-a-b), subtracted in the key rows
    marton = -xlog2x(1.0 - beta) - xlog2x(1.0 - alpha) + xlog2x(rest)
    mixed = _h(alpha) / 2.0 + _h(beta) / 2.0
    triple = ternary_entropy(np.clip(alpha, 0, 1), np.clip(np.minimum(beta, 1.0 - alpha), 0, 1))
    midpoint = _star((alpha + beta) / 2.0, p)
    midpoint_flipped = _star((alpha + beta) / 2.0, 1.0 - p)
    inner1 = {
        "key1": mean_output - marton,
        "key2": mean_output - marton,
        "cap1": mean_output - hp,
        "cap2": mean_output - hp,
        "sum": 2.0 * mean_output - marton,
    }
    inner2 = {
        "key1": triple - mixed + hp,
        "key2": triple - mixed + hp,
        "cap1": mixed,
        "cap2": mixed,
        "aux1": _h(midpoint) - 2.0 * hp,
        "aux2": _h(midpoint_flipped) - 2.0 * hp,
        "sum": _h(midpoint) - 2.0 * hp - mixed + triple,
    }
    nofeedback = {"cap1": mean_output - hp - marton, "cap2": mean_output - hp - marton}
    return {"inner1": inner1, "inner2": inner2, "nofeedback": nofeedback}


def blackwell_output_entropy(p, alpha1, alpha2) -> np.ndarray:
    """H(Y1, Y2) of the Blackwell channel for input pmf (alpha1, alpha2, rest)."""
    p, a1, a2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (p, alpha1, alpha2)))
    a3 = np.clip(1.0 - a1 - a2, 0.0, 1.0)
    pb = 1.0 - p
    cells = (
        a1 * pb * pb + a2 * p * pb + a3 * p * p,
        a1 * pb * p + a2 * p * p + a3 * p * pb,
        a1 * pb * p + a2 * pb * pb + a3 * p * pb,
        a1 * p * p + a2 * p * pb + a3 * pb * pb,
    )
    return -sum(xlog2x(np.clip(c, 0.0, 1.0)) for c in cells)


def blackwell_outer_arrays(p, alpha1, alpha2) -> Dict[str, np.ndarray]:
    p, a1, a2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (p, alpha1, alpha2)))
    joint = blackwell_output_entropy(p, a1, a2)
    first = _h(_star(a1, p))
    second = _h(_star(a1 + a2, p))
    hp = _h(p)
    return {
        "cap1": np.minimum(first - hp, joint - second),
        "cap2": np.minimum(second - hp, joint - first),
    }


_SUM_COEFS = {"R1": 1, "R2": 1}


def _blackwell_system(values: Dict[str, np.ndarray]) -> HalfSpaceSystem:
    rows = []
    for label, value in values.items():
        coefs = _SUM_COEFS if label == "sum" else {"R1": 1} if label.endswith("1") else {"R2": 1}
        rows.append((label, coefs, float(value)))
    return _rows(rows)


def blackwell_closed_inner1(params: BlackwellParams) -> HalfSpaceSystem:
    return _blackwell_system(blackwell_feedback_arrays(params.p, params.alpha, params.beta)["inner1"])


def blackwell_closed_inner2(params: BlackwellParams) -> HalfSpaceSystem:
    return _blackwell_system(blackwell_feedback_arrays(params.p, params.alpha, params.beta)["inner2"])


def blackwell_closed_nofeedback(params: BlackwellParams) -> HalfSpaceSystem:
    return _blackwell_system(blackwell_feedback_arrays(params.p, params.alpha, params.beta)["nofeedback"])


def blackwell_closed_outer(params: BlackwellParams) -> HalfSpaceSystem:
    return _blackwell_system(blackwell_outer_arrays(params.p, params.alpha1, params.alpha2))


def blackwell_closed(bound: str, params: BlackwellParams) -> HalfSpaceSystem:
    builders = {
        "inner1": blackwell_closed_inner1,
        "inner2": blackwell_closed_inner2,
        "outer": blackwell_closed_outer,
        "nofeedback": blackwell_closed_nofeedback,
    }
    if bound not in builders:
        raise InvalidArgumentError(f"unknown bound {bound!r}")
    return builders[bound](params)


# --- sum rates and sweeps ---------------------------------------------------


def max_sum_rate(region: HalfSpaceSystem) -> float:
    """Largest R1 + R2 over the vertices of a bounded 2-D region."""
    polygon = vertices2d(region)
    if polygon.is_empty:
        return 0.0
    return max(float(x + y) for x, y in polygon.vertices)


def _grid_sum_rate(values: Dict[str, np.ndarray]) -> np.ndarray:
    """Max R1 + R2 of every region on a grid of clamped row constants."""
    first = [np.maximum(v, 0.0) for k, v in values.items() if k != "sum" and k.endswith("1")]
    second = [np.maximum(v, 0.0) for k, v in values.items() if k != "sum" and k.endswith("2")]
    best = np.minimum.reduce(first) + np.minimum.reduce(second)
    if "sum" in values:
        best = np.minimum(best, np.maximum(values["sum"], 0.0))
    return best


def simplex_grid(resolution: int = GRID_RESOLUTION) -> Tuple[np.ndarray, np.ndarray]:
    """
    All points (a, b) with a, b on ``resolution`` equally spaced values in
    [0, 1] and a + b <= 1. Resolution 2k - 1 refines resolution k.
    """
    if resolution < 2:
        raise InvalidArgumentError(f"grid resolution must be at least 2, got {resolution}")
    steps = resolution - 1
    i, j = np.meshgrid(np.arange(resolution), np.arange(resolution), indexing="ij")
    keep = i + j <= steps
    return i[keep] / steps, j[keep] / steps


def blackwell_sum_rates(p: float, resolution: int = GRID_RESOLUTION) -> SweepRow:
    """Best sum rate of every Blackwell bound at noise ``p`` over the simplex grid."""
    a, b = simplex_grid(resolution)
    feedback = blackwell_feedback_arrays(p, a, b)
    outer = blackwell_outer_arrays(p, a, b)
    return SweepRow(
        p=float(p),
        sum_in1=float(_grid_sum_rate(feedback["inner1"]).max()),
        sum_in2=float(_grid_sum_rate(feedback["inner2"]).max()),
        sum_out=float(_grid_sum_rate(outer).max()),
        sum_nofb=float(_grid_sum_rate(feedback["nofeedback"]).max()),
    )


def sweep_blackwell_sumrate(p_grid: Sequence[float], grid_resolution: int = GRID_RESOLUTION) -> List[SweepRow]:
    """Maximum sum rates of the four Blackwell bounds for each noise level in ``p_grid``."""
    rows = []
    for index, p in enumerate(p_grid):
        if not 0.0 <= p <= 0.5:
            raise InvalidArgumentError(f"noise level must lie in [0, 1/2], got {p}")
        rows.append(blackwell_sum_rates(p, grid_resolution))
        logger.debug("sweep point %d/%d p=%.4f done", index + 1, len(p_grid), p)
    logger.info("blackwell sweep: %d noise levels, grid resolution %d", len(rows), grid_resolution)
    return rows


def sweep_dueck_sumrate(noise_case: int, p_grid: Sequence[float], q: float, r: float) -> List[SweepRow]:
    """Sum rates of the closed Dueck regions along p with q and r fixed."""
    rows = []
    for p in p_grid:
        params = DueckParams(noise_case=noise_case, p=p, q=q, r=r)
        rows.append(SweepRow(
            p=float(p),
            sum_in1=max_sum_rate(dueck_closed_inner1(params)),
            sum_in2=max_sum_rate(dueck_closed_inner2(params)),
            sum_out=max_sum_rate(dueck_closed_outer(params)),
            sum_nofb=max_sum_rate(dueck_closed_nofeedback(params)),
        ))
    logger.info("dueck case %d sweep: %d noise levels", noise_case, len(rows))
    return rows
