# channel.py
# Binary Symmetric Channel & Syndrome Bit Probabilities
# LLR sign convention: gamma > 0 means the received bit is 1.

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.stats import beta, binom

from gf2_qc import BitVec

logger = logging.getLogger(__name__)

CROSS_CHECK_TOL = 1e-12
DEFAULT_G_MAX = 10_000


@dataclass(frozen=True)
class BscChannel:
    p: float
    llr_magnitude: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.p <= 0.5:
            raise ValueError(f"Crossover probability must lie in [0, 0.5], got {self.p}")
        if not self.llr_magnitude > 0:
            raise ValueError(f"LLR magnitude must be positive, got {self.llr_magnitude}")


def transmit_bits(codeword: np.ndarray, channel: BscChannel, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Array fast path: returns (received bits, llrs)."""
    flips = (rng.random(codeword.shape[-1]) < channel.p).astype(np.uint8)
    received = np.asarray(codeword, dtype=np.uint8) ^ flips
    llrs = np.where(received == 1, channel.llr_magnitude, -channel.llr_magnitude)
    return received, llrs


def transmit(codeword: BitVec, channel: BscChannel, rng: np.random.Generator) -> Tuple[BitVec, np.ndarray]:
    received, llrs = transmit_bits(codeword.array, channel, rng)
    return BitVec(received), llrs


# --- PROBABILITIES ---
def _odd_weight_probability(trials: int, prob: float, label: str) -> float:
    if trials < 1:
        raise ValueError(f"{label} must be at least 1, got {trials}")
    if not 0.0 <= prob <= 1.0:
        raise ValueError(f"Probability must lie in [0, 1], got {prob}")
    odd = np.arange(1, trials + 1, 2)
    summed = float(binom.pmf(odd, trials, prob).sum())
    closed = (1.0 - (1.0 - 2.0 * prob) ** trials) / 2.0
    if abs(summed - closed) > CROSS_CHECK_TOL:
        raise ArithmeticError(
            f"Odd-weight sum {summed!r} disagrees with closed form {closed!r} ({label}={trials}, p={prob})"
        )
    return summed


def prob_t_bit_one(d_c: int, p: float) -> float:
    """Pr{t_i = 1}: odd number of flips among the d_c bits of a check."""
    return _odd_weight_probability(d_c, p, "d_c")


def prob_r_bit_one(g: int, q1: float) -> float:
    """Pr{r_i = 1}: parity of g syndrome bits, each 1 with probability q1."""
    return _odd_weight_probability(g, q1, "g")


def prob_r_bit_one_from_ber(d_c: int, g: int, p: float) -> float:
    return prob_r_bit_one(g, prob_t_bit_one(d_c, p))


def select_g(d_c: int, p: float, tolerance: float, g_max: int = DEFAULT_G_MAX) -> int:
    """Smallest fold width g with |Pr{r_i = 1} - 0.5| < tolerance."""
    if tolerance <= 0:
        raise ValueError(f"Tolerance must be positive, got {tolerance}")
    q1 = prob_t_bit_one(d_c, p)
    if q1 == 0.0:
        raise ValueError(f"Pr{{t_i = 1}} is 0 at p={p}; no fold width reaches 0.5")
    for g in range(1, g_max + 1):
        if abs(prob_r_bit_one(g, q1) - 0.5) < tolerance:
            logger.debug(f"select_g: d_c={d_c}, p={p}, tol={tolerance} -> g={g}")
            return g
    raise ValueError(f"No g <= {g_max} meets tolerance {tolerance} (q1={q1:.6g})")


def clopper_pearson(successes: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Exact binomial confidence interval."""
    if trials <= 0:
        return 0.0, 1.0
    tail = (1.0 - confidence) / 2.0
    low = 0.0 if successes == 0 else float(beta.ppf(tail, successes, trials - successes + 1))
    high = 1.0 if successes == trials else float(beta.ppf(1.0 - tail, successes + 1, trials - successes))
    return low, high
