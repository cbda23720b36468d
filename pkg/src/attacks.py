# attacks.py
# SAT / AppSAT Attack Simulation on Locked Stop Conditions
# The attack runs at boolean-function level over an enumerated key space.
#
# --- ORACLE MODEL ---
# 1. The observable of the unrolled decoder is the vector it returns. On the
#    correct syndrome vH^T the input is a shifted codeword, a fixed point of
#    decoding, so stopping there or iterating on returns the same vector.
# 2. Key k is therefore observable on input t only through
#    B(t, k) = f(t, k) AND t != vH^T.
# 3. B depends on t only through its prefix P (first h_k or g*l_r bits) and
#    whether the remaining tail equals the vH^T tail. Inputs are grouped into
#    these (P, tail_match) classes.
#
# --- COUNTING ---
# `iterations` counts solver calls: every DIP search plus the final one that
# finds no DIP. `dips` counts the distinguishing inputs alone.

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from locking import (
    EnumerationLimitError,
    Key,
    KeyClass,
    LockScheme,
    Scheme1Lock,
    Scheme2Lock,
    classify_key,
    fold_ints,
)

logger = logging.getLogger(__name__)

MAX_KEY_BITS = 22
CLASS_ORDER = (KeyClass.CORRECT, KeyClass.LOW, KeyClass.HIGH)


@dataclass(frozen=True)
class AppSatParams:
    check_period: int = 10
    samples_per_check: int = 50
    threshold: float = 0.01
    settle_rounds: int = 1
    max_rounds: int = 1000

    def __post_init__(self):
        if self.check_period < 1 or self.samples_per_check < 1:
            raise ValueError("check_period and samples_per_check must be positive")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {self.threshold}")
        if self.settle_rounds < 1 or self.max_rounds < 1:
            raise ValueError("settle_rounds and max_rounds must be positive")


@dataclass
class AttackResult:
    attack: str
    iterations: int
    dips: int
    queries: int
    surviving_keys: int
    returned_key: Optional[Key]
    returned_key_class: Optional[KeyClass]
    checkpoints: int = 0
    error_rate: Optional[float] = None
    eliminated_by_class: Dict[str, int] = field(default_factory=dict)
    totals_by_class: Dict[str, int] = field(default_factory=dict)

    def exclusion_rate(self, klass: KeyClass) -> float:
        """Fraction of the class eliminated, per oracle query."""
        klass = KeyClass(klass)
        total = self.totals_by_class.get(klass.value, 0)
        if total == 0 or self.queries == 0:
            return 0.0
        return self.eliminated_by_class.get(klass.value, 0) / total / self.queries

    def to_row(self) -> dict:
        return {
            "attack": self.attack,
            "iterations": self.iterations,
            "dips": self.dips,
            "queries": self.queries,
            "checkpoints": self.checkpoints,
            "error_rate": self.error_rate,
            "surviving_keys": self.surviving_keys,
            "returned_key": self.returned_key.to_hex() if self.returned_key else "",
            "returned_key_class": self.returned_key_class.value if self.returned_key_class else "",
            "eliminated_low": self.eliminated_by_class.get("low", 0),
            "eliminated_high": self.eliminated_by_class.get("high", 0),
            "exclusion_rate_low": self.exclusion_rate(KeyClass.LOW),
            "exclusion_rate_high": self.exclusion_rate(KeyClass.HIGH),
        }


class KeySpace:
    """Enumerated key space of a locked stop condition with alive-key bookkeeping."""

    def __init__(self, scheme: LockScheme, max_key_bits: int = MAX_KEY_BITS):
        if scheme.is_plain:
            raise ValueError("The plain stop condition has no key space to attack")
        if scheme.key_length > max_key_bits:
            raise EnumerationLimitError(
                f"Key space of {scheme.key_length} bits exceeds the {max_key_bits}-bit attack limit"
            )
        self.scheme = scheme
        self.prefix_bits = scheme.prefix_bits
        self.tail_bits = scheme.h - self.prefix_bits
        self.n_keys = 1 << scheme.key_length
        self.correct = scheme.correct_key().to_int()

        vht_int = scheme.vht.to_int()
        self.p_star = vht_int & ((1 << self.prefix_bits) - 1)

        keys = np.arange(self.n_keys, dtype=np.int64)
        self.classes = np.full(self.n_keys, 1, dtype=np.int8)
        if isinstance(scheme, Scheme2Lock):
            l_r = scheme.l_r
            self.fold = fold_ints(np.arange(1 << self.prefix_bits), scheme.g, l_r)
            kb, ka = keys & ((1 << l_r) - 1), keys >> l_r
            self.classes[self.fold[ka] != kb] = 2
            all_ka = np.arange(1 << self.prefix_bits, dtype=np.int64)
            self.high_by_r = [
                (all_ka[self.fold != r] << l_r) | r for r in range(1 << l_r)
            ]
        self.classes[self.correct] = 0
        self.alive = np.ones(self.n_keys, dtype=bool)
        self.eliminated = np.zeros(3, dtype=np.int64)

    @property
    def n_alive(self) -> int:
        return int(self.alive.sum())

    def totals(self) -> Dict[str, int]:
        counts = np.bincount(self.classes, minlength=3)
        return {k.value: int(c) for k, c in zip(CLASS_ORDER, counts)}

    def eliminated_counts(self) -> Dict[str, int]:
        return {k.value: int(c) for k, c in zip(CLASS_ORDER, self.eliminated)}

    def ordered_classes(self) -> Iterator[Tuple[int, bool]]:
        """DIP search order: tail-matching classes by prefix, then the rest by prefix.

        With g >= 2 every high key also accepts a tail-matching class, so the
        non-matching classes only matter for g = 1.
        """
        prefixes = range(1 << self.prefix_bits)
        yield from ((p, True) for p in prefixes)
        if self.tail_bits:
            yield from ((p, False) for p in prefixes)

    def sample_input_class(self, rng: np.random.Generator) -> Tuple[int, bool]:
        """Class of a uniformly random syndrome."""
        prefix = int(rng.integers(1 << self.prefix_bits))
        if self.tail_bits == 0:
            return prefix, True
        return prefix, bool(rng.random() < 2.0 ** -self.tail_bits)

    def _masked(self, prefix: int, match: bool) -> bool:
        return match and prefix == self.p_star

    def accepting(self, prefix: int, match: bool) -> np.ndarray:
        """Keys k with B(t, k) = 1 for every t in the class."""
        if self._masked(prefix, match):
            return np.empty(0, dtype=np.int64)
        if isinstance(self.scheme, Scheme1Lock):
            return np.array([prefix] if match else [], dtype=np.int64)
        r = int(self.fold[prefix])
        high = self.high_by_r[r]
        if not match:
            return high
        return np.append(high, r | (prefix << self.scheme.l_r))

    def accepts(self, key: int, prefix: int, match: bool) -> bool:
        if self._masked(prefix, match):
            return False
        if isinstance(self.scheme, Scheme1Lock):
            return match and key == prefix
        l_r = self.scheme.l_r
        kb, ka = key & ((1 << l_r) - 1), key >> l_r
        if self.fold[prefix] != kb:
            return False
        return (match and ka == prefix) or bool(self.fold[ka] != kb)

    def constrain(self, prefix: int, match: bool, oracle_key: int) -> int:
        """Drops alive keys that disagree with the oracle key on this class; returns the count."""
        acc = self.accepting(prefix, match)
        if self.accepts(oracle_key, prefix, match):
            drop_mask = self.alive.copy()
            drop_mask[acc] = False
            drop = np.flatnonzero(drop_mask)
        else:
            drop = acc[self.alive[acc]]
        if drop.size:
            self.alive[drop] = False
            self.eliminated += np.bincount(self.classes[drop], minlength=3)
        return int(drop.size)

    def is_dip(self, prefix: int, match: bool) -> bool:
        acc = self.accepting(prefix, match)
        live = int(self.alive[acc].sum())
        return 0 < live < self.n_alive


def _returned(space: KeySpace, key_int: Optional[int]) -> Tuple[Optional[Key], Optional[KeyClass]]:
    if key_int is None:
        return None, None
    key = Key.from_int(int(key_int), space.scheme.key_length)
    return key, classify_key(space.scheme, key)


def _check_oracle(space: KeySpace, correct_key: Key) -> int:
    if len(correct_key) != space.scheme.key_length:
        raise ValueError(f"Oracle key has {len(correct_key)} bits, expected {space.scheme.key_length}")
    return correct_key.to_int()


def sat_attack_sim(scheme: LockScheme, correct_key: Key, unroll_imax: int = 1,
                   rng: Optional[np.random.Generator] = None,
                   max_key_bits: int = MAX_KEY_BITS) -> AttackResult:
    """Exact DIP loop in lexicographic order.

    With unroll_imax > 1 each oracle answer also covers unroll_imax - 1 further
    tail-matching input classes drawn at random, standing in for the syndromes a
    multi-iteration unrolled decoder passes through.
    """
    if unroll_imax < 1:
        raise ValueError(f"unroll_imax must be at least 1, got {unroll_imax}")
    space = KeySpace(scheme, max_key_bits)
    oracle = _check_oracle(space, correct_key)
    if unroll_imax > 1 and rng is None:
        rng = np.random.default_rng(0)

    dips = 0
    for prefix, match in space.ordered_classes():
        if not space.is_dip(prefix, match):
            continue
        dips += 1
        space.constrain(prefix, match, oracle)
        if unroll_imax > 1:
            for extra in _trace_prefixes(space, prefix, unroll_imax - 1, rng):
                space.constrain(extra, True, oracle)

    survivors = np.flatnonzero(space.alive)
    chosen = oracle if space.alive[oracle] else (int(survivors[0]) if survivors.size else None)
    key, klass = _returned(space, chosen)
    result = AttackResult(
        attack="sat",
        iterations=dips + 1,
        dips=dips,
        queries=dips,
        surviving_keys=int(survivors.size),
        returned_key=key,
        returned_key_class=klass,
        eliminated_by_class=space.eliminated_counts(),
        totals_by_class=space.totals(),
    )
    logger.info(f"SAT attack on {scheme.describe()}: {result.iterations} iterations, {result.surviving_keys} surviving keys")
    return result


def _trace_prefixes(space: KeySpace, dip_prefix: int, count: int, rng: np.random.Generator) -> List[int]:
    n_prefix = 1 << space.prefix_bits
    draw = rng.permutation(n_prefix)[:count + 2]
    return [int(p) for p in draw if p != dip_prefix and p != space.p_star][:count]


def _measure_survivor(space: KeySpace, oracle: int, params: AppSatParams,
                      rng: np.random.Generator) -> Tuple[int, float, int]:
    """Picks a surviving key, samples its error rate and keeps the samples as constraints."""
    candidate = int(rng.choice(np.flatnonzero(space.alive)))
    samples = [space.sample_input_class(rng) for _ in range(params.samples_per_check)]
    errors = sum(space.accepts(candidate, p, m) != space.accepts(oracle, p, m) for p, m in samples)
    for p, m in samples:
        space.constrain(p, m, oracle)
    return candidate, errors / len(samples), len(samples)


def appsat_sim(scheme: LockScheme, correct_key: Key, params: AppSatParams,
               rng: np.random.Generator, max_key_bits: int = MAX_KEY_BITS) -> AttackResult:
    """DIP loop with periodic random-sampling checkpoints.

    Every `check_period` DIPs a surviving key is picked at random and its error
    rate is measured on fresh uniform queries, which are then kept as
    constraints. A checkpoint passes when the measured key is still alive
    afterwards and its rate is below `threshold` (a threshold of 1 passes any
    rate). The attack stops after `settle_rounds` consecutive passes and always
    returns a key whose rate was measured.
    """
    space = KeySpace(scheme, max_key_bits)
    oracle = _check_oracle(space, correct_key)

    dips = queries = checkpoints = streak = since_check = 0
    for prefix, match in space.ordered_classes():
        if not space.is_dip(prefix, match):
            continue
        dips += 1
        queries += 1
        since_check += 1
        space.constrain(prefix, match, oracle)
        if since_check < params.check_period:
            continue

        since_check = 0
        checkpoints += 1
        candidate, rate, used = _measure_survivor(space, oracle, params, rng)
        queries += used
        logger.debug(f"AppSAT checkpoint {checkpoints}: key {candidate:#x} error rate {rate:.4f}")

        passed = bool(space.alive[candidate]) and (rate < params.threshold or params.threshold >= 1.0)
        streak = streak + 1 if passed else 0
        if streak >= params.settle_rounds:
            return _appsat_result(space, candidate, dips, dips, queries, checkpoints, rate)
        if checkpoints >= params.max_rounds:
            # ends: the oracle key is never eliminated
            while not space.alive[candidate]:
                candidate, rate, used = _measure_survivor(space, oracle, params, rng)
                queries += used
            return _appsat_result(space, candidate, dips, dips, queries, checkpoints, rate)

    # DIP loop exhausted: behaves as the exact attack.
    candidate = oracle if space.alive[oracle] else int(np.flatnonzero(space.alive)[0])
    return _appsat_result(space, candidate, dips + 1, dips, queries, checkpoints)


def _appsat_result(space: KeySpace, key_int: int, iterations: int, dips: int, queries: int,
                   checkpoints: int, error_rate: Optional[float] = None) -> AttackResult:
    key, klass = _returned(space, key_int)
    result = AttackResult(
        attack="appsat",
        iterations=iterations,
        dips=dips,
        queries=queries,
        surviving_keys=space.n_alive,
        returned_key=key,
        returned_key_class=klass,
        checkpoints=checkpoints,
        error_rate=error_rate,
        eliminated_by_class=space.eliminated_counts(),
        totals_by_class=space.totals(),
    )
    logger.info(
        f"AppSAT on {space.scheme.describe()}: returned {klass.value} key after {checkpoints} checkpoints, {queries} queries"
    )
    return result


def appsat_campaign(scheme: LockScheme, correct_key: Key, params: AppSatParams,
                    seeds: Sequence[int]) -> pd.DataFrame:
    """One AppSAT run per seed, tabulated."""
    rows = []
    for seed in seeds:
        result = appsat_sim(scheme, correct_key, params, np.random.default_rng(seed))
        rows.append({"seed": int(seed), **result.to_row()})
    return pd.DataFrame(rows)
