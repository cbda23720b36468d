# locking.py
# Key-Controlled Stop Conditions
# Scheme1 compares a key against the leading syndrome bits; Scheme2 folds the
# syndrome into r and guards it with kb || ka. Includes correct-key derivation,
# analytic key classification and exhaustive / sampled stop-set census.
#
# --- NOTES ---
# 1. Every lock evaluates a whole batch of syndromes at once: T has shape (B, h).
# 2. Scheme2 keys are stored as kb (l_r bits) followed by ka (g*l_r bits), so the
#    key integer is kb | ka << l_r.
# 3. The inner f2 of f4 matches ka against t[0:g*l_r) and vht on the tail.

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from functools import partial
from multiprocessing import Pool
from typing import Optional, Union

import numpy as np

from channel import clopper_pearson
from gf2_qc import BitVec, QcParityMatrix, syndrome

logger = logging.getLogger(__name__)

CENSUS_MAX_H = 24
CENSUS_BLOCK = 1 << 18


class EnumerationLimitError(ValueError):
    """Raised when exhaustive enumeration is requested beyond the supported size."""


class KeyClass(str, Enum):
    CORRECT = "correct"
    LOW = "low"
    HIGH = "high"


@dataclass(frozen=True)
class Key:
    bits: BitVec

    @classmethod
    def from_hex(cls, text: str, length: int) -> "Key":
        return cls(BitVec.from_hex(text, length))

    @classmethod
    def from_int(cls, value: int, length: int) -> "Key":
        return cls(BitVec.from_int(value, length))

    def __len__(self) -> int:
        return len(self.bits)

    def to_int(self) -> int:
        return self.bits.to_int()

    def to_hex(self) -> str:
        return self.bits.to_hex()


def _as_bits(value: Union[BitVec, Key, np.ndarray]) -> np.ndarray:
    if isinstance(value, Key):
        return value.bits.array
    if isinstance(value, BitVec):
        return value.array
    return np.asarray(value, dtype=np.uint8)


def _fold_rows(T: np.ndarray, g: int, l_r: int) -> np.ndarray:
    """Folds a batch of syndromes: r_i = XOR of T[:, i*g : i*g+g]."""
    return (T[:, :g * l_r].reshape(T.shape[0], l_r, g).sum(axis=2) & 1).astype(np.uint8)


# --- LOCK SCHEMES ---
@dataclass(frozen=True)
class PlainLock:
    """Stops only on the all-zero syndrome."""

    h: int

    is_plain = True
    key_length = 0

    def evaluate_batch(self, T: np.ndarray, key: Optional[Key] = None) -> np.ndarray:
        return ~np.asarray(T).any(axis=1)

    def correct_key(self) -> Optional[Key]:
        return None

    def describe(self) -> str:
        return "plain"


@dataclass(frozen=True)
class Scheme1Lock:
    h_k: int
    vht: BitVec

    is_plain = False

    def __post_init__(self):
        if not 1 <= self.h_k <= len(self.vht):
            raise ValueError(f"Scheme1 needs 1 <= h_k <= h, got h_k={self.h_k}, h={len(self.vht)}")

    @property
    def h(self) -> int:
        return len(self.vht)

    @property
    def key_length(self) -> int:
        return self.h_k

    @property
    def prefix_bits(self) -> int:
        return self.h_k

    def evaluate_batch(self, T: np.ndarray, key: Key) -> np.ndarray:
        k = _as_bits(key)
        if k.size != self.h_k:
            raise ValueError(f"Scheme1 key must have {self.h_k} bits, got {k.size}")
        T = np.asarray(T)
        hit = (T[:, :self.h_k] == k).all(axis=1)
        return hit & (T[:, self.h_k:] == self.vht.array[self.h_k:]).all(axis=1)

    def correct_key(self) -> Key:
        return Key(self.vht.slice(0, self.h_k))

    def describe(self) -> str:
        return f"scheme1(h_k={self.h_k})"


@dataclass(frozen=True)
class Scheme2Lock:
    g: int
    l_r: int
    vht: BitVec

    is_plain = False

    def __post_init__(self):
        if self.g < 1 or self.l_r < 1 or self.g * self.l_r > len(self.vht):
            raise ValueError(
                f"Scheme2 needs g >= 1, l_r >= 1, g*l_r <= h; got g={self.g}, l_r={self.l_r}, h={len(self.vht)}"
            )

    @property
    def h(self) -> int:
        return len(self.vht)

    @property
    def key_length(self) -> int:
        return self.l_r + self.g * self.l_r

    @property
    def prefix_bits(self) -> int:
        return self.g * self.l_r

    def split_key(self, key: Key) -> tuple:
        k = _as_bits(key)
        if k.size != self.key_length:
            raise ValueError(f"Scheme2 key must have {self.key_length} bits, got {k.size}")
        return k[:self.l_r], k[self.l_r:]

    def evaluate_batch(self, T: np.ndarray, key: Key) -> np.ndarray:
        kb, ka = self.split_key(key)
        T = np.asarray(T)
        gl = self.prefix_bits
        r = _fold_rows(T, self.g, self.l_r)
        f3 = (r == kb).all(axis=1)
        f2 = (T[:, :gl] == ka).all(axis=1) & (T[:, gl:] == self.vht.array[gl:]).all(axis=1)
        fh = (r != _fold_rows(ka[None, :], self.g, self.l_r)).any(axis=1)
        return f3 & (f2 | fh)

    def correct_key(self) -> Key:
        prefix = self.vht.slice(0, self.prefix_bits)
        return Key(BitVec.concat(map_r(self.vht, self.g, self.l_r), prefix))

    def describe(self) -> str:
        return f"scheme2(g={self.g}, l_r={self.l_r})"


LockScheme = Union[PlainLock, Scheme1Lock, Scheme2Lock]


@dataclass(frozen=True)
class StopCondition:
    """A lock bound to a key; the decoder's stop plugin."""

    scheme: LockScheme
    key: Optional[Key] = None

    def __post_init__(self):
        if not self.scheme.is_plain:
            if self.key is None:
                raise ValueError(f"{self.scheme.describe()} needs a key")
            if len(self.key) != self.scheme.key_length:
                raise ValueError(f"Key has {len(self.key)} bits, {self.scheme.describe()} expects {self.scheme.key_length}")

    @property
    def is_plain(self) -> bool:
        return self.scheme.is_plain

    @property
    def h(self) -> int:
        return self.scheme.h

    def __call__(self, T: np.ndarray) -> np.ndarray:
        return self.scheme.evaluate_batch(T, self.key)


# --- LOCK FUNCTIONS ---
def f_plain(t: BitVec) -> int:
    return int(t.weight() == 0)


def f2(t: BitVec, k: Key, scheme: Scheme1Lock) -> int:
    if len(t) != scheme.h:
        raise ValueError(f"Syndrome length {len(t)} does not match h={scheme.h}")
    return int(scheme.evaluate_batch(t.array[None, :], k)[0])


def map_r(t: BitVec, g: int, l_r: int) -> BitVec:
    if g < 1 or l_r < 1 or g * l_r > len(t):
        raise ValueError(f"Cannot fold {len(t)} bits with g={g}, l_r={l_r}")
    return BitVec(_fold_rows(t.array[None, :], g, l_r)[0])


def parity_fold(ka: BitVec, l_r: int) -> BitVec:
    if len(ka) % l_r:
        raise ValueError(f"ka length {len(ka)} is not a multiple of l_r={l_r}")
    return map_r(ka, len(ka) // l_r, l_r)


def f3(r: BitVec, kb: BitVec) -> int:
    return int(r == kb)


def f_h(r: BitVec, ka: BitVec) -> int:
    return int(parity_fold(ka, len(r)) != r)


def f4(t: BitVec, key: Key, scheme: Scheme2Lock) -> int:
    if len(t) != scheme.h:
        raise ValueError(f"Syndrome length {len(t)} does not match h={scheme.h}")
    return int(scheme.evaluate_batch(t.array[None, :], key)[0])


# --- KEYS ---
def build_scheme(kind: str, vht: BitVec, hk: Optional[int] = None, g: Optional[int] = None,
                 l_r: Optional[int] = None) -> LockScheme:
    kind = str(kind).lower()
    if kind in ("plain", "0", "none"):
        return PlainLock(len(vht))
    if kind in ("1", "scheme1"):
        if hk is None:
            raise ValueError("Scheme1 requires --hk")
        return Scheme1Lock(int(hk), vht)
    if kind in ("2", "scheme2"):
        if g is None or l_r is None:
            raise ValueError("Scheme2 requires --g and --lr")
        return Scheme2Lock(int(g), int(l_r), vht)
    raise ValueError(f"Unknown lock scheme '{kind}' (expected plain, 1 or 2)")


def derive_correct_key(scheme: LockScheme, v: BitVec, H: QcParityMatrix) -> Optional[Key]:
    """k* from the secret vector: first h_k bits of vH^T, or map_r(vH^T) || first g*l_r bits."""
    vht = syndrome(H, v)
    if scheme.is_plain:
        return None
    if vht != scheme.vht:
        raise ValueError("Secret vector does not reproduce the lock's vH^T")
    return scheme.correct_key()


def classify_key(scheme: LockScheme, key: Key) -> KeyClass:
    """Structural classification, no enumeration needed."""
    if scheme.is_plain:
        raise ValueError("The plain condition has no keys to classify")
    if _as_bits(key).size != scheme.key_length:
        raise ValueError(f"Key has {len(key)} bits, {scheme.describe()} expects {scheme.key_length}")
    if key.bits == scheme.correct_key().bits:
        return KeyClass.CORRECT
    if isinstance(scheme, Scheme1Lock):
        return KeyClass.LOW
    kb, ka = scheme.split_key(key)
    folded = _fold_rows(ka[None, :], scheme.g, scheme.l_r)[0]
    return KeyClass.LOW if np.array_equal(folded, kb) else KeyClass.HIGH


def make_wrong_key(scheme: LockScheme, klass: KeyClass, rng: np.random.Generator,
                   kb_distance: Optional[int] = None) -> Key:
    """Draws a wrong key of the requested class.

    For Scheme2 high keys `kb_distance` fixes the Hamming distance between kb and r*.
    """
    klass = KeyClass(klass)
    if klass is KeyClass.CORRECT:
        return scheme.correct_key()
    correct = scheme.correct_key().bits.array
    if isinstance(scheme, Scheme1Lock):
        if klass is not KeyClass.LOW:
            raise ValueError("Scheme1 has no high-corruptibility keys")
        while True:
            bits = rng.integers(0, 2, size=scheme.h_k, dtype=np.uint8)
            if not np.array_equal(bits, correct):
                return Key(BitVec(bits))
    if not isinstance(scheme, Scheme2Lock):
        raise ValueError(f"{scheme.describe()} has no wrong keys")

    gl, l_r = scheme.prefix_bits, scheme.l_r
    ka_star = correct[l_r:]
    if klass is KeyClass.LOW:
        while True:
            ka = rng.integers(0, 2, size=gl, dtype=np.uint8)
            if not np.array_equal(ka, ka_star):
                kb = _fold_rows(ka[None, :], scheme.g, l_r)[0]
                return Key(BitVec(np.concatenate([kb, ka])))

    r_star = correct[:l_r]
    distance = kb_distance if kb_distance is not None else int(rng.integers(1, l_r + 1))
    if not 0 <= distance <= l_r:
        raise ValueError(f"kb distance must lie in [0, {l_r}], got {distance}")
    flip = np.zeros(l_r, dtype=np.uint8)
    flip[rng.choice(l_r, size=distance, replace=False)] = 1
    kb = r_star ^ flip
    while True:
        ka = rng.integers(0, 2, size=gl, dtype=np.uint8)
        if not np.array_equal(_fold_rows(ka[None, :], scheme.g, l_r)[0], kb):
            return Key(BitVec(np.concatenate([kb, ka])))


def make_secret_vector(spec: str, n: int, q: int) -> BitVec:
    """Parses `zero`, `hex:<..>`, `pattern:<hex>` (q-bit pattern tiled to n) or `seed:<int>`."""
    spec = str(spec).strip()
    kind, _, value = spec.partition(":")
    kind = kind.lower()
    if kind in ("zero", "0") and not value:
        return BitVec.zeros(n)
    if kind == "pattern":
        return BitVec.repeat_pattern(BitVec.from_hex(value, q), n)
    if kind == "seed":
        return BitVec.random(n, np.random.default_rng(int(value)))
    if kind == "hex":
        return BitVec.from_hex(value, n)
    if not value:
        return BitVec.from_hex(spec, n)
    raise ValueError(f"Unrecognized secret vector spec '{spec}' (zero, hex:, pattern:, seed:)")


# --- CENSUS ---
@dataclass(frozen=True)
class CensusResult:
    size: int
    key_class: KeyClass


@dataclass(frozen=True)
class StopSetEstimate:
    hits: int
    samples: int
    size: float
    ci_low: float
    ci_high: float


def int_block_to_bits(start: int, stop: int, width: int) -> np.ndarray:
    ints = np.arange(start, stop, dtype=np.int64)
    return ((ints[:, None] >> np.arange(width, dtype=np.int64)) & 1).astype(np.uint8)


def _count_block(bounds: tuple, scheme: LockScheme, key: Key) -> int:
    start, stop = bounds
    return int(scheme.evaluate_batch(int_block_to_bits(start, stop, scheme.h), key).sum())


def _census_guard(h: int) -> None:
    if h > CENSUS_MAX_H:
        raise EnumerationLimitError(
            f"Exhaustive census needs h <= {CENSUS_MAX_H}, got h={h}; use estimate_stop_set instead"
        )


def stop_set_census(scheme: LockScheme, key: Key, workers: int = 1) -> CensusResult:
    """Counts every t with f(t, key) = 1 by brute force over the whole t-space."""
    _census_guard(scheme.h)
    total = 1 << scheme.h
    blocks = [(s, min(s + CENSUS_BLOCK, total)) for s in range(0, total, CENSUS_BLOCK)]
    counter = partial(_count_block, scheme=scheme, key=key)
    if workers > 1 and len(blocks) > 1:
        with Pool(processes=workers) as pool:
            size = sum(pool.imap(counter, blocks))
    else:
        size = sum(map(counter, blocks))

    correct = scheme.correct_key()
    if correct is not None and key.bits == correct.bits:
        klass = KeyClass.CORRECT
    else:
        klass = KeyClass.LOW if size == 1 else KeyClass.HIGH
    logger.debug(f"census {scheme.describe()} key={key.to_hex()}: size={size}, class={klass.value}")
    return CensusResult(size, klass)


def key_space_census(scheme: Union[Scheme1Lock, Scheme2Lock], max_key_bits: int = 22) -> dict:
    """Stop-set sizes of every key at once, from one pass over the t-space.

    Returns key integers, sizes and classes as arrays.
    """
    _census_guard(scheme.h)
    if scheme.key_length > max_key_bits:
        raise EnumerationLimitError(f"Key space of {scheme.key_length} bits exceeds {max_key_bits}")
    pb = scheme.prefix_bits
    total = 1 << scheme.h
    tail_hits = np.zeros(1 << pb, dtype=np.int64)
    r_counts = np.zeros(1 << getattr(scheme, "l_r", 0), dtype=np.int64)
    weights_p = 1 << np.arange(pb, dtype=np.int64)
    for start in range(0, total, CENSUS_BLOCK):
        T = int_block_to_bits(start, min(start + CENSUS_BLOCK, total), scheme.h)
        prefix = T[:, :pb].astype(np.int64) @ weights_p
        match = (T[:, pb:] == scheme.vht.array[pb:]).all(axis=1)
        tail_hits += np.bincount(prefix[match], minlength=1 << pb)
        if isinstance(scheme, Scheme2Lock):
            r = _fold_rows(T, scheme.g, scheme.l_r).astype(np.int64) @ (1 << np.arange(scheme.l_r, dtype=np.int64))
            r_counts += np.bincount(r, minlength=1 << scheme.l_r)

    correct_int = scheme.correct_key().to_int()
    if isinstance(scheme, Scheme1Lock):
        keys = np.arange(1 << scheme.h_k, dtype=np.int64)
        sizes = tail_hits[keys]
        classes = np.full(keys.size, KeyClass.LOW.value, dtype=object)
    else:
        l_r = scheme.l_r
        keys = np.arange(1 << scheme.key_length, dtype=np.int64)
        kb, ka = keys & ((1 << l_r) - 1), keys >> l_r
        folded = fold_ints(ka, scheme.g, l_r)
        low = folded == kb
        sizes = np.where(low, tail_hits[ka], r_counts[kb])
        classes = np.where(low, KeyClass.LOW.value, KeyClass.HIGH.value).astype(object)
    classes[correct_int] = KeyClass.CORRECT.value
    return {"keys": keys, "sizes": sizes, "classes": classes}


def fold_ints(values: np.ndarray, g: int, l_r: int) -> np.ndarray:
    """map_r on integer-encoded prefixes."""
    values = np.asarray(values, dtype=np.int64)
    out = np.zeros_like(values)
    group = (1 << g) - 1
    for i in range(l_r):
        chunk = (values >> (i * g)) & group
        parity = np.zeros_like(values)
        for b in range(g):
            parity ^= (chunk >> b) & 1
        out |= parity << i
    return out


def estimate_stop_set(scheme: LockScheme, key: Key, samples: int, rng: np.random.Generator,
                      batch: int = 1 << 16) -> StopSetEstimate:
    """Monte-Carlo stop-set size: accept fraction over uniform t, scaled by 2^h."""
    hits, drawn = 0, 0
    while drawn < samples:
        size = min(batch, samples - drawn)
        T = rng.integers(0, 2, size=(size, scheme.h), dtype=np.uint8)
        hits += int(scheme.evaluate_batch(T, key).sum())
        drawn += size
    scale = float(2 ** scheme.h)
    low, high = clopper_pearson(hits, samples)
    return StopSetEstimate(hits, samples, hits / samples * scale, low * scale, high * scale)
