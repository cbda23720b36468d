# gf2_qc.py
# GF(2) Bit Vectors & Quasi-Cyclic Parity-Check Matrices
# Builds the sparse Tanner graph of a QC-LDPC code from a base grid of
# circulant shifts, computes syndromes and samples codewords.
#
# --- CONVENTIONS ---
# 1. Bit order: bit i of a BitVec is bit i of its integer/hex form (LSB first).
# 2. Circulants: Shift(s) puts a one at (row r, col (r + s) mod q) inside its
#    q x q block. A base cell of -1 is a Zero block.
# 3. Storage: edges are kept sorted by (row, col). Row- and column-indexed
#    padded views point at a sentinel slot one past the last real entry.

from __future__ import annotations

import hashlib
import logging
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

ZERO_BLOCK = -1


class CodeConstructionError(ValueError):
    """Raised for malformed base grids, code files or unknown profiles."""


# --- BIT VECTORS ---
class BitVec:
    """Immutable fixed-length vector over GF(2)."""

    __slots__ = ("_bits",)

    def __init__(self, bits: Union[Sequence[int], np.ndarray]):
        raw = np.asarray(bits).ravel()
        if raw.size == 0:
            raise ValueError("BitVec length must be positive")
        if not np.isin(raw, (0, 1)).all():
            raise ValueError(f"BitVec entries must be 0 or 1, got {np.unique(raw)[:8]}")
        arr = raw.astype(np.uint8)
        arr.setflags(write=False)
        self._bits = arr

    # --- constructors ---
    @classmethod
    def zeros(cls, length: int) -> "BitVec":
        return cls(np.zeros(length, dtype=np.uint8))

    @classmethod
    def ones(cls, length: int) -> "BitVec":
        return cls(np.ones(length, dtype=np.uint8))

    @classmethod
    def from_int(cls, value: int, length: int) -> "BitVec":
        if value < 0 or value >> length:
            raise ValueError(f"Value {value} does not fit in {length} bits")
        nbytes = max(1, (length + 7) // 8)
        packed = np.frombuffer(int(value).to_bytes(nbytes, "little"), dtype=np.uint8)
        return cls(np.unpackbits(packed, bitorder="little")[:length])

    @classmethod
    def from_hex(cls, text: str, length: int) -> "BitVec":
        text = text.strip().lower()
        if text.startswith("0x"):
            text = text[2:]
        try:
            value = int(text, 16)
        except ValueError as exc:
            raise ValueError(f"Not a hex string: '{text}'") from exc
        return cls.from_int(value, length)

    @classmethod
    def random(cls, length: int, rng: np.random.Generator) -> "BitVec":
        return cls(rng.integers(0, 2, size=length, dtype=np.uint8))

    @classmethod
    def repeat_pattern(cls, pattern: Union["BitVec", Sequence[int]], length: int) -> "BitVec":
        """Tiles `pattern` up to `length` bits (length-q repeating secret vectors)."""
        base = pattern.array if isinstance(pattern, BitVec) else np.asarray(pattern, dtype=np.uint8)
        return cls(np.resize(base, length))

    @classmethod
    def concat(cls, *parts: "BitVec") -> "BitVec":
        return cls(np.concatenate([p.array for p in parts]))

    # --- accessors ---
    @property
    def array(self) -> np.ndarray:
        """Read-only uint8 view of the bits."""
        return self._bits

    def __len__(self) -> int:
        return int(self._bits.size)

    def __getitem__(self, index: int) -> int:
        if isinstance(index, slice):
            raise TypeError("Use BitVec.slice(start, stop) for ranges")
        i = int(index)
        if i < 0 or i >= self._bits.size:
            raise IndexError(f"Bit index {i} out of range for length {self._bits.size}")
        return int(self._bits[i])

    def __iter__(self):
        return (int(b) for b in self._bits)

    def slice(self, start: int, stop: int) -> "BitVec":
        if not 0 <= start < stop <= len(self):
            raise IndexError(f"Slice [{start}:{stop}) out of range for length {len(self)}")
        return BitVec(self._bits[start:stop])

    def weight(self) -> int:
        return int(self._bits.sum())

    def to_int(self) -> int:
        return int.from_bytes(np.packbits(self._bits, bitorder="little").tobytes(), "little")

    def to_hex(self) -> str:
        return format(self.to_int(), f"0{(len(self) + 3) // 4}x")

    # --- arithmetic ---
    def _check_peer(self, other: "BitVec", op: str) -> None:
        if not isinstance(other, BitVec):
            raise TypeError(f"Cannot {op} BitVec with {type(other).__name__}")
        if len(other) != len(self):
            raise ValueError(f"Length mismatch in {op}: {len(self)} vs {len(other)}")

    def __xor__(self, other: "BitVec") -> "BitVec":
        self._check_peer(other, "XOR")
        return BitVec(self._bits ^ other._bits)

    def __and__(self, other: "BitVec") -> "BitVec":
        self._check_peer(other, "AND")
        return BitVec(self._bits & other._bits)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitVec):
            return NotImplemented
        return len(self) == len(other) and bool(np.array_equal(self._bits, other._bits))

    def __hash__(self) -> int:
        return hash((len(self), self._bits.tobytes()))

    def __repr__(self) -> str:
        return f"BitVec(len={len(self)}, hex={self.to_hex()})"


# --- TANNER GRAPH ---
@dataclass(frozen=True, eq=False)
class TannerGraph:
    """Sparse adjacency of an expanded parity-check matrix.

    `row_ptr` slices `edge_cols` into S_v(m); `col_edges[n]` lists the edge ids
    of S_c(n) (padded with the sentinel edge id E).
    """

    h: int
    n: int
    edge_rows: np.ndarray
    edge_cols: np.ndarray
    row_ptr: np.ndarray
    row_edges: np.ndarray
    col_edges: np.ndarray
    edge_slot: np.ndarray

    @property
    def num_edges(self) -> int:
        return int(self.edge_rows.size)

    def check_neighbors(self, m: int) -> np.ndarray:
        """S_v(m): columns connected to row m, ascending."""
        if not 0 <= m < self.h:
            raise IndexError(f"Row {m} out of range for h={self.h}")
        return self.edge_cols[self.row_ptr[m]:self.row_ptr[m + 1]]

    def variable_neighbors(self, col: int) -> np.ndarray:
        """S_c(n): rows connected to column n, ascending."""
        if not 0 <= col < self.n:
            raise IndexError(f"Column {col} out of range for n={self.n}")
        ids = self.col_edges[col]
        return self.edge_rows[ids[ids < self.num_edges]]

    def row_weights(self) -> np.ndarray:
        return np.diff(self.row_ptr)

    def column_weights(self) -> np.ndarray:
        return np.bincount(self.edge_cols, minlength=self.n)


def _normalize_grid(base_grid: Iterable[Iterable[int]], q: int) -> Tuple[Tuple[int, ...], ...]:
    if q < 1:
        raise CodeConstructionError(f"Circulant size q must be positive, got {q}")
    rows = tuple(tuple(int(c) for c in row) for row in base_grid)
    if not rows or not rows[0]:
        raise CodeConstructionError("Base grid must have at least one row and one column")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise CodeConstructionError(f"Base row {i} has {len(row)} cells, expected {width}")
        for j, cell in enumerate(row):
            if cell != ZERO_BLOCK and not 0 <= cell < q:
                raise CodeConstructionError(f"Shift {cell} at base cell ({i}, {j}) outside [0, {q})")
    return rows


def expand(base_grid: Iterable[Iterable[int]], q: int) -> TannerGraph:
    """Expands a base grid of circulant shifts into its sparse Tanner graph."""
    grid = _normalize_grid(base_grid, q)
    m_b, n_b = len(grid), len(grid[0])
    h, n = m_b * q, n_b * q

    offsets = np.arange(q)
    row_parts: List[np.ndarray] = []
    col_parts: List[np.ndarray] = []
    for i, row in enumerate(grid):
        for j, shift in enumerate(row):
            if shift == ZERO_BLOCK:
                continue
            row_parts.append(i * q + offsets)
            col_parts.append(j * q + (offsets + shift) % q)

    if not row_parts:
        raise CodeConstructionError("Base grid has no Shift cells")
    rows = np.concatenate(row_parts).astype(np.int64)
    cols = np.concatenate(col_parts).astype(np.int64)
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    num_edges = rows.size

    row_counts = np.bincount(rows, minlength=h)
    row_ptr = np.concatenate(([0], np.cumsum(row_counts))).astype(np.int64)
    edge_slot = np.arange(num_edges) - row_ptr[rows]
    row_edges = np.full((h, max(1, int(row_counts.max()))), num_edges, dtype=np.int64)
    row_edges[rows, edge_slot] = np.arange(num_edges)

    col_counts = np.bincount(cols, minlength=n)
    by_col = np.lexsort((rows, cols))
    col_ptr = np.concatenate(([0], np.cumsum(col_counts)))
    col_slot = np.arange(num_edges) - col_ptr[cols[by_col]]
    col_edges = np.full((n, max(1, int(col_counts.max()))), num_edges, dtype=np.int64)
    col_edges[cols[by_col], col_slot] = by_col

    return TannerGraph(h, n, rows, cols, row_ptr, row_edges, col_edges, edge_slot)


# --- PARITY-CHECK MATRIX ---
@dataclass(frozen=True, eq=False)
class QcParityMatrix:
    """Quasi-cyclic parity-check matrix given by a base grid of shifts (-1 = Zero)."""

    q: int
    base: Tuple[Tuple[int, ...], ...]
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "base", _normalize_grid(self.base, self.q))
        if self.h >= self.n:
            raise CodeConstructionError(f"Expected h < n, got h={self.h}, n={self.n}")
        if self.graph.row_weights().min() < 2:
            raise CodeConstructionError("Every check row needs at least two connections")

    @property
    def m_b(self) -> int:
        return len(self.base)

    @property
    def n_b(self) -> int:
        return len(self.base[0])

    @property
    def h(self) -> int:
        return self.m_b * self.q

    @property
    def n(self) -> int:
        return self.n_b * self.q

    @cached_property
    def graph(self) -> TannerGraph:
        return expand(self.base, self.q)

    @property
    def d_c(self) -> int:
        """Uniform row weight; raises if base rows disagree."""
        counts = {sum(1 for c in row if c != ZERO_BLOCK) for row in self.base}
        if len(counts) != 1:
            raise ValueError(f"Row weight is not uniform across base rows: {sorted(counts)}")
        return counts.pop()

    @cached_property
    def _row_cols(self) -> np.ndarray:
        # Column ids per row padded with the sentinel column n.
        g = self.graph
        return np.append(g.edge_cols, self.n)[g.row_edges]

    def check_neighbors(self, m: int) -> np.ndarray:
        return self.graph.check_neighbors(m)

    def variable_neighbors(self, col: int) -> np.ndarray:
        return self.graph.variable_neighbors(col)

    def column_weights(self) -> np.ndarray:
        return self.graph.column_weights()

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.h, self.n), dtype=np.uint8)
        dense[self.graph.edge_rows, self.graph.edge_cols] = 1
        return dense

    def syndrome_rows(self, words: np.ndarray) -> np.ndarray:
        """Batched syndromes: (B, n) bits -> (B, h) bits."""
        words = np.asarray(words, dtype=np.uint8)
        if words.ndim != 2 or words.shape[1] != self.n:
            raise ValueError(f"Expected words of shape (B, {self.n}), got {words.shape}")
        padded = np.concatenate([words, np.zeros((words.shape[0], 1), dtype=np.uint8)], axis=1)
        return (padded[:, self._row_cols].sum(axis=2, dtype=np.int64) & 1).astype(np.uint8)

    @cached_property
    def _null_basis(self) -> np.ndarray:
        reduced, pivots = gf2_rref(self.to_dense())
        pivot_set = set(pivots)
        free = [c for c in range(self.n) if c not in pivot_set]
        basis = np.zeros((len(free), self.n), dtype=np.uint8)
        for k, col in enumerate(free):
            basis[k, col] = 1
            basis[k, pivots] = reduced[:, col]
        logger.debug(f"{self.name}: null space dimension {len(free)} (rank {len(pivots)})")
        return basis

    def null_space_basis(self) -> np.ndarray:
        return self._null_basis

    def __repr__(self) -> str:
        return f"QcParityMatrix(name={self.name!r}, q={self.q}, base={self.m_b}x{self.n_b}, h={self.h}, n={self.n})"


def gf2_rref(matrix: np.ndarray) -> Tuple[np.ndarray, List[int]]:
    """Row-reduces a dense GF(2) matrix; returns the nonzero rows and pivot columns."""
    work = np.array(matrix, dtype=np.uint8) & 1
    n_rows, n_cols = work.shape
    pivots: List[int] = []
    r = 0
    for c in range(n_cols):
        if r == n_rows:
            break
        hits = np.flatnonzero(work[r:, c])
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            work[[r, p]] = work[[p, r]]
        mask = work[:, c].copy()
        mask[r] = 0
        work ^= np.outer(mask, work[r])
        pivots.append(c)
        r += 1
    return work[:r], pivots


# --- OPERATIONS ---
def syndrome(H: QcParityMatrix, z: BitVec) -> BitVec:
    """t = z H^T."""
    if len(z) != H.n:
        raise ValueError(f"Word length {len(z)} does not match code length {H.n}")
    return BitVec(H.syndrome_rows(z.array[None, :])[0])


def null_space_sample(H: QcParityMatrix, rng: np.random.Generator) -> BitVec:
    """Uniform codeword of H (dense elimination, toy-scale codes)."""
    basis = H.null_space_basis()
    if basis.shape[0] == 0:
        return BitVec.zeros(H.n)
    coeffs = rng.integers(0, 2, size=basis.shape[0], dtype=np.int64)
    return BitVec((coeffs @ basis.astype(np.int64)) & 1)


# --- PROFILES & CODE FILES ---
def profile_seed(name: str) -> int:
    return int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:8], "little")


def generate_shift_grid(m_b: int, n_b: int, q: int, seed: int) -> List[List[int]]:
    """All-Shift base grid with pseudo-random shift values."""
    rng = np.random.default_rng(seed)
    return rng.integers(0, q, size=(m_b, n_b)).tolist()


def build_profile(name: str, profiles: Optional[Dict[str, dict]] = None) -> QcParityMatrix:
    if profiles is None:
        from settings import load_config
        profiles = load_config()["profiles"]
    if name not in profiles:
        raise CodeConstructionError(f"Unknown code profile '{name}'. Available: {sorted(profiles)}")
    prof = profiles[name]
    if "shifts" in prof:
        grid = prof["shifts"]
    else:
        grid = generate_shift_grid(prof["m_b"], prof["n_b"], prof["q"], profile_seed(name))
    code = QcParityMatrix(prof["q"], grid, name=name)
    logger.info(f"Built code profile {name}: h={code.h}, n={code.n}")
    return code


def parse_code_file(path: str) -> QcParityMatrix:
    """Reads `q m_b n_b` followed by m_b*n_b cells (-1 = Zero block); '#' starts a comment."""
    with open(path, "r", encoding="utf-8") as f:
        tokens = [tok for line in f for tok in line.split("#", 1)[0].split()]
    try:
        values = [int(tok) for tok in tokens]
    except ValueError as exc:
        raise CodeConstructionError(f"Non-integer token in code file {path}: {exc}") from exc
    if len(values) < 3:
        raise CodeConstructionError(f"Code file {path} is missing the 'q m_b n_b' header")
    q, m_b, n_b = values[:3]
    cells = values[3:]
    if m_b < 1 or n_b < 1 or len(cells) != m_b * n_b:
        raise CodeConstructionError(
            f"Code file {path}: expected {m_b}x{n_b}={m_b * n_b} cells, found {len(cells)}"
        )
    grid = [cells[i * n_b:(i + 1) * n_b] for i in range(m_b)]
    return QcParityMatrix(q, grid, name=os.path.splitext(os.path.basename(path))[0])


def format_code_file(H: QcParityMatrix) -> str:
    width = len(str(H.q))
    lines = [f"# {H.name}: h={H.h}, n={H.n}", f"{H.q} {H.m_b} {H.n_b}"]
    lines += [" ".join(f"{c:>{width + 1}}" for c in row) for row in H.base]
    return "\n".join(lines) + "\n"


def load_code(spec: str, profiles: Optional[Dict[str, dict]] = None) -> QcParityMatrix:
    """`--code` resolver: an existing file path, else a profile name."""
    if os.path.isfile(spec):
        logger.info(f"Loading code definition from {spec}")
        return parse_code_file(spec)
    return build_profile(spec, profiles)
