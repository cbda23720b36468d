# decoder.py
# Scaled Min-sum Decoding (plain and offset-modified)
# One batched kernel serves both algorithms. The modified decoder is the plain
# one seen through the secret vector v: channel LLRs are negated where v_n = 1,
# check rows carry the parity flip p = vH^T and the stop test looks for p
# (or for the locked target) instead of zero.
#
# --- CONVENTIONS ---
# 1. LLR sign: gamma > 0 decides bit 1. A value of exactly 0 decides v_n
#    (0 for the plain decoder) and its sign counts as (-1)^v_n.
# 2. min1 ties resolve to the lowest column of the row.
# 3. The pre-loop check is iteration 0; a frame that never stops reports i_max.

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence

import numpy as np

from gf2_qc import BitVec, QcParityMatrix
from locking import StopCondition

logger = logging.getLogger(__name__)


class FaultMode(str, Enum):
    NONE = "none"
    SIGN = "sign"
    MIN1_MSB = "min1msb"


@dataclass(frozen=True)
class DecoderConfig:
    alpha: float = 0.75
    i_max: int = 15
    stop: Optional[StopCondition] = None
    fault: FaultMode = FaultMode.NONE
    trace: bool = False
    # Applied to the scaled c2v magnitudes; must be picklable for worker pools.
    quantizer: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        object.__setattr__(self, "fault", FaultMode(self.fault))
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.i_max < 1:
            raise ValueError(f"i_max must be at least 1, got {self.i_max}")


@dataclass(frozen=True)
class CheckNodeSummary:
    min1: float
    min2: float
    idx: int
    s: int


@dataclass
class DecodeResult:
    z: BitVec
    iterations: int
    converged: bool
    syndrome_trace: Optional[List[BitVec]] = None
    decision_trace: Optional[List[BitVec]] = None


@dataclass
class BatchDecodeResult:
    """Per-frame outcome arrays of `decode_frames`."""

    z: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray
    syndrome_traces: Optional[List[List[np.ndarray]]] = field(default=None)
    decision_traces: Optional[List[List[np.ndarray]]] = field(default=None)


# --- CHECK-NODE PRIMITIVES ---
def check_node_process(u_values: Sequence[float]) -> CheckNodeSummary:
    u = np.asarray(u_values, dtype=float)
    if u.size < 2:
        raise ValueError(f"A check node needs at least 2 inputs, got {u.size}")
    mags = np.abs(u)
    idx = int(np.argmin(mags))
    rest = np.delete(mags, idx)
    s = int(np.prod(np.where(u >= 0, 1, -1)))
    return CheckNodeSummary(float(mags[idx]), float(rest.min()), idx, s)


def c2v_messages(summary: CheckNodeSummary, u_values: Sequence[float], alpha: float,
                 parity_flip: int = 0) -> np.ndarray:
    u = np.asarray(u_values, dtype=float)
    mags = np.full(u.size, alpha * summary.min1)
    mags[summary.idx] = alpha * summary.min2
    signs = np.where(u >= 0, 1.0, -1.0)
    return (-1.0) ** int(parity_flip) * summary.s * signs * mags


# --- BATCHED KERNEL ---
def _signs(x: np.ndarray, polarity: np.ndarray) -> np.ndarray:
    return np.where(x > 0, 1.0, np.where(x < 0, -1.0, polarity))


def _hard_bits(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.where(x > 0, 1, np.where(x < 0, 0, v)).astype(np.uint8)


def decode_frames(gamma: np.ndarray, H: QcParityMatrix, cfg: DecoderConfig,
                  v: Optional[np.ndarray] = None,
                  rngs: Optional[Sequence[np.random.Generator]] = None) -> BatchDecodeResult:
    """Decodes a batch of frames.

    gamma: (B, n) channel LLRs. With v (shape (n,) or (B, n)) the modified
    algorithm runs and the returned z is already offset back (z' XOR v); traces
    stay in the decoder's own domain.
    """
    gamma = np.atleast_2d(np.asarray(gamma, dtype=float))
    n_frames, n = gamma.shape
    if n != H.n:
        raise ValueError(f"LLR length {n} does not match code length {H.n}")
    if cfg.fault is not FaultMode.NONE and (rngs is None or len(rngs) != n_frames):
        raise ValueError("Fault injection needs one random generator per frame")

    modified = v is not None
    v_bits = np.zeros((n_frames, n), dtype=np.uint8)
    if modified:
        v_bits[:] = np.asarray(v, dtype=np.uint8)
    polarity = 1.0 - 2.0 * v_bits
    parity = H.syndrome_rows(v_bits)
    row_flip = 1.0 - 2.0 * parity
    gamma = gamma * polarity

    stop = cfg.stop
    if stop is not None and stop.h != H.h:
        raise ValueError(f"Stop condition expects h={stop.h}, code has h={H.h}")

    def stop_hits(T: np.ndarray, rows: np.ndarray) -> np.ndarray:
        if stop is None or stop.is_plain:
            return (T == parity[rows]).all(axis=1)
        return stop(T)

    graph = H.graph
    e_rows, e_cols, e_slot = graph.edge_rows, graph.edge_cols, graph.edge_slot
    row_edges, col_edges = graph.row_edges, graph.col_edges
    h = H.h

    z_out = np.zeros((n_frames, n), dtype=np.uint8)
    iters_out = np.full(n_frames, cfg.i_max, dtype=np.int64)
    conv_out = np.zeros(n_frames, dtype=bool)
    syn_traces = [[] for _ in range(n_frames)] if cfg.trace else None
    dec_traces = [[] for _ in range(n_frames)] if cfg.trace else None

    active = np.arange(n_frames)
    z = _hard_bits(gamma, v_bits)
    T = H.syndrome_rows(z)

    def record(it: int, z: np.ndarray, T: np.ndarray) -> np.ndarray:
        if cfg.trace:
            for k, f in enumerate(active):
                syn_traces[f].append(T[k].copy())
                dec_traces[f].append(z[k].copy())
        done = stop_hits(T, active)
        finished = active[done]
        z_out[finished] = z[done]
        iters_out[finished] = it
        conv_out[finished] = True
        return done

    done = record(0, z, T)
    keep = ~done
    active, g_act = active[keep], gamma[keep]
    pol_act, flip_act = polarity[keep], row_flip[keep]
    u = g_act[:, e_cols]
    last_z = z[keep]

    for it in range(1, cfg.i_max + 1):
        if active.size == 0:
            break
        a = active.size
        mags = np.abs(u)
        sg = _signs(u, pol_act[:, e_cols])

        mag_rows = np.concatenate([mags, np.full((a, 1), np.inf)], axis=1)[:, row_edges]
        pos = mag_rows.argmin(axis=2)
        min1 = np.take_along_axis(mag_rows, pos[..., None], axis=2)[..., 0]
        np.put_along_axis(mag_rows, pos[..., None], np.inf, axis=2)
        min2 = mag_rows.min(axis=2)
        s = np.concatenate([sg, np.ones((a, 1))], axis=1)[:, row_edges].prod(axis=2)

        if cfg.fault is not FaultMode.NONE:
            peak = mags.max(axis=1)
            for k, f in enumerate(active):
                m = int(rngs[f].integers(h))
                if cfg.fault is FaultMode.SIGN:
                    s[k, m] = -s[k, m]
                else:
                    min1[k, m] = max(peak[k] - min1[k, m], 0.0)

        chosen = np.where(e_slot == pos[:, e_rows], min2[:, e_rows], min1[:, e_rows])
        scaled = cfg.alpha * chosen
        if cfg.quantizer is not None:
            scaled = cfg.quantizer(scaled)
        vmsg = (s * flip_act)[:, e_rows] * sg * scaled

        totals = np.concatenate([vmsg, np.zeros((a, 1))], axis=1)[:, col_edges].sum(axis=2)
        posterior = g_act + totals
        u = posterior[:, e_cols] - vmsg

        last_z = _hard_bits(posterior, v_bits[active])
        T = H.syndrome_rows(last_z)
        done = record(it, last_z, T)
        keep = ~done
        if not keep.all():
            active, g_act, u, last_z = active[keep], g_act[keep], u[keep], last_z[keep]
            pol_act, flip_act = pol_act[keep], flip_act[keep]

    z_out[active] = last_z
    if modified:
        z_out ^= v_bits
    return BatchDecodeResult(z_out, iters_out, conv_out, syn_traces, dec_traces)


def _single(result: BatchDecodeResult, trace: bool) -> DecodeResult:
    return DecodeResult(
        z=BitVec(result.z[0]),
        iterations=int(result.iterations[0]),
        converged=bool(result.converged[0]),
        syndrome_trace=[BitVec(t) for t in result.syndrome_traces[0]] if trace else None,
        decision_trace=[BitVec(z) for z in result.decision_traces[0]] if trace else None,
    )


def decode_minsum(llrs: Sequence[float], H: QcParityMatrix, cfg: DecoderConfig,
                  rng: Optional[np.random.Generator] = None) -> DecodeResult:
    """Plain scaled Min-sum; stops when cfg.stop accepts zH^T (all-zero by default)."""
    gamma = np.asarray(llrs, dtype=float)
    if gamma.ndim != 1 or gamma.size != H.n:
        raise ValueError(f"Expected {H.n} LLRs, got shape {gamma.shape}")
    result = decode_frames(gamma[None, :], H, cfg, rngs=None if rng is None else [rng])
    return _single(result, cfg.trace)


def decode_modified(llrs: Sequence[float], H: QcParityMatrix, v: BitVec, cfg: DecoderConfig,
                    rng: Optional[np.random.Generator] = None) -> DecodeResult:
    """Offset-modified Min-sum: runs in the z' = z XOR v domain and returns z' XOR v.

    With the plain condition the stop target is p = vH^T; a locked condition is
    evaluated directly on z'H^T.
    """
    gamma = np.asarray(llrs, dtype=float)
    if gamma.ndim != 1 or gamma.size != H.n:
        raise ValueError(f"Expected {H.n} LLRs, got shape {gamma.shape}")
    if len(v) != H.n:
        raise ValueError(f"Secret vector length {len(v)} does not match code length {H.n}")
    result = decode_frames(gamma[None, :], H, cfg, v=v.array, rngs=None if rng is None else [rng])
    return _single(result, cfg.trace)
