# harness.py
# Monte-Carlo FER Engine
# Runs fixed-size trial chunks in order until the stop rule is met. Every trial
# draws from its own counter-based stream keyed by (master_seed, trial_index),
# so a run gives the same records for any worker count.
#
# --- TRIAL ORDER OF DRAWS ---
# codeword (random mode only) -> channel flips -> fault-injection node choices

from __future__ import annotations

import logging
import os
import sys
from dataclasses import dataclass, field, replace
from multiprocessing import Pool
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from channel import BscChannel, clopper_pearson, transmit, transmit_bits
from decoder import DecoderConfig, FaultMode, decode_frames, decode_minsum, decode_modified
from gf2_qc import BitVec, QcParityMatrix, null_space_sample
from locking import (
    CENSUS_MAX_H,
    Key,
    LockScheme,
    StopCondition,
    classify_key,
    stop_set_census,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "fer-v1"
CSV_COLUMNS = [
    "schema", "label", "code", "scheme", "key", "key_class", "alpha", "i_max", "fault",
    "ber", "trials", "frame_errors", "fer", "fer_ci95_low", "fer_ci95_high",
    "avg_iterations", "premature_stops", "censored",
]
FLOAT_FORMAT = "%.10g"


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Counter-based stream for one trial."""
    key = np.array([master_seed & 0xFFFFFFFFFFFFFFFF, trial_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class ExperimentConfig:
    code: QcParityMatrix
    decoder: DecoderConfig = field(default_factory=DecoderConfig)
    lock: Optional[LockScheme] = None
    key: Optional[Key] = None
    v: Optional[BitVec] = None
    ber_grid: Tuple[float, ...] = (0.025,)
    min_frame_errors: int = 10
    max_trials: int = 100_000
    master_seed: int = 0
    workers: int = 1
    chunk_size: int = 256
    random_codewords: bool = False
    llr_magnitude: float = 1.0
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "ber_grid", tuple(float(b) for b in self.ber_grid))
        if self.min_frame_errors < 1:
            raise ValueError(f"min_frame_errors must be at least 1, got {self.min_frame_errors}")
        if self.max_trials < 1 or self.chunk_size < 1 or self.workers < 1:
            raise ValueError("max_trials, chunk_size and workers must be positive")
        for ber in self.ber_grid:
            if not 0.0 < ber <= 0.5:
                raise ValueError(f"BER grid values must lie in (0, 0.5], got {ber}")
        if self.v is not None and len(self.v) != self.code.n:
            raise ValueError(f"Secret vector length {len(self.v)} does not match n={self.code.n}")
        if self.lock is not None:
            if self.lock.h != self.code.h:
                raise ValueError(f"Lock expects h={self.lock.h}, code has h={self.code.h}")
            StopCondition(self.lock, self.key)

    @property
    def locked(self) -> bool:
        return self.lock is not None and not self.lock.is_plain

    def stop_condition(self) -> Optional[StopCondition]:
        return StopCondition(self.lock, self.key) if self.locked else None

    def decoder_config(self) -> DecoderConfig:
        return replace(self.decoder, stop=self.stop_condition(), trace=False)

    def secret_bits(self) -> Optional[np.ndarray]:
        """v for the modified decoder, or None for the plain one."""
        if self.v is not None:
            return self.v.array
        if self.lock is not None:
            return np.zeros(self.code.n, dtype=np.uint8)
        return None


@dataclass(frozen=True)
class FerRecord:
    ber: float
    trials: int
    frame_errors: int
    fer: float
    fer_ci95: Tuple[float, float]
    avg_iterations: float
    premature_stops: int
    censored: bool


@dataclass
class _Tally:
    trials: int = 0
    frame_errors: int = 0
    iterations: int = 0
    premature_stops: int = 0

    def add(self, other: "_Tally") -> None:
        self.trials += other.trials
        self.frame_errors += other.frame_errors
        self.iterations += other.iterations
        self.premature_stops += other.premature_stops


# --- WORKERS ---
_CONTEXT: dict = {}


def _init_worker(cfg: ExperimentConfig, ber: float) -> None:
    _CONTEXT["cfg"] = cfg
    _CONTEXT["ber"] = ber
    _CONTEXT["decoder"] = cfg.decoder_config()
    _CONTEXT["channel"] = BscChannel(ber, cfg.llr_magnitude)


def _run_chunk(bounds: Tuple[int, int]) -> _Tally:
    cfg: ExperimentConfig = _CONTEXT["cfg"]
    dec: DecoderConfig = _CONTEXT["decoder"]
    channel: BscChannel = _CONTEXT["channel"]
    code = cfg.code
    start, stop = bounds

    rngs = [trial_rng(cfg.master_seed, i) for i in range(start, stop)]
    codewords = np.zeros((stop - start, code.n), dtype=np.uint8)
    gamma = np.empty((stop - start, code.n))
    for k, rng in enumerate(rngs):
        if cfg.random_codewords:
            codewords[k] = null_space_sample(code, rng).array
        _, gamma[k] = transmit_bits(codewords[k], channel, rng)

    fault_rngs = rngs if dec.fault is not FaultMode.NONE else None
    result = decode_frames(gamma, code, dec, v=cfg.secret_bits(), rngs=fault_rngs)
    errors = (result.z != codewords).any(axis=1)
    premature = result.converged & code.syndrome_rows(result.z).any(axis=1)
    return _Tally(stop - start, int(errors.sum()), int(result.iterations.sum()), int(premature.sum()))


def _chunks(cfg: ExperimentConfig) -> Iterator[Tuple[int, int]]:
    for start in range(0, cfg.max_trials, cfg.chunk_size):
        yield start, min(start + cfg.chunk_size, cfg.max_trials)


# --- OPERATIONS ---
def run_point(cfg: ExperimentConfig, ber: float) -> FerRecord:
    """FER / average iterations at one BER; stops after the first chunk reaching min_frame_errors."""
    if not 0.0 <= ber <= 0.5:
        raise ValueError(f"BER must lie in [0, 0.5], got {ber}")
    logger.info(f"{cfg.label or cfg.code.name}: running BER={ber:g}")
    tally = _Tally()

    def consume(results) -> None:
        for chunk in results:
            tally.add(chunk)
            logger.debug(f"  {tally.trials} trials, {tally.frame_errors} frame errors")
            if tally.frame_errors >= cfg.min_frame_errors:
                return

    if cfg.workers > 1:
        with Pool(processes=cfg.workers, initializer=_init_worker, initargs=(cfg, ber)) as pool:
            consume(pool.imap(_run_chunk, _chunks(cfg)))
    else:
        _init_worker(cfg, ber)
        consume(map(_run_chunk, _chunks(cfg)))

    censored = tally.frame_errors < cfg.min_frame_errors
    if censored:
        logger.warning(
            f"BER={ber:g}: only {tally.frame_errors} frame errors in {tally.trials} trials (censored)"
        )
    low, high = clopper_pearson(tally.frame_errors, tally.trials)
    return FerRecord(
        ber=ber,
        trials=tally.trials,
        frame_errors=tally.frame_errors,
        fer=tally.frame_errors / tally.trials,
        fer_ci95=(low, high),
        avg_iterations=tally.iterations / tally.trials,
        premature_stops=tally.premature_stops,
        censored=censored,
    )


def run_sweep(cfg: ExperimentConfig) -> List[FerRecord]:
    records = [run_point(cfg, ber) for ber in cfg.ber_grid]
    logger.info(f"Sweep finished: {len(records)} points")
    return records


def census_class(lock: LockScheme, key: Key) -> str:
    """Census classification where the t-space is enumerable, structural otherwise."""
    if lock.h <= CENSUS_MAX_H:
        return stop_set_census(lock, key).key_class.value
    return classify_key(lock, key).value


def record_row(cfg: ExperimentConfig, record: FerRecord, key_class: Optional[str] = None) -> dict:
    if key_class is None:
        key_class = census_class(cfg.lock, cfg.key) if cfg.locked else ""
    return {
        "schema": SCHEMA_VERSION,
        "label": cfg.label,
        "code": cfg.code.name,
        "scheme": cfg.lock.describe() if cfg.lock is not None else "plain",
        "key": cfg.key.to_hex() if cfg.key is not None else "",
        "key_class": key_class,
        "alpha": cfg.decoder.alpha,
        "i_max": cfg.decoder.i_max,
        "fault": cfg.decoder.fault.value,
        "ber": record.ber,
        "trials": record.trials,
        "frame_errors": record.frame_errors,
        "fer": record.fer,
        "fer_ci95_low": record.fer_ci95[0],
        "fer_ci95_high": record.fer_ci95[1],
        "avg_iterations": record.avg_iterations,
        "premature_stops": record.premature_stops,
        "censored": int(record.censored),
    }


def records_to_frame(entries: Sequence[Tuple[ExperimentConfig, FerRecord]]) -> pd.DataFrame:
    rows, classes = [], {}
    for cfg, record in entries:
        tag = (id(cfg.lock), cfg.key)
        if tag not in classes:
            classes[tag] = census_class(cfg.lock, cfg.key) if cfg.locked else ""
        rows.append(record_row(cfg, record, classes[tag]))
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def write_csv(frame: pd.DataFrame, out: Optional[str] = None) -> None:
    """Writes to `out`, or to stdout when no path is given."""
    if out:
        folder = os.path.dirname(out)
        if folder:
            os.makedirs(folder, exist_ok=True)
        frame.to_csv(out, index=False, float_format=FLOAT_FORMAT)
        logger.info(f"Wrote {len(frame)} rows to {out}")
    else:
        sys.stdout.write(frame.to_csv(index=False, float_format=FLOAT_FORMAT))


def wrong_key_report(cfg: ExperimentConfig, keys: Sequence[Key], ber: Optional[float] = None,
                     baseline: bool = False) -> pd.DataFrame:
    """run_point per key at one BER, with the census class of each key.

    With `baseline` the first row is the unlocked plain decoder on the same code.
    """
    if not cfg.locked:
        raise ValueError("wrong_key_report needs a locked configuration")
    ber = cfg.ber_grid[0] if ber is None else ber
    runs = []
    if baseline:
        runs.append(("", "baseline", replace(cfg, lock=None, key=None, v=None)))
    runs.extend((key.to_hex(), census_class(cfg.lock, key), replace(cfg, key=key)) for key in keys)
    rows = []
    for key_hex, klass, keyed in runs:
        record = run_point(keyed, ber)
        rows.append({
            "key": key_hex,
            "class": klass,
            "ber": ber,
            "trials": record.trials,
            "frame_errors": record.frame_errors,
            "fer": record.fer,
            "fer_ci95_low": record.fer_ci95[0],
            "fer_ci95_high": record.fer_ci95[1],
            "avg_iterations": record.avg_iterations,
            "premature_stops": record.premature_stops,
            "censored": int(record.censored),
        })
    return pd.DataFrame(rows)


def flip_experiment(cfg: ExperimentConfig) -> List[Tuple[ExperimentConfig, FerRecord]]:
    """Baseline plus both fault modes over the BER grid."""
    entries = []
    for mode in FaultMode:
        variant = replace(cfg, decoder=replace(cfg.decoder, fault=mode), label=cfg.label or "flip-exp")
        entries.extend((variant, record) for record in run_sweep(variant))
    return entries


def calibrate_ber(cfg: ExperimentConfig, candidates: Sequence[float],
                  fer_window: Tuple[float, float] = (1e-4, 1e-3)) -> Optional[Tuple[float, FerRecord]]:
    """First candidate BER whose uncensored FER lands inside the window."""
    low, high = fer_window
    for ber in candidates:
        record = run_point(cfg, ber)
        logger.info(f"calibrate: BER={ber:g} -> FER={record.fer:.3g} ({record.frame_errors} errors)")
        if not record.censored and low <= record.fer <= high:
            return ber, record
    logger.warning(f"No candidate BER produced FER in [{low:g}, {high:g}]")
    return None


# --- ALGORITHM EQUIVALENCE ---
@dataclass
class EquivalenceSummary:
    trials: int = 0
    mismatches: int = 0
    per_ber: List[dict] = field(default_factory=list)
    first_mismatch: Optional[dict] = None

    @property
    def passed(self) -> bool:
        return self.mismatches == 0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.per_ber, columns=["ber", "trials", "mismatches"])


def equivalence_check(code: QcParityMatrix, decoder_cfg: DecoderConfig, trials: int,
                      ber_grid: Sequence[float], seed: int) -> EquivalenceSummary:
    """Lock-step comparison of the plain and modified decoders.

    Each trial draws a random v, a random codeword and BSC noise; outputs,
    iteration counts and every per-iteration decision must match up to v.
    """
    cfg = replace(decoder_cfg, trace=True, stop=None)
    summary = EquivalenceSummary()
    index = 0
    for ber in ber_grid:
        channel = BscChannel(ber)
        bad = 0
        for _ in range(trials):
            rng = trial_rng(seed, index)
            v = BitVec.random(code.n, rng)
            codeword = null_space_sample(code, rng)
            _, llrs = transmit(codeword, channel, rng)
            fault_seed = [seed & 0xFFFFFFFF, index]
            plain = decode_minsum(llrs, code, cfg, rng=np.random.default_rng(fault_seed))
            offset = decode_modified(llrs, code, v, cfg, rng=np.random.default_rng(fault_seed))
            same = (
                plain.z == offset.z
                and plain.iterations == offset.iterations
                and plain.converged == offset.converged
                and len(plain.decision_trace) == len(offset.decision_trace)
                and all(a == (b ^ v) for a, b in zip(plain.decision_trace, offset.decision_trace))
            )
            if not same:
                bad += 1
                if summary.first_mismatch is None:
                    summary.first_mismatch = {"ber": ber, "trial": index, "v": v.to_hex()}
            index += 1
        summary.trials += trials
        summary.mismatches += bad
        summary.per_ber.append({"ber": ber, "trials": trials, "mismatches": bad})
        logger.info(f"equivalence BER={ber:g}: {bad} mismatches in {trials} trials")
    return summary
