from __future__ import annotations

import numpy as np
import pytest

from channel import BscChannel, transmit
from decoder import (
    DecoderConfig,
    FaultMode,
    c2v_messages,
    check_node_process,
    decode_frames,
    decode_minsum,
    decode_modified,
)
from gf2_qc import BitVec, null_space_sample, syndrome
from locking import Scheme1Lock, Scheme2Lock, StopCondition


def _single_error_llrs(n: int, position: int) -> np.ndarray:
    llrs = -np.ones(n)
    llrs[position] = 1.0
    return llrs


# --- check node ---
def test_check_node_summary():
    summary = check_node_process([0.5, -0.2, 0.9])
    assert summary.min1 == pytest.approx(0.2)
    assert summary.min2 == pytest.approx(0.5)
    assert summary.idx == 1
    assert summary.s == -1


def test_check_node_tie_goes_to_first_and_zero_is_positive():
    summary = check_node_process([0.3, -0.3, 0.0])
    assert summary.idx == 2
    summary = check_node_process([0.3, -0.3])
    assert summary.idx == 0
    assert summary.s == -1
    assert check_node_process([0.0, 1.0]).s == 1


def test_check_node_needs_two_inputs():
    with pytest.raises(ValueError):
        check_node_process([1.0])


def test_c2v_messages_exclude_own_input():
    u = [0.5, -0.2, 0.9]
    msgs = c2v_messages(check_node_process(u), u, alpha=0.75)
    assert msgs == pytest.approx([-0.15, 0.375, -0.15])
    flipped = c2v_messages(check_node_process(u), u, alpha=0.75, parity_flip=1)
    assert flipped == pytest.approx([0.15, -0.375, 0.15])


def test_config_validation():
    with pytest.raises(ValueError):
        DecoderConfig(alpha=1.0)
    with pytest.raises(ValueError):
        DecoderConfig(i_max=0)
    assert DecoderConfig(fault="sign").fault is FaultMode.SIGN


# --- plain decoding ---
def test_clean_frame_stops_before_first_iteration(toy_code):
    result = decode_minsum(-np.ones(toy_code.n), toy_code, DecoderConfig())
    assert result.iterations == 0
    assert result.converged
    assert result.z == BitVec.zeros(toy_code.n)


def test_every_single_error_corrected_in_one_iteration(toy_code):
    cfg = DecoderConfig(alpha=0.75)
    for position in range(toy_code.n):
        result = decode_minsum(_single_error_llrs(toy_code.n, position), toy_code, cfg)
        assert result.converged, position
        assert result.iterations == 1, position
        assert result.z.weight() == 0, position


def test_batch_matches_single_frame_decoding(toy_code, rng):
    channel = BscChannel(0.05)
    frames = np.array([transmit(BitVec.zeros(toy_code.n), channel, rng)[1] for _ in range(12)])
    cfg = DecoderConfig()
    batch = decode_frames(frames, toy_code, cfg)
    for k, llrs in enumerate(frames):
        single = decode_minsum(llrs, toy_code, cfg)
        assert single.iterations == batch.iterations[k]
        assert single.converged == batch.converged[k]
        assert np.array_equal(single.z.array, batch.z[k])


def test_unreachable_stop_runs_to_imax(toy_code):
    target = BitVec.ones(toy_code.h)
    stop = StopCondition(Scheme1Lock(toy_code.h, target), Scheme1Lock(toy_code.h, target).correct_key())
    result = decode_minsum(-np.ones(toy_code.n), toy_code, DecoderConfig(i_max=6, stop=stop))
    assert result.iterations == 6
    assert not result.converged
    assert result.z.weight() == 0


def test_trace_records_every_checked_word(toy_code):
    result = decode_minsum(_single_error_llrs(toy_code.n, 3), toy_code, DecoderConfig(trace=True))
    assert len(result.syndrome_trace) == result.iterations + 1
    assert result.syndrome_trace[0].weight() == 4
    assert result.syndrome_trace[-1].weight() == 0
    assert result.decision_trace[0][3] == 1


def test_quantizer_is_applied(toy_code):
    cfg = DecoderConfig(quantizer=lambda x: np.floor(x * 4) / 4)
    result = decode_minsum(_single_error_llrs(toy_code.n, 10), toy_code, cfg)
    assert result.iterations == 1


# --- modified decoding ---
def test_zero_llr_decides_the_secret_bit(toy_code, rng):
    llrs = -np.ones(toy_code.n)
    llrs[5] = 0.0
    plain = decode_minsum(llrs, toy_code, DecoderConfig())
    assert plain.iterations == 0 and plain.z.weight() == 0

    v = BitVec.random(toy_code.n, rng)
    offset = decode_modified(llrs, toy_code, v, DecoderConfig())
    assert offset.iterations == 0
    assert offset.z.weight() == 0


def test_modified_decoder_tracks_plain_decoder(toy_code):
    rng = np.random.default_rng(99)
    cfg = DecoderConfig(trace=True, i_max=10)
    for _ in range(40):
        v = BitVec.random(toy_code.n, rng)
        codeword = null_space_sample(toy_code, rng)
        _, llrs = transmit(codeword, BscChannel(0.06), rng)
        plain = decode_minsum(llrs, toy_code, cfg)
        offset = decode_modified(llrs, toy_code, v, cfg)
        assert plain.z == offset.z
        assert plain.iterations == offset.iterations
        assert plain.converged == offset.converged
        assert all(a == (b ^ v) for a, b in zip(plain.decision_trace, offset.decision_trace))
        assert all(a == (b ^ syndrome(toy_code, v)) for a, b in zip(plain.syndrome_trace, offset.syndrome_trace))


@pytest.mark.parametrize("fault", [FaultMode.SIGN, FaultMode.MIN1_MSB])
def test_fault_injection_keeps_equivalence(toy_code, fault):
    rng = np.random.default_rng(5)
    cfg = DecoderConfig(fault=fault, i_max=8)
    for trial in range(15):
        v = BitVec.random(toy_code.n, rng)
        _, llrs = transmit(BitVec.zeros(toy_code.n), BscChannel(0.05), rng)
        plain = decode_minsum(llrs, toy_code, cfg, rng=np.random.default_rng(trial))
        offset = decode_modified(llrs, toy_code, v, cfg, rng=np.random.default_rng(trial))
        assert plain.z == offset.z
        assert plain.iterations == offset.iterations


def test_fault_injection_needs_generators(toy_code):
    with pytest.raises(ValueError):
        decode_frames(-np.ones((2, toy_code.n)), toy_code, DecoderConfig(fault="sign"))


def test_correct_keys_reproduce_plain_target(toy_code):
    rng = np.random.default_rng(21)
    v = BitVec.random(toy_code.n, rng)
    vht = syndrome(toy_code, v)
    locks = [Scheme1Lock(9, vht), Scheme2Lock(7, 1, vht)]
    for _ in range(20):
        _, llrs = transmit(BitVec.zeros(toy_code.n), BscChannel(0.05), rng)
        reference = decode_modified(llrs, toy_code, v, DecoderConfig())
        for lock in locks:
            stop = StopCondition(lock, lock.correct_key())
            locked = decode_modified(llrs, toy_code, v, DecoderConfig(stop=stop))
            assert locked.z == reference.z
            assert locked.iterations == reference.iterations


def test_wrong_length_inputs(toy_code):
    with pytest.raises(ValueError):
        decode_minsum(np.zeros(10), toy_code, DecoderConfig())
    with pytest.raises(ValueError):
        decode_modified(np.zeros(toy_code.n), toy_code, BitVec.zeros(10), DecoderConfig())


def test_c2v_worked_example():
    u = [3.0, -1.0, -2.0]
    summary = check_node_process(u)
    assert (summary.min1, summary.idx, summary.min2, summary.s) == (1.0, 1, 2.0, 1)
    assert c2v_messages(summary, u, alpha=0.75) == pytest.approx([0.75, -1.5, -0.75])
    tie = check_node_process([1.0, -1.0, 5.0])
    assert (tie.min1, tie.idx, tie.min2) == (1.0, 0, 1.0)


def test_scaling_llrs_keeps_decisions(toy_code, rng):
    _, llrs = transmit(BitVec.zeros(toy_code.n), BscChannel(0.06), rng)
    cfg = DecoderConfig(trace=True)
    a = decode_minsum(llrs, toy_code, cfg)
    b = decode_minsum(llrs * 3.5, toy_code, cfg)
    assert a.decision_trace == b.decision_trace


def test_zero_secret_vector_reduces_to_plain(toy_code, rng):
    _, llrs = transmit(BitVec.zeros(toy_code.n), BscChannel(0.06), rng)
    plain = decode_minsum(llrs, toy_code, DecoderConfig())
    offset = decode_modified(llrs, toy_code, BitVec.zeros(toy_code.n), DecoderConfig())
    assert (plain.z, plain.iterations, plain.converged) == (offset.z, offset.iterations, offset.converged)


def test_repeated_pattern_secret_vector(toy_code, rng):
    v = BitVec.repeat_pattern([1, 0, 1, 1, 0, 0, 1], toy_code.n)
    for _ in range(10):
        _, llrs = transmit(BitVec.zeros(toy_code.n), BscChannel(0.07), rng)
        plain = decode_minsum(llrs, toy_code, DecoderConfig())
        offset = decode_modified(llrs, toy_code, v, DecoderConfig())
        assert plain.z == offset.z and plain.iterations == offset.iterations


def test_plain_convergence_means_codeword(toy_code, rng):
    for _ in range(20):
        _, llrs = transmit(BitVec.zeros(toy_code.n), BscChannel(0.1), rng)
        result = decode_minsum(llrs, toy_code, DecoderConfig())
        assert result.iterations <= 15
        if result.converged:
            assert syndrome(toy_code, result.z).weight() == 0
        else:
            assert result.iterations == 15
