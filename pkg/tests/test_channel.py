from __future__ import annotations

import numpy as np
import pytest

from channel import (
    BscChannel,
    clopper_pearson,
    prob_r_bit_one,
    prob_r_bit_one_from_ber,
    prob_t_bit_one,
    select_g,
    transmit,
    transmit_bits,
)
from gf2_qc import BitVec


def test_prob_t_bit_one_reference_value():
    assert prob_t_bit_one(10, 0.025) == pytest.approx(0.2006315, abs=1e-7)


def test_prob_r_bit_one_close_to_half():
    q1 = prob_t_bit_one(10, 0.025)
    assert prob_r_bit_one(15, q1) == pytest.approx(0.499772, abs=1e-6)
    assert prob_r_bit_one_from_ber(10, 15, 0.025) == pytest.approx(prob_r_bit_one(15, q1))


def test_prob_r_two_bits():
    assert prob_r_bit_one(2, 0.25) == pytest.approx(0.375)


@pytest.mark.parametrize("d_c, p, tol, expected", [(10, 0.025, 0.005, 9), (10, 0.01, 0.01, 20)])
def test_select_g(d_c, p, tol, expected):
    assert select_g(d_c, p, tol) == expected


def test_select_g_rejects_noiseless_channel():
    with pytest.raises(ValueError):
        select_g(10, 0.0, 0.01)


def test_probabilities_validate_inputs():
    with pytest.raises(ValueError):
        prob_t_bit_one(0, 0.1)
    with pytest.raises(ValueError):
        prob_r_bit_one(3, 1.5)


def test_channel_validation():
    with pytest.raises(ValueError):
        BscChannel(0.6)
    with pytest.raises(ValueError):
        BscChannel(0.1, llr_magnitude=0.0)


def test_noiseless_transmit_llr_signs():
    codeword = BitVec([0, 1, 1, 0])
    received, llrs = transmit(codeword, BscChannel(0.0, llr_magnitude=2.0), np.random.default_rng(0))
    assert received == codeword
    assert list(llrs) == [-2.0, 2.0, 2.0, -2.0]


def test_transmit_is_seeded_and_roughly_unbiased():
    codeword = BitVec.zeros(20_000)
    a, _ = transmit(codeword, BscChannel(0.1), np.random.default_rng(7))
    b, _ = transmit(codeword, BscChannel(0.1), np.random.default_rng(7))
    assert a == b
    assert 0.09 < a.weight() / 20_000 < 0.11


def test_clopper_pearson_edges():
    assert clopper_pearson(0, 10)[0] == 0.0
    assert clopper_pearson(10, 10)[1] == 1.0
    low, high = clopper_pearson(5, 100)
    assert low < 0.05 < high
    assert clopper_pearson(0, 0) == (0.0, 1.0)


def test_probability_edge_cases():
    assert prob_t_bit_one(7, 0.0) == 0.0
    assert prob_t_bit_one(7, 0.5) == pytest.approx(0.5)
    assert prob_r_bit_one(1, 0.3) == pytest.approx(0.3)
    assert select_g(4, 0.5, 0.001) == 1


def test_closed_form_cross_check_over_random_grid():
    rng = np.random.default_rng(11)
    for _ in range(100):
        d_c, g, p = int(rng.integers(1, 40)), int(rng.integers(1, 40)), float(rng.uniform(0, 0.5))
        q1 = prob_t_bit_one(d_c, p)
        assert q1 == pytest.approx((1 - (1 - 2 * p) ** d_c) / 2, abs=1e-12)
        assert prob_r_bit_one(g, q1) == pytest.approx((1 - (1 - 2 * q1) ** g) / 2, abs=1e-12)


def test_prob_t_is_increasing_in_p():
    values = [prob_t_bit_one(10, p) for p in np.linspace(0, 0.5, 26)]
    assert all(a < b for a, b in zip(values, values[1:]))


def test_empirical_syndrome_bit_frequency(toy_code):
    p, frames = 0.03, 10_000
    channel = BscChannel(p)
    rng = np.random.default_rng(2)
    received = np.array([transmit(BitVec.zeros(toy_code.n), channel, rng)[0].array for _ in range(frames)])
    # one check per frame keeps the samples independent
    observed = toy_code.syndrome_rows(received)[:, 0].mean()
    expected = prob_t_bit_one(toy_code.d_c, p)
    std_err = np.sqrt(expected * (1 - expected) / frames)
    assert abs(observed - expected) < 3 * std_err


def test_transmit_bits_matches_transmit():
    codeword = np.zeros(40, dtype=np.uint8)
    channel = BscChannel(0.2, llr_magnitude=2.5)
    received, llrs = transmit_bits(codeword, channel, np.random.default_rng(8))
    bits, llrs_vec = transmit(BitVec(codeword), channel, np.random.default_rng(8))
    assert np.array_equal(received, bits.array)
    assert np.array_equal(llrs, llrs_vec)
    assert set(np.abs(llrs)) == {2.5}
