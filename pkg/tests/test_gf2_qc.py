from __future__ import annotations

import os

import numpy as np
import pytest

from conftest import REPO_ROOT, TOY_SHIFTS
from gf2_qc import (
    BitVec,
    CodeConstructionError,
    QcParityMatrix,
    build_profile,
    expand,
    format_code_file,
    generate_shift_grid,
    gf2_rref,
    load_code,
    null_space_sample,
    parse_code_file,
    syndrome,
)


# --- BitVec ---
def test_bit_order_is_lsb_first():
    bits = BitVec.from_int(0b1011, 4)
    assert list(bits) == [1, 1, 0, 1]
    assert bits.to_int() == 11
    assert BitVec.from_hex("1f", 8).to_hex() == "1f"


def test_from_int_rejects_overflow():
    with pytest.raises(ValueError):
        BitVec.from_int(16, 4)


def test_xor_and_weight():
    a = BitVec([1, 0, 1, 1])
    b = BitVec([1, 1, 0, 1])
    assert (a ^ b) == BitVec([0, 1, 1, 0])
    assert (a & b).weight() == 2


def test_length_mismatch_and_bad_entries():
    with pytest.raises(ValueError):
        BitVec([1, 0]) ^ BitVec([1, 0, 1])
    with pytest.raises(ValueError):
        BitVec([0, 2, 1])
    with pytest.raises(ValueError):
        BitVec([])


def test_indexing_is_bounds_checked():
    bits = BitVec([0, 1, 1])
    assert bits[1] == 1
    with pytest.raises(IndexError):
        bits[3]
    with pytest.raises(TypeError):
        bits[0:2]
    assert bits.slice(1, 3) == BitVec([1, 1])


def test_bits_are_read_only():
    bits = BitVec([0, 1])
    with pytest.raises(ValueError):
        bits.array[0] = 1


def test_repeat_pattern_tiles():
    assert list(BitVec.repeat_pattern([1, 0, 0], 7)) == [1, 0, 0, 1, 0, 0, 1]


# --- QC expansion ---
def test_shift_places_ones_on_rotated_diagonal():
    H = QcParityMatrix(3, [[1, 0]])
    dense = H.to_dense()
    for r in range(3):
        assert dense[r, (r + 1) % 3] == 1
        assert dense[r, 3 + r] == 1
    assert dense.sum() == 6


def test_zero_block_stays_empty():
    H = QcParityMatrix(3, [[0, -1, 2]])
    dense = H.to_dense()
    assert not dense[:, 3:6].any()
    assert list(H.graph.row_weights()) == [2, 2, 2]


def test_expand_neighbors_match_dense():
    graph = expand(TOY_SHIFTS, 7)
    H = QcParityMatrix(7, TOY_SHIFTS)
    dense = H.to_dense()
    for m in (0, 9, 27):
        assert list(graph.check_neighbors(m)) == list(np.flatnonzero(dense[m]))
    for col in (0, 20, 55):
        assert sorted(graph.variable_neighbors(col)) == list(np.flatnonzero(dense[:, col]))


@pytest.mark.parametrize("q, grid", [(3, [[3, 0]]), (3, [[0, 1], [1, 0]]), (3, [[0, -1]]), (3, [[0, 1], [0]])])
def test_invalid_grids_raise(q, grid):
    with pytest.raises(CodeConstructionError):
        QcParityMatrix(q, grid)


def test_toy_profile_shape(toy_code):
    assert (toy_code.h, toy_code.n) == (28, 56)
    assert toy_code.d_c == 8
    assert set(toy_code.column_weights()) == {4}


def test_unknown_profile():
    with pytest.raises(CodeConstructionError, match="Unknown code profile"):
        build_profile("no-such-code")


def test_seeded_profiles_are_reproducible():
    a = build_profile("census-40")
    b = build_profile("census-40")
    assert a.base == b.base
    assert (a.h, a.n) == (20, 40)


# --- syndromes & codewords ---
def test_syndrome_matches_dense_product(toy_code, rng):
    z = BitVec.random(toy_code.n, rng)
    expected = (toy_code.to_dense().astype(int) @ z.array.astype(int)) % 2
    assert list(syndrome(toy_code, z)) == list(expected)


def test_null_space_samples_are_codewords(toy_code, rng):
    basis = toy_code.null_space_basis()
    assert basis.shape[0] >= toy_code.n - toy_code.h
    for _ in range(20):
        assert syndrome(toy_code, null_space_sample(toy_code, rng)).weight() == 0


def test_gf2_rref_rank():
    rows, pivots = gf2_rref(np.array([[1, 1, 0], [0, 1, 1], [1, 0, 1]]))
    assert pivots == [0, 1]
    assert rows.shape == (2, 3)


# --- code files ---
def test_code_file_matches_profile(toy_code):
    from_file = load_code(os.path.join(REPO_ROOT, "codes", "toy_4x8_q7.txt"))
    assert from_file.base == toy_code.base
    assert np.array_equal(from_file.to_dense(), toy_code.to_dense())


def test_format_then_parse(tmp_path, toy_code):
    path = tmp_path / "toy.txt"
    path.write_text(format_code_file(toy_code))
    assert parse_code_file(str(path)).base == toy_code.base


def test_code_file_cell_count_checked(tmp_path):
    path = tmp_path / "short.txt"
    path.write_text("5 2 3\n0 1 2\n3 4\n")
    with pytest.raises(CodeConstructionError, match="expected 2x3"):
        parse_code_file(str(path))


@pytest.mark.parametrize("shift, expected", [(0, [0, 1, 2]), (1, [1, 2, 0])])
def test_single_block_expansion(shift, expected):
    graph = expand([[shift]], 3)
    assert [int(graph.check_neighbors(m)[0]) for m in range(3)] == expected


def test_large_profile_dimensions():
    H = build_profile("paperlike-1270")
    assert (H.h, H.n, H.d_c) == (635, 1270, 10)
    assert set(H.column_weights()) == {5}


def test_syndrome_is_linear(toy_code, rng):
    for _ in range(10):
        a, b = BitVec.random(toy_code.n, rng), BitVec.random(toy_code.n, rng)
        assert syndrome(toy_code, a ^ b) == syndrome(toy_code, a) ^ syndrome(toy_code, b)


def test_unit_error_syndrome_is_its_column(toy_code):
    t = syndrome(toy_code, BitVec.from_int(1 << 17, toy_code.n))
    assert list(np.flatnonzero(t.array)) == sorted(toy_code.variable_neighbors(17))


def test_codeword_offset_leaves_syndrome(toy_code, rng):
    c = null_space_sample(toy_code, rng)
    e = BitVec.random(toy_code.n, rng)
    assert syndrome(toy_code, c ^ e) == syndrome(toy_code, e)
    samples = {null_space_sample(toy_code, np.random.default_rng(s)) for s in range(5)}
    assert len(samples) >= 2


def test_shift_grid_is_seeded():
    grid = generate_shift_grid(3, 6, 11, seed=5)
    assert grid == generate_shift_grid(3, 6, 11, seed=5)
    assert len(grid) == 3 and all(len(row) == 6 for row in grid)
    assert all(0 <= s < 11 for row in grid for s in row)
