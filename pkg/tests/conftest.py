from __future__ import annotations

import os

import numpy as np
import pytest

from gf2_qc import BitVec, QcParityMatrix, build_profile
from locking import Scheme1Lock, Scheme2Lock

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
TOY_SHIFTS = [
    [0, 0, 0, 0, 0, 0, 0, 0],
    [0, 1, 2, 3, 4, 5, 6, 1],
    [0, 2, 4, 6, 1, 3, 5, 4],
    [0, 3, 6, 2, 5, 1, 4, 2],
]


@pytest.fixture(scope="session")
def toy_code() -> QcParityMatrix:
    return build_profile("toy-56")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def small_vht() -> BitVec:
    # h = 10 with a nonzero tail beyond the first 6 bits.
    return BitVec.from_int(0b1001_101101, 10)


@pytest.fixture
def scheme1_small(small_vht) -> Scheme1Lock:
    return Scheme1Lock(4, small_vht)


@pytest.fixture
def scheme2_small(small_vht) -> Scheme2Lock:
    return Scheme2Lock(2, 3, small_vht)
