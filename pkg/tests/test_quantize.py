import numpy as np
import pytest

from quantrank import BinKey, InputError, flat_index, quantize, quantize_rows, validate_softmax
from quantrank.errors import IndexOverflowError


def test_ternary_example():
    key = quantize([0.1, 0.7, 0.2], 3)
    assert key.digits == (2, 0)
    assert key.level == 3 and key.m == 3


def test_boundary_half():
    assert quantize([0.5, 0.5], 2).digits == (1,)


def test_unit_coordinate_clamps_to_top_cell():
    assert quantize([0.0, 1.0], 4).digits == (3,)


def test_flat_index_examples():
    assert flat_index(BinKey((2, 0), 3, 3)) == 3  # 2*3^0 + 0*3^1 + 1
    assert flat_index(BinKey((0,), 2, 2)) == 1
    assert flat_index(BinKey((7,), 8, 2)) == 8


def test_flat_index_overflow():
    key = BinKey(tuple([1] * 40), 10**5, 41)
    with pytest.raises(IndexOverflowError):
        flat_index(key)


def test_malformed_vectors_rejected():
    with pytest.raises(InputError):
        quantize([0.5, -0.1, 0.6], 3)
    with pytest.raises(InputError):
        quantize([0.5, 0.4], 3)  # sums to 0.9
    with pytest.raises(InputError):
        quantize([1.0], 3)
    with pytest.raises(InputError):
        quantize([0.5, float("nan")], 3)


def test_renormalization_within_tolerance():
    p = validate_softmax([0.5 + 2e-7, 0.5])
    assert abs(p.sum() - 1.0) < 1e-15


def test_binkey_equality_requires_level_and_m():
    assert BinKey((1, 0), 3, 3) == BinKey((1, 0), 3, 3)
    assert BinKey((1, 0), 3, 3) != BinKey((1, 0), 4, 3)
    assert BinKey((1,), 3, 2) != BinKey((1, 0), 3, 3)


def test_determinism():
    rng = np.random.default_rng(7)
    for _ in range(50):
        p = rng.dirichlet(np.ones(4))
        q = int(rng.integers(2, 50))
        assert quantize(p, q) == quantize(p, q)


def test_coverage_all_digits_in_range():
    rng = np.random.default_rng(8)
    probs = rng.dirichlet(np.ones(3), size=500)
    # include exact boundary vectors
    probs = np.vstack([probs, [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    for q in (2, 3, 7, 64):
        digits = quantize_rows(probs, q)
        assert digits.min() >= 0 and digits.max() <= q - 1


def test_grid_nesting():
    # the digit at level q equals the digit at level k*q integer-divided by k
    rng = np.random.default_rng(9)
    probs = rng.dirichlet(np.ones(3), size=300)
    grid = np.stack([np.linspace(0, 1, 11), 1 - np.linspace(0, 1, 11)], axis=1)
    grid = np.hstack([grid, np.zeros((11, 1))])
    probs = np.vstack([probs, grid[:, [2, 0, 1]]])
    for q in (2, 3, 5, 10):
        coarse = quantize_rows(probs, q)
        for k in (1, 2, 3, 7):
            fine = quantize_rows(probs, q * k)
            assert np.array_equal(fine // k, coarse)


def test_flat_index_injective_and_in_range():
    m, q = 3, 4
    seen = {}
    rng = np.random.default_rng(10)
    keys = [quantize(rng.dirichlet(np.ones(m)), q) for _ in range(400)]
    for key in keys:
        idx = flat_index(key)
        assert 1 <= idx <= q ** (m - 1)
        assert seen.setdefault(idx, key) == key
    # distinct keys map to distinct indices
    assert len({flat_index(k) for k in set(keys)}) == len(set(keys))
