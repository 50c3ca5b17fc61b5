"""Uniform quantization of softmax vectors into sparse grid cells.

An m-class probability vector is identified by the (m-1) digits
floor(p_j * q) for coordinates j = 2..m at quantization level q.  The first
coordinate is redundant (entries sum to 1), so the simplex is partitioned
into at most q**(m-1) cells.  Cells are kept as digit vectors rather than
flattened indices: flattening overflows quickly and nothing downstream
needs arithmetic on the flat index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IndexOverflowError, InputError

# Softmax rows whose sum deviates from 1 by more than this are rejected at
# ingest; smaller deviations are renormalized away.
SUM_TOLERANCE = 1e-6

_INT64_MAX = np.iinfo(np.int64).max


def validate_softmax(probs) -> np.ndarray:
    """Validate one softmax vector and return it renormalized to unit sum."""
    arr = np.asarray(probs, dtype=np.float64)
    if arr.ndim != 1:
        raise InputError(f"softmax vector must be 1-D, got shape {arr.shape}")
    out = validate_softmax_rows(arr[None, :])
    return out[0]


def validate_softmax_rows(probs) -> np.ndarray:
    """Validate a matrix of softmax rows; returns a renormalized copy.

    Raises InputError naming the first offending row (0-based).
    """
    mat = np.array(probs, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[1] < 2:
        raise InputError(
            f"expected a 2-D array with at least 2 columns, got shape {mat.shape}"
        )
    bad = ~np.all(np.isfinite(mat), axis=1)
    if bad.any():
        raise InputError(f"row {int(np.argmax(bad))}: non-finite entry")
    bad = np.any((mat < 0.0) | (mat > 1.0), axis=1)
    if bad.any():
        raise InputError(f"row {int(np.argmax(bad))}: entry outside [0, 1]")
    sums = mat.sum(axis=1)
    bad = np.abs(sums - 1.0) > SUM_TOLERANCE
    if bad.any():
        i = int(np.argmax(bad))
        raise InputError(
            f"row {i}: entries sum to {sums[i]!r}, beyond tolerance {SUM_TOLERANCE}"
        )
    mat /= sums[:, None]
    return mat


@dataclass(frozen=True)
class BinKey:
    """Identity of one quantization cell.

    ``digits[k]`` is the digit of coordinate k+2 (0-based internally), each
    in [0, level-1].  Two keys are equal iff they share m, level, and digits.
    """

    digits: tuple[int, ...]
    level: int
    m: int

    def __post_init__(self):
        if self.level < 2:
            raise InputError(f"quantization level must be >= 2, got {self.level}")
        if self.m < 2 or len(self.digits) != self.m - 1:
            raise InputError(
                f"expected {self.m - 1} digits for m={self.m}, got {len(self.digits)}"
            )
        if any(d < 0 or d >= self.level for d in self.digits):
            raise InputError(f"digits {self.digits} out of range for level {self.level}")


def quantize_rows(probs: np.ndarray, q: int) -> np.ndarray:
    """Digit matrix for softmax rows: floor(p_j * q) for coordinates 2..m.

    A coordinate equal to 1 would land on digit q; it is clamped into the
    top cell q-1 so every digit stays in range and equal vectors still map
    to one unique cell.
    """
    if q < 2:
        raise InputError(f"quantization level must be >= 2, got {q}")
    digits = np.floor(probs[:, 1:] * q).astype(np.int64)
    np.minimum(digits, q - 1, out=digits)
    return digits


def quantize(probs, q: int) -> BinKey:
    """Quantize one softmax vector to its cell identity at level q."""
    p = validate_softmax(probs)
    row = quantize_rows(p[None, :], q)[0]
    return BinKey(tuple(int(d) for d in row), q, p.size)


def flat_index(key: BinKey) -> int:
    """1-based flattened cell index, for display and debugging only.

    Errors out when q**(m-1) exceeds the native integer range; callers
    must then work with the BinKey directly.
    """
    span = key.level ** (key.m - 1)
    if span > _INT64_MAX:
        raise IndexOverflowError(
            f"cell index space {key.level}**{key.m - 1} is not representable; "
            "use the digit vector directly"
        )
    idx = 0
    for j, d in enumerate(key.digits):
        idx += d * key.level**j
    return idx + 1
