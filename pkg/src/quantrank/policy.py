"""Empirical class-conditional cell counts and the induced label policy.

Given a labeled set of source softmax outputs quantized at level q, the
per-cell conditional distribution estimate is P[i, j] = count of class-j
samples in cell i divided by the class-j total.  The optimal policy picks,
per cell, the class(es) maximizing that estimate; cells never seen during
counting decide uniformly among all n target classes.  Ties are scored by
their expected value (mean over the tied classes) so every accuracy here
is deterministic; a sampling mode exists for cross-checks.

Counts are exact integers and tie detection is exact (integer or rational
comparisons), never float equality.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import lcm

import numpy as np

from .errors import InputError
from .quantize import BinKey, quantize_rows, validate_softmax_rows

# A decision is the set of 1-based classes a cell decides among: a singleton
# predicts deterministically, larger sets are ties resolved uniformly.
Decision = frozenset


@dataclass(eq=False)
class LabeledDataset:
    """Softmax rows with 1-based target labels.

    probs has shape (N, m); labels has shape (N,) with values in [1, n].
    Rows are validated and renormalized on construction.
    """

    probs: np.ndarray
    labels: np.ndarray
    n: int

    def __post_init__(self):
        self.probs = validate_softmax_rows(self.probs)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 1 or self.labels.shape[0] != self.probs.shape[0]:
            raise InputError(
                f"labels shape {self.labels.shape} does not match "
                f"{self.probs.shape[0]} rows"
            )
        if self.n < 2:
            raise InputError(f"target class count must be >= 2, got {self.n}")
        if self.labels.size and (
            self.labels.min() < 1 or self.labels.max() > self.n
        ):
            raise InputError(f"labels must lie in [1, {self.n}]")

    @property
    def m(self) -> int:
        return self.probs.shape[1]

    def __len__(self) -> int:
        return self.probs.shape[0]

    def class_counts(self) -> np.ndarray:
        """Sample count per class, index 0 holding class 1."""
        return np.bincount(self.labels - 1, minlength=self.n)

    def subset(self, idx) -> "LabeledDataset":
        return LabeledDataset(self.probs[idx], self.labels[idx], self.n)

    def is_balanced(self) -> bool:
        counts = self.class_counts()
        return bool(np.all(counts == counts[0]))


@dataclass(eq=False)
class ConditionalCounts:
    """Sparse per-cell, per-class sample counts at one quantization level.

    bin_digits holds the occupied cells as lexicographically sorted digit
    rows; bin_counts[i, j] is the number of class j+1 samples in cell i.
    """

    level: int
    m: int
    n: int
    bin_digits: np.ndarray
    bin_counts: np.ndarray
    per_class_totals: np.ndarray

    @cached_property
    def counts(self) -> dict[BinKey, np.ndarray]:
        """Mapping view BinKey -> per-class count vector."""
        return {
            BinKey(tuple(int(d) for d in row), self.level, self.m): self.bin_counts[i]
            for i, row in enumerate(self.bin_digits)
        }

    @property
    def n_bins(self) -> int:
        return self.bin_digits.shape[0]

    def conditionals(self) -> np.ndarray:
        """Row-wise estimate P[i, j] = counts[i, j] / total[j] as floats."""
        return self.bin_counts / self.per_class_totals[None, :].astype(np.float64)


@dataclass(eq=False)
class Policy:
    """Per-cell label decision at one quantization level.

    decision_matrix[i, j] is True when cell i decides among class j+1.
    Cells absent from bin_digits fall back to the default decision, a tie
    among all n classes.
    """

    level: int
    m: int
    n: int
    bin_digits: np.ndarray
    decision_matrix: np.ndarray

    @property
    def default_decision(self) -> Decision:
        return frozenset(range(1, self.n + 1))

    @cached_property
    def _index(self) -> dict[tuple[int, ...], int]:
        return {tuple(row): i for i, row in enumerate(self.bin_digits.tolist())}

    @cached_property
    def decisions(self) -> dict[BinKey, Decision]:
        """Mapping view BinKey -> decision set (1-based classes)."""
        out = {}
        for i, row in enumerate(self.bin_digits):
            classes = np.nonzero(self.decision_matrix[i])[0] + 1
            out[BinKey(tuple(int(d) for d in row), self.level, self.m)] = frozenset(
                int(c) for c in classes
            )
        return out

    def decision_for(self, key: BinKey) -> Decision:
        if key.level != self.level or key.m != self.m:
            raise InputError(
                f"key at level {key.level} (m={key.m}) does not match policy "
                f"level {self.level} (m={self.m})"
            )
        i = self._index.get(key.digits)
        if i is None:
            return self.default_decision
        classes = np.nonzero(self.decision_matrix[i])[0] + 1
        return frozenset(int(c) for c in classes)

    def lookup_rows(self, digits: np.ndarray) -> np.ndarray:
        """Row index into decision_matrix per digit row, -1 when unseen."""
        index = self._index
        return np.fromiter(
            (index.get(tuple(row), -1) for row in digits.tolist()),
            dtype=np.int64,
            count=digits.shape[0],
        )


def build_counts(data: LabeledDataset, q: int) -> ConditionalCounts:
    """Count samples per (cell, class) for the dataset quantized at level q."""
    if len(data) == 0:
        raise InputError("cannot build counts from an empty dataset")
    digits = quantize_rows(data.probs, q)
    bins, inverse = np.unique(digits, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    flat = inverse * data.n + (data.labels - 1)
    counts = np.bincount(flat, minlength=bins.shape[0] * data.n).reshape(
        bins.shape[0], data.n
    )
    return ConditionalCounts(
        level=q,
        m=data.m,
        n=data.n,
        bin_digits=bins,
        bin_counts=counts,
        per_class_totals=data.class_counts(),
    )


def _argmax_mask(counts: ConditionalCounts) -> np.ndarray:
    """Boolean matrix marking, per cell, the classes with maximal P[i, j].

    Comparisons are exact: pure integer counts when class totals are equal,
    rational cross-comparison otherwise.
    """
    totals = counts.per_class_totals
    if np.any(totals == 0):
        raise InputError("every class needs at least one sample to derive a policy")
    if np.all(totals == totals[0]):
        c = counts.bin_counts
        return c == c.max(axis=1, keepdims=True)
    scale = lcm(*(int(t) for t in totals))
    factors = np.array([scale // int(t) for t in totals], dtype=object)
    scaled = counts.bin_counts.astype(object) * factors[None, :]
    return scaled == scaled.max(axis=1, keepdims=True)


def derive_policy(counts: ConditionalCounts) -> Policy:
    """Optimal policy: per cell, the argmax class or the tie over the argmax set."""
    return Policy(
        level=counts.level,
        m=counts.m,
        n=counts.n,
        bin_digits=counts.bin_digits,
        decision_matrix=_argmax_mask(counts),
    )


def _aligned_decisions(counts: ConditionalCounts, policy: Policy) -> np.ndarray:
    """Decision rows aligned with the counts' cells (default row when absent)."""
    if policy.level != counts.level:
        raise InputError(
            f"policy level {policy.level} does not match counts level {counts.level}"
        )
    if policy.m != counts.m or policy.n != counts.n:
        raise InputError("policy and counts disagree on m or n")
    rows = policy.lookup_rows(counts.bin_digits)
    out = np.ones((counts.n_bins, counts.n), dtype=bool)
    seen = rows >= 0
    out[seen] = policy.decision_matrix[rows[seen]]
    return out

def train_accuracy(counts: ConditionalCounts, policy: Policy) -> float:
    """Mapping accuracy of the policy on the counted (training) data.

    Per cell, a single decision contributes P[i, c]; a tie over S
    contributes the mean of P[i, c] for c in S.  The total is averaged
    over the n classes, so the optimal policy attains
    (1/n) * sum_i max_j P[i, j].
    """
    decisions = _aligned_decisions(counts, policy)
    cond = counts.conditionals()
    k = decisions.sum(axis=1)
    per_bin = (cond * decisions).sum(axis=1) / k
    return float(per_bin.sum() / counts.n)


def train_accuracy_exact(counts: ConditionalCounts, policy: Policy) -> Fraction:
    """train_accuracy in exact rational arithmetic."""
    decisions = _aligned_decisions(counts, policy)
    totals = [int(t) for t in counts.per_class_totals]
    acc = Fraction(0)
    for i in range(counts.n_bins):
        chosen = np.nonzero(decisions[i])[0]
        contrib = sum(
            Fraction(int(counts.bin_counts[i, j]), totals[j]) for j in chosen
        )
        acc += Fraction(contrib, len(chosen))
    return acc / counts.n


def val_accuracy(
    data: LabeledDataset,
    policy: Policy,
    q: int,
    *,
    sampled: bool = False,
    seed: int | None = None,
) -> float:
    """Prediction accuracy of the policy on a held-out dataset at level q.

    By default ties are scored by expectation: a sample whose label lies in
    a k-way tie contributes 1/k, and unseen cells contribute 1/n.  With
    sampled=True each tie draws one uniform class instead (seeded).
    """
    if len(data) == 0:
        raise InputError("cannot evaluate on an empty dataset")
    if q != policy.level:
        raise InputError(f"policy level {policy.level} does not match q={q}")
    if data.m != policy.m or data.n != policy.n:
        raise InputError("dataset and policy disagree on m or n")
    digits = quantize_rows(data.probs, q)
    rows = policy.lookup_rows(digits)
    seen = rows >= 0
    labels0 = data.labels - 1

    decisions = np.ones((len(data), policy.n), dtype=bool)
    decisions[seen] = policy.decision_matrix[rows[seen]]
    k = decisions.sum(axis=1)

    if not sampled:
        hits = decisions[np.arange(len(data)), labels0]
        return float((hits / k).mean())

    rng = np.random.default_rng(seed)
    picks = np.empty(len(data), dtype=np.int64)
    for i in range(len(data)):
        choices = np.nonzero(decisions[i])[0]
        picks[i] = choices[rng.integers(choices.size)] if choices.size > 1 else choices[0]
    return float((picks == labels0).mean())


def balance(data: LabeledDataset, seed: int) -> LabeledDataset:
    """Downsample every class to the minimum class count, seeded.

    Keeps the original row order of the retained samples, so an already
    balanced dataset comes back unchanged.
    """
    counts = data.class_counts()
    for c in range(data.n):
        if counts[c] == 0:
            raise InputError(f"class {c + 1} has no samples")
    floor = int(counts.min())
    rng = np.random.default_rng(seed)
    keep = []
    for c in range(1, data.n + 1):
        idx = np.nonzero(data.labels == c)[0]
        keep.append(rng.choice(idx, size=floor, replace=False))
    return data.subset(np.sort(np.concatenate(keep)))


def subsample_stratified(
    data: LabeledDataset, frac: float, seed
) -> LabeledDataset:
    """Per-class random subset keeping round(frac * class_count) samples.

    Equal class counts stay equal, so balance is preserved ahead of
    balance().  frac must lie in (0, 1].
    """
    if not 0.0 < frac <= 1.0:
        raise InputError(f"fraction must lie in (0, 1], got {frac}")
    rng = np.random.default_rng(seed)
    keep = []
    for c in range(1, data.n + 1):
        idx = np.nonzero(data.labels == c)[0]
        if idx.size == 0:
            raise InputError(f"class {c} has no samples")
        take = max(1, round(frac * idx.size))
        keep.append(rng.choice(idx, size=take, replace=False))
    return data.subset(np.sort(np.concatenate(keep)))
