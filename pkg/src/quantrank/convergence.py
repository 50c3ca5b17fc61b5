"""Seeded simulation of the metric's behavior at large quantization levels.

For a binary target whose class-conditional densities of the informative
softmax coordinate are bounded on [0, 1], the expected validation accuracy
of the per-cell policy collapses to chance (1/2) as the level grows: cells
become empty or singleton and decisions degenerate to noise or uniform
guesses.  The finite-sample threshold beyond which this happens with
quantified probability is q_bound.

Densities are restricted to families with closed-form CDFs, so per-cell
masses are exact integrals; the expected validation accuracy given a
training draw is then computed analytically, cell by occupied cell, with a
sampled-validation mode kept only as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class UniformMixture:
    """Mixture of uniform segments on [0, 1]; piecewise-constant pdf."""

    weights: tuple[float, ...]
    lows: tuple[float, ...]
    highs: tuple[float, ...]

    def __post_init__(self):
        if not (len(self.weights) == len(self.lows) == len(self.highs)):
            raise InputError("weights, lows, highs must have equal length")
        if not self.weights:
            raise InputError("mixture needs at least one component")
        w = np.asarray(self.weights, dtype=np.float64)
        lo = np.asarray(self.lows, dtype=np.float64)
        hi = np.asarray(self.highs, dtype=np.float64)
        if np.any(w <= 0):
            raise InputError("mixture weights must be positive")
        if abs(float(w.sum()) - 1.0) > 1e-9:
            raise InputError(f"mixture weights sum to {float(w.sum())}, not 1")
        if np.any(lo < 0) or np.any(hi > 1) or np.any(lo >= hi):
            raise InputError("segments must satisfy 0 <= low < high <= 1")

    @property
    def bound(self) -> float:
        """Supremum of the pdf, exact from the segment breakpoints."""
        points = np.unique(np.concatenate([self.lows, self.highs]))
        mids = (points[:-1] + points[1:]) / 2.0
        return float(self.pdf(mids).max())

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros_like(x)
        for w, lo, hi in zip(self.weights, self.lows, self.highs):
            out += np.where((x >= lo) & (x < hi), w / (hi - lo), 0.0)
        return out

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros_like(x)
        for w, lo, hi in zip(self.weights, self.lows, self.highs):
            out += w * np.clip((x - lo) / (hi - lo), 0.0, 1.0)
        return out

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        comp = rng.choice(len(self.weights), size=size, p=self.weights)
        lo = np.asarray(self.lows)[comp]
        hi = np.asarray(self.highs)[comp]
        return lo + rng.random(size) * (hi - lo)


@dataclass(frozen=True)
class TruncatedPolynomial:
    """Density proportional to a nonnegative polynomial on [0, 1].

    coeffs are ascending-power coefficients of the unnormalized polynomial.
    """

    coeffs: tuple[float, ...]

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64)
        if c.size == 0 or not np.all(np.isfinite(c)):
            raise InputError("polynomial coefficients must be finite and nonempty")
        if self._extreme_values().min() < -1e-12:
            raise InputError("polynomial is negative somewhere on [0, 1]")
        if self._mass() <= 0:
            raise InputError("polynomial integrates to zero on [0, 1]")

    def _mass(self) -> float:
        c = np.asarray(self.coeffs, dtype=np.float64)
        return float(sum(ck / (k + 1) for k, ck in enumerate(c)))

    def _extreme_values(self) -> np.ndarray:
        """Unnormalized polynomial values at endpoints and interior critical points."""
        c = np.asarray(self.coeffs, dtype=np.float64)
        points = [0.0, 1.0]
        if c.size > 1:
            deriv = np.polynomial.polynomial.polyder(c)
            roots = np.polynomial.polynomial.polyroots(deriv)
            for r in roots:
                if abs(r.imag) < 1e-12 and 0.0 <= r.real <= 1.0:
                    points.append(float(r.real))
        return np.polynomial.polynomial.polyval(np.array(points), c)

    @property
    def bound(self) -> float:
        return float(self._extreme_values().max()) / self._mass()

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        c = np.asarray(self.coeffs, dtype=np.float64)
        return np.polynomial.polynomial.polyval(x, c) / self._mass()

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        c = np.asarray(self.coeffs, dtype=np.float64)
        integ = np.polynomial.polynomial.polyint(c)
        return np.polynomial.polynomial.polyval(x, integ) / self._mass()

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        # Rejection from the uniform proposal under the closed-form bound.
        bound = self.bound
        out = np.empty(0, dtype=np.float64)
        while out.size < size:
            chunk = max(size - out.size, 64) * 2
            x = rng.random(chunk)
            keep = rng.random(chunk) * bound <= self.pdf(x)
            out = np.concatenate([out, x[keep]])
        return out[:size]


def q_bound(epsilon: float, delta: float, bound: float, n: int) -> float:
    """Quantization threshold past which accuracy sits within epsilon of 1/2
    except with probability delta, for pdfs bounded by ``bound`` and n
    training samples per class.
    """
    if epsilon <= 0 or delta <= 0:
        raise InputError("epsilon and delta must be positive")
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    if bound <= 0:
        raise InputError(f"density bound must be positive, got {bound}")
    ratio = epsilon * delta / (4.0 * bound)
    if ratio > 1.0:
        raise InputError(
            f"epsilon*delta = {epsilon * delta} exceeds 4*bound = {4.0 * bound}; "
            "threshold undefined"
        )
    # 1 - (1 - r)**(1/n) via expm1/log1p to dodge cancellation at small r
    denom = -np.expm1(np.log1p(-ratio) / n)
    return float(bound / denom)


def cell_masses(density, cells: np.ndarray, q: int) -> np.ndarray:
    """Exact probability mass of each cell [c/q, (c+1)/q) via the CDF."""
    cells = np.asarray(cells, dtype=np.float64)
    return density.cdf((cells + 1.0) / q) - density.cdf(cells / q)


def _digits(x: np.ndarray, q: int) -> np.ndarray:
    d = np.floor(x * q).astype(np.int64)
    np.minimum(d, q - 1, out=d)
    return d


@dataclass(frozen=True)
class TrialEstimate:
    """Monte-Carlo estimate over training draws."""

    mean: float
    stderr: float
    train_mean: float
    values: tuple[float, ...]


def _trial(f1, f2, n: int, q: int, rng, val_mode: str, n_val: int):
    """(validation accuracy, train accuracy) for one training draw.

    Analytic mode scores the policy against exact cell masses, touching
    occupied cells only; the leftover mass of each class is a uniform
    guess contributing a quarter.  Sampled mode scores a freshly drawn
    validation set instead, ties and unseen cells counting 1/2.
    """
    c1 = _digits(f1.sample(n, rng), q)
    c2 = _digits(f2.sample(n, rng), q)
    cells, inverse = np.unique(np.concatenate([c1, c2]), return_inverse=True)
    n1 = np.bincount(inverse[:n], minlength=cells.size)
    n2 = np.bincount(inverse[n:], minlength=cells.size)
    train = float(np.maximum(n1, n2).sum() / (2.0 * n))

    if val_mode == "analytic":
        p1 = cell_masses(f1, cells, q)
        p2 = cell_masses(f2, cells, q)
        win1 = n1 > n2
        win2 = n2 > n1
        tie = ~(win1 | win2)
        val = (
            p1[win1].sum() / 2.0
            + p2[win2].sum() / 2.0
            + (p1[tie].sum() + p2[tie].sum()) / 4.0
            + ((1.0 - p1.sum()) + (1.0 - p2.sum())) / 4.0
        )
        return float(val), train

    # decision per train cell: +1 class 1 wins, -1 class 2 wins, 0 tie
    decision = np.sign(n1 - n2)
    v1 = _digits(f1.sample(n_val, rng), q)
    v2 = _digits(f2.sample(n_val, rng), q)

    def score(v, label_sign):
        pos = np.searchsorted(cells, v)
        pos = np.clip(pos, 0, cells.size - 1)
        seen = cells[pos] == v
        d = np.where(seen, decision[pos], 0)
        return np.where(d == label_sign, 1.0, np.where(d == 0, 0.5, 0.0)).sum()

    return float((score(v1, 1) + score(v2, -1)) / (2 * n_val)), train


def expected_val_accuracy(
    f1,
    f2,
    n: int,
    q: int,
    trials: int,
    seed,
    val_mode: str = "analytic",
    n_val: int = 0,
) -> TrialEstimate:
    """Expected validation accuracy at level q, averaged over training draws.

    Each trial draws n training samples per class, derives the per-cell
    policy, and evaluates it either analytically against the true cell
    masses (default) or on a freshly drawn validation set.
    """
    if trials < 1:
        raise InputError(f"trials must be >= 1, got {trials}")
    if q < 2:
        raise InputError(f"quantization level must be >= 2, got {q}")
    if val_mode not in ("analytic", "sampled"):
        raise InputError(f"unknown val_mode {val_mode!r}")
    if val_mode == "sampled" and n_val < 1:
        raise InputError("sampled validation needs n_val >= 1")
    rng = np.random.default_rng(seed)
    vals = np.empty(trials)
    trains = np.empty(trials)
    for t in range(trials):
        vals[t], trains[t] = _trial(f1, f2, n, q, rng, val_mode, n_val)
    stderr = float(vals.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return TrialEstimate(
        mean=float(vals.mean()),
        stderr=stderr,
        train_mean=float(trains.mean()),
        values=tuple(float(v) for v in vals),
    )


@dataclass(frozen=True)
class SweepConfig:
    """Settings for a convergence sweep over a level schedule."""

    n: int
    q_schedule: tuple[int, ...]
    trials: int = 50
    epsilon: float = 0.1
    delta: float = 0.5
    seed: int = 0
    val_mode: str = "analytic"
    n_val: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise InputError("n must be >= 1")
        if not self.q_schedule or any(
            b <= a for a, b in zip(self.q_schedule, self.q_schedule[1:])
        ):
            raise InputError("q_schedule must be nonempty and strictly increasing")
        if not (0 < self.epsilon <= 1 and 0 < self.delta <= 1):
            raise InputError("epsilon and delta must lie in (0, 1]")


@dataclass(frozen=True)
class SweepRow:
    q: int
    mean_val_acc: float
    stderr: float
    bound_q: float
    satisfied: bool
    mean_train_acc: float


def convergence_sweep(cfg: SweepConfig, f1, f2) -> list[SweepRow]:
    """Estimate accuracy along the schedule and flag levels past the bound.

    The validity condition epsilon*delta <= 4B is checked against the
    densities' joint bound.
    """
    bound = max(f1.bound, f2.bound)
    threshold = q_bound(cfg.epsilon, cfg.delta, bound, cfg.n)
    rows = []
    for q in cfg.q_schedule:
        est = expected_val_accuracy(
            f1,
            f2,
            cfg.n,
            q,
            cfg.trials,
            seed=[cfg.seed, q],
            val_mode=cfg.val_mode,
            n_val=cfg.n_val,
        )
        rows.append(
            SweepRow(
                q=q,
                mean_val_acc=est.mean,
                stderr=est.stderr,
                bound_q=threshold,
                satisfied=q > threshold,
                mean_train_acc=est.train_mean,
            )
        )
    return rows
