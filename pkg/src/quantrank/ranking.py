"""Scoring a pool of sources, ranking them, and evaluation statistics.

Ranking quality against ground-truth transfer accuracies is reported as:
the fraction of rank positions whose occupant is within an accuracy slack
of the true occupant, the mean/std of absolute rank deviations over the
sources surviving an accuracy threshold, and Pearson / Spearman / Kendall
tau-b correlations over the unfiltered pool.  Correlations are implemented
from their definitions (average ranks on ties; tau-b tie correction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptySurvivorError, InputError, UndefinedCorrelationError
from .policy import LabeledDataset, balance
from .search import SearchConfig, timed_metric

DEFAULT_SLACK = 0.03


@dataclass(frozen=True)
class SourceScore:
    """Metric outcome for one source."""

    source_id: str
    metric: float
    q_star: int
    cpu_seconds: float


def score_sources(
    sources: dict[str, tuple[LabeledDataset, LabeledDataset]],
    cfg: SearchConfig = SearchConfig(),
    method: str = "ternary",
    balance_seed: int | None = None,
) -> list[SourceScore]:
    """Score every source's (train, val) pair, in sorted source_id order.

    When balance_seed is given, both splits are class-balanced first.
    """
    out = []
    for source_id in sorted(sources):
        train, val = sources[source_id]
        if balance_seed is not None:
            train = balance(train, balance_seed)
            val = balance(val, balance_seed + 1)
        result, cpu = timed_metric(train, val, cfg, method)
        out.append(
            SourceScore(
                source_id=source_id,
                metric=result.metric,
                q_star=result.q_star,
                cpu_seconds=cpu,
            )
        )
    return out


def rank_sources(scores: list[SourceScore]) -> np.ndarray:
    """Rank per input position: 1 for the highest metric.

    Ties break by source_id lexicographic order so ranking is
    deterministic.
    """
    if not scores:
        raise InputError("cannot rank an empty score list")
    order = sorted(
        range(len(scores)), key=lambda i: (-scores[i].metric, scores[i].source_id)
    )
    ranks = np.empty(len(scores), dtype=np.int64)
    for rank0, i in enumerate(order):
        ranks[i] = rank0 + 1
    return ranks


def rank_values(values, ids=None) -> np.ndarray:
    """Rank per position for raw values, 1 for the highest value."""
    values = np.asarray(values, dtype=np.float64)
    if ids is None:
        ids = [str(i) for i in range(values.size)]
    order = sorted(range(values.size), key=lambda i: (-values[i], ids[i]))
    ranks = np.empty(values.size, dtype=np.int64)
    for rank0, i in enumerate(order):
        ranks[i] = rank0 + 1
    return ranks


def threshold_filter(
    scores: list[SourceScore], truth: dict[str, float], threshold: float
) -> tuple[list[SourceScore], dict[str, float]]:
    """Keep sources whose ground-truth accuracy exceeds the threshold."""
    for s in scores:
        if s.source_id not in truth:
            raise InputError(f"no ground-truth entry for source {s.source_id!r}")
    kept = [s for s in scores if truth[s.source_id] > threshold]
    if not kept:
        raise EmptySurvivorError(
            f"no sources above ground-truth threshold {threshold}"
        )
    return kept, {s.source_id: truth[s.source_id] for s in kept}


def correctness_with_slack(
    ranks_by_metric, ranks_by_truth, truths, slack: float = DEFAULT_SLACK
) -> float:
    """Fraction of predicted rank positions that are correct within slack.

    All three sequences are aligned by source.  Position i is correct when
    the true accuracy of the source predicted at rank i is within slack of
    the true accuracy of the source actually holding rank i.
    """
    pred = np.asarray(ranks_by_metric, dtype=np.int64)
    true = np.asarray(ranks_by_truth, dtype=np.int64)
    truths = np.asarray(truths, dtype=np.float64)
    _check_permutation(pred, true)
    by_pred = np.empty(pred.size, dtype=np.int64)
    by_pred[pred - 1] = np.arange(pred.size)
    by_true = np.empty(true.size, dtype=np.int64)
    by_true[true - 1] = np.arange(true.size)
    correct = np.abs(truths[by_pred] - truths[by_true]) <= slack
    return float(correct.mean())


def rank_deviation(ranks_by_metric, ranks_by_truth) -> tuple[float, float]:
    """Mean and population std of |predicted rank - true rank| per source."""
    pred = np.asarray(ranks_by_metric, dtype=np.int64)
    true = np.asarray(ranks_by_truth, dtype=np.int64)
    _check_permutation(pred, true)
    dev = np.abs(pred - true).astype(np.float64)
    return float(dev.mean()), float(dev.std())


def _check_permutation(pred: np.ndarray, true: np.ndarray) -> None:
    if pred.shape != true.shape:
        raise InputError("rank vectors must have equal length")
    want = np.arange(1, pred.size + 1)
    if not np.array_equal(np.sort(pred), want) or not np.array_equal(
        np.sort(true), want
    ):
        raise InputError("rank vectors must be permutations of 1..p")


def average_ranks(values) -> np.ndarray:
    """Ascending ranks with ties assigned the average of their positions."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float(xc @ xc) * float(yc @ yc))
    if denom == 0.0:
        raise UndefinedCorrelationError("pearson undefined for constant input")
    return float(xc @ yc) / denom


def spearman(x, y) -> float:
    """Pearson correlation of average ranks."""
    return pearson(average_ranks(x), average_ranks(y))


def kendall_tau_b(x, y) -> float:
    """Kendall's tau with tie correction in both sequences."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    sx = np.sign(x[:, None] - x[None, :])
    sy = np.sign(y[:, None] - y[None, :])
    iu = np.triu_indices(x.size, k=1)
    prod = sx[iu] * sy[iu]
    concordant_minus_discordant = float(prod.sum())
    n0 = x.size * (x.size - 1) / 2.0
    tied_x = float((sx[iu] == 0).sum())
    tied_y = float((sy[iu] == 0).sum())
    denom = math.sqrt((n0 - tied_x) * (n0 - tied_y))
    if denom == 0.0:
        raise UndefinedCorrelationError("kendall tau-b undefined for constant input")
    return concordant_minus_discordant / denom


def correlations(metrics, truths) -> tuple[float, float, float]:
    """(pearson, spearman, kendall tau-b) between metric and truth values."""
    metrics = np.asarray(metrics, dtype=np.float64)
    truths = np.asarray(truths, dtype=np.float64)
    if metrics.shape != truths.shape or metrics.ndim != 1:
        raise InputError("correlation inputs must be 1-D and equally long")
    if metrics.size < 3:
        raise InputError("correlations need at least 3 points")
    return (
        pearson(metrics, truths),
        spearman(metrics, truths),
        kendall_tau_b(metrics, truths),
    )


@dataclass(frozen=True)
class RankReport:
    """Evaluation of one scored pool against ground truth.

    Rank statistics cover the sources surviving the threshold; the
    correlation coefficients cover the unfiltered pool.
    """

    source_ids: tuple[str, ...]
    ranks_by_metric: tuple[int, ...]
    ranks_by_truth: tuple[int, ...]
    survivors: int
    correct_count: int
    fraction_correct: float
    mean_dev: float
    std_dev: float
    pearson: float
    spearman: float
    kendall: float
    threshold: float
    slack: float


def evaluate_ranking(
    scores: list[SourceScore],
    truth: dict[str, float],
    threshold: float,
    slack: float = DEFAULT_SLACK,
) -> RankReport:
    """Full report for one iteration: filter, rank, slack check, correlations."""
    all_metrics = [s.metric for s in scores]
    all_truths = [truth[s.source_id] for s in scores]
    r, rho, tau = correlations(all_metrics, all_truths)

    kept, kept_truth = threshold_filter(scores, truth, threshold)
    ids = [s.source_id for s in kept]
    truths = np.array([kept_truth[i] for i in ids])
    ranks_m = rank_sources(kept)
    ranks_t = rank_values(truths, ids)
    frac = correctness_with_slack(ranks_m, ranks_t, truths, slack)
    mean_dev, std_dev = rank_deviation(ranks_m, ranks_t)
    return RankReport(
        source_ids=tuple(ids),
        ranks_by_metric=tuple(int(v) for v in ranks_m),
        ranks_by_truth=tuple(int(v) for v in ranks_t),
        survivors=len(kept),
        correct_count=round(frac * len(kept)),
        fraction_correct=frac,
        mean_dev=mean_dev,
        std_dev=std_dev,
        pearson=r,
        spearman=rho,
        kendall=tau,
        threshold=threshold,
        slack=slack,
    )


def aggregate_reports(reports: list[RankReport]) -> dict[str, float]:
    """Average per-iteration statistics; the slack fraction is also pooled.

    Per-iteration fractions are averaged (the headline number) and the
    pooled count ratio is recorded alongside.
    """
    if not reports:
        raise InputError("no reports to aggregate")

    def mean(attr):
        return float(np.mean([getattr(r, attr) for r in reports]))

    total_correct = sum(r.correct_count for r in reports)
    total_survivors = sum(r.survivors for r in reports)
    return {
        "iterations": len(reports),
        "fraction_correct_mean": mean("fraction_correct"),
        "fraction_correct_pooled": total_correct / total_survivors,
        "mean_dev_mean": mean("mean_dev"),
        "std_dev_mean": mean("std_dev"),
        "pearson_mean": mean("pearson"),
        "spearman_mean": mean("spearman"),
        "kendall_mean": mean("kendall"),
    }
