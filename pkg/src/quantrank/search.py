"""Locating the best quantization level and the resulting metric.

The metric of a source for a target dataset is the validation accuracy of
the per-cell policy at the best quantization level.  The level is searched
over the integers [2, n_val / n]: either exhaustively (the oracle) or by
integer ternary search exploiting the near-unimodal shape of the
validation-accuracy curve.  Per-level policies are always derived on the
training split only and evaluated on the validation split only.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .errors import InputError, InsufficientDataError
from .policy import (
    LabeledDataset,
    build_counts,
    derive_policy,
    train_accuracy,
    val_accuracy,
)


@dataclass(frozen=True)
class SearchConfig:
    """Search-range and stopping parameters.

    q_max defaults to floor(n_val / n), the validation samples per class,
    resolved against the validation set at call time.
    """

    tolerance: int = 5
    max_steps: int = 20
    q_min: int = 2
    q_max: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.tolerance < 1:
            raise InputError(f"tolerance must be >= 1, got {self.tolerance}")
        if self.max_steps < 1:
            raise InputError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.q_min < 2:
            raise InputError(f"q_min must be >= 2, got {self.q_min}")
        if self.q_max is not None and self.q_max < self.q_min:
            raise InputError(
                f"q_max={self.q_max} must be >= q_min={self.q_min}"
            )


@dataclass(frozen=True)
class ProbeRecord:
    """One evaluated quantization level."""

    q: int
    train_acc: float
    val_acc: float


@dataclass(frozen=True)
class MetricResult:
    """Outcome of a metric search.

    q_star is the probed level with the best validation accuracy (smallest
    level on ties); left and right are the final search bounds.  The trace
    lists every distinct level actually evaluated, in evaluation order.
    """

    metric: float
    q_star: int
    left: int
    right: int
    method: str
    trace: tuple[ProbeRecord, ...]


def _check_inputs(train: LabeledDataset, val: LabeledDataset) -> None:
    if train.m != val.m or train.n != val.n:
        raise InputError("train and validation sets disagree on m or n")
    if not train.is_balanced() or not val.is_balanced():
        raise InputError("metric search requires class-balanced datasets")


def _resolve_range(val: LabeledDataset, cfg: SearchConfig) -> tuple[int, int]:
    q_max = cfg.q_max if cfg.q_max is not None else len(val) // val.n
    if q_max < cfg.q_min:
        raise InsufficientDataError(
            f"insufficient validation data: upper bound {q_max} is below "
            f"q_min={cfg.q_min} (need at least {cfg.q_min} samples per class)"
        )
    return cfg.q_min, q_max


class _Prober:
    """Memoized per-level evaluation with an ordered trace."""

    def __init__(self, train: LabeledDataset, val: LabeledDataset):
        self.train = train
        self.val = val
        self.cache: dict[int, ProbeRecord] = {}
        self.trace: list[ProbeRecord] = []

    def __call__(self, q: int) -> ProbeRecord:
        rec = self.cache.get(q)
        if rec is None:
            counts = build_counts(self.train, q)
            policy = derive_policy(counts)
            rec = ProbeRecord(
                q=q,
                train_acc=train_accuracy(counts, policy),
                val_acc=val_accuracy(self.val, policy, q),
            )
            self.cache[q] = rec
            self.trace.append(rec)
        return rec


def _best_probe(trace) -> ProbeRecord:
    return max(trace, key=lambda r: (r.val_acc, -r.q))


def ternary_search_max(f, lo: int, hi: int, tolerance: int, max_steps: int):
    """Integer ternary search for the maximum of f on [lo, hi].

    Probes the two third-points of the interval and discards the third
    beyond the worse one; stops once the interval is within tolerance or
    the step budget is spent.  Returns the final (lo, hi).
    """
    step = 0
    while abs(lo - hi) > tolerance and step < max_steps:
        m1 = lo + (hi - lo) // 3
        m2 = hi - (hi - lo) // 3
        if f(m1) < f(m2):
            lo = m1
        else:
            hi = m2
        step += 1
    return lo, hi


def metric_ternary(
    train: LabeledDataset, val: LabeledDataset, cfg: SearchConfig = SearchConfig()
) -> MetricResult:
    """Metric via ternary search; the final value averages the two bounds."""
    _check_inputs(train, val)
    lo, hi = _resolve_range(val, cfg)
    probe = _Prober(train, val)
    left, right = ternary_search_max(
        lambda q: probe(q).val_acc, lo, hi, cfg.tolerance, cfg.max_steps
    )
    metric = (probe(left).val_acc + probe(right).val_acc) / 2.0
    return MetricResult(
        metric=metric,
        q_star=_best_probe(probe.trace).q,
        left=left,
        right=right,
        method="ternary",
        trace=tuple(probe.trace),
    )


def metric_brute(
    train: LabeledDataset, val: LabeledDataset, cfg: SearchConfig = SearchConfig()
) -> MetricResult:
    """Metric via exhaustive search over every level in range (the oracle)."""
    _check_inputs(train, val)
    lo, hi = _resolve_range(val, cfg)
    probe = _Prober(train, val)
    for q in range(lo, hi + 1):
        probe(q)
    best = _best_probe(probe.trace)
    return MetricResult(
        metric=best.val_acc,
        q_star=best.q,
        left=lo,
        right=hi,
        method="brute",
        trace=tuple(probe.trace),
    )


def sweep_curve(
    train: LabeledDataset, val: LabeledDataset, q_list
) -> list[ProbeRecord]:
    """Accuracy pair at each requested level, for trade-off curves."""
    _check_inputs(train, val)
    probe = _Prober(train, val)
    return [probe(int(q)) for q in q_list]


def timed_metric(
    train: LabeledDataset,
    val: LabeledDataset,
    cfg: SearchConfig = SearchConfig(),
    method: str = "ternary",
) -> tuple[MetricResult, float]:
    """Run one metric computation and report its process CPU seconds.

    CPU time covers the metric call only, no I/O, matching how timing
    statistics are reported.
    """
    fn = {"ternary": metric_ternary, "brute": metric_brute}.get(method)
    if fn is None:
        raise InputError(f"unknown search method {method!r}")
    start = time.process_time()
    result = fn(train, val, cfg)
    return result, time.process_time() - start
