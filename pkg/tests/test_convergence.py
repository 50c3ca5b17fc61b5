import mpmath as mp
import numpy as np
import pytest

from quantrank import (
    InputError,
    LabeledDataset,
    SweepConfig,
    TruncatedPolynomial,
    UniformMixture,
    build_counts,
    cell_masses,
    convergence_sweep,
    derive_policy,
    expected_val_accuracy,
    q_bound,
    train_accuracy_exact,
    val_accuracy,
)
from quantrank.quantize import quantize_rows
from quantrank.synth import SynthSpec, generate_split

UNIFORM = UniformMixture(weights=(1.0,), lows=(0.0,), highs=(1.0,))
LEFT = UniformMixture(weights=(1.0,), lows=(0.0,), highs=(0.5,))
RIGHT = UniformMixture(weights=(1.0,), lows=(0.5,), highs=(1.0,))
OVERLAP_1 = UniformMixture(weights=(0.7, 0.3), lows=(0.0, 0.4), highs=(0.6, 1.0))
OVERLAP_2 = UniformMixture(weights=(0.3, 0.7), lows=(0.0, 0.4), highs=(0.6, 1.0))


def test_q_bound_hand_value():
    assert q_bound(1.0, 1.0, 1.0, 1) == pytest.approx(4.0, rel=1e-12)


def test_q_bound_matches_high_precision_oracle():
    mp.mp.dps = 60

    def oracle(eps, dlt, bound, n):
        eps, dlt, bound = mp.mpf(eps), mp.mpf(dlt), mp.mpf(bound)
        return bound / (1 - (1 - eps * dlt / (4 * bound)) ** (mp.mpf(1) / n))

    value = q_bound(0.1, 0.1, 2.0, 100)
    assert abs(value - float(oracle("0.1", "0.1", "2.0", 100))) <= 1e-9

    rng = np.random.default_rng(11)
    for _ in range(200):
        bound = float(rng.uniform(0.5, 8.0))
        eps = float(rng.uniform(0.01, 1.0))
        dlt = float(rng.uniform(0.01, 1.0))
        n = int(rng.integers(1, 1000))
        want = float(oracle(repr(eps), repr(dlt), repr(bound), n))
        assert q_bound(eps, dlt, bound, n) == pytest.approx(want, rel=1e-11)


def test_q_bound_monotonicities():
    rng = np.random.default_rng(12)
    for _ in range(200):
        bound = float(rng.uniform(0.5, 6.0))
        eps = float(rng.uniform(0.05, 0.9))
        dlt = float(rng.uniform(0.05, 0.9))
        n = int(rng.integers(1, 500))
        base = q_bound(eps, dlt, bound, n)
        assert q_bound(eps * 1.1, dlt, bound, n) < base
        assert q_bound(eps, dlt * 1.1, bound, n) < base
        assert q_bound(eps, dlt, bound, 2 * n) > base
        assert q_bound(eps, dlt, bound * 1.1, n) > base


def test_q_bound_domain_error():
    with pytest.raises(InputError):
        q_bound(3.0, 2.0, 1.0, 10)  # eps*delta = 6 > 4B = 4
    with pytest.raises(InputError):
        q_bound(-0.1, 0.5, 1.0, 10)


def test_cell_masses_sum_to_one():
    poly = TruncatedPolynomial(coeffs=(0.2, 1.0, 0.0, 2.0))
    for density in (UNIFORM, OVERLAP_1, OVERLAP_2, poly):
        for q in (2, 7, 31, 1000):
            masses = cell_masses(density, np.arange(q), q)
            assert np.all(masses >= -1e-15)
            assert abs(masses.sum() - 1.0) <= 1e-12


def test_uniform_identical_classes_exactly_half():
    for q in (2, 5, 17):
        est = expected_val_accuracy(UNIFORM, UNIFORM, n=40, q=q, trials=8, seed=1)
        assert all(v == 0.5 for v in est.values)


def test_disjoint_supports_perfect_at_aligned_levels():
    for q in (2, 4, 10):
        est = expected_val_accuracy(LEFT, RIGHT, n=60, q=q, trials=8, seed=2)
        assert all(v == 1.0 for v in est.values)


def test_overlapping_high_q_converges_to_half():
    bound = max(OVERLAP_1.bound, OVERLAP_2.bound)
    threshold = q_bound(0.05, 0.5, bound, 100)
    q = max(100_000, int(threshold) + 1)
    est = expected_val_accuracy(OVERLAP_1, OVERLAP_2, n=100, q=q, trials=50, seed=3)
    within = sum(1 for v in est.values if abs(v - 0.5) <= 0.05)
    assert within >= 25  # at the proof's own (eps, delta) guarantee level
    assert abs(est.mean - 0.5) <= 0.05


def test_analytic_matches_sampled_mode():
    analytic = expected_val_accuracy(
        OVERLAP_1, OVERLAP_2, n=50, q=10, trials=150, seed=4
    )
    sampled = expected_val_accuracy(
        OVERLAP_1, OVERLAP_2, n=50, q=10, trials=150, seed=5,
        val_mode="sampled", n_val=200,
    )
    spread = np.hypot(analytic.stderr, sampled.stderr)
    assert abs(analytic.mean - sampled.mean) <= 3 * spread


def test_polynomial_family_validation_and_bound():
    with pytest.raises(InputError):
        TruncatedPolynomial(coeffs=(1.0, -4.0))  # negative on part of [0, 1]
    poly = TruncatedPolynomial(coeffs=(0.0, 1.0))  # pdf = 2x
    assert poly.bound == pytest.approx(2.0)
    assert poly.cdf(0.5) == pytest.approx(0.25)
    rng = np.random.default_rng(6)
    draws = poly.sample(20_000, rng)
    assert draws.mean() == pytest.approx(2.0 / 3.0, abs=0.01)


def test_mixture_validation():
    with pytest.raises(InputError):
        UniformMixture(weights=(0.5, 0.6), lows=(0.0, 0.5), highs=(0.5, 1.0))
    with pytest.raises(InputError):
        UniformMixture(weights=(1.0,), lows=(0.5,), highs=(0.4,))
    assert OVERLAP_1.bound == pytest.approx(0.7 / 0.6 + 0.3 / 0.6)


def test_multiclass_source_reduces_to_binary_at_squared_level():
    # a 3-class source dataset at level q induces the same partition as a
    # binary dataset built from its flattened cell positions at level q*q
    q = 5
    spec = SynthSpec(m=3, n=2, per_class=80, overlap=0.5, family="jitter", seed=7)
    train, val = generate_split(spec, 40)

    def to_binary(ds):
        digits = quantize_rows(ds.probs, q)
        idx = digits[:, 0] + q * digits[:, 1]
        x = (idx + 0.5) / (q * q)
        return LabeledDataset(np.stack([1 - x, x], axis=1), ds.labels, ds.n)

    btrain, bval = to_binary(train), to_binary(val)
    c3 = build_counts(train, q)
    c2 = build_counts(btrain, q * q)
    assert train_accuracy_exact(c3, derive_policy(c3)) == train_accuracy_exact(
        c2, derive_policy(c2)
    )
    assert val_accuracy(val, derive_policy(c3), q) == val_accuracy(
        bval, derive_policy(c2), q * q
    )


def test_sweep_flags_and_tail():
    cfg = SweepConfig(
        n=60, q_schedule=(2, 10, 100, 10_000, 1_000_000), trials=20, seed=8
    )
    rows = convergence_sweep(cfg, OVERLAP_1, OVERLAP_2)
    threshold = q_bound(cfg.epsilon, cfg.delta, max(OVERLAP_1.bound, OVERLAP_2.bound), cfg.n)
    for row in rows:
        assert row.bound_q == pytest.approx(threshold)
        assert row.satisfied == (row.q > threshold)
    assert abs(rows[-1].mean_val_acc - 0.5) <= 0.05


def test_train_accuracy_refines_with_level():
    for q in (3, 10, 40):
        a = expected_val_accuracy(OVERLAP_1, OVERLAP_2, n=50, q=q, trials=20, seed=9)
        b = expected_val_accuracy(OVERLAP_1, OVERLAP_2, n=50, q=2 * q, trials=20, seed=9)
        assert b.train_mean >= a.train_mean


def test_interior_optimum_schedule():
    teeth = (0.15, 0.15, 0.15, 0.15, 0.4)
    f1 = UniformMixture(
        weights=teeth, lows=(0.0, 0.25, 0.5, 0.75, 0.0), highs=(0.125, 0.375, 0.625, 0.875, 1.0)
    )
    f2 = UniformMixture(
        weights=teeth, lows=(0.125, 0.375, 0.625, 0.875, 0.0), highs=(0.25, 0.5, 0.75, 1.0, 1.0)
    )
    schedule = (2, 4, 8, 16, 64, 512, 4096)
    cfg = SweepConfig(n=100, q_schedule=schedule, trials=30, seed=10)
    rows = convergence_sweep(cfg, f1, f2)
    means = [r.mean_val_acc for r in rows]
    best = int(np.argmax(means))
    assert 0 < best < len(schedule) - 1


def test_sweep_config_validation():
    with pytest.raises(InputError):
        SweepConfig(n=10, q_schedule=(4, 4, 8))
    with pytest.raises(InputError):
        SweepConfig(n=10, q_schedule=(2, 4), epsilon=0.0)
