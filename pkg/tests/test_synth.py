import numpy as np
import pytest

from quantrank import (
    InputError,
    SynthSpec,
    bayes_accuracy,
    family_specs,
    generate,
    generate_family,
    generate_split,
    metric_brute,
)
from quantrank.dumps import write_dump


def test_spec_validation():
    with pytest.raises(InputError):
        SynthSpec(m=1, n=2, per_class=10, overlap=0.5)
    with pytest.raises(InputError):
        SynthSpec(m=2, n=2, per_class=10, overlap=1.5)
    with pytest.raises(InputError):
        SynthSpec(m=2, n=2, per_class=10, overlap=0.5, family="nope")


def test_generated_vectors_on_simplex():
    for family in ("tent", "comb", "blocks", "jitter"):
        spec = SynthSpec(m=4, n=3, per_class=50, overlap=0.4, family=family, seed=1)
        ds = generate(spec)
        assert ds.probs.min() >= 0.0 and ds.probs.max() <= 1.0
        assert np.abs(ds.probs.sum(axis=1) - 1.0).max() <= 1e-12
        assert ds.class_counts().tolist() == [50, 50, 50]


def test_bayes_accuracy_endpoints_and_monotone():
    base = dict(m=2, n=4, per_class=10)
    assert bayes_accuracy(SynthSpec(overlap=0.0, **base)) == 1.0
    assert bayes_accuracy(SynthSpec(overlap=1.0, **base)) == 0.25
    values = [bayes_accuracy(SynthSpec(overlap=o, **base)) for o in np.linspace(0, 1, 9)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_zero_overlap_reaches_perfect_metric():
    for family in ("tent", "blocks"):
        spec = SynthSpec(m=2, n=2, per_class=80, overlap=0.0, family=family, seed=2)
        train, val = generate_split(spec, 40)
        assert metric_brute(train, val).metric == 1.0


def test_full_overlap_metric_near_chance():
    metrics = []
    for seed in range(6):
        spec = SynthSpec(m=2, n=2, per_class=200, overlap=1.0, family="tent", seed=seed)
        train, val = generate_split(spec, 100)
        metrics.append(metric_brute(train, val).metric)
    # exhaustive max over a flat noise curve sits a little above 1/n
    assert abs(np.mean(metrics) - 0.5) <= 3 * np.sqrt(0.25 / 200)


def test_metric_decreases_with_overlap():
    grid = np.arange(0.1, 0.95, 0.1)
    means = []
    for ov in grid:
        vals = []
        for seed in range(10):
            spec = SynthSpec(
                m=2, n=2, per_class=300, overlap=float(ov), family="tent", seed=100 + seed
            )
            train, val = generate_split(spec, 100)
            vals.append(metric_brute(train, val).metric)
        means.append(np.mean(vals))
    assert all(a > b for a, b in zip(means, means[1:]))


def test_family_truth_ordered_by_overlap():
    overlaps = np.linspace(0.02, 0.9, 45)
    specs = family_specs(45, overlaps, per_class=10, master_seed=3)
    sources, truth = generate_family(specs, val_per_class=5)
    assert len(sources) == 45 and len(truth) == 45
    ordered = [truth[f"s{i:02d}"] for i in range(45)]
    assert all(a > b for a, b in zip(ordered, ordered[1:]))


def test_identical_overlap_identical_truth():
    specs = family_specs(3, [0.5, 0.5, 0.2], per_class=10, master_seed=4)
    _, truth = generate_family(specs, val_per_class=5)
    assert truth["s00"] == truth["s01"]


def test_generation_deterministic_byte_identical(tmp_path):
    spec = SynthSpec(m=3, n=2, per_class=40, overlap=0.3, family="jitter", seed=5)
    for name in ("a.csv", "b.csv"):
        train, _ = generate_split(spec, 20)
        write_dump(tmp_path / name, train, "s00", "train")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_split_sizes():
    spec = SynthSpec(m=2, n=3, per_class=30, overlap=0.5, seed=6)
    train, val = generate_split(spec, 12)
    assert len(train) == 90 and len(val) == 36
    assert train.is_balanced() and val.is_balanced()
