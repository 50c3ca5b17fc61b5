"""Acceptance gate: every criterion at its stated tolerance.

Each test prints one pass/fail line (run with -s to see them on success).
All data is synthetic and seeded; no criterion needs a trained model.
"""

import itertools
import json
import subprocess
import sys
import time

import numpy as np
import pytest
import scipy.stats

import quantrank as qr
from quantrank.search import sweep_curve


def verdict(name, ok, detail):
    print(f"[{name}] {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"{name}: {detail}"


# -- C1: policy optimality against exhaustive enumeration ---------------------


def test_c1_policy_optimality_oracle():
    start = time.perf_counter()
    for i in range(200):
        rng = np.random.default_rng([101, i])
        n = int(rng.integers(2, 4))
        q = int(rng.integers(2, 9))  # m=2, so reachable bins <= q <= 8
        spec = qr.SynthSpec(
            m=2, n=n, per_class=int(rng.integers(4, 13)),
            overlap=float(rng.uniform(0, 1)),
            family=("tent", "comb", "blocks")[i % 3], seed=2000 + i,
        )
        counts = qr.build_counts(qr.generate(spec), q)
        assert counts.n_bins <= 8
        assignments = np.array(
            list(itertools.product(range(n), repeat=counts.n_bins)), dtype=np.int64
        )
        gathered = counts.bin_counts[np.arange(counts.n_bins)[None, :], assignments]
        best_enumerated = int(gathered.sum(axis=1).max())
        derived = int(counts.bin_counts.max(axis=1).sum())
        assert derived == best_enumerated  # tolerance 0, exact integers
    elapsed = time.perf_counter() - start
    verdict(
        "C1 policy-optimality", elapsed < 10.0,
        f"200/200 instances exact, {elapsed:.2f}s (< 10s)",
    )


# -- C2: refinement monotonicity ----------------------------------------------


def test_c2_refinement_monotonicity():
    violations = 0
    for i in range(100):
        rng = np.random.default_rng([102, i])
        m = int(rng.integers(2, 4))
        family = "jitter" if m > 2 else ("tent", "comb")[i % 2]
        spec = qr.SynthSpec(
            m=m, n=2, per_class=25, overlap=float(rng.uniform(0, 1)),
            family=family, seed=3000 + i,
        )
        ds = qr.generate(spec)
        score = {}

        def row_max_sum(q):
            if q not in score:
                score[q] = int(qr.build_counts(ds, q).bin_counts.max(axis=1).sum())
            return score[q]

        for q in range(2, 21):
            for k in (2, 3):
                if row_max_sum(k * q) < row_max_sum(q):
                    violations += 1
    verdict(
        "C2 refinement-monotonicity", violations == 0,
        f"{violations} violations over 100 datasets, q in 2..20, k in {{2,3}}",
    )


# -- C3: ternary vs brute deviation -------------------------------------------


def deviation_stats(per_class, val_per_class, salt):
    diffs = []
    for i in range(100):
        rng = np.random.default_rng([salt, i])
        spec = qr.SynthSpec(
            m=2, n=2, per_class=per_class, overlap=float(rng.uniform(0.1, 0.7)),
            family="tent", seed=4000 + salt + i,
        )
        train, val = qr.generate_split(spec, val_per_class)
        t = qr.metric_ternary(train, val)
        b = qr.metric_brute(train, val)
        diffs.append(abs(t.metric - b.metric))
    return float(np.mean(diffs))


def test_c3_ternary_vs_brute_deviation():
    start = time.perf_counter()
    small = deviation_stats(40, 10, salt=1)  # ~100 samples
    large = deviation_stats(200, 50, salt=2)  # ~500 samples
    elapsed = time.perf_counter() - start
    ok = small <= 0.05 and large <= 0.025 and elapsed < 60.0
    verdict(
        "C3 ternary-vs-brute", ok,
        f"mean |dM|: {small:.4f} (<=0.05) at ~100, {large:.4f} (<=0.025) at ~500, "
        f"{elapsed:.1f}s (< 60s)",
    )


# -- C4: convergence to chance at large levels ---------------------------------


def test_c4_theorem_convergence():
    start = time.perf_counter()
    f1 = qr.UniformMixture(weights=(0.7, 0.3), lows=(0.0, 0.4), highs=(0.6, 1.0))
    f2 = qr.UniformMixture(weights=(0.3, 0.7), lows=(0.0, 0.4), highs=(0.6, 1.0))
    bound = max(f1.bound, f2.bound)
    assert bound <= 4.0
    eps, delta = 0.1, 0.5
    threshold = qr.q_bound(eps, delta, bound, 100)

    est_high = qr.expected_val_accuracy(f1, f2, n=100, q=100_000, trials=50, seed=44)
    mean_ok = abs(est_high.mean - 0.5) <= 0.05

    q_past = int(np.ceil(threshold)) + 1
    est_past = qr.expected_val_accuracy(f1, f2, n=100, q=q_past, trials=50, seed=45)
    frac_high = np.mean([abs(v - 0.5) > eps for v in est_high.values])
    frac_past = np.mean([abs(v - 0.5) > eps for v in est_past.values])
    elapsed = time.perf_counter() - start
    ok = mean_ok and frac_high <= delta and frac_past <= delta and elapsed < 300.0
    verdict(
        "C4 convergence", ok,
        f"|mean-0.5|={abs(est_high.mean - 0.5):.4f} (<=0.05) at q=1e5; "
        f"violation fraction {frac_past:.2f} at q={q_past} and {frac_high:.2f} at q=1e5 "
        f"(<= {delta}); {elapsed:.1f}s (< 5min)",
    )


# -- C5: bending curve ----------------------------------------------------------


def test_c5_bending_curve():
    interior = 0
    train_rises = 0
    seeds = 50
    for s in range(seeds):
        spec = qr.SynthSpec(
            m=2, n=2, per_class=60, overlap=0.5, family="comb", seed=5000 + s
        )
        train, val = qr.generate_split(spec, 60)
        q_max = len(val) // val.n
        records = sweep_curve(train, val, range(2, q_max + 1))
        best = max(records, key=lambda r: (r.val_acc, -r.q))
        interior += 2 < best.q < q_max
        train_rises += records[-1].train_acc > records[0].train_acc
    ok = interior >= 0.9 * seeds and train_rises == seeds
    verdict(
        "C5 bending-curve", ok,
        f"interior val-accuracy max in {interior}/{seeds} seeds (>= {int(0.9 * seeds)}); "
        f"train accuracy at top exceeds q=2 in {train_rises}/{seeds}",
    )


# -- C6: ranking fidelity --------------------------------------------------------


def test_c6_ranking_fidelity():
    survivor_truth = [0.91, 0.93, 0.95, 0.97, 0.99]
    rest_truth = list(np.linspace(0.895, 0.55, 40))
    overlaps = [2 * (1 - t) for t in survivor_truth + rest_truth]
    specs = qr.family_specs(45, overlaps, per_class=2000, master_seed=5)
    sources, truth = qr.generate_family(specs, val_per_class=500)

    reports = []
    for it in range(20):
        scores = []
        for j, sid in enumerate(sorted(sources)):
            train, val = sources[sid]
            # tl-frac 0.1 leaves ~500 samples (400 train + 100 val)
            train = qr.subsample_stratified(train, 0.1, [9, it, j, 0])
            val = qr.subsample_stratified(val, 0.1, [9, it, j, 1])
            res = qr.metric_ternary(train, val)
            scores.append(qr.SourceScore(sid, res.metric, res.q_star, 0.0))
        reports.append(qr.evaluate_ranking(scores, truth, threshold=0.9, slack=0.03))
    agg = qr.aggregate_reports(reports)
    ok = (
        agg["fraction_correct_mean"] >= 0.8
        and agg["mean_dev_mean"] <= 2.0
        and agg["spearman_mean"] >= 0.8
    )
    verdict(
        "C6 ranking-fidelity", ok,
        f"fraction_correct={agg['fraction_correct_mean']:.3f} (>=0.8), "
        f"mean_dev={agg['mean_dev_mean']:.3f} (<=2), "
        f"spearman={agg['spearman_mean']:.3f} (>=0.8) over 20 iterations",
    )


# -- C7: correlation correctness -------------------------------------------------


def test_c7_correlations_match_reference():
    rng = np.random.default_rng(107)
    worst = 0.0
    for i in range(1000):
        size = 45
        if i % 3 == 0:
            x = rng.integers(0, 8, size).astype(float)
            y = rng.integers(0, 8, size).astype(float)
        else:
            x = rng.random(size)
            y = rng.random(size)
        if np.unique(x).size < 2 or np.unique(y).size < 2:
            continue
        r, rho, tau = qr.correlations(x, y)
        worst = max(
            worst,
            abs(r - scipy.stats.pearsonr(x, y).statistic),
            abs(rho - scipy.stats.spearmanr(x, y).statistic),
            abs(tau - scipy.stats.kendalltau(x, y, variant="b").statistic),
        )
    verdict(
        "C7 correlations", worst <= 1e-9,
        f"max |difference| to reference = {worst:.2e} (<= 1e-9) over 1000 pairs",
    )


# -- C8: CLI determinism ----------------------------------------------------------


def run_cli(*args):
    res = subprocess.run(
        [sys.executable, "-m", "quantrank", *map(str, args)],
        capture_output=True, text=True,
    )
    assert res.returncode == 0, res.stderr
    return res


def tree_bytes(root):
    return {p.name: p.read_bytes() for p in sorted(root.iterdir()) if p.is_file()}


def test_c8_cli_determinism(tmp_path):
    fam = tmp_path / "family"
    run_cli(
        "gen-synth", "--count", 5, "--per-class", 40, "--val-per-class", 10,
        "--overlap-min", 0.05, "--overlap-max", 0.6, "--seed", 21, "--out-dir", fam,
    )
    commands = {
        "gen-synth": [
            "gen-synth", "--count", 5, "--per-class", 40, "--val-per-class", 10,
            "--overlap-min", 0.05, "--overlap-max", 0.6, "--seed", 21,
        ],
        "score": [
            "score", "--train", fam / "s00_train.csv", "--val", fam / "s00_val.csv",
            "--seed", 4,
        ],
        "rank": [
            "rank", "--sources", fam, "--truth", fam / "truth.csv",
            "--threshold", 0.5, "--iterations", 2, "--tl-frac", 0.9, "--seed", 6,
        ],
        "sweep": [
            "sweep", "--train", fam / "s01_train.csv", "--val", fam / "s01_val.csv",
            "--q-list", "2,4,8",
        ],
        "simulate-theorem": [
            "simulate-theorem", "--n", 30, "--trials", 5, "--q-schedule", "2,10,100",
        ],
        "compare-search": [
            "compare-search", "--pairs", 5, "--per-class", 30, "--val-per-class", 8,
            "--seed", 9,
        ],
    }
    mismatches = []
    for name, args in commands.items():
        outs = []
        for attempt in ("x", "y"):
            out = tmp_path / f"{name}-{attempt}"
            run_cli(*args, "--out-dir", out)
            outs.append(tree_bytes(out))
        if outs[0] != outs[1]:
            mismatches.append(name)
    verdict(
        "C8 cli-determinism", not mismatches,
        f"byte-identical reruns for all {len(commands)} subcommands"
        + (f"; mismatches: {mismatches}" if mismatches else ""),
    )


# -- C9: performance envelope ------------------------------------------------------


def test_c9_performance_envelope():
    def dataset(per_class, val_per_class, seed):
        spec = qr.SynthSpec(
            m=2, n=2, per_class=per_class, overlap=0.4, family="tent", seed=seed
        )
        return qr.generate_split(spec, val_per_class)

    train, val = dataset(200, 50, 0)
    qr.metric_ternary(train, val)  # warm-up

    def avg_cpu(per_class, val_per_class, reps=20):
        total = 0.0
        for r in range(reps):
            train, val = dataset(per_class, val_per_class, 9000 + r)
            start = time.process_time()
            qr.metric_ternary(train, val)
            total += time.process_time() - start
        return total / reps

    t100 = avg_cpu(40, 10)
    t500 = avg_cpu(200, 50)
    ok = t500 < 1.0 and t500 < 5.0 * t100
    verdict(
        "C9 performance", ok,
        f"metric at ~500 samples: {t500 * 1e3:.2f}ms CPU (< 1s); "
        f"scaling t500/t100 = {t500 / t100:.2f} (< 5)",
    )
