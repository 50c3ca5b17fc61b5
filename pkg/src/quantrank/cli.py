"""Command-line surface tying ingestion, search, ranking, and simulation together.

Every subcommand validates its inputs, writes deterministic CSV/JSON
reports into the output directory (flag --out-dir, else $QUANTRANK_OUT_DIR,
else the working directory), prints a one-line summary, and exits nonzero
on error with a distinct code per failure family.  CPU timings are never
written into reports (reruns must be byte-identical); pass --emit-timings
for a separate, explicitly volatile timings.csv.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .convergence import SweepConfig, TruncatedPolynomial, UniformMixture, convergence_sweep
from .dumps import (
    RunManifest,
    discover_sources,
    parse_dump,
    read_dump,
    read_truth,
    write_csv_report,
    write_dump,
    write_json_report,
    write_truth,
)
from .errors import (
    EmptySurvivorError,
    InputError,
    InsufficientDataError,
    QuantrankError,
    UndefinedCorrelationError,
)
from .policy import balance, subsample_stratified
from .ranking import SourceScore, aggregate_reports, evaluate_ranking, rank_values
from .search import SearchConfig, timed_metric
from .synth import SynthSpec, bayes_accuracy, family_specs, generate_family, generate_split

EXIT_INPUT = 3
EXIT_INSUFFICIENT = 4
EXIT_EMPTY_SURVIVORS = 5
EXIT_UNDEFINED = 6


def _out_dir(args) -> Path:
    out = args.out_dir or os.environ.get("QUANTRANK_OUT_DIR") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _search_config(args) -> SearchConfig:
    return SearchConfig(
        tolerance=args.tolerance,
        max_steps=args.max_steps,
        q_min=args.q_min,
        q_max=args.q_max,
        seed=args.seed,
    )


def _add_search_flags(p, with_method=True):
    p.add_argument("--tolerance", type=int, default=5)
    p.add_argument("--max-steps", type=int, default=20)
    p.add_argument("--q-min", type=int, default=2)
    p.add_argument("--q-max", type=int, default=None)
    if with_method:
        p.add_argument("--search", choices=("ternary", "brute"), default="ternary")


def _add_common_flags(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=None)


def _derived_seed(*parts: int) -> int:
    seed = 0
    for part in parts:
        seed = (seed * 1_000_003 + part) % 2**63
    return seed


def _trace_rows(trace):
    return [(r.q, r.train_acc, r.val_acc) for r in trace]


# --- score ------------------------------------------------------------------


def cmd_score(args) -> int:
    out = _out_dir(args)
    train_dump = read_dump(args.train)
    val_dump = read_dump(args.val)
    if train_dump.header.m != val_dump.header.m or train_dump.header.n != val_dump.header.n:
        raise InputError("train and val dumps disagree on m or n")
    train = balance(train_dump.dataset, _derived_seed(args.seed, 0))
    val = balance(val_dump.dataset, _derived_seed(args.seed, 1))
    cfg = _search_config(args)
    result, cpu = timed_metric(train, val, cfg, args.search)

    manifest = RunManifest(
        command="score",
        search=cfg,
        master_seed=args.seed,
        output_dir=str(out),
        target_dumps=(str(args.train), str(args.val)),
        extra=(("method", args.search),),
    )
    write_json_report(
        out / "score.json",
        {
            "manifest": manifest.to_dict(),
            "source_id": train_dump.header.source_id,
            "metric": result.metric,
            "q_star": result.q_star,
            "left": result.left,
            "right": result.right,
            "method": result.method,
            "probes": len(result.trace),
        },
    )
    write_csv_report(
        out / "score_trace.csv",
        {"command": "score", "method": result.method, "seed": args.seed},
        ["q", "train_acc", "val_acc"],
        _trace_rows(result.trace),
    )
    if args.emit_timings:
        write_csv_report(
            out / "timings.csv",
            {"command": "score", "volatile": "true"},
            ["source_id", "cpu_seconds"],
            [(train_dump.header.source_id, cpu)],
        )
    print(
        f"M={result.metric} q_star={result.q_star} method={result.method} "
        f"probes={len(result.trace)} cpu={cpu:.4f}s"
    )
    return 0


# --- rank -------------------------------------------------------------------


def _score_iteration(sources, source_ids, cfg, method, tl_frac, seed):
    scores = []
    for j, source_id in enumerate(source_ids):
        train, val = sources[source_id]
        if tl_frac < 1.0:
            train = subsample_stratified(train, tl_frac, _derived_seed(seed, j, 0))
            val = subsample_stratified(val, tl_frac, _derived_seed(seed, j, 1))
        train = balance(train, _derived_seed(seed, j, 2))
        val = balance(val, _derived_seed(seed, j, 3))
        result, cpu = timed_metric(train, val, cfg, method)
        scores.append(
            SourceScore(
                source_id=source_id,
                metric=result.metric,
                q_star=result.q_star,
                cpu_seconds=cpu,
            )
        )
    return scores


def cmd_rank(args) -> int:
    out = _out_dir(args)
    paths = discover_sources(args.sources)
    sources = {
        sid: (parse_dump(slot["train"]), parse_dump(slot["val"]))
        for sid, slot in paths.items()
    }
    source_ids = sorted(sources)
    truth = read_truth(args.truth) if args.truth else None
    cfg = _search_config(args)

    iteration_scores = []
    iteration_seeds = []
    for i in range(args.iterations):
        seed = _derived_seed(args.seed, i)
        iteration_seeds.append(seed)
        iteration_scores.append(
            _score_iteration(sources, source_ids, cfg, args.search, args.tl_frac, seed)
        )

    metric_by_source = {
        sid: [scores[j].metric for scores in iteration_scores]
        for j, sid in enumerate(source_ids)
    }
    metric_means = [float(np.mean(metric_by_source[sid])) for sid in source_ids]
    metric_stds = [float(np.std(metric_by_source[sid])) for sid in source_ids]
    mean_ranks = rank_values(metric_means, source_ids)

    manifest = RunManifest(
        command="rank",
        search=cfg,
        master_seed=args.seed,
        output_dir=str(out),
        source_dir=str(args.sources),
        truth_path=str(args.truth) if args.truth else None,
        tl_frac=args.tl_frac,
        iterations=args.iterations,
        threshold=args.threshold,
        slack=args.slack,
        extra=(("method", args.search),),
    )
    payload = {
        "manifest": manifest.to_dict(),
        "iteration_seeds": iteration_seeds,
        "source_ids": source_ids,
        "metric_mean": dict(zip(source_ids, metric_means)),
        "metric_std": dict(zip(source_ids, metric_stds)),
    }

    columns = ["source_id", "metric_mean", "metric_std", "rank_by_metric"]
    rows = [
        [sid, metric_means[j], metric_stds[j], int(mean_ranks[j])]
        for j, sid in enumerate(source_ids)
    ]

    summary = f"ranked {len(source_ids)} sources over {args.iterations} iteration(s)"
    if truth is not None:
        reports = [
            evaluate_ranking(scores, truth, args.threshold, args.slack)
            for scores in iteration_scores
        ]
        payload["iterations"] = [
            {
                "survivors": r.survivors,
                "fraction_correct": r.fraction_correct,
                "mean_dev": r.mean_dev,
                "std_dev": r.std_dev,
                "pearson": r.pearson,
                "spearman": r.spearman,
                "kendall": r.kendall,
            }
            for r in reports
        ]
        agg = aggregate_reports(reports)
        payload["aggregate"] = agg
        truth_ranks = rank_values([truth[sid] for sid in source_ids], source_ids)
        columns += ["truth", "rank_by_truth"]
        for j, sid in enumerate(source_ids):
            rows[j] += [truth[sid], int(truth_ranks[j])]
        summary += (
            f": fraction_correct={agg['fraction_correct_mean']:.3f}"
            f" mean_dev={agg['mean_dev_mean']:.3f}"
            f" spearman={agg['spearman_mean']:.3f}"
        )

    write_json_report(out / "rank.json", payload)
    write_csv_report(
        out / "rank_sources.csv",
        {"command": "rank", "seed": args.seed, "iterations": args.iterations},
        columns,
        rows,
    )
    if args.emit_timings:
        write_csv_report(
            out / "timings.csv",
            {"command": "rank", "volatile": "true"},
            ["source_id", "cpu_seconds_total"],
            [
                (
                    sid,
                    sum(scores[j].cpu_seconds for scores in iteration_scores),
                )
                for j, sid in enumerate(source_ids)
            ],
        )
    print(summary)
    return 0


# --- sweep ------------------------------------------------------------------


def cmd_sweep(args) -> int:
    from .search import sweep_curve

    out = _out_dir(args)
    train = balance(parse_dump(args.train), _derived_seed(args.seed, 0))
    val = balance(parse_dump(args.val), _derived_seed(args.seed, 1))
    if args.q_list:
        q_list = [int(tok) for tok in args.q_list.split(",")]
    else:
        q_max = args.q_max if args.q_max is not None else len(val) // val.n
        q_list = list(range(args.q_min, q_max + 1, args.q_step))
    if not q_list:
        raise InputError("empty quantization level list")
    records = sweep_curve(train, val, q_list)
    write_csv_report(
        out / "sweep.csv",
        {"command": "sweep", "seed": args.seed},
        ["q", "train_acc", "val_acc"],
        _trace_rows(records),
    )
    best = max(records, key=lambda r: (r.val_acc, -r.q))
    print(f"swept {len(records)} levels; best val_acc={best.val_acc} at q={best.q}")
    return 0


# --- simulate-theorem -------------------------------------------------------

DEFAULT_F1 = {"kind": "uniform_mixture", "weights": [0.7, 0.3], "lows": [0.0, 0.4], "highs": [0.6, 1.0]}
DEFAULT_F2 = {"kind": "uniform_mixture", "weights": [0.3, 0.7], "lows": [0.0, 0.4], "highs": [0.6, 1.0]}


def density_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "uniform_mixture":
        return UniformMixture(
            weights=tuple(d["weights"]), lows=tuple(d["lows"]), highs=tuple(d["highs"])
        )
    if kind == "truncated_polynomial":
        return TruncatedPolynomial(coeffs=tuple(d["coeffs"]))
    raise InputError(f"unknown density kind {kind!r}")


def cmd_simulate_theorem(args) -> int:
    out = _out_dir(args)
    f1 = density_from_dict(json.loads(args.f1))
    f2 = density_from_dict(json.loads(args.f2))
    schedule = tuple(int(tok) for tok in args.q_schedule.split(","))
    cfg = SweepConfig(
        n=args.n,
        q_schedule=schedule,
        trials=args.trials,
        epsilon=args.epsilon,
        delta=args.delta,
        seed=args.seed,
        val_mode=args.val_mode,
        n_val=args.n_val,
    )
    rows = convergence_sweep(cfg, f1, f2)
    write_csv_report(
        out / "convergence.csv",
        {
            "command": "simulate-theorem",
            "seed": args.seed,
            "n": args.n,
            "trials": args.trials,
            "epsilon": args.epsilon,
            "delta": args.delta,
        },
        ["q", "mean_val_acc", "stderr", "bound_q", "satisfied"],
        [(r.q, r.mean_val_acc, r.stderr, r.bound_q, r.satisfied) for r in rows],
    )
    last = rows[-1]
    print(
        f"simulated {len(rows)} levels; at q={last.q}: mean_val_acc={last.mean_val_acc:.4f}"
        f" (bound_q={last.bound_q:.1f}, satisfied={str(last.satisfied).lower()})"
    )
    return 0


# --- gen-synth --------------------------------------------------------------


def cmd_gen_synth(args) -> int:
    out = _out_dir(args)
    overlaps = np.linspace(args.overlap_min, args.overlap_max, args.count)
    specs = family_specs(
        args.count,
        overlaps,
        per_class=args.per_class,
        master_seed=args.seed,
        m=args.m,
        n=args.n,
        family=args.family,
    )
    sources, truth = generate_family(specs, args.val_per_class)
    for source_id, (train, val) in sources.items():
        write_dump(out / f"{source_id}_train.csv", train, source_id, "train")
        write_dump(out / f"{source_id}_val.csv", val, source_id, "val")
    write_truth(out / "truth.csv", truth)
    manifest = RunManifest(
        command="gen-synth",
        search=SearchConfig(),
        master_seed=args.seed,
        output_dir=str(out),
        extra=(
            ("count", str(args.count)),
            ("m", str(args.m)),
            ("n", str(args.n)),
            ("per_class", str(args.per_class)),
            ("val_per_class", str(args.val_per_class)),
            ("overlap_min", repr(args.overlap_min)),
            ("overlap_max", repr(args.overlap_max)),
            ("family", args.family),
        ),
    )
    write_json_report(out / "gen_manifest.json", {"manifest": manifest.to_dict()})
    print(f"wrote {len(sources)} sources and truth.csv to {out}")
    return 0


# --- compare-search ---------------------------------------------------------


def cmd_compare_search(args) -> int:
    out = _out_dir(args)
    cfg = _search_config(args)
    rows = []
    diffs = []
    for i in range(args.pairs):
        rng = np.random.default_rng(_derived_seed(args.seed, i))
        overlap = float(rng.uniform(args.overlap_min, args.overlap_max))
        spec = SynthSpec(
            m=args.m,
            n=args.n,
            per_class=args.per_class,
            overlap=overlap,
            family=args.family,
            seed=_derived_seed(args.seed, i, 7),
        )
        train, val = generate_split(spec, args.val_per_class)
        ternary, _ = timed_metric(train, val, cfg, "ternary")
        brute, _ = timed_metric(train, val, cfg, "brute")
        diff = abs(ternary.metric - brute.metric)
        diffs.append(diff)
        rows.append(
            (i, overlap, bayes_accuracy(spec), ternary.metric, brute.metric, diff)
        )
    diffs = np.array(diffs)
    manifest = RunManifest(
        command="compare-search",
        search=cfg,
        master_seed=args.seed,
        output_dir=str(out),
        extra=(
            ("pairs", str(args.pairs)),
            ("per_class", str(args.per_class)),
            ("val_per_class", str(args.val_per_class)),
        ),
    )
    write_csv_report(
        out / "compare_search.csv",
        {"command": "compare-search", "seed": args.seed, "pairs": args.pairs},
        ["pair", "overlap", "bayes_accuracy", "metric_ternary", "metric_brute", "abs_diff"],
        rows,
    )
    write_json_report(
        out / "compare_search.json",
        {
            "manifest": manifest.to_dict(),
            "pairs": args.pairs,
            "mean_abs_diff": float(diffs.mean()),
            "std_abs_diff": float(diffs.std()),
            "max_abs_diff": float(diffs.max()),
        },
    )
    print(
        f"compared {args.pairs} pairs: mean |dM|={float(diffs.mean()):.4f}"
        f" std={float(diffs.std()):.4f} max={float(diffs.max()):.4f}"
    )
    return 0


# --- wiring -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quantrank",
        description="Quantization-based transferability scoring of source classifiers",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="metric for one source (train+val dumps)")
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    _add_search_flags(p)
    _add_common_flags(p)
    p.add_argument("--emit-timings", action="store_true")
    p.set_defaults(fn=cmd_score)

    p = sub.add_parser("rank", help="score and rank a directory of sources")
    p.add_argument("--sources", required=True)
    p.add_argument("--truth", default=None)
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--slack", type=float, default=0.03)
    p.add_argument("--tl-frac", type=float, default=1.0)
    p.add_argument("--iterations", type=int, default=1)
    _add_search_flags(p)
    _add_common_flags(p)
    p.add_argument("--emit-timings", action="store_true")
    p.set_defaults(fn=cmd_rank)

    p = sub.add_parser("sweep", help="accuracy trade-off curve over levels")
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--q-step", type=int, default=1)
    p.add_argument("--q-list", default=None)
    _add_search_flags(p, with_method=False)
    _add_common_flags(p)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser(
        "simulate-theorem", help="convergence of validation accuracy at large levels"
    )
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--q-schedule", default="2,5,10,100,1000,10000,100000")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--val-mode", choices=("analytic", "sampled"), default="analytic")
    p.add_argument("--n-val", type=int, default=0)
    p.add_argument("--f1", default=json.dumps(DEFAULT_F1))
    p.add_argument("--f2", default=json.dumps(DEFAULT_F2))
    _add_common_flags(p)
    p.set_defaults(fn=cmd_simulate_theorem)

    p = sub.add_parser("gen-synth", help="generate a synthetic source family")
    p.add_argument("--count", type=int, default=45)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--per-class", type=int, default=200)
    p.add_argument("--val-per-class", type=int, default=50)
    p.add_argument("--overlap-min", type=float, default=0.02)
    p.add_argument("--overlap-max", type=float, default=0.9)
    p.add_argument("--family", choices=("tent", "comb", "blocks", "jitter"), default="tent")
    _add_common_flags(p)
    p.set_defaults(fn=cmd_gen_synth)

    p = sub.add_parser("compare-search", help="ternary vs brute deviation statistics")
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--per-class", type=int, default=40)
    p.add_argument("--val-per-class", type=int, default=10)
    p.add_argument("--overlap-min", type=float, default=0.1)
    p.add_argument("--overlap-max", type=float, default=0.9)
    p.add_argument("--family", choices=("tent", "comb", "blocks", "jitter"), default="tent")
    _add_search_flags(p, with_method=False)
    _add_common_flags(p)
    p.set_defaults(fn=cmd_compare_search)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except InsufficientDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except EmptySurvivorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY_SURVIVORS
    except UndefinedCorrelationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNDEFINED
    except (InputError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except QuantrankError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
