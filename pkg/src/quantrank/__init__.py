"""Quantization-based transferability scoring and ranking of source classifiers."""

from .convergence import (
    SweepConfig,
    TruncatedPolynomial,
    UniformMixture,
    cell_masses,
    convergence_sweep,
    expected_val_accuracy,
    q_bound,
)
from .dumps import DumpFile, RunManifest, parse_dump, read_dump, read_truth, write_dump, write_truth
from .errors import (
    EmptySurvivorError,
    IndexOverflowError,
    InputError,
    InsufficientDataError,
    ParseError,
    QuantrankError,
    UndefinedCorrelationError,
)
from .policy import (
    ConditionalCounts,
    LabeledDataset,
    Policy,
    balance,
    build_counts,
    derive_policy,
    subsample_stratified,
    train_accuracy,
    train_accuracy_exact,
    val_accuracy,
)
from .quantize import BinKey, flat_index, quantize, quantize_rows, validate_softmax
from .ranking import (
    RankReport,
    SourceScore,
    aggregate_reports,
    correctness_with_slack,
    correlations,
    evaluate_ranking,
    kendall_tau_b,
    pearson,
    rank_deviation,
    rank_sources,
    score_sources,
    spearman,
    threshold_filter,
)
from .search import (
    MetricResult,
    ProbeRecord,
    SearchConfig,
    metric_brute,
    metric_ternary,
    sweep_curve,
    timed_metric,
)
from .synth import SynthSpec, bayes_accuracy, family_specs, generate, generate_family, generate_split

__version__ = "0.1.0"
