"""File formats: source softmax dumps, truth tables, manifests, reports.

A dump is a text CSV carrying one source's softmax outputs on the target
data.  The first line is a header comment::

    # m=<int> n=<int> source_id=<str> split=<train|val> version=1

followed by rows of m probabilities and one 1-based integer label.
Probabilities are written with 9 significant digits, which is enough for
any reachable quantization level.  Parsers reject unknown schema versions.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import InputError, ParseError
from .policy import LabeledDataset
from .quantize import SUM_TOLERANCE
from .search import SearchConfig

SCHEMA_VERSION = 1
SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class DumpHeader:
    m: int
    n: int
    source_id: str
    split: str
    version: int = SCHEMA_VERSION


@dataclass(frozen=True)
class DumpFile:
    header: DumpHeader
    dataset: LabeledDataset


def _parse_header(path, line: str) -> DumpHeader:
    if not line.startswith("#"):
        raise ParseError(path, 1, "missing '# m=... n=...' header line")
    fields = {}
    for token in line[1:].split():
        if "=" not in token:
            raise ParseError(path, 1, f"malformed header token {token!r}")
        key, value = token.split("=", 1)
        fields[key] = value
    try:
        m = int(fields["m"])
        n = int(fields["n"])
        source_id = fields["source_id"]
        split = fields["split"]
    except KeyError as exc:
        raise ParseError(path, 1, f"header missing key {exc}") from None
    except ValueError as exc:
        raise ParseError(path, 1, f"bad header value: {exc}") from None
    version = int(fields.get("version", SCHEMA_VERSION))
    if version != SCHEMA_VERSION:
        raise ParseError(path, 1, f"unsupported schema version {version}")
    if split not in SPLITS:
        raise ParseError(path, 1, f"split must be one of {SPLITS}, got {split!r}")
    if m < 2 or n < 2:
        raise ParseError(path, 1, f"m and n must be >= 2, got m={m} n={n}")
    return DumpHeader(m=m, n=n, source_id=source_id, split=split, version=version)


def read_dump(path) -> DumpFile:
    """Parse one dump file; every error names the offending line."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    lines = text.splitlines()
    if not lines:
        raise ParseError(path, 1, "empty file")
    header = _parse_header(path, lines[0])

    probs = []
    labels = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != header.m + 1:
            raise ParseError(
                path, lineno, f"expected {header.m + 1} fields, got {len(parts)}"
            )
        try:
            row = [float(v) for v in parts[:-1]]
            label = int(parts[-1])
        except ValueError as exc:
            raise ParseError(path, lineno, str(exc)) from None
        if not all(math.isfinite(v) for v in row):
            raise ParseError(path, lineno, "non-finite probability")
        if any(v < 0.0 or v > 1.0 for v in row):
            raise ParseError(path, lineno, "probability outside [0, 1]")
        total = sum(row)
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ParseError(
                path,
                lineno,
                f"probabilities sum to {total!r}, beyond tolerance {SUM_TOLERANCE}",
            )
        if not 1 <= label <= header.n:
            raise ParseError(path, lineno, f"label {label} outside [1, {header.n}]")
        probs.append(row)
        labels.append(label)
    if not probs:
        raise ParseError(path, len(lines), "dump has no data rows")
    dataset = LabeledDataset(np.array(probs), np.array(labels), header.n)
    return DumpFile(header=header, dataset=dataset)


def parse_dump(path) -> LabeledDataset:
    """Validated dataset from a dump file."""
    return read_dump(path).dataset


def write_dump(path, dataset: LabeledDataset, source_id: str, split: str) -> None:
    if split not in SPLITS:
        raise InputError(f"split must be one of {SPLITS}, got {split!r}")
    if not source_id or any(ch.isspace() or ch == "=" for ch in source_id):
        raise InputError(f"source_id {source_id!r} must be non-empty without spaces or '='")
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        f.write(
            f"# m={dataset.m} n={dataset.n} source_id={source_id} "
            f"split={split} version={SCHEMA_VERSION}\n"
        )
        for row, label in zip(dataset.probs, dataset.labels):
            cells = ",".join(f"{v:.9g}" for v in row)
            f.write(f"{cells},{int(label)}\n")


def write_truth(path, truth: dict[str, float]) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        f.write(f"# version={SCHEMA_VERSION} kind=truth\n")
        f.write("source_id,accuracy\n")
        for source_id in sorted(truth):
            f.write(f"{source_id},{truth[source_id]!r}\n")


def read_truth(path) -> dict[str, float]:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    truth = {}
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            if stripped.startswith("#") and "version=" in stripped:
                version = stripped.split("version=", 1)[1].split()[0]
                if int(version) != SCHEMA_VERSION:
                    raise ParseError(path, lineno, f"unsupported schema version {version}")
            continue
        if stripped == "source_id,accuracy":
            continue
        parts = stripped.split(",")
        if len(parts) != 2:
            raise ParseError(path, lineno, f"expected 'source_id,accuracy', got {stripped!r}")
        try:
            value = float(parts[1])
        except ValueError as exc:
            raise ParseError(path, lineno, str(exc)) from None
        if not 0.0 <= value <= 1.0:
            raise ParseError(path, lineno, f"accuracy {value} outside [0, 1]")
        truth[parts[0]] = value
    if not truth:
        raise ParseError(path, max(len(lines), 1), "truth file has no entries")
    return truth


def discover_sources(directory) -> dict[str, dict[str, Path]]:
    """Map source_id -> {split: path} for every dump in a directory.

    Every source must provide exactly a train and a val dump; extra test
    splits are carried along but unused by the metric.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise InputError(f"{directory} is not a directory")
    found: dict[str, dict[str, Path]] = {}
    for path in sorted(directory.glob("*.csv")):
        if path.name == "truth.csv":
            continue
        with path.open("r", encoding="utf-8") as f:
            first = f.readline().rstrip("\n")
        header = _parse_header(path, first)
        slot = found.setdefault(header.source_id, {})
        if header.split in slot:
            raise InputError(
                f"duplicate {header.split} dump for source {header.source_id!r}: "
                f"{slot[header.split]} and {path}"
            )
        slot[header.split] = path
    if not found:
        raise InputError(f"no dump files found in {directory}")
    for source_id, slot in found.items():
        missing = {"train", "val"} - set(slot)
        if missing:
            raise InputError(f"source {source_id!r} is missing splits: {sorted(missing)}")
    return found


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce one CLI run; embedded in every report."""

    command: str
    search: SearchConfig
    master_seed: int
    output_dir: str
    target_dumps: tuple[str, ...] = ()
    source_dir: str | None = None
    truth_path: str | None = None
    tl_frac: float = 1.0
    iterations: int = 1
    threshold: float = 0.0
    slack: float = 0.03
    extra: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if not 0.0 < self.tl_frac <= 1.0:
            raise InputError(f"tl_frac must lie in (0, 1], got {self.tl_frac}")
        if self.iterations < 1:
            raise InputError(f"iterations must be >= 1, got {self.iterations}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["extra"] = dict(self.extra)
        # reports are functions of inputs, not of where they are written
        d.pop("output_dir")
        return d


def write_json_report(path, payload: dict) -> None:
    """Deterministic JSON: sorted keys, fixed layout, trailing newline."""
    path = Path(path)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def write_csv_report(path, header_kv: dict, columns: list[str], rows) -> None:
    """CSV with '# key=value' provenance comments, deterministic formatting."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        f.write(f"# version={SCHEMA_VERSION}\n")
        for key, value in header_kv.items():
            f.write(f"# {key}={value}\n")
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(_cell(v) for v in row) + "\n")


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    return str(value)
