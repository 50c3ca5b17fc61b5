"""Seeded synthetic source-output datasets with controllable class overlap.

Every sample carries a latent position t on [0, 1].  With probability
overlap a sample ignores its class and draws t from a class-independent
distribution; otherwise it draws from a class-specific region disjoint
from every other class's region.  The best possible classifier therefore
has accuracy (1 - overlap) + overlap / n in closed form, which serves as
training-free ground truth for ranking experiments.

Families differ in geometry, not in that closed form:

* "tent": class c draws from a triangular density on the tile
  [c/n, (c+1)/n) (zero at the tile edges), shared draws are uniform on
  [0, 1].  Densities are continuous, so accuracy varies smoothly with the
  quantization level.
* "comb": like tent but each class owns four interleaved micro-tiles, so
  coarse levels mix the classes and accuracy bends: it rises until the
  level resolves the comb, then falls as cells go empty.
* "blocks": class c draws uniformly from [c/(n+1), (c+1)/(n+1)), shared
  draws uniformly from the last block.  Edges are sharp and aligned with
  the level n+1 grid, so perfect separation at overlap 0 is exact there.
* "jitter" (m >= 3): tent latents scaled into coordinate 2 plus
  class-independent noise on the higher coordinates, spreading samples
  over multi-coordinate cells.

The latent maps onto the softmax simplex without post-hoc normalization.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InputError
from .policy import LabeledDataset

FAMILIES = ("tent", "comb", "blocks", "jitter")

# micro-tiles per class in the comb family
COMB_TEETH = 4


@dataclass(frozen=True)
class SynthSpec:
    """Shape of one synthetic source: class geometry, size, overlap, seed."""

    m: int
    n: int
    per_class: int
    overlap: float
    family: str = "tent"
    seed: int = 0

    def __post_init__(self):
        if self.m < 2:
            raise InputError(f"source class count must be >= 2, got {self.m}")
        if self.n < 2:
            raise InputError(f"target class count must be >= 2, got {self.n}")
        if self.per_class < 2:
            raise InputError(f"per_class must be >= 2, got {self.per_class}")
        if not 0.0 <= self.overlap <= 1.0:
            raise InputError(f"overlap must lie in [0, 1], got {self.overlap}")
        if self.family not in FAMILIES:
            raise InputError(f"unknown family {self.family!r}, expected {FAMILIES}")


def bayes_accuracy(spec: SynthSpec) -> float:
    """Best achievable accuracy for the given generator settings, in closed form."""
    return (1.0 - spec.overlap) + spec.overlap / spec.n


def _latents(spec: SynthSpec, per_class: int, rng: np.random.Generator):
    """Latent positions and labels for one balanced draw."""
    t = np.empty(per_class * spec.n)
    labels = np.empty(per_class * spec.n, dtype=np.int64)
    for c in range(spec.n):
        sl = slice(c * per_class, (c + 1) * per_class)
        shared = rng.random(per_class) < spec.overlap
        if spec.family == "blocks":
            width = 1.0 / (spec.n + 1)
            base = np.where(shared, spec.n * width, c * width)
            t[sl] = base + rng.random(per_class) * width
        else:
            # Triangle on an owned tile via the mean of two uniforms;
            # shared draws are uniform over the whole interval.
            tri = (rng.random(per_class) + rng.random(per_class)) / 2.0
            if spec.family == "comb":
                width = 1.0 / (COMB_TEETH * spec.n)
                tooth = rng.integers(COMB_TEETH, size=per_class)
                unique = (tooth * spec.n + c + tri) * width
            else:
                width = 1.0 / spec.n
                unique = (c + tri) * width
            t[sl] = np.where(shared, rng.random(per_class), unique)
        labels[sl] = c + 1
    return t, labels


def _to_simplex(spec: SynthSpec, t: np.ndarray, rng: np.random.Generator):
    size = t.size
    probs = np.zeros((size, spec.m))
    if spec.family == "jitter" and spec.m > 2:
        probs[:, 1] = 0.6 * t
        extra = 0.4 * rng.random((size, spec.m - 2)) / (spec.m - 2)
        probs[:, 2:] = extra
    else:
        probs[:, 1] = t
    probs[:, 0] = 1.0 - probs[:, 1:].sum(axis=1)
    return probs


def generate(spec: SynthSpec) -> LabeledDataset:
    """One balanced dataset of per_class samples per target class."""
    rng = np.random.default_rng(spec.seed)
    t, labels = _latents(spec, spec.per_class, rng)
    return LabeledDataset(_to_simplex(spec, t, rng), labels, spec.n)


def generate_split(
    spec: SynthSpec, val_per_class: int
) -> tuple[LabeledDataset, LabeledDataset]:
    """Train and validation datasets drawn from one seeded stream."""
    if val_per_class < 2:
        raise InputError(f"val_per_class must be >= 2, got {val_per_class}")
    rng = np.random.default_rng(spec.seed)
    t_tr, y_tr = _latents(spec, spec.per_class, rng)
    t_va, y_va = _latents(spec, val_per_class, rng)
    return (
        LabeledDataset(_to_simplex(spec, t_tr, rng), y_tr, spec.n),
        LabeledDataset(_to_simplex(spec, t_va, rng), y_va, spec.n),
    )


def generate_family(
    specs: list[SynthSpec], val_per_class: int
) -> tuple[dict[str, tuple[LabeledDataset, LabeledDataset]], dict[str, float]]:
    """Datasets and closed-form ground truth for a family of sources.

    Source ids are s00, s01, ... in spec order.
    """
    if len(specs) < 3:
        raise InputError("a source family needs at least 3 specs")
    sources = {}
    truth = {}
    for i, spec in enumerate(specs):
        source_id = f"s{i:02d}"
        sources[source_id] = generate_split(spec, val_per_class)
        truth[source_id] = bayes_accuracy(spec)
    return sources, truth


def family_specs(
    count: int,
    overlaps,
    per_class: int,
    master_seed: int,
    m: int = 2,
    n: int = 2,
    family: str = "tent",
) -> list[SynthSpec]:
    """Specs for a family with the given overlaps and derived seeds."""
    overlaps = list(overlaps)
    if len(overlaps) != count:
        raise InputError(f"expected {count} overlaps, got {len(overlaps)}")
    base = SynthSpec(
        m=m, n=n, per_class=per_class, overlap=0.0, family=family, seed=0
    )
    return [
        replace(base, overlap=float(ov), seed=master_seed * 1_000_003 + i)
        for i, ov in enumerate(overlaps)
    ]
