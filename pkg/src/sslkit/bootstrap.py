"""Paired non-parametric bootstrap over per-unit evaluation results.

Both systems are resampled with the same draw, so the replicate deltas
reflect paired differences, and the interval is read from the empirical
2.5th/97.5th percentiles of those deltas. Units are resampled from a
canonical ordering sorted by unit_id, making results independent of
input file order, and every run is reproducible from its seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import fmean
from typing import Any, Callable, Sequence

import numpy as np

from .errors import EmptyUnits
from .risk import DIMENSIONS, confusion_counts, metrics_from_counts

# Identifier of the seeded generator, recorded in every result so the
# protocol stays reproducible across environments.
GENERATOR_ID = "numpy-pcg64"

Aggregator = Callable[[Sequence[Any]], float]


@dataclass(frozen=True)
class PairedUnit:
    """One evaluation unit measured under both systems.

    The payload is whatever the aggregator consumes: a per-unit score
    for retrieval (reciprocal-rank contribution) or a tuple of six
    (gold, pred) label pairs for risk.
    """

    unit_id: str
    base: Any
    ssl: Any


@dataclass(frozen=True)
class BootstrapResult:
    point_delta: float
    ci_low: float
    ci_high: float
    replicates: int
    seed: int
    generator: str = GENERATOR_ID


def mean_score(payloads: Sequence[float]) -> float:
    """Aggregator for score payloads; over reciprocal ranks this is MRR."""
    return fmean(payloads)


def macro_f1_of_label_pairs(payloads: Sequence[Any]) -> float:
    """Aggregator for risk payloads: recompute macro F1 from scratch.

    Each payload is a sequence of six (gold, pred) boolean pairs. Macro
    F1 is not unit-decomposable, so the confusion counts are rebuilt
    from the resampled skills on every call.
    """
    arr = np.asarray(payloads, dtype=bool)
    if arr.ndim != 3 or arr.shape[1] != len(DIMENSIONS) or arr.shape[2] != 2:
        raise ValueError("each payload must hold six (gold, pred) pairs")
    golds = arr[:, :, 0]
    preds = arr[:, :, 1]
    f1s = []
    for d in range(len(DIMENSIONS)):
        counts = confusion_counts(preds[:, d].tolist(), golds[:, d].tolist())
        f1s.append(metrics_from_counts(counts).f1)
    return fmean(f1s)


def paired_bootstrap(
    units: Sequence[PairedUnit],
    aggregator: Aggregator,
    replicates: int = 20000,
    seed: int = 0,
) -> BootstrapResult:
    """Percentile 95% CI for aggregator(ssl) - aggregator(base).

    Each replicate draws len(units) unit ids with replacement and applies
    the same draw to both systems. Identical inputs and seed give
    bit-identical results.
    """
    if not units:
        raise EmptyUnits("no paired units")
    if replicates < 1:
        raise ValueError("replicates must be >= 1")

    ordered = sorted(units, key=lambda u: u.unit_id)
    base = [u.base for u in ordered]
    ssl = [u.ssl for u in ordered]
    point_delta = aggregator(ssl) - aggregator(base)

    n = len(ordered)
    rng = np.random.default_rng(seed)
    deltas = np.empty(replicates, dtype=np.float64)
    for r in range(replicates):
        idx = rng.integers(0, n, size=n)
        resampled_base = [base[i] for i in idx]
        resampled_ssl = [ssl[i] for i in idx]
        deltas[r] = aggregator(resampled_ssl) - aggregator(resampled_base)

    ci_low, ci_high = np.percentile(deltas, [2.5, 97.5])
    return BootstrapResult(
        point_delta=float(point_delta),
        ci_low=float(ci_low),
        ci_high=float(ci_high),
        replicates=replicates,
        seed=seed,
    )
