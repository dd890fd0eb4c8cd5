"""Statistical post-processing: aggregation, rank-sum comparison, sample sizing.

The rank-sum comparison reports the three-valued convention used throughout
the result tables: '+' when the reference configuration is statistically
better (lower fitness, minimization), '-' when worse, '=' when the null
hypothesis of equivalence stands. Analysis runs in double precision; fixed
point is a mote-side constraint only.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence


@dataclass(frozen=True)
class RunSample:
    """Final network fitness values of repeated runs of one configuration."""

    label: str
    values: tuple[float, ...]

    def __init__(self, label: str, values: Sequence[float]):
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "values", tuple(float(v) for v in values))


def _midranks(pooled: Sequence[float]) -> list[float]:
    order = sorted(range(len(pooled)), key=lambda i: pooled[i])
    ranks = [0.0] * len(pooled)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        mid = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = mid
        i = j + 1
    return ranks


def _exact_two_sided_p(ranks: list[float], n_ref: int, w_ref: float) -> float:
    counts_le = 0
    counts_ge = 0
    total = 0
    for subset in combinations(range(len(ranks)), n_ref):
        w = sum(ranks[i] for i in subset)
        total += 1
        if w <= w_ref + 1e-9:
            counts_le += 1
        if w >= w_ref - 1e-9:
            counts_ge += 1
    return min(1.0, 2.0 * min(counts_le, counts_ge) / total)


def _normal_two_sided_p(ranks: list[float], n_ref: int, w_ref: float) -> float:
    n, m = n_ref, len(ranks) - n_ref
    total = n + m
    mu = n * (total + 1) / 2.0
    # tie-corrected variance
    tie_term = 0.0
    seen: dict[float, int] = {}
    for r in ranks:
        seen[r] = seen.get(r, 0) + 1
    for cnt in seen.values():
        if cnt > 1:
            tie_term += cnt**3 - cnt
    var = n * m / 12.0 * ((total + 1) - tie_term / (total * (total - 1)))
    if var <= 0.0:
        return 1.0
    diff = w_ref - mu
    # continuity correction pulls the statistic toward the mean
    if diff > 0.5:
        diff -= 0.5
    elif diff < -0.5:
        diff += 0.5
    else:
        diff = 0.0
    z = diff / math.sqrt(var)
    return math.erfc(abs(z) / math.sqrt(2.0))


def wilcoxon(reference: RunSample, other: RunSample, alpha: float = 0.05) -> str:
    """Two-sided rank-sum test at level ``alpha`` with the +/-/= convention.

    Midranks handle ties; sample pairs with both sizes below 8 use exact
    enumeration of the rank distribution, larger ones the normal approximation
    with continuity correction. Direction is assigned post hoc from the sample
    medians (lower median fitness = better).
    """
    a, b = reference.values, other.values
    if not a or not b:
        raise ValueError("samples must be non-empty")
    pooled = list(a) + list(b)
    ranks = _midranks(pooled)
    w_ref = sum(ranks[: len(a)])
    if len(a) < 8 and len(b) < 8:
        p = _exact_two_sided_p(ranks, len(a), w_ref)
    else:
        p = _normal_two_sided_p(ranks, len(a), w_ref)
    if p >= alpha:
        return "="
    med_a, med_b = statistics.median(a), statistics.median(b)
    if med_a < med_b:
        return "+"
    if med_a > med_b:
        return "-"
    # medians tie but ranks separate: fall back to mean rank
    mean_rank_ref = w_ref / len(a)
    mean_rank_other = (sum(ranks) - w_ref) / len(b)
    if mean_rank_ref < mean_rank_other:
        return "+"
    if mean_rank_ref > mean_rank_other:
        return "-"
    return "="


def sample_size(sigma: float, width: float) -> int:
    """Repetitions needed for a 95% confidence interval of the given width."""
    if width <= 0.0 or sigma < 0.0:
        raise ValueError("sigma must be >= 0 and width > 0")
    return max(1, math.ceil(16.0 * sigma * sigma / (width * width)))


@dataclass(frozen=True)
class AggregateRow:
    label: str
    count: int
    mean: float
    std: float
    single_repetition: bool


def aggregate(samples: dict[str, Sequence[float]] | Sequence[RunSample]) -> list[AggregateRow]:
    """Sample mean and standard deviation (n-1 denominator) per configuration."""
    if not isinstance(samples, dict):
        samples = {s.label: s.values for s in samples}
    rows = []
    for label, values in samples.items():
        values = [float(v) for v in values]
        if not values:
            raise ValueError(f"no values for {label!r}")
        mean = statistics.fmean(values)
        std = statistics.stdev(values) if len(values) > 1 else 0.0
        rows.append(AggregateRow(label, len(values), mean, std, len(values) == 1))
    return rows
