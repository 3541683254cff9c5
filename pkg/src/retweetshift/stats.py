"""Bootstrap estimation and nonparametric two-sample tests.

Conventions, fixed here once:

* bootstrap intervals are reported as the mean and standard deviation of
  the distribution of resample means (population std, divisor = iterations);
* Mann-Whitney U reports U for the first sample, i.e. the number of (x, y)
  pairs with x > y counting ties as 1/2;
* two-sided p-values are min(1, 2 * one-sided);
* the exact U null distribution is used only when both samples are at most
  `exact_cutoff` long and carry no ties, otherwise the normal approximation
  with tie and continuity corrections applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations, groupby
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammaincc

from .errors import DataError
from .rng import generator, substream_seed

_BOOTSTRAP_CHUNK = 512  # iterations per vectorized draw; fixed for determinism


class StatMethod(str, Enum):
    MWU_EXACT = "mann_whitney_u_exact"
    MWU_NORMAL = "mann_whitney_u_normal"
    KRUSKAL_WALLIS = "kruskal_wallis_chi2"


@dataclass(frozen=True)
class BootstrapSummary:
    mean_of_means: float
    std_of_means: float
    iterations: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "mean_of_means": self.mean_of_means,
            "std_of_means": self.std_of_means,
            "iterations": self.iterations,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: StatMethod
    n_per_group: tuple[int, ...]
    tie_correction_applied: bool

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "method": self.method.value,
            "n_per_group": list(self.n_per_group),
            "tie_correction_applied": self.tie_correction_applied,
        }


def bootstrap_means(
    data: Sequence[float],
    iterations: int = 10000,
    seed: int = 0,
    subsample_fraction: float = 1.0,
) -> np.ndarray:
    """The raw resample means behind `bootstrap_mean`, in draw order.

    Each iteration draws round(len(data) * subsample_fraction) values (at
    least 1) with replacement and records their mean.  Deterministic for a
    given (data, iterations, seed); draws happen in fixed-size chunks so
    the stream does not depend on how callers batch the work.
    """
    values = np.asarray(list(data), dtype=np.float64)
    n = len(values)
    if n == 0:
        raise DataError("bootstrap of empty data")
    if iterations < 1:
        raise DataError(f"bootstrap iterations must be >= 1, got {iterations}")
    if not 0.0 < subsample_fraction <= 1.0:
        raise DataError(f"subsample_fraction must be in (0, 1], got {subsample_fraction}")
    k = max(1, round(n * subsample_fraction))
    rng = generator(seed, "bootstrap")
    means = np.empty(iterations)
    done = 0
    while done < iterations:
        chunk = min(_BOOTSTRAP_CHUNK, iterations - done)
        idx = rng.integers(0, n, size=(chunk, k))
        means[done : done + chunk] = values[idx].mean(axis=1)
        done += chunk
    return means


def bootstrap_mean(
    data: Sequence[float],
    iterations: int = 10000,
    seed: int = 0,
    subsample_fraction: float = 1.0,
) -> BootstrapSummary:
    """Mean and std (population convention) of the resample-mean distribution."""
    means = bootstrap_means(data, iterations, seed, subsample_fraction)
    return BootstrapSummary(
        mean_of_means=float(means.mean()),
        std_of_means=float(means.std()),
        iterations=iterations,
        seed=seed,
    )


def _midranks(values: Sequence[float]) -> list[float]:
    """Fractional ranks, ties averaged."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for t in range(i, j + 1):
            ranks[order[t]] = avg
        i = j + 1
    return ranks


def _tie_term(values: Sequence[float]) -> float:
    """Sum of t^3 - t over tie groups."""
    total = 0.0
    for _, group in groupby(sorted(values)):
        t = sum(1 for _ in group)
        total += t**3 - t
    return total


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _exact_mwu_p(n1: int, n2: int, u1: float) -> float:
    """Two-sided p by full enumeration of the tie-free U null distribution.

    Enumerates all C(n1+n2, n1) placements of the first sample among the
    combined ranks and counts how extreme the observed U is in each tail.
    """
    total = 0
    le = 0  # placements with U <= u1
    ge = 0  # placements with U >= u1
    offset = n1 * (n1 + 1) / 2.0
    for positions in combinations(range(n1 + n2), n1):
        u = sum(positions) + n1 - offset  # ranks are positions + 1
        total += 1
        if u <= u1 + 1e-12:
            le += 1
        if u >= u1 - 1e-12:
            ge += 1
    one_sided = min(le, ge) / total
    return min(1.0, 2.0 * one_sided)


def mann_whitney_u(
    x: Sequence[float],
    y: Sequence[float],
    exact_cutoff: int = 8,
) -> TestResult:
    """Two-sided Mann-Whitney U test.

    U counts (x, y) pairs with x > y, ties as 1/2.  Exact enumeration when
    both samples are <= exact_cutoff with no ties anywhere; otherwise the
    tie-corrected normal approximation with continuity correction.
    """
    x = list(x)
    y = list(y)
    n1, n2 = len(x), len(y)
    if n1 == 0 or n2 == 0:
        raise DataError("mann_whitney_u requires two nonempty samples")
    combined = x + y
    ranks = _midranks(combined)
    r1 = sum(ranks[:n1])
    u1 = r1 - n1 * (n1 + 1) / 2.0
    has_ties = len(set(combined)) != len(combined)

    if n1 <= exact_cutoff and n2 <= exact_cutoff and not has_ties:
        p = _exact_mwu_p(n1, n2, u1)
        return TestResult(
            statistic=u1,
            p_value=p,
            method=StatMethod.MWU_EXACT,
            n_per_group=(n1, n2),
            tie_correction_applied=False,
        )

    n = n1 + n2
    tie_factor = 1.0 - _tie_term(combined) / (n**3 - n) if n > 1 else 1.0
    sigma2 = n1 * n2 * (n + 1) / 12.0 * tie_factor
    mean_u = n1 * n2 / 2.0
    if sigma2 <= 0.0:
        # every observation identical: no evidence of any difference
        return TestResult(
            statistic=u1,
            p_value=1.0,
            method=StatMethod.MWU_NORMAL,
            n_per_group=(n1, n2),
            tie_correction_applied=True,
        )
    # continuity correction pulls |U - mean| in by 1/2
    shift = max(abs(u1 - mean_u) - 0.5, 0.0)
    z = shift / math.sqrt(sigma2)
    p = min(1.0, 2.0 * _normal_sf(z))
    return TestResult(
        statistic=u1,
        p_value=p,
        method=StatMethod.MWU_NORMAL,
        n_per_group=(n1, n2),
        tie_correction_applied=has_ties,
    )


def chi2_sf(stat: float, df: int) -> float:
    """Chi-square upper tail via the regularized incomplete gamma function."""
    if stat <= 0.0:
        return 1.0
    return float(gammaincc(df / 2.0, stat / 2.0))


def kruskal_wallis(groups: Sequence[Sequence[float]]) -> TestResult:
    """Kruskal-Wallis H test with tie correction, chi-square p-value."""
    groups = [list(g) for g in groups]
    if len(groups) < 2:
        raise DataError("kruskal_wallis requires at least 2 groups")
    for i, g in enumerate(groups):
        if not g:
            raise DataError(f"kruskal_wallis group {i} is empty")
    combined = [v for g in groups for v in g]
    n = len(combined)
    ranks = _midranks(combined)
    h = 0.0
    pos = 0
    for g in groups:
        r = sum(ranks[pos : pos + len(g)])
        h += r * r / len(g)
        pos += len(g)
    h = 12.0 / (n * (n + 1)) * h - 3.0 * (n + 1)
    tie_factor = 1.0 - _tie_term(combined) / (n**3 - n) if n > 1 else 1.0
    if tie_factor <= 0.0:
        h = 0.0  # all observations identical
    else:
        h /= tie_factor
    # rank sums make h >= 0 analytically; clip float dust
    h = max(h, 0.0)
    df = len(groups) - 1
    return TestResult(
        statistic=h,
        p_value=chi2_sf(h, df),
        method=StatMethod.KRUSKAL_WALLIS,
        n_per_group=tuple(len(g) for g in groups),
        tie_correction_applied=_tie_term(combined) > 0,
    )


@dataclass(frozen=True)
class DeltaCell:
    """One (label_t1, label_t2) cell of the sentiment-delta table."""

    label_t1: str
    label_t2: str
    n_users: int
    summary: BootstrapSummary | None  # None when the cell is empty

    def to_dict(self) -> dict:
        return {
            "label_t1": self.label_t1,
            "label_t2": self.label_t2,
            "n_users": self.n_users,
            "bootstrap": self.summary.to_dict() if self.summary else None,
        }


def delta_sentiment_matrix(
    shift_records: Iterable,
    sentiment_t1: dict[str, float],
    sentiment_t2: dict[str, float],
    labels: Sequence[str],
    iterations: int = 10000,
    seed: int = 0,
    subsample_fraction: float = 1.0,
) -> list[DeltaCell]:
    """Bootstrap summaries of per-user sentiment change, per label pair.

    Cells are ordered label_t1-major over `labels`.  Users missing a
    sentiment at either time are skipped (the pipeline filters beforehand;
    this keeps the function total).  Empty cells are reported, not fatal.
    """
    deltas: dict[tuple[str, str], list[float]] = {
        (a, b): [] for a in labels for b in labels
    }
    for rec in shift_records:
        key = (rec.label_t1, rec.label_t2)
        if key not in deltas:
            raise DataError(f"shift record with unknown labels {key}")
        s1 = sentiment_t1.get(rec.user)
        s2 = sentiment_t2.get(rec.user)
        if s1 is None or s2 is None:
            continue
        deltas[key].append(s2 - s1)
    cells = []
    for a in labels:
        for b in labels:
            data = deltas[(a, b)]
            summary = None
            if data:
                cell_seed = _cell_seed(seed, a, b)
                summary = bootstrap_mean(
                    data, iterations=iterations, seed=cell_seed,
                    subsample_fraction=subsample_fraction,
                )
            cells.append(DeltaCell(a, b, len(data), summary))
    return cells


def _cell_seed(seed: int, label_a: str, label_b: str) -> int:
    return substream_seed(seed, "delta", label_a, label_b)
