"""Assemble the result artifacts: metric comparisons, sentiment alignment,
delta matrix, histograms, and a machine-readable run report.

Everything is emitted as plain CSV/JSON data files; bar-chart SVGs are
generated by a dependency-free writer so repeated runs stay byte-identical.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

from .communities import DEMOCRATIC, REPUBLICAN
from .errors import DataError
from .graph import UserId
from .metrics import UserMetrics
from .rng import substream_seed
from .sentiment import NEGATIVE, POSITIVE, classify
from .shift import ShiftRecord
from .stats import BootstrapSummary, TestResult, bootstrap_mean, kruskal_wallis, mann_whitney_u

METRIC_NAMES = ("in_degree", "out_degree", "pagerank", "betweenness")

# which sentiment class counts as "aligned" for each community
EXPECTED_POLARITY = {REPUBLICAN: POSITIVE, DEMOCRATIC: NEGATIVE}


@dataclass
class StatsConfig:
    iterations: int = 10000
    seed: int = 0
    exact_cutoff: int = 8
    alpha: float = 0.01
    subsample_fraction: float = 1.0


@dataclass(frozen=True)
class RawSummary:
    """Plain sample mean and population std, reported alongside the
    bootstrap dispersion so the two conventions are never conflated."""

    mean: float
    std: float
    n: int

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std": self.std, "n": self.n}


@dataclass
class GroupComparison:
    """Two-group contrast: raw and bootstrap summaries plus both tests."""

    name: str
    group_names: tuple[str, str]
    sizes: tuple[int, int]
    summaries: tuple[BootstrapSummary, BootstrapSummary]
    raw: tuple[RawSummary, RawSummary]
    mwu: TestResult
    kw: TestResult
    alpha: float

    @property
    def significant(self) -> bool:
        return self.mwu.p_value < self.alpha and self.kw.p_value < self.alpha

    def to_dict(self) -> dict:
        return {
            "comparison": self.name,
            "groups": list(self.group_names),
            "sizes": list(self.sizes),
            "bootstrap": {
                self.group_names[0]: self.summaries[0].to_dict(),
                self.group_names[1]: self.summaries[1].to_dict(),
            },
            "raw": {
                self.group_names[0]: self.raw[0].to_dict(),
                self.group_names[1]: self.raw[1].to_dict(),
            },
            "mann_whitney_u": self.mwu.to_dict(),
            "kruskal_wallis": self.kw.to_dict(),
            "alpha": self.alpha,
            "significant": self.significant,
        }


def _raw_summary(values: list[float]) -> RawSummary:
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    return RawSummary(mean=mean, std=math.sqrt(var), n=n)


def compare_groups(
    name: str,
    group_names: tuple[str, str],
    x: list[float],
    y: list[float],
    cfg: StatsConfig,
) -> GroupComparison:
    if len(x) < 2 or len(y) < 2:
        small = group_names[0] if len(x) < 2 else group_names[1]
        raise DataError(f"comparison {name!r}: group {small!r} has fewer than 2 users")
    sx = bootstrap_mean(
        x,
        iterations=cfg.iterations,
        seed=substream_seed(cfg.seed, name, group_names[0]),
        subsample_fraction=cfg.subsample_fraction,
    )
    sy = bootstrap_mean(
        y,
        iterations=cfg.iterations,
        seed=substream_seed(cfg.seed, name, group_names[1]),
        subsample_fraction=cfg.subsample_fraction,
    )
    return GroupComparison(
        name=name,
        group_names=group_names,
        sizes=(len(x), len(y)),
        summaries=(sx, sy),
        raw=(_raw_summary(x), _raw_summary(y)),
        mwu=mann_whitney_u(x, y, exact_cutoff=cfg.exact_cutoff),
        kw=kruskal_wallis([x, y]),
        alpha=cfg.alpha,
    )


def metrics_comparison(
    shift_records: list[ShiftRecord],
    user_metrics_t1: list[UserMetrics],
    cfg: StatsConfig,
) -> list[GroupComparison]:
    """Shifters vs stayers on each of the four t1 metrics."""
    by_user = {m.user: m for m in user_metrics_t1}
    shifter_rows = [by_user[r.user] for r in shift_records if r.is_shifter and r.user in by_user]
    stayer_rows = [by_user[r.user] for r in shift_records if not r.is_shifter and r.user in by_user]
    out = []
    for metric in METRIC_NAMES:
        x = [float(getattr(m, metric)) for m in shifter_rows]
        y = [float(getattr(m, metric)) for m in stayer_rows]
        out.append(compare_groups(metric, ("shifters", "stayers"), x, y, cfg))
    return out


def alignment_pct(
    membership: dict[UserId, str],
    user_sentiments: dict[UserId, float],
) -> dict[str, float]:
    """Fraction of each community whose sentiment class matches its polarity.

    Republican counts positive users, democratic counts negative users;
    neutral users stay in the denominator.  Users without a sentiment score
    are not members of the sentiment population and are skipped.
    """
    totals: dict[str, int] = {}
    aligned: dict[str, int] = {}
    for user, label in membership.items():
        score = user_sentiments.get(user)
        if score is None:
            continue
        totals[label] = totals.get(label, 0) + 1
        expected = EXPECTED_POLARITY.get(label)
        if expected is not None and classify(score) == expected:
            aligned[label] = aligned.get(label, 0) + 1
    out = {}
    for label in sorted(totals):
        if totals[label] == 0:
            raise DataError(f"community {label!r} has no scored users")
        out[label] = aligned.get(label, 0) / totals[label]
    if not out:
        raise DataError("no community has scored users")
    return out


def histogram(values: list[float], bins: int) -> list[tuple[float, float, int]]:
    """Equal-width histogram over [-1, 1]; counts sum to len(values).

    Bins are right-open except the last, which includes 1.0; out-of-range
    values are clamped into the end bins.
    """
    if bins < 1:
        raise DataError(f"bins must be >= 1, got {bins}")
    width = 2.0 / bins
    edges = [-1.0 + i * width for i in range(bins + 1)]
    edges[-1] = 1.0
    counts = [0] * bins
    for v in values:
        idx = min(max(int((v + 1.0) // width), 0), bins - 1)
        # settle float dust so membership agrees with the reported edges
        while idx < bins - 1 and v >= edges[idx + 1]:
            idx += 1
        while idx > 0 and v < edges[idx]:
            idx -= 1
        counts[idx] += 1
    return [(edges[i], edges[i + 1], counts[i]) for i in range(bins)]


def histogram_export(values: list[float], bins: int, path: str) -> None:
    """Write `bin_left,bin_right,count` CSV."""
    rows = histogram(values, bins)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fp:
            writer = csv.writer(fp)
            writer.writerow(["bin_left", "bin_right", "count"])
            for left, right, count in rows:
                writer.writerow([repr(left), repr(right), count])
    except OSError as exc:
        raise DataError(f"cannot write histogram to {path}: {exc}") from exc


def histogram_svg(
    rows: list[tuple[float, float, int]],
    path: str,
    title: str,
    color: str = "#4472c4",
) -> None:
    """Render histogram rows as a minimal static SVG bar chart.

    Hand-rolled on purpose: no library metadata or timestamps, so output
    bytes depend only on the data.
    """
    width, height, margin = 640, 360, 48
    plot_w, plot_h = width - 2 * margin, height - 2 * margin
    peak = max((c for _, _, c in rows), default=0) or 1
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width // 2}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
    ]
    n = len(rows)
    for i, (left, right, count) in enumerate(rows):
        bar_h = plot_h * count / peak
        x = margin + plot_w * i / n
        y = height - margin - bar_h
        parts.append(
            f'<rect x="{x:.2f}" y="{y:.2f}" width="{plot_w / n - 1:.2f}" '
            f'height="{bar_h:.2f}" fill="{color}"/>'
        )
    parts.append(
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>'
    )
    if rows:
        lo, hi = rows[0][0], rows[-1][1]
        parts.append(
            f'<text x="{margin}" y="{height - margin + 18}" font-family="sans-serif" '
            f'font-size="11">{lo:g}</text>'
        )
        parts.append(
            f'<text x="{width - margin}" y="{height - margin + 18}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{hi:g}</text>'
        )
        parts.append(
            f'<text x="{margin - 6}" y="{margin}" text-anchor="end" font-family="sans-serif" '
            f'font-size="11">{peak}</text>'
        )
    parts.append("</svg>")
    try:
        with open(path, "w", encoding="utf-8") as fp:
            fp.write("\n".join(parts))
            fp.write("\n")
    except OSError as exc:
        raise DataError(f"cannot write SVG to {path}: {exc}") from exc


@dataclass
class RunReport:
    """Everything the final report.json carries.

    `sources` names the artifact file behind each numeric section, so any
    cell can be traced back to the stage that produced it.
    """

    windows: list[str]
    seed: int
    community_sizes: dict[str, dict[str, int]]
    overlap: dict
    alignment_pct: dict[str, dict[str, float]]
    metrics_comparison: list[dict]
    sentiment_t1_comparison: list[dict]
    delta_matrix: list[dict]
    sources: dict = field(default_factory=dict)
    reference: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "windows": self.windows,
            "seed": self.seed,
            "community_sizes": self.community_sizes,
            "overlap": self.overlap,
            "alignment_pct": self.alignment_pct,
            "metrics_comparison": self.metrics_comparison,
            "sentiment_t1_comparison": self.sentiment_t1_comparison,
            "delta_matrix": self.delta_matrix,
            "sources": self.sources,
            "reference": self.reference,
        }


def write_json(obj: dict, path: str) -> None:
    """Canonical JSON writer used for every report artifact."""
    try:
        with open(path, "w", encoding="utf-8") as fp:
            json.dump(obj, fp, indent=2, sort_keys=True, ensure_ascii=False)
            fp.write("\n")
    except OSError as exc:
        raise DataError(f"cannot write JSON to {path}: {exc}") from exc
