"""Cross-snapshot community tracking: alignment, shifters, overlap.

Only users present in both snapshots enter the shift analysis; users seen
once are excluded and counted.  Two Jaccard variants are reported because
the raw and both-snapshot universes genuinely differ: jaccard_restricted
intersects both sets with the cross-snapshot population, jaccard_raw uses
every user.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

from .communities import CommunityLabels
from .errors import DataError
from .graph import UserId

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ShiftRecord:
    user: UserId
    label_t1: str
    label_t2: str

    @property
    def is_shifter(self) -> bool:
        return self.label_t1 != self.label_t2


@dataclass
class ShiftOutcome:
    """detect_shifters result: records plus the excluded-user counts."""

    records: list[ShiftRecord]
    only_t1: int
    only_t2: int

    @property
    def shifters(self) -> list[ShiftRecord]:
        return [r for r in self.records if r.is_shifter]

    @property
    def stayers(self) -> list[ShiftRecord]:
        return [r for r in self.records if not r.is_shifter]


@dataclass(frozen=True)
class LabelOverlap:
    label: str
    size_t1: int
    size_t2: int
    pct_t1: float
    pct_t2: float
    jaccard_restricted: float
    jaccard_raw: float

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "size_t1": self.size_t1,
            "size_t2": self.size_t2,
            "pct_t1": self.pct_t1,
            "pct_t2": self.pct_t2,
            "jaccard_restricted": self.jaccard_restricted,
            "jaccard_raw": self.jaccard_raw,
        }


@dataclass
class OverlapReport:
    per_label: list[LabelOverlap]

    def to_dict(self) -> dict:
        return {"per_label": [lo.to_dict() for lo in self.per_label]}


def _common_labels(labels_t1: CommunityLabels, labels_t2: CommunityLabels) -> list[str]:
    l1 = set(labels_t1.block_labels.values())
    l2 = set(labels_t2.block_labels.values())
    if l1 != l2:
        raise DataError(f"snapshots carry different label sets: {sorted(l1)} vs {sorted(l2)}")
    return sorted(l1)


def _jaccard(a: set, b: set) -> float:
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


def align(
    labels_t1: CommunityLabels, labels_t2: CommunityLabels
) -> dict[str, str]:
    """Greedy maximum-Jaccard matching of t1 labels onto t2 labels.

    Anchor labels already name the communities, so this is a cross-check:
    a warning is logged when membership overlap pairs a t1 community with a
    differently-labeled t2 community.  Returns {label_t1: matched label_t2}.
    """
    names = _common_labels(labels_t1, labels_t2)
    for labels, when in ((labels_t1, "t1"), (labels_t2, "t2")):
        for name in names:
            if not labels.members(name):
                raise DataError(f"empty community {name!r} at {when}")
    scored = sorted(
        (
            (-_jaccard(labels_t1.members(a), labels_t2.members(b)), a, b)
            for a in names
            for b in names
        )
    )
    matched: dict[str, str] = {}
    taken: set[str] = set()
    for _, a, b in scored:
        if a in matched or b in taken:
            continue
        matched[a] = b
        taken.add(b)
    for a, b in matched.items():
        if a != b:
            logger.warning(
                "anchor labels disagree with overlap matching: %r at t1 best matches %r at t2",
                a,
                b,
            )
    return matched


def detect_shifters(
    labels_t1: CommunityLabels, labels_t2: CommunityLabels
) -> ShiftOutcome:
    """One ShiftRecord per user present in both labeled snapshots."""
    m1, m2 = labels_t1.membership, labels_t2.membership
    common = [u for u in m1 if u in m2]
    records = [ShiftRecord(u, m1[u], m2[u]) for u in common]
    return ShiftOutcome(
        records=records,
        only_t1=len(m1) - len(common),
        only_t2=len(m2) - len(common),
    )


def overlap_report(
    labels_t1: CommunityLabels, labels_t2: CommunityLabels
) -> OverlapReport:
    """Per-label sizes, percentages, and both Jaccard variants."""
    names = _common_labels(labels_t1, labels_t2)
    total_t1 = len(labels_t1.membership)
    total_t2 = len(labels_t2.membership)
    present_both = set(labels_t1.membership) & set(labels_t2.membership)
    rows = []
    for name in names:
        s1 = labels_t1.members(name)
        s2 = labels_t2.members(name)
        rows.append(
            LabelOverlap(
                label=name,
                size_t1=len(s1),
                size_t2=len(s2),
                pct_t1=100.0 * len(s1) / total_t1 if total_t1 else 0.0,
                pct_t2=100.0 * len(s2) / total_t2 if total_t2 else 0.0,
                jaccard_restricted=_jaccard(s1 & present_both, s2 & present_both),
                jaccard_raw=_jaccard(s1, s2),
            )
        )
    return OverlapReport(per_label=rows)


def export_shift(outcome: ShiftOutcome, path: str) -> None:
    """Write `user_id,label_t1,label_t2,is_shifter` CSV sorted by user id."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as fp:
            writer = csv.writer(fp)
            writer.writerow(["user_id", "label_t1", "label_t2", "is_shifter"])
            for rec in sorted(outcome.records, key=lambda r: r.user):
                writer.writerow(
                    [rec.user, rec.label_t1, rec.label_t2, str(rec.is_shifter).lower()]
                )
    except OSError as exc:
        raise DataError(f"cannot write shift table to {path}: {exc}") from exc


def load_shift(path: str) -> list[ShiftRecord]:
    try:
        out = []
        with open(path, newline="", encoding="utf-8") as fp:
            for row in csv.DictReader(fp):
                out.append(ShiftRecord(row["user_id"], row["label_t1"], row["label_t2"]))
        return out
    except OSError as exc:
        raise DataError(f"cannot read shift table from {path}: {exc}") from exc
    except KeyError as exc:
        raise DataError(f"bad shift table {path}: {exc}") from exc
