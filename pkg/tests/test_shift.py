from __future__ import annotations

import logging

import numpy as np
import pytest

from retweetshift.communities import CommunityLabels
from retweetshift.errors import DataError
from retweetshift.shift import (
    ShiftRecord,
    align,
    detect_shifters,
    export_shift,
    load_shift,
    overlap_report,
)


def snapshot(window: str, membership: dict[str, str]) -> CommunityLabels:
    names = sorted(set(membership.values()))
    return CommunityLabels(
        window=window,
        block_labels={i: name for i, name in enumerate(names)},
        anchor_evidence={},
        membership=dict(membership),
    )


def test_align_identity():
    m = {"a": "republican", "b": "republican", "c": "democratic"}
    assert align(snapshot("t1", m), snapshot("t2", m)) == {
        "democratic": "democratic",
        "republican": "republican",
    }


def test_align_label_swap_warns(caplog):
    t1 = {"a": "republican", "b": "republican", "c": "democratic", "d": "democratic"}
    t2 = {"a": "democratic", "b": "democratic", "c": "republican", "d": "republican"}
    with caplog.at_level(logging.WARNING):
        matched = align(snapshot("t1", t1), snapshot("t2", t2))
    assert matched == {"republican": "democratic", "democratic": "republican"}
    assert any("disagree" in rec.message for rec in caplog.records)


def test_align_empty_block_rejected():
    t1 = {"a": "republican", "b": "democratic"}
    t2 = {"a": "republican", "b": "republican"}
    with pytest.raises(DataError):
        align(snapshot("t1", t1), snapshot("t2", t2))


def test_align_synthetic_hundred_users_with_planted_movers():
    rng = np.random.default_rng(0)
    users = [f"u{i}" for i in range(100)]
    t1 = {u: ("republican" if i < 60 else "democratic") for i, u in enumerate(users)}
    movers = sorted(rng.choice(users, size=10, replace=False).tolist())
    t2 = dict(t1)
    for u in movers:
        t2[u] = "democratic" if t1[u] == "republican" else "republican"
    matched = align(snapshot("t1", t1), snapshot("t2", t2))
    assert matched == {"democratic": "democratic", "republican": "republican"}
    outcome = detect_shifters(snapshot("t1", t1), snapshot("t2", t2))
    found = sorted(r.user for r in outcome.shifters)
    assert found == movers  # precision = recall = 1


def test_detect_shifters_flags():
    t1 = {"stay": "democratic", "move": "republican"}
    t2 = {"stay": "democratic", "move": "democratic"}
    outcome = detect_shifters(snapshot("t1", t1), snapshot("t2", t2))
    by_user = {r.user: r for r in outcome.records}
    assert not by_user["stay"].is_shifter
    assert by_user["move"].is_shifter
    assert by_user["move"].label_t1 == "republican"
    assert by_user["move"].label_t2 == "democratic"


def test_detect_shifters_excludes_and_counts_one_sided_users():
    t1 = {"both": "republican", "t1only": "democratic"}
    t2 = {"both": "republican", "t2only_a": "democratic", "t2only_b": "republican"}
    outcome = detect_shifters(snapshot("t1", t1), snapshot("t2", t2))
    assert [r.user for r in outcome.records] == ["both"]
    assert outcome.only_t1 == 1
    assert outcome.only_t2 == 2
    assert len(outcome.shifters) + len(outcome.stayers) == len(outcome.records)


def test_overlap_identical_gives_jaccard_one():
    m = {"a": "republican", "b": "democratic", "c": "democratic"}
    report = overlap_report(snapshot("t1", m), snapshot("t2", m))
    for row in report.per_label:
        assert row.jaccard_restricted == 1.0
        assert row.jaccard_raw == 1.0
    assert sum(row.pct_t1 for row in report.per_label) == pytest.approx(100.0)


def test_overlap_disjoint_memberships():
    # every user present in both snapshots but with flipped labels: both
    # jaccard variants collapse to zero
    t1 = {"a": "republican", "b": "republican", "c": "democratic", "d": "democratic"}
    t2 = {"a": "democratic", "b": "democratic", "c": "republican", "d": "republican"}
    report = overlap_report(snapshot("t1", t1), snapshot("t2", t2))
    for row in report.per_label:
        assert row.jaccard_restricted == 0.0
        assert row.jaccard_raw == 0.0


def test_overlap_hand_computed_fixture():
    t1 = {"a": "republican", "b": "republican", "c": "republican", "d": "democratic", "x": "democratic"}
    t2 = {"a": "republican", "b": "democratic", "d": "democratic", "y": "republican"}
    # x only in t1, y only in t2, P = {a, b, d}
    # republican: t1 {a,b,c}, t2 {a,y}; restricted {a,b} vs {a} -> 1/2
    #             raw |{a}| / |{a,b,c,y}| = 1/4
    # democratic: t1 {d,x}, t2 {b,d}; restricted {d} vs {b,d} -> 1/2
    #             raw |{d}| / |{d,x,b}| = 1/3
    report = overlap_report(snapshot("t1", t1), snapshot("t2", t2))
    rows = {row.label: row for row in report.per_label}
    rep, dem = rows["republican"], rows["democratic"]
    assert rep.size_t1 == 3 and rep.size_t2 == 2
    assert rep.jaccard_restricted == pytest.approx(0.5)
    assert rep.jaccard_raw == pytest.approx(0.25)
    assert dem.jaccard_restricted == pytest.approx(0.5)
    assert dem.jaccard_raw == pytest.approx(1 / 3)
    assert rep.pct_t1 == pytest.approx(60.0)
    assert dem.pct_t2 == pytest.approx(50.0)


def test_overlap_symmetric_under_window_swap():
    rng = np.random.default_rng(3)
    users = [f"u{i}" for i in range(40)]
    t1 = {u: ("republican" if rng.random() < 0.6 else "democratic") for u in users[:35]}
    t2 = {u: ("republican" if rng.random() < 0.5 else "democratic") for u in users[5:]}
    fwd = overlap_report(snapshot("t1", t1), snapshot("t2", t2))
    rev = overlap_report(snapshot("t2", t2), snapshot("t1", t1))
    for a, b in zip(fwd.per_label, rev.per_label):
        assert a.jaccard_restricted == b.jaccard_restricted
        assert a.jaccard_raw == b.jaccard_raw
        assert a.size_t1 == b.size_t2 and a.size_t2 == b.size_t1


def test_zero_shifters_restricted_jaccard_one():
    t1 = {"a": "republican", "b": "democratic", "onlyt1": "republican"}
    t2 = {"a": "republican", "b": "democratic", "onlyt2": "democratic"}
    report = overlap_report(snapshot("t1", t1), snapshot("t2", t2))
    for row in report.per_label:
        assert row.jaccard_restricted == 1.0


def test_shifters_plus_stayers_partition_common_users():
    rng = np.random.default_rng(9)
    users = [f"u{i}" for i in range(50)]
    t1 = {u: ("republican" if rng.random() < 0.5 else "democratic") for u in users}
    t2 = {u: ("republican" if rng.random() < 0.5 else "democratic") for u in users[10:]}
    outcome = detect_shifters(snapshot("t1", t1), snapshot("t2", t2))
    assert len(outcome.shifters) + len(outcome.stayers) == 40


def test_shift_csv_round_trip(tmp_path):
    t1 = {"a": "republican", "b": "democratic"}
    t2 = {"a": "democratic", "b": "democratic"}
    outcome = detect_shifters(snapshot("t1", t1), snapshot("t2", t2))
    path = tmp_path / "shift.csv"
    export_shift(outcome, str(path))
    text = path.read_text()
    assert "a,republican,democratic,true" in text
    assert "b,democratic,democratic,false" in text
    back = load_shift(str(path))
    assert {r.user: r.is_shifter for r in back} == {"a": True, "b": False}


def test_mismatched_label_sets_rejected():
    t1 = {"a": "republican", "b": "democratic"}
    t2 = {"a": "republican", "b": "green"}
    with pytest.raises(DataError):
        overlap_report(snapshot("t1", t1), snapshot("t2", t2))
