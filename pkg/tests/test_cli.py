from __future__ import annotations

import filecmp
import json
import os

import pytest

from retweetshift import cli
from retweetshift.errors import ConvergenceError
from retweetshift.synth import generate_dataset


@pytest.fixture(scope="module")
def small_dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("data")
    generate_dataset(str(path), users=40, movers=4, seed=7)
    return path


def run_cli(*args: str) -> int:
    return cli.main(list(args))


def test_synth_subcommand(tmp_path):
    code = run_cli("--out-dir", str(tmp_path), "synth", "--users", "12", "--movers", "2")
    assert code == 0
    assert (tmp_path / "records.jsonl").exists()
    assert (tmp_path / "config.json").exists()
    assert (tmp_path / "lexicon.txt").exists()
    assert (tmp_path / "truth.json").exists()


def test_stagewise_run_matches_pipeline(small_dataset, tmp_path):
    config = str(small_dataset / "config.json")
    staged = tmp_path / "staged"
    piped = tmp_path / "piped"
    for stage in (
        "ingest",
        "build-graph",
        "communities",
        "metrics",
        "sentiment",
        "shift",
        "stats",
        "report",
    ):
        assert run_cli("--config", config, "--out-dir", str(staged), "--seed", "5", stage) == 0
    assert run_cli("--config", config, "--out-dir", str(piped), "--seed", "5", "pipeline") == 0

    mismatched = []
    for root, _, files in os.walk(staged):
        rel = os.path.relpath(root, staged)
        for name in files:
            a = os.path.join(root, name)
            b = os.path.join(piped, rel, name)
            assert os.path.exists(b), f"pipeline missing {rel}/{name}"
            if not filecmp.cmp(a, b, shallow=False):
                mismatched.append(f"{rel}/{name}")
    assert not mismatched


def test_pipeline_artifacts_present(small_dataset, tmp_path):
    config = str(small_dataset / "config.json")
    out = tmp_path / "out"
    assert run_cli("--config", config, "--out-dir", str(out), "pipeline") == 0
    for rel in (
        "parse_report.json",
        "t1/edges.csv",
        "t1/nodes.csv",
        "t1/partition.csv",
        "t1/metrics.csv",
        "t1/sentiment.csv",
        "t2/partition.csv",
        "shift.csv",
        "overlap.json",
        "stats.json",
        "report.json",
        "communities.json",
    ):
        assert (out / rel).exists(), rel
    assert list((out / "hist").glob("*.csv"))
    assert list((out / "svg").glob("*.svg"))
    report = json.loads((out / "report.json").read_text())
    assert report["windows"] == ["t1", "t2"]
    assert "reference" in report
    assert "alignment_pct" in report


def test_report_totals_match_graph_populations(small_dataset, tmp_path):
    config = str(small_dataset / "config.json")
    out = tmp_path / "out"
    assert run_cli("--config", config, "--out-dir", str(out), "pipeline") == 0
    report = json.loads((out / "report.json").read_text())
    for window in ("t1", "t2"):
        nodes = (out / window / "nodes.csv").read_text().strip().splitlines()
        population = len(nodes) - 1  # header
        assert sum(report["community_sizes"][window].values()) == population


def test_report_regeneration_byte_identical(small_dataset, tmp_path):
    config = str(small_dataset / "config.json")
    out = tmp_path / "out"
    assert run_cli("--config", config, "--out-dir", str(out), "--seed", "3", "pipeline") == 0
    first = {
        p.relative_to(out): p.read_bytes()
        for p in out.rglob("*")
        if p.is_file() and ("report.json" in p.name or p.parent.name in ("hist", "svg"))
    }
    assert run_cli("--config", config, "--out-dir", str(out), "--seed", "3", "report") == 0
    for rel, data in first.items():
        assert (out / rel).read_bytes() == data, rel


def test_exit_code_2_on_missing_config(tmp_path):
    assert run_cli("--out-dir", str(tmp_path), "pipeline") == 2
    assert run_cli("--config", str(tmp_path / "nope.json"), "--out-dir", str(tmp_path), "pipeline") == 2


def test_exit_code_2_on_invalid_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"records": "r.jsonl"}')  # windows missing
    assert run_cli("--config", str(bad), "--out-dir", str(tmp_path), "ingest") == 2


def test_exit_code_3_on_missing_records(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {"records": "missing.jsonl", "windows": {"t1": {"start": 0, "end": 10}}}
        )
    )
    assert run_cli("--config", str(cfg), "--out-dir", str(tmp_path), "ingest") == 3


def test_exit_code_3_on_missing_upstream_artifacts(small_dataset, tmp_path):
    config = str(small_dataset / "config.json")
    assert run_cli("--config", config, "--out-dir", str(tmp_path), "communities") == 3


def test_exit_code_4_on_nonconvergence(small_dataset, tmp_path, monkeypatch):
    def explode(*args, **kwargs):
        raise ConvergenceError("forced", residual=1.0)

    monkeypatch.setattr(cli.metricsmod, "collect_metrics", explode)
    config = str(small_dataset / "config.json")
    out = str(tmp_path)
    assert run_cli("--config", config, "--out-dir", out, "build-graph") == 0
    assert run_cli("--config", config, "--out-dir", out, "metrics") == 4


def test_strict_ingest_flag(tmp_path):
    records = tmp_path / "records.jsonl"
    records.write_text('{"broken\n')
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {"records": "records.jsonl", "windows": {"t1": {"start": 0, "end": 10}}}
        )
    )
    assert run_cli("--config", str(cfg), "--out-dir", str(tmp_path / "o1"), "ingest") == 0
    assert (
        run_cli("--config", str(cfg), "--out-dir", str(tmp_path / "o2"), "ingest", "--strict")
        == 3
    )


def test_seed_flag_changes_outputs(small_dataset, tmp_path):
    config = str(small_dataset / "config.json")
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli("--config", config, "--out-dir", str(a), "--seed", "1", "pipeline") == 0
    assert run_cli("--config", config, "--out-dir", str(b), "--seed", "2", "pipeline") == 0
    sa = json.loads((a / "stats.json").read_text())
    sb = json.loads((b / "stats.json").read_text())
    by_name_a = {c["comparison"]: c for c in sa["metrics_comparison"]}
    by_name_b = {c["comparison"]: c for c in sb["metrics_comparison"]}
    ba = by_name_a["pagerank"]["bootstrap"]["shifters"]["mean_of_means"]
    bb = by_name_b["pagerank"]["bootstrap"]["shifters"]["mean_of_means"]
    assert ba != bb
