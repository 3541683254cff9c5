"""Command-line interface.

One executable, one subcommand per pipeline stage plus `pipeline` to run
everything and `synth` to build a synthetic dataset.  Stages communicate
through files in --out-dir, so any stage can be re-run in isolation.

Exit codes: 0 success, 2 configuration error, 3 data error,
4 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from importlib import resources

from . import communities as comm
from . import graph as graphmod
from . import metrics as metricsmod
from . import report as reportmod
from . import sentiment as sentimod
from . import shift as shiftmod
from . import stats as statsmod
from . import synth as synthmod
from .config import RunConfig, load_config
from .errors import ConfigError, ConvergenceError, DataError
from .ingest import TweetRecord, parse_records, window_slice
from .rng import substream_seed

logger = logging.getLogger(__name__)


def _read_records(cfg: RunConfig, strict: bool = False):
    try:
        with open(cfg.records, encoding="utf-8") as fp:
            return parse_records(fp, strict=strict)
    except OSError as exc:
        raise DataError(f"cannot read records {cfg.records}: {exc}") from exc


def _window_dir(out_dir: str, window: str) -> str:
    path = os.path.join(out_dir, window)
    os.makedirs(path, exist_ok=True)
    return path


def _lexicon(cfg: RunConfig) -> sentimod.SentimentLexicon:
    if cfg.lexicon:
        return sentimod.load_lexicon_file(cfg.lexicon)
    return sentimod.default_lexicon()


def _two_windows(cfg: RunConfig):
    if len(cfg.windows) != 2:
        raise ConfigError(
            f"this stage needs exactly 2 windows, config has {len(cfg.windows)}"
        )
    return cfg.windows[0], cfg.windows[1]


def cmd_ingest(cfg: RunConfig, out_dir: str, strict: bool = False) -> None:
    records, parse_report = _read_records(cfg, strict=strict)
    payload = {"report": parse_report.to_dict(), "windows": {}}
    for window in cfg.windows:
        payload["windows"][window.name] = len(window_slice(records, window))
    reportmod.write_json(payload, os.path.join(out_dir, "parse_report.json"))
    print(f"parsed {parse_report.parsed} records, dropped {parse_report.dropped}")


def cmd_build_graph(cfg: RunConfig, out_dir: str) -> None:
    records, _ = _read_records(cfg)
    for window in cfg.windows:
        sliced = window_slice(records, window)
        raw = graphmod.build_graph(sliced, window.name)
        filtered = graphmod.filter_by_activity(raw, cfg.activity_threshold)
        wdir = _window_dir(out_dir, window.name)
        graphmod.export_edgelist(filtered, os.path.join(wdir, "edges.csv"))
        graphmod.export_node_table(filtered, os.path.join(wdir, "nodes.csv"))
        print(
            f"{window.name}: {raw.n_nodes} users -> {filtered.n_nodes} after "
            f"activity filter, {filtered.n_edges} edges"
        )


def _load_window_graph(out_dir: str, window: str) -> graphmod.InteractionGraph:
    wdir = os.path.join(out_dir, window)
    edges = os.path.join(wdir, "edges.csv")
    nodes = os.path.join(wdir, "nodes.csv")
    if not os.path.exists(edges):
        raise DataError(f"missing {edges}; run build-graph first")
    return graphmod.import_edgelist(edges, window, nodes_path=nodes)


def cmd_communities(cfg: RunConfig, out_dir: str) -> None:
    if not cfg.anchors:
        raise ConfigError("config must define anchor handles for labeling")
    summary: dict = {}
    for window in cfg.windows:
        g = _load_window_graph(out_dir, window.name)
        partition = comm.infer_partition(g, cfg.blocks, cfg.mcmc)
        labels = comm.label_communities(partition, g, cfg.anchors)
        comm.export_partition(
            partition, g, labels, os.path.join(out_dir, window.name, "partition.csv")
        )
        sizes = {
            lab: len(labels.members(lab)) for lab in sorted(labels.block_labels.values())
        }
        summary[window.name] = {
            "blocks": partition.B,
            "description_length": partition.description_length,
            "sweeps": partition.sweeps,
            "seed": partition.seed,
            "sizes": sizes,
            "anchor_evidence": labels.anchor_evidence,
        }
        print(
            f"{window.name}: dl={partition.description_length:.3f} sizes={sizes}"
        )
    reportmod.write_json(summary, os.path.join(out_dir, "communities.json"))


def cmd_metrics(cfg: RunConfig, out_dir: str) -> None:
    for window in cfg.windows:
        g = _load_window_graph(out_dir, window.name)
        try:
            rows = metricsmod.collect_metrics(g)
        except ConvergenceError:
            raise
        metricsmod.export_metrics(rows, os.path.join(out_dir, window.name, "metrics.csv"))
        print(f"{window.name}: metrics for {len(rows)} users")


def _score_window_users(
    cfg: RunConfig,
    records: list[TweetRecord],
    window_name: str,
    node_ids: set[str],
    lexicon: sentimod.SentimentLexicon,
    originals_only: bool,
) -> dict[str, tuple[int, float]]:
    """user -> (n tweets scored, mean compound) for users with >= 1 tweet."""
    window = next(w for w in cfg.windows if w.name == window_name)
    per_user: dict[str, list[float]] = {}
    for rec in window_slice(records, window):
        if rec.author_id not in node_ids:
            continue
        if originals_only and rec.is_retweet:
            continue
        score = sentimod.score_text(rec.text, lexicon)
        per_user.setdefault(rec.author_id, []).append(score.compound)
    return {
        u: (len(vals), sentimod.user_sentiment(vals)) for u, vals in per_user.items()
    }


def cmd_sentiment(cfg: RunConfig, out_dir: str, originals_only: bool | None = None) -> None:
    records, _ = _read_records(cfg)
    lexicon = _lexicon(cfg)
    restrict = cfg.sentiment_originals_only if originals_only is None else originals_only
    for window in cfg.windows:
        g = _load_window_graph(out_dir, window.name)
        scored = _score_window_users(
            cfg, records, window.name, set(g.node_ids), lexicon, restrict
        )
        path = os.path.join(out_dir, window.name, "sentiment.csv")
        try:
            with open(path, "w", newline="", encoding="utf-8") as fp:
                writer = csv.writer(fp)
                writer.writerow(["user_id", "n_tweets", "compound_mean", "sentiment_class"])
                for user in g.node_ids:
                    if user not in scored:
                        continue
                    n, mean = scored[user]
                    writer.writerow([user, n, repr(mean), sentimod.classify(mean)])
        except OSError as exc:
            raise DataError(f"cannot write sentiment to {path}: {exc}") from exc
        unscored = len(g.node_ids) - len(scored)
        print(f"{window.name}: sentiment for {len(scored)} users ({unscored} without tweets)")


def _load_sentiment(out_dir: str, window: str) -> dict[str, float]:
    path = os.path.join(out_dir, window, "sentiment.csv")
    if not os.path.exists(path):
        raise DataError(f"missing {path}; run sentiment first")
    out: dict[str, float] = {}
    with open(path, newline="", encoding="utf-8") as fp:
        for row in csv.DictReader(fp):
            out[row["user_id"]] = float(row["compound_mean"])
    return out


def _load_labels(out_dir: str, window: str) -> dict[str, str]:
    path = os.path.join(out_dir, window, "partition.csv")
    if not os.path.exists(path):
        raise DataError(f"missing {path}; run communities first")
    _, labels = comm.load_partition(path)
    return labels


def cmd_shift(cfg: RunConfig, out_dir: str) -> None:
    w1, w2 = _two_windows(cfg)
    labels = []
    for window in (w1, w2):
        by_user = _load_labels(out_dir, window.name)
        block_labels = {i: lab for i, lab in enumerate(sorted(set(by_user.values())))}
        labels.append(
            comm.CommunityLabels(
                window=window.name,
                block_labels=block_labels,
                anchor_evidence={},
                membership=by_user,
            )
        )
    matched = shiftmod.align(labels[0], labels[1])
    outcome = shiftmod.detect_shifters(labels[0], labels[1])
    overlap = shiftmod.overlap_report(labels[0], labels[1])
    shiftmod.export_shift(outcome, os.path.join(out_dir, "shift.csv"))
    payload = overlap.to_dict()
    payload["alignment"] = matched
    payload["users_in_both"] = len(outcome.records)
    payload["only_t1"] = outcome.only_t1
    payload["only_t2"] = outcome.only_t2
    payload["shifters"] = len(outcome.shifters)
    reportmod.write_json(payload, os.path.join(out_dir, "overlap.json"))
    print(
        f"{len(outcome.records)} users in both windows, "
        f"{len(outcome.shifters)} shifters"
    )


def _stats_cfg(cfg: RunConfig) -> reportmod.StatsConfig:
    return reportmod.StatsConfig(
        iterations=cfg.bootstrap_iterations,
        seed=cfg.seed,
        alpha=cfg.alpha,
        subsample_fraction=cfg.subsample_fraction,
    )


def cmd_stats(cfg: RunConfig, out_dir: str) -> None:
    w1, w2 = _two_windows(cfg)
    shift_path = os.path.join(out_dir, "shift.csv")
    if not os.path.exists(shift_path):
        raise DataError(f"missing {shift_path}; run shift first")
    shift_records = shiftmod.load_shift(shift_path)
    metrics_t1 = metricsmod.load_metrics(os.path.join(out_dir, w1.name, "metrics.csv"))
    sent1 = _load_sentiment(out_dir, w1.name)
    sent2 = _load_sentiment(out_dir, w2.name)
    scfg = _stats_cfg(cfg)

    comparisons = reportmod.metrics_comparison(shift_records, metrics_t1, scfg)

    labels = sorted({r.label_t1 for r in shift_records} | {r.label_t2 for r in shift_records})
    sentiment_cmp = []
    for label in labels:
        shifters = [
            sent1[r.user] for r in shift_records
            if r.is_shifter and r.label_t1 == label and r.user in sent1
        ]
        stayers = [
            sent1[r.user] for r in shift_records
            if not r.is_shifter and r.label_t1 == label and r.user in sent1
        ]
        sentiment_cmp.append(
            reportmod.compare_groups(
                f"sentiment_t1_{label}", ("shifters", "stayers"), shifters, stayers, scfg
            )
        )

    eligible = [r for r in shift_records if r.user in sent1 and r.user in sent2]
    cells = statsmod.delta_sentiment_matrix(
        eligible,
        sent1,
        sent2,
        labels,
        iterations=cfg.bootstrap_iterations,
        seed=cfg.seed,
        subsample_fraction=cfg.subsample_fraction,
    )
    payload = {
        "metrics_comparison": [c.to_dict() for c in comparisons],
        "sentiment_t1_comparison": [c.to_dict() for c in sentiment_cmp],
        "delta_matrix": [c.to_dict() for c in cells],
        "excluded_without_sentiment": len(shift_records) - len(eligible),
    }
    reportmod.write_json(payload, os.path.join(out_dir, "stats.json"))
    for c in comparisons:
        flag = "significant" if c.significant else "not significant"
        print(f"{c.name}: MWU p={c.mwu.p_value:.3g}, KW p={c.kw.p_value:.3g} ({flag})")


def cmd_report(cfg: RunConfig, out_dir: str, svg: bool = True) -> None:
    w1, w2 = _two_windows(cfg)
    stats_path = os.path.join(out_dir, "stats.json")
    overlap_path = os.path.join(out_dir, "overlap.json")
    for path in (stats_path, overlap_path):
        if not os.path.exists(path):
            raise DataError(f"missing {path}; run earlier stages first")
    with open(stats_path, encoding="utf-8") as fp:
        stats_payload = json.load(fp)
    with open(overlap_path, encoding="utf-8") as fp:
        overlap_payload = json.load(fp)

    hist_dir = os.path.join(out_dir, "hist")
    os.makedirs(hist_dir, exist_ok=True)
    svg_dir = os.path.join(out_dir, "svg")
    if svg:
        os.makedirs(svg_dir, exist_ok=True)

    alignment = {}
    sizes = {}
    for window in (w1, w2):
        labels = _load_labels(out_dir, window.name)
        sentiments = _load_sentiment(out_dir, window.name)
        alignment[window.name] = reportmod.alignment_pct(labels, sentiments)
        communities = sorted(set(labels.values()))
        sizes[window.name] = {
            lab: sum(1 for v in labels.values() if v == lab) for lab in communities
        }
        for lab in communities:
            values = [s for u, s in sentiments.items() if labels.get(u) == lab]
            rows = reportmod.histogram(values, cfg.histogram_bins)
            base = f"sentiment_{window.name}_{lab}"
            reportmod.histogram_export(
                values, cfg.histogram_bins, os.path.join(hist_dir, base + ".csv")
            )
            if svg:
                reportmod.histogram_svg(
                    rows,
                    os.path.join(svg_dir, base + ".svg"),
                    f"user sentiment, {window.name}, {lab}",
                )
            # distribution of resample means behind the summary interval
            boot_seed = substream_seed(cfg.seed, "bootstrap-panel", window.name, lab)
            means_arr = statsmod.bootstrap_means(
                values,
                iterations=cfg.bootstrap_iterations,
                seed=boot_seed,
                subsample_fraction=cfg.subsample_fraction,
            )
            means = means_arr.tolist()
            boot = statsmod.BootstrapSummary(
                mean_of_means=float(means_arr.mean()),
                std_of_means=float(means_arr.std()),
                iterations=cfg.bootstrap_iterations,
                seed=boot_seed,
            )
            base_b = f"bootstrap_means_{window.name}_{lab}"
            rows_b = reportmod.histogram(means, cfg.histogram_bins)
            reportmod.histogram_export(
                means, cfg.histogram_bins, os.path.join(hist_dir, base_b + ".csv")
            )
            if svg:
                reportmod.histogram_svg(
                    rows_b,
                    os.path.join(svg_dir, base_b + ".svg"),
                    f"bootstrap means, {window.name}, {lab} "
                    f"(mean {boot.mean_of_means:.3f} +- {boot.std_of_means:.3f})",
                )

    with resources.files("retweetshift.data").joinpath("paper_reference.json").open(
        "r", encoding="utf-8"
    ) as fp:
        reference = json.load(fp)

    run_report = reportmod.RunReport(
        windows=[w1.name, w2.name],
        seed=cfg.seed,
        community_sizes=sizes,
        overlap=overlap_payload,
        alignment_pct=alignment,
        metrics_comparison=stats_payload["metrics_comparison"],
        sentiment_t1_comparison=stats_payload["sentiment_t1_comparison"],
        delta_matrix=stats_payload["delta_matrix"],
        sources={
            "overlap": "overlap.json",
            "stats": "stats.json",
            "partitions": [f"{w1.name}/partition.csv", f"{w2.name}/partition.csv"],
            "metrics": [f"{w1.name}/metrics.csv", f"{w2.name}/metrics.csv"],
            "sentiment": [f"{w1.name}/sentiment.csv", f"{w2.name}/sentiment.csv"],
        },
        reference=reference,
    )
    reportmod.write_json(run_report.to_dict(), os.path.join(out_dir, "report.json"))
    for window, frac in alignment.items():
        pretty = {k: f"{100 * v:.1f}%" for k, v in frac.items()}
        print(f"{window}: sentiment alignment {pretty}")


def cmd_pipeline(cfg: RunConfig, out_dir: str, svg: bool = True) -> None:
    cmd_ingest(cfg, out_dir)
    cmd_build_graph(cfg, out_dir)
    cmd_communities(cfg, out_dir)
    cmd_metrics(cfg, out_dir)
    cmd_sentiment(cfg, out_dir)
    cmd_shift(cfg, out_dir)
    cmd_stats(cfg, out_dir)
    cmd_report(cfg, out_dir, svg=svg)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="retweetshift",
        description="Community-shift analysis on retweet networks",
    )
    parser.add_argument("--config", help="path to run config JSON")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--out-dir", default="out", help="artifact directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse and validate the records file")
    p.add_argument("--strict", action="store_true", help="abort on first bad line")
    sub.add_parser("build-graph", help="build and filter per-window graphs")
    sub.add_parser("communities", help="infer and label communities")
    sub.add_parser("metrics", help="compute topological metrics")
    p = sub.add_parser("sentiment", help="score per-user sentiment")
    p.add_argument(
        "--originals-only",
        action="store_true",
        default=None,
        help="average only non-retweet tweets",
    )
    sub.add_parser("shift", help="detect community shifters")
    sub.add_parser("stats", help="bootstrap summaries and hypothesis tests")
    p = sub.add_parser("report", help="assemble the final report and charts")
    p.add_argument("--no-svg", action="store_true", help="skip SVG chart output")
    p = sub.add_parser("pipeline", help="run every stage end to end")
    p.add_argument("--no-svg", action="store_true", help="skip SVG chart output")
    p = sub.add_parser("synth", help="generate a synthetic two-snapshot dataset")
    p.add_argument("--users", type=int, default=500)
    p.add_argument("--movers", type=int, default=25)
    p.add_argument("--synth-seed", type=int, default=0)
    p.add_argument("--stayer-events", type=int, default=18)
    p.add_argument("--mover-events", type=int, default=6)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        os.makedirs(args.out_dir, exist_ok=True)
        if args.command == "synth":
            synthmod.generate_dataset(
                args.out_dir,
                users=args.users,
                movers=args.movers,
                seed=args.synth_seed if args.seed is None else args.seed,
                stayer_events=args.stayer_events,
                mover_events=args.mover_events,
            )
            print(f"synthetic dataset written to {args.out_dir}")
            return 0
        if not args.config:
            raise ConfigError("--config is required for this command")
        cfg = load_config(args.config, seed_override=args.seed)
        if args.command == "ingest":
            cmd_ingest(cfg, args.out_dir, strict=args.strict)
        elif args.command == "build-graph":
            cmd_build_graph(cfg, args.out_dir)
        elif args.command == "communities":
            cmd_communities(cfg, args.out_dir)
        elif args.command == "metrics":
            cmd_metrics(cfg, args.out_dir)
        elif args.command == "sentiment":
            cmd_sentiment(cfg, args.out_dir, originals_only=args.originals_only)
        elif args.command == "shift":
            cmd_shift(cfg, args.out_dir)
        elif args.command == "stats":
            cmd_stats(cfg, args.out_dir)
        elif args.command == "report":
            cmd_report(cfg, args.out_dir, svg=not args.no_svg)
        elif args.command == "pipeline":
            cmd_pipeline(cfg, args.out_dir, svg=not args.no_svg)
        else:  # pragma: no cover
            parser.error(f"unknown command {args.command}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return 4
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
