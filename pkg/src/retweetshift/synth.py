"""Synthetic fixture generation.

Two generators live here:

* `planted_digraph` builds a two-block directed benchmark graph with a
  known ground-truth partition, used to measure community recovery;
* `generate_dataset` emits a complete two-snapshot record file with planted
  community movers, a calibrated lexicon, a matching run config, and the
  ground truth, so the end-to-end pipeline can be scored exactly.

Sentiment planting works through the calibrated lexicon: token ``tone_p30``
is tuned so a tweet consisting of just that token scores a compound of
exactly +0.30.  Giving a mover ``tone_p30`` tweets at t1 and ``tone_p20``
at t2 plants a per-user drift of exactly -0.10.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .graph import InteractionGraph
from .ingest import TweetRecord, write_records
from .rng import generator

T1_START, T1_END = 1_000_000, 2_000_000
T2_START, T2_END = 2_000_000, 3_000_000

ANCHORS = {
    "anchor_rep_0": "republican",
    "anchor_rep_1": "republican",
    "anchor_dem_0": "democratic",
    "anchor_dem_1": "democratic",
}


def planted_digraph(
    n: int = 200,
    mean_degree: int = 10,
    inter_fraction: float = 0.05,
    seed: int = 0,
) -> tuple[InteractionGraph, list[int]]:
    """Two balanced blocks; every node emits mean_degree/2 edges.

    Each edge stays inside the source's block with probability
    1 - inter_fraction, so the expected total degree is `mean_degree`.
    Returns the folded weighted graph and the planted block per node index.
    """
    if n < 4 or n % 2:
        raise ConfigError(f"planted_digraph needs an even n >= 4, got {n}")
    rng = generator(seed, "planted-digraph")
    half = n // 2
    truth = [0] * half + [1] * half
    out_per_node = max(1, mean_degree // 2)
    g = InteractionGraph(window="planted")
    for v in range(n):
        g._add_node(f"n{v:04d}")
    for v in range(n):
        for _ in range(out_per_node):
            same = rng.random() >= inter_fraction
            block = truth[v] if same else 1 - truth[v]
            lo = 0 if block == 0 else half
            while True:
                u = int(rng.integers(lo, lo + half))
                if u != v:
                    break
            g._add_edge(f"n{v:04d}", f"n{u:04d}", 1)
    return g, truth


def _tone_token(c: float) -> str:
    k = round(abs(c) * 100)
    return f"tone_p{k:02d}" if c >= 0 else f"tone_m{k:02d}"


def _tone_valence(c: float, alpha: float = 15.0) -> float:
    # inverse of compound = v / sqrt(v^2 + alpha)
    return c * math.sqrt(alpha / (1.0 - c * c))


def write_tone_lexicon(path: str, alpha: float = 15.0) -> None:
    """Calibrated lexicon: tone_pNN / tone_mNN score compound +-NN/100."""
    lines = ["# calibrated synthetic lexicon: tone_pNN scores exactly +0.NN"]
    for k in range(1, 96):
        c = k / 100.0
        lines.append(f"{_tone_token(c)}\t{_tone_valence(c, alpha)!r}")
        lines.append(f"{_tone_token(-c)}\t{_tone_valence(-c, alpha)!r}")
    with open(path, "w", encoding="utf-8") as fp:
        fp.write("\n".join(lines))
        fp.write("\n")


@dataclass
class DatasetTruth:
    communities_t1: dict[str, str]
    communities_t2: dict[str, str]
    movers: list[str]
    sentiment_t1: dict[str, float]
    sentiment_t2: dict[str, float]
    drift: float

    def to_dict(self) -> dict:
        return {
            "communities_t1": self.communities_t1,
            "communities_t2": self.communities_t2,
            "movers": self.movers,
            "sentiment_t1": self.sentiment_t1,
            "sentiment_t2": self.sentiment_t2,
            "drift": self.drift,
        }


def generate_dataset(
    out_dir: str,
    users: int = 500,
    movers: int = 25,
    seed: int = 0,
    republican_share: float = 0.6,
    stayer_events: int = 18,
    mover_events: int = 6,
    inter_prob: float = 0.03,
    drift: float = -0.10,
    anchor_weight: int = 60,
) -> DatasetTruth:
    """Write records.jsonl, lexicon.txt, config.json, truth.json.

    `users` regular accounts plus the four anchor accounts; `movers`
    accounts swap communities between the windows, retweet `mover_events`
    times per window against `stayer_events` for everyone else, and have
    their planted sentiment drift by `drift` from t1 to t2.
    """
    if movers >= users:
        raise ConfigError(f"movers ({movers}) must be < users ({users})")
    if not 0 < republican_share < 1:
        raise ConfigError("republican_share must be in (0, 1)")
    rng = generator(seed, "dataset")
    os.makedirs(out_dir, exist_ok=True)

    n_rep = int(users * republican_share)
    regulars = [f"u{i:04d}" for i in range(users)]
    label_t1 = {
        u: ("republican" if i < n_rep else "democratic") for i, u in enumerate(regulars)
    }
    for anchor, label in ANCHORS.items():
        label_t1[anchor] = label

    n_rep_movers = movers // 2 + movers % 2
    rep_pool = regulars[:n_rep]
    dem_pool = regulars[n_rep:]
    mover_ids = sorted(rng.choice(rep_pool, size=n_rep_movers, replace=False).tolist())
    mover_ids += sorted(rng.choice(dem_pool, size=movers - n_rep_movers, replace=False).tolist())
    mover_set = set(mover_ids)
    label_t2 = dict(label_t1)
    for u in mover_ids:
        label_t2[u] = "democratic" if label_t1[u] == "republican" else "republican"

    # planted per-user sentiment on the 0.01 grid; drift must stay on it
    drift_steps = round(drift * 100)
    sentiment_t1: dict[str, float] = {}
    sentiment_t2: dict[str, float] = {}
    for u in label_t1:
        if u in ANCHORS:
            base = 40 if ANCHORS[u] == "republican" else -40
        else:
            sign = 1 if label_t1[u] == "republican" else -1
            base = sign * int(rng.integers(15, 46))
        sentiment_t1[u] = base / 100.0
        steps = base + (drift_steps if u in mover_set else 0)
        sentiment_t2[u] = steps / 100.0

    def community_members(label: str, when: str) -> tuple[list[str], np.ndarray]:
        labels = label_t1 if when == "t1" else label_t2
        members = [u for u in labels if labels[u] == label]
        weights = np.array(
            [anchor_weight if u in ANCHORS else 1 for u in members], dtype=np.float64
        )
        return members, weights / weights.sum()

    pools = {
        when: {lab: community_members(lab, when) for lab in ("republican", "democratic")}
        for when in ("t1", "t2")
    }

    records: list[TweetRecord] = []
    counter = 0

    def next_id() -> str:
        nonlocal counter
        counter += 1
        return f"t{counter:07d}"

    for when, (w_start, w_end) in (("t1", (T1_START, T1_END)), ("t2", (T2_START, T2_END))):
        labels = label_t1 if when == "t1" else label_t2
        sentiments = sentiment_t1 if when == "t1" else sentiment_t2
        for u in labels:
            tone = _tone_token(sentiments[u])
            ts = int(rng.integers(w_start, w_end))
            records.append(
                TweetRecord(
                    tweet_id=next_id(),
                    author_id=u,
                    author_handle=u,
                    timestamp=ts,
                    text=f"{tone} about the campaign",
                )
            )
            if u in ANCHORS:
                continue  # anchors only post; their edges come from being retweeted
            n_events = mover_events if u in mover_set else stayer_events
            for _ in range(n_events):
                own = labels[u]
                pick = own if rng.random() >= inter_prob else (
                    "democratic" if own == "republican" else "republican"
                )
                members, probs = pools[when][pick]
                while True:
                    creator = members[int(rng.choice(len(members), p=probs))]
                    if creator != u:
                        break
                records.append(
                    TweetRecord(
                        tweet_id=next_id(),
                        author_id=u,
                        author_handle=u,
                        timestamp=int(rng.integers(w_start, w_end)),
                        text=f"{tone} echoing {creator}",
                        retweeted_author_id=creator,
                        retweeted_author_handle=creator,
                    )
                )

    records.sort(key=lambda r: (r.timestamp, r.tweet_id))
    records_path = os.path.join(out_dir, "records.jsonl")
    with open(records_path, "w", encoding="utf-8") as fp:
        write_records(records, fp)

    lexicon_path = os.path.join(out_dir, "lexicon.txt")
    write_tone_lexicon(lexicon_path)

    config = {
        "records": "records.jsonl",
        "windows": {
            "t1": {"start": T1_START, "end": T1_END},
            "t2": {"start": T2_START, "end": T2_END},
        },
        "activity_threshold": 5,
        "blocks": 2,
        "seed": seed,
        "mcmc": {"sweeps": 1000, "chains": 4},
        "lexicon": "lexicon.txt",
        "anchors": dict(ANCHORS),
        "bootstrap": {"iterations": 10000, "subsample_fraction": 1.0},
        "histogram_bins": 20,
    }
    with open(os.path.join(out_dir, "config.json"), "w", encoding="utf-8") as fp:
        json.dump(config, fp, indent=2, sort_keys=True)
        fp.write("\n")

    truth = DatasetTruth(
        communities_t1=label_t1,
        communities_t2=label_t2,
        movers=sorted(mover_set),
        sentiment_t1=sentiment_t1,
        sentiment_t2=sentiment_t2,
        drift=drift,
    )
    with open(os.path.join(out_dir, "truth.json"), "w", encoding="utf-8") as fp:
        json.dump(truth.to_dict(), fp, indent=2, sort_keys=True)
        fp.write("\n")
    return truth
