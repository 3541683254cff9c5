from __future__ import annotations

import io
import json

import numpy as np
import pytest

from retweetshift.graph import InteractionGraph
from retweetshift.ingest import TweetRecord


def make_graph(edges: list[tuple[str, str, int]], window: str = "w") -> InteractionGraph:
    g = InteractionGraph(window=window)
    for src, dst, w in edges:
        g._add_edge(src, dst, w)
    return g


def random_graph(
    n: int, n_edges: int, seed: int, max_weight: int = 3, window: str = "w"
) -> InteractionGraph:
    rng = np.random.default_rng(seed)
    g = InteractionGraph(window=window)
    for v in range(n):
        g._add_node(f"u{v:03d}")
    added = 0
    while added < n_edges:
        i, j = rng.integers(0, n, 2)
        if i == j:
            continue
        g._add_edge(f"u{int(i):03d}", f"u{int(j):03d}", int(rng.integers(1, max_weight + 1)))
        added += 1
    return g


@pytest.fixture
def two_clique_graph() -> tuple[InteractionGraph, list[int]]:
    """Two disconnected bidirectional 6-cliques; planted split is optimal."""
    g = InteractionGraph(window="w")
    for c in range(2):
        names = [f"c{c}_{k}" for k in range(6)]
        for a in names:
            for b in names:
                if a != b:
                    g._add_edge(a, b, 1)
    return g, [0] * 6 + [1] * 6


def record_line(
    tweet_id: str,
    author: str,
    ts: int,
    text: str = "hello",
    retweeted: str | None = None,
    handle: str | None = None,
) -> str:
    obj = {
        "tweet_id": tweet_id,
        "author_id": author,
        "author_handle": handle or author,
        "timestamp": ts,
        "text": text,
    }
    if retweeted is not None:
        obj["retweeted_author_id"] = retweeted
        obj["retweeted_author_handle"] = retweeted
    return json.dumps(obj)


def records_stream(lines: list[str]) -> io.StringIO:
    return io.StringIO("\n".join(lines) + "\n")


def make_record(
    tweet_id: str,
    author: str,
    ts: int,
    text: str = "hello",
    retweeted: str | None = None,
) -> TweetRecord:
    return TweetRecord(
        tweet_id=tweet_id,
        author_id=author,
        author_handle=author,
        timestamp=ts,
        text=text,
        retweeted_author_id=retweeted,
        retweeted_author_handle=retweeted,
    )
