"""Directed weighted retweet graph for one time window.

Edges point from the content creator to the retweeter, so an edge u -> v
with weight w means "v retweeted u's content w times".  Parallel retweet
events between the same ordered pair are folded into the edge weight.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import IO, Iterable

from .errors import DataError
from .ingest import TweetRecord

UserId = str


@dataclass
class InteractionGraph:
    """Immutable-after-build directed weighted graph.

    node_ids[i] is the user at dense index i; indices are assigned in first
    touch order during construction, which makes them deterministic for a
    given input order.  `edges` maps (src_index, dst_index) -> weight.
    """

    window: str
    node_ids: list[UserId] = field(default_factory=list)
    edges: dict[tuple[int, int], int] = field(default_factory=dict)
    handles: dict[UserId, str] = field(default_factory=dict)

    _index: dict[UserId, int] = field(default_factory=dict, repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def total_weight(self) -> int:
        return sum(self.edges.values())

    def index_of(self, user: UserId) -> int:
        return self._index[user]

    def has_node(self, user: UserId) -> bool:
        return user in self._index

    def _add_node(self, user: UserId) -> int:
        idx = self._index.get(user)
        if idx is None:
            idx = len(self.node_ids)
            self._index[user] = idx
            self.node_ids.append(user)
        return idx

    def _add_edge(self, src: UserId, dst: UserId, weight: int = 1) -> None:
        if src == dst:
            raise DataError(f"self-loop on user {src!r}")
        if weight < 1:
            raise DataError(f"edge weight must be >= 1, got {weight}")
        i, j = self._add_node(src), self._add_node(dst)
        self.edges[(i, j)] = self.edges.get((i, j), 0) + weight

    def edge_list(self) -> list[tuple[UserId, UserId, int]]:
        """Edges as (src_user, dst_user, weight), sorted by (src, dst)."""
        rows = [
            (self.node_ids[i], self.node_ids[j], w) for (i, j), w in self.edges.items()
        ]
        rows.sort(key=lambda r: (r[0], r[1]))
        return rows

    def weighted_degrees(self) -> tuple[list[int], list[int]]:
        """Per-index (in_weight, out_weight) sums."""
        n = self.n_nodes
        win = [0] * n
        wout = [0] * n
        for (i, j), w in self.edges.items():
            wout[i] += w
            win[j] += w
        return win, wout

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, InteractionGraph):
            return NotImplemented
        return (
            self.window == other.window
            and set(self.node_ids) == set(other.node_ids)
            and {
                (self.node_ids[i], self.node_ids[j]): w
                for (i, j), w in self.edges.items()
            }
            == {
                (other.node_ids[i], other.node_ids[j]): w
                for (i, j), w in other.edges.items()
            }
        )


def build_graph(records: Iterable[TweetRecord], window: str) -> InteractionGraph:
    """Fold retweet events into a creator->retweeter weighted digraph.

    Only retweet records contribute; the creator node is touched first so
    index order follows the event stream.  The latest observed handle (by
    timestamp, then input order) is kept for each user.
    """
    g = InteractionGraph(window=window)
    handle_ts: dict[UserId, int] = {}

    def note_handle(user: UserId, handle: str | None, ts: int) -> None:
        if handle is None:
            return
        if user not in g.handles or ts >= handle_ts[user]:
            g.handles[user] = handle
            handle_ts[user] = ts

    for rec in records:
        if rec.retweeted_author_id is None:
            note_handle(rec.author_id, rec.author_handle, rec.timestamp)
            continue
        g._add_edge(rec.retweeted_author_id, rec.author_id, 1)
        note_handle(rec.retweeted_author_id, rec.retweeted_author_handle, rec.timestamp)
        note_handle(rec.author_id, rec.author_handle, rec.timestamp)
    return g


def filter_by_activity(graph: InteractionGraph, threshold: int = 5) -> InteractionGraph:
    """Keep users who made or received strictly more than `threshold` retweets.

    Made/received counts are weighted event counts on the *unfiltered* graph
    (a user retweeting one account 6 times passes).  Single pass: counts are
    not recomputed after nodes are removed, so kept nodes may end up with
    fewer surviving edges, possibly none.
    """
    if threshold < 0:
        raise DataError(f"activity threshold must be >= 0, got {threshold}")
    win, wout = graph.weighted_degrees()
    # made = retweets the user did = incoming weight under creator->retweeter
    keep = [i for i in range(graph.n_nodes) if win[i] > threshold or wout[i] > threshold]
    keep_set = set(keep)
    out = InteractionGraph(window=graph.window)
    for i in keep:
        user = graph.node_ids[i]
        out._add_node(user)
        if user in graph.handles:
            out.handles[user] = graph.handles[user]
    for (i, j), w in graph.edges.items():
        if i in keep_set and j in keep_set:
            out.edges[(out._index[graph.node_ids[i]], out._index[graph.node_ids[j]])] = w
    return out


def export_edgelist(graph: InteractionGraph, path: str) -> None:
    """Write `src,dst,weight` CSV, rows sorted by (src, dst)."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as fp:
            writer = csv.writer(fp)
            writer.writerow(["src", "dst", "weight"])
            for src, dst, w in graph.edge_list():
                writer.writerow([src, dst, w])
    except OSError as exc:
        raise DataError(f"cannot write edge list to {path}: {exc}") from exc


def import_edgelist(path: str, window: str, nodes_path: str | None = None) -> InteractionGraph:
    """Read an edge-list CSV back into a graph.

    If `nodes_path` is given, the node table is loaded first so isolated
    nodes and handles survive the round trip.
    """
    g = InteractionGraph(window=window)
    try:
        if nodes_path is not None:
            with open(nodes_path, newline="", encoding="utf-8") as fp:
                for row in csv.DictReader(fp):
                    g._add_node(row["user_id"])
                    if row.get("handle"):
                        g.handles[row["user_id"]] = row["handle"]
        with open(path, newline="", encoding="utf-8") as fp:
            for row in csv.DictReader(fp):
                g._add_edge(row["src"], row["dst"], int(row["weight"]))
    except OSError as exc:
        raise DataError(f"cannot read edge list from {path}: {exc}") from exc
    except (KeyError, ValueError) as exc:
        raise DataError(f"bad edge list {path}: {exc}") from exc
    return g


def export_node_table(graph: InteractionGraph, path: str) -> None:
    """Write `user_id,handle,in_count,out_count` CSV in node index order."""
    win, wout = graph.weighted_degrees()
    try:
        with open(path, "w", newline="", encoding="utf-8") as fp:
            writer = csv.writer(fp)
            writer.writerow(["user_id", "handle", "in_count", "out_count"])
            for i, user in enumerate(graph.node_ids):
                writer.writerow([user, graph.handles.get(user, ""), win[i], wout[i]])
    except OSError as exc:
        raise DataError(f"cannot write node table to {path}: {exc}") from exc
