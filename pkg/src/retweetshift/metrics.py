"""Per-user topological features of an interaction graph.

Direction convention matters everywhere here: edges run creator -> retweeter,
so a user's *in*-degree counts the retweets they made and their *out*-degree
counts the times they were retweeted.

Betweenness deliberately ignores edge weights: retweet multiplicity is a
volume, not a path length, so geodesics are computed on the unweighted
digraph.  PageRank, by contrast, uses weight-proportional transitions.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DataError
from .graph import InteractionGraph, UserId


@dataclass(frozen=True)
class UserMetrics:
    user: UserId
    in_degree: int
    out_degree: int
    pagerank: float
    betweenness: float


def degrees(graph: InteractionGraph) -> dict[UserId, tuple[int, int]]:
    """Weighted (in_degree, out_degree) per user."""
    win, wout = graph.weighted_degrees()
    return {u: (win[i], wout[i]) for i, u in enumerate(graph.node_ids)}


def pagerank(
    graph: InteractionGraph,
    damping: float = 0.85,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> dict[UserId, float]:
    """Weighted PageRank by power iteration.

    Transition probability out of u is proportional to edge weight; the rank
    mass of dangling nodes is redistributed uniformly.  Converged when the
    L1 change between iterations drops below `tol`.
    """
    n = graph.n_nodes
    if n == 0:
        raise DataError("pagerank of an empty graph")
    src = np.fromiter((i for (i, _) in graph.edges), dtype=np.int64, count=len(graph.edges))
    dst = np.fromiter((j for (_, j) in graph.edges), dtype=np.int64, count=len(graph.edges))
    wgt = np.fromiter(graph.edges.values(), dtype=np.float64, count=len(graph.edges))

    out_strength = np.zeros(n)
    np.add.at(out_strength, src, wgt)
    dangling = out_strength == 0.0
    # precompute per-edge transition probability
    trans = wgt / out_strength[src] if len(wgt) else wgt

    x = np.full(n, 1.0 / n)
    base = (1.0 - damping) / n
    residual = float("inf")
    for _ in range(max_iter):
        flow = np.zeros(n)
        if len(trans):
            np.add.at(flow, dst, x[src] * trans)
        dangling_mass = x[dangling].sum() / n
        x_new = base + damping * (flow + dangling_mass)
        residual = float(np.abs(x_new - x).sum())
        x = x_new
        if residual < tol:
            return {u: float(x[i]) for i, u in enumerate(graph.node_ids)}
    raise ConvergenceError(
        f"pagerank did not converge in {max_iter} iterations (residual {residual:.3e})",
        residual=residual,
    )


def betweenness(graph: InteractionGraph) -> dict[UserId, float]:
    """Directed unweighted shortest-path betweenness, Brandes accumulation.

    Normalized by (n-1)(n-2); graphs with fewer than 3 nodes score all
    zeros.  Sources are processed in index order and successors in sorted
    order, keeping accumulation bitwise reproducible.
    """
    n = graph.n_nodes
    score = [0.0] * n
    if n >= 3:
        adj: list[list[int]] = [[] for _ in range(n)]
        for (i, j) in graph.edges:
            adj[i].append(j)
        for row in adj:
            row.sort()
        for s in range(n):
            # single-source shortest path counts
            dist = [-1] * n
            sigma = [0.0] * n
            preds: list[list[int]] = [[] for _ in range(n)]
            dist[s] = 0
            sigma[s] = 1.0
            queue: deque[int] = deque([s])
            order: list[int] = []
            while queue:
                v = queue.popleft()
                order.append(v)
                dv = dist[v]
                sv = sigma[v]
                for w in adj[v]:
                    if dist[w] < 0:
                        dist[w] = dv + 1
                        queue.append(w)
                    if dist[w] == dv + 1:
                        sigma[w] += sv
                        preds[w].append(v)
            # dependency accumulation in reverse BFS order
            delta = [0.0] * n
            for w in reversed(order):
                coeff = (1.0 + delta[w]) / sigma[w]
                for v in preds[w]:
                    delta[v] += sigma[v] * coeff
                if w != s:
                    score[w] += delta[w]
        norm = float((n - 1) * (n - 2))
        score = [x / norm for x in score]
    return {u: score[i] for i, u in enumerate(graph.node_ids)}


def collect_metrics(
    graph: InteractionGraph,
    damping: float = 0.85,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> list[UserMetrics]:
    """All four metrics per user, in node index order."""
    deg = degrees(graph)
    pr = pagerank(graph, damping=damping, tol=tol, max_iter=max_iter)
    bc = betweenness(graph)
    return [
        UserMetrics(u, deg[u][0], deg[u][1], pr[u], bc[u]) for u in graph.node_ids
    ]


def export_metrics(metrics: list[UserMetrics], path: str) -> None:
    """Write `user_id,in_degree,out_degree,pagerank,betweenness` CSV."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as fp:
            writer = csv.writer(fp)
            writer.writerow(["user_id", "in_degree", "out_degree", "pagerank", "betweenness"])
            for m in metrics:
                writer.writerow([m.user, m.in_degree, m.out_degree, repr(m.pagerank), repr(m.betweenness)])
    except OSError as exc:
        raise DataError(f"cannot write metrics to {path}: {exc}") from exc


def load_metrics(path: str) -> list[UserMetrics]:
    try:
        out = []
        with open(path, newline="", encoding="utf-8") as fp:
            for row in csv.DictReader(fp):
                out.append(
                    UserMetrics(
                        user=row["user_id"],
                        in_degree=int(row["in_degree"]),
                        out_degree=int(row["out_degree"]),
                        pagerank=float(row["pagerank"]),
                        betweenness=float(row["betweenness"]),
                    )
                )
        return out
    except OSError as exc:
        raise DataError(f"cannot read metrics from {path}: {exc}") from exc
    except (KeyError, ValueError) as exc:
        raise DataError(f"bad metrics file {path}: {exc}") from exc
