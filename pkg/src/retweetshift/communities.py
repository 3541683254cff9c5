"""Two-block community inference on directed weighted retweet graphs.

The model is a flat microcanonical degree-corrected stochastic block model
for directed multigraphs: edge weights count parallel edges.  A partition
is scored by its description length in nats,

    DL = S + L_edges + L_degrees + L_partition

where S is the exact log-count of stub matchings compatible with the
observed multigraph given block-level edge counts and node degrees,

    S = sum_r ln(e_out_r!) + sum_r ln(e_in_r!) - sum_rs ln(e_rs!)
        - sum_v [ln(k_out_v!) + ln(k_in_v!)] + sum_(i,j) ln(A_ij!),

and the parameter terms are uniform-prior code lengths:

    L_edges    = ln multiset(B^2, E)
    L_degrees  = sum_r [ln multiset(n_r, e_out_r) + ln multiset(n_r, e_in_r)]
    L_partition = ln multiset(B, N) + ln N! - sum_r ln(n_r!)

with multiset(n, k) = C(n + k - 1, k).  Every term is nonnegative, so DL is
a finite nonnegative real; lower is better.

Inference is best-of-N-chains MCMC: a deterministic agglomerative merge
phase produces the starting partition, then Metropolis-Hastings single-node
moves with neighbor-block proposals refine it.  Proposals that would empty
a block are skipped so the returned partition keeps every block populated.
"""

from __future__ import annotations

import csv
import logging
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import DataError
from .graph import InteractionGraph, UserId

logger = logging.getLogger(__name__)

REPUBLICAN = "republican"
DEMOCRATIC = "democratic"


class AmbiguousAnchorsError(DataError):
    """Anchor accounts do not single out one block per label."""


class MissingAnchorsError(DataError):
    """No anchor account of some label is present in the graph."""


@dataclass
class McmcConfig:
    """Knobs for `infer_partition`; defaults match the documented scheme."""

    seed: int = 0
    sweeps: int = 1000
    chains: int = 4
    epsilon: float | None = None  # None -> 1/B
    init: str = "agglomerative"  # or "random"
    early_stop_window: int = 50
    early_stop_tol: float = 1e-6


@dataclass
class Partition:
    """Block assignment for every node plus the model score that chose it."""

    assignment: list[int]
    B: int
    description_length: float
    seed: int
    sweeps: int

    def block_members(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {b: [] for b in range(self.B)}
        for idx, blk in enumerate(self.assignment):
            out[blk].append(idx)
        return out


@dataclass
class CommunityLabels:
    """Political labels per block, with the anchor evidence that chose them."""

    window: str
    block_labels: dict[int, str]
    anchor_evidence: dict[str, dict[str, int | None]]
    membership: dict[UserId, str]

    def members(self, label: str) -> set[UserId]:
        return {u for u, lab in self.membership.items() if lab == label}


# ---------------------------------------------------------------------------
# description length machinery


class _Adjacency:
    """Per-node CSR-ish views of a graph, shared by all chains."""

    def __init__(self, graph: InteractionGraph):
        n = graph.n_nodes
        out_lists: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        in_lists: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for (i, j), w in graph.edges.items():
            out_lists[i].append((j, w))
            in_lists[j].append((i, w))
        self.n = n
        self.out_idx = [np.array([t for t, _ in row], dtype=np.int64) for row in out_lists]
        self.out_w = [np.array([w for _, w in row], dtype=np.float64) for row in out_lists]
        self.in_idx = [np.array([t for t, _ in row], dtype=np.int64) for row in in_lists]
        self.in_w = [np.array([w for _, w in row], dtype=np.float64) for row in in_lists]
        self.kout = [int(w.sum()) for w in self.out_w]
        self.kin = [int(w.sum()) for w in self.in_w]
        self.E = sum(self.kout)
        # ln k! lookups for every count this graph can produce
        self.lf: list[float] = gammaln(np.arange(self.n + self.E + 3, dtype=np.float64) + 1.0).tolist()
        # constant (assignment-independent) part of S
        self.s_const = float(
            sum(self.lf[w] for w in map(int, graph.edges.values()))
            - sum(self.lf[k] for k in self.kout)
            - sum(self.lf[k] for k in self.kin)
        )


def _lmultiset(lf: list[float], n: int, k: int) -> float:
    """ln of the number of k-multisets from n items, C(n+k-1, k)."""
    if k == 0:
        return 0.0
    return lf[n + k - 1] - lf[k] - lf[n - 1]


class _BlockState:
    """Mutable block-level aggregates for one partition of one graph."""

    def __init__(self, adj: _Adjacency, assignment: list[int], B: int):
        n = adj.n
        if len(assignment) != n:
            raise DataError(
                f"assignment covers {len(assignment)} nodes, graph has {n}"
            )
        for idx, blk in enumerate(assignment):
            if not 0 <= blk < B:
                raise DataError(f"node {idx} assigned to unknown block {blk}")
        self.adj = adj
        self.B = B
        self.b = list(assignment)
        self.b_np = np.array(assignment, dtype=np.int64)
        self.n_r = [0] * B
        self.eo = [0] * B
        self.ei = [0] * B
        self.e = [[0] * B for _ in range(B)]
        for v, blk in enumerate(assignment):
            self.n_r[blk] += 1
            self.eo[blk] += adj.kout[v]
            self.ei[blk] += adj.kin[v]
        for v in range(n):
            bv = assignment[v]
            row = self.e[bv]
            for t, w in zip(adj.out_idx[v], adj.out_w[v]):
                row[assignment[int(t)]] += int(w)

    def dl_partition_terms(self) -> float:
        """The part of the description length that depends on the assignment."""
        lf = self.adj.lf
        total = 0.0
        for r in range(self.B):
            total += lf[self.eo[r]] + lf[self.ei[r]]
            total += _lmultiset(lf, self.n_r[r], self.eo[r])
            total += _lmultiset(lf, self.n_r[r], self.ei[r])
            total -= lf[self.n_r[r]]
            row = self.e[r]
            for s in range(self.B):
                if row[s]:
                    total -= lf[row[s]]
        return total

    def dl_constants(self) -> float:
        lf = self.adj.lf
        n, E, B = self.adj.n, self.adj.E, self.B
        l_edges = _lbinom_big(B * B + E - 1, E)
        l_part = _lmultiset_big(B, n) + lf[n]
        return self.adj.s_const + l_edges + l_part

    def description_length(self) -> float:
        return self.dl_partition_terms() + self.dl_constants()

    def neighbor_block_weights(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        """Weighted block histograms of v's out- and in-neighbors."""
        adj = self.adj
        out_c = np.bincount(self.b_np[adj.out_idx[v]], weights=adj.out_w[v], minlength=self.B)
        in_c = np.bincount(self.b_np[adj.in_idx[v]], weights=adj.in_w[v], minlength=self.B)
        return out_c, in_c

    def move_delta(
        self, v: int, s: int, out_c: np.ndarray | None = None, in_c: np.ndarray | None = None
    ) -> float:
        """Change in description length if node v moves to block s.

        Exact: matches a from-scratch recomputation up to float rounding.
        """
        r = self.b[v]
        if s == r:
            return 0.0
        if out_c is None or in_c is None:
            out_c, in_c = self.neighbor_block_weights(v)
        lf = self.adj.lf
        ko, ki = self.adj.kout[v], self.adj.kin[v]
        eo_r, ei_r, eo_s, ei_s = self.eo[r], self.ei[r], self.eo[s], self.ei[s]
        nr, ns = self.n_r[r], self.n_r[s]

        delta = lf[eo_r - ko] - lf[eo_r] + lf[eo_s + ko] - lf[eo_s]
        delta += lf[ei_r - ki] - lf[ei_r] + lf[ei_s + ki] - lf[ei_s]
        delta += (
            _lmultiset(lf, nr - 1, eo_r - ko)
            - _lmultiset(lf, nr, eo_r)
            + _lmultiset(lf, nr - 1, ei_r - ki)
            - _lmultiset(lf, nr, ei_r)
        )
        delta += (
            _lmultiset(lf, ns + 1, eo_s + ko)
            - _lmultiset(lf, ns, eo_s)
            + _lmultiset(lf, ns + 1, ei_s + ki)
            - _lmultiset(lf, ns, ei_s)
        )
        delta += lf[nr] - lf[nr - 1] + lf[ns] - lf[ns + 1]

        cells: dict[tuple[int, int], int] = {}
        for t in range(self.B):
            oc = int(out_c[t])
            if oc:
                cells[(r, t)] = cells.get((r, t), 0) - oc
                cells[(s, t)] = cells.get((s, t), 0) + oc
            ic = int(in_c[t])
            if ic:
                cells[(t, r)] = cells.get((t, r), 0) - ic
                cells[(t, s)] = cells.get((t, s), 0) + ic
        for (a, c), d in cells.items():
            if d:
                old = self.e[a][c]
                delta += lf[old] - lf[old + d]
        return delta

    def apply_move(
        self, v: int, s: int, out_c: np.ndarray | None = None, in_c: np.ndarray | None = None
    ) -> None:
        r = self.b[v]
        if s == r:
            return
        if out_c is None or in_c is None:
            out_c, in_c = self.neighbor_block_weights(v)
        ko, ki = self.adj.kout[v], self.adj.kin[v]
        self.eo[r] -= ko
        self.eo[s] += ko
        self.ei[r] -= ki
        self.ei[s] += ki
        self.n_r[r] -= 1
        self.n_r[s] += 1
        for t in range(self.B):
            oc = int(out_c[t])
            if oc:
                self.e[r][t] -= oc
                self.e[s][t] += oc
            ic = int(in_c[t])
            if ic:
                self.e[t][r] -= ic
                self.e[t][s] += ic
        self.b[v] = s
        self.b_np[v] = s


def _lbinom_big(n: int, k: int) -> float:
    if k == 0 or k == n:
        return 0.0
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _lmultiset_big(n: int, k: int) -> float:
    if k == 0:
        return 0.0
    return _lbinom_big(n + k - 1, k)


def description_length(graph: InteractionGraph, assignment: list[int], B: int) -> float:
    """Description length in nats of `assignment` for `graph`; pure function."""
    if B < 1:
        raise DataError(f"block count must be >= 1, got {B}")
    adj = _Adjacency(graph)
    return _BlockState(adj, list(assignment), B).description_length()


# ---------------------------------------------------------------------------
# agglomerative initialization


def _agglomerate(adj: _Adjacency, B: int) -> list[int]:
    """Greedy merges from n singletons down to B blocks.

    Rounds halve the block count: every round scores all merge candidates
    (block pairs joined by at least one edge; all remaining pairs if none)
    against the round-start state and applies the best non-overlapping
    merges.  Ties break toward the lowest node index.  Deterministic.
    """
    n = adj.n
    lf = adj.lf
    row: dict[int, dict[int, int]] = {}
    col: dict[int, dict[int, int]] = {}
    eo: dict[int, int] = {}
    ei: dict[int, int] = {}
    size: dict[int, int] = {}
    members: dict[int, list[int]] = {}
    for v in range(n):
        row[v] = {int(t): int(w) for t, w in zip(adj.out_idx[v], adj.out_w[v])}
        col[v] = {int(t): int(w) for t, w in zip(adj.in_idx[v], adj.in_w[v])}
        eo[v] = adj.kout[v]
        ei[v] = adj.kin[v]
        size[v] = 1
        members[v] = [v]

    def ldeg(nn: int, ee: int) -> float:
        return _lmultiset(lf, nn, ee)

    def merge_delta(a: int, b: int) -> float:
        meo, mei = eo[a] + eo[b], ei[a] + ei[b]
        na, nb = size[a], size[b]
        delta = lf[meo] - lf[eo[a]] - lf[eo[b]] + lf[mei] - lf[ei[a]] - lf[ei[b]]
        delta += ldeg(na + nb, meo) - ldeg(na, eo[a]) - ldeg(nb, eo[b])
        delta += ldeg(na + nb, mei) - ldeg(na, ei[a]) - ldeg(nb, ei[b])
        delta -= lf[na + nb] - lf[na] - lf[nb]
        before = 0.0
        after = 0.0
        pair = (a, b)
        diag = 0
        out_keys = set(row[a]) | set(row[b])
        for t in out_keys:
            wa = row[a].get(t, 0)
            wb = row[b].get(t, 0)
            if wa:
                before += lf[wa]
            if wb:
                before += lf[wb]
            if t in pair:
                diag += wa + wb
            elif wa + wb:
                after += lf[wa + wb]
        in_keys = (set(col[a]) | set(col[b])) - set(pair)
        for t in in_keys:
            wa = col[a].get(t, 0)
            wb = col[b].get(t, 0)
            if wa:
                before += lf[wa]
            if wb:
                before += lf[wb]
            if wa + wb:
                after += lf[wa + wb]
        if diag:
            after += lf[diag]
        delta += before - after
        return delta

    def merge(a: int, b: int) -> None:
        # fold block b into block a; a keeps the lower id by construction
        new_diag = (
            row[a].get(a, 0) + row[a].get(b, 0) + row[b].get(a, 0) + row[b].get(b, 0)
        )
        new_row: dict[int, int] = {}
        for src in (row[a], row[b]):
            for t, w in src.items():
                if t not in (a, b):
                    new_row[t] = new_row.get(t, 0) + w
        new_col: dict[int, int] = {}
        for src in (col[a], col[b]):
            for t, w in src.items():
                if t not in (a, b):
                    new_col[t] = new_col.get(t, 0) + w
        if new_diag:
            new_row[a] = new_diag
            new_col[a] = new_diag
        for t in new_row:
            if t != a:
                col[t].pop(a, None)
                col[t].pop(b, None)
                col[t][a] = new_row[t]
        for t in new_col:
            if t != a:
                row[t].pop(a, None)
                row[t].pop(b, None)
                row[t][a] = new_col[t]
        row[a] = new_row
        col[a] = new_col
        del row[b], col[b]
        eo[a] += eo.pop(b)
        ei[a] += ei.pop(b)
        size[a] += size.pop(b)
        members[a].extend(members.pop(b))

    n_blocks = n
    while n_blocks > B:
        target = max(B, n_blocks // 2)
        pairs = {
            (min(a, t), max(a, t))
            for a in row
            for t in row[a]
            if t != a
        }
        if not pairs:
            alive = sorted(row)
            pairs = {
                (alive[i], alive[j])
                for i in range(len(alive))
                for j in range(i + 1, len(alive))
            }
        if not pairs:
            break
        scored = sorted((merge_delta(a, b), a, b) for a, b in pairs)
        used: set[int] = set()
        for _, a, b in scored:
            if n_blocks <= target:
                break
            if a in used or b in used:
                continue
            merge(a, b)
            used.add(a)
            used.add(b)
            n_blocks -= 1

    assignment = [0] * n
    for new_id, old_id in enumerate(sorted(members)):
        for v in members[old_id]:
            assignment[v] = new_id
    return assignment


# ---------------------------------------------------------------------------
# MCMC


def _run_chain(
    adj: _Adjacency,
    init_assignment: list[int],
    B: int,
    rng: np.random.Generator,
    cfg: McmcConfig,
) -> tuple[list[int], float, int]:
    """One Metropolis-Hastings chain; returns (best assignment, dl terms, sweeps run)."""
    state = _BlockState(adj, init_assignment, B)
    eps = cfg.epsilon if cfg.epsilon is not None else 1.0 / B
    dlp = state.dl_partition_terms()
    best = dlp
    best_b = list(state.b)
    window_ref = best
    stall = 0
    executed = 0
    n = adj.n
    for _ in range(cfg.sweeps):
        executed += 1
        for v in range(n):
            out_c, in_c = state.neighbor_block_weights(v)
            c = out_c + in_c
            r = state.b[v]
            u = rng.random() * (float(c.sum()) + B * eps)
            cum = 0.0
            s = B - 1
            for t in range(B):
                cum += float(c[t]) + eps
                if u < cum:
                    s = t
                    break
            if s == r:
                continue
            if state.n_r[r] == 1:
                continue  # keep every block populated
            delta = state.move_delta(v, s, out_c, in_c)
            log_acc = -delta + math.log(float(c[r]) + eps) - math.log(float(c[s]) + eps)
            if log_acc >= 0.0 or math.log(rng.random()) < log_acc:
                state.apply_move(v, s, out_c, in_c)
                dlp += delta
        if dlp < best:
            best = dlp
            best_b = list(state.b)
        if best < window_ref - cfg.early_stop_tol:
            window_ref = best
            stall = 0
        else:
            stall += 1
            if stall >= cfg.early_stop_window:
                break
    return best_b, best, executed


def infer_partition(
    graph: InteractionGraph,
    B: int = 2,
    cfg: McmcConfig | None = None,
) -> Partition:
    """Best-of-chains MAP search for the B-block partition of `graph`.

    Deterministic given (graph, B, cfg): the agglomerative start is shared
    by every chain and chain i draws from a generator seeded seed + i.  The
    chain with the lowest recomputed description length wins; ties go to
    the lowest chain index.
    """
    cfg = cfg or McmcConfig()
    n = graph.n_nodes
    if n == 0:
        raise DataError("cannot infer a partition of an empty graph")
    if B < 1:
        raise DataError(f"block count must be >= 1, got {B}")
    if B > n:
        raise DataError(f"block count {B} exceeds node count {n}")
    if cfg.sweeps < 1:
        raise DataError(f"sweep count must be >= 1, got {cfg.sweeps}")
    if cfg.chains < 1:
        raise DataError(f"chain count must be >= 1, got {cfg.chains}")
    if cfg.init not in ("agglomerative", "random"):
        raise DataError(f"unknown initialization mode {cfg.init!r}")

    adj = _Adjacency(graph)
    if B == 1:
        assignment = [0] * n
        state = _BlockState(adj, assignment, B)
        return Partition(assignment, B, state.description_length(), cfg.seed, 0)

    shared_init: list[int] | None = None
    if cfg.init == "agglomerative":
        shared_init = _agglomerate(adj, B)

    best: tuple[float, int] | None = None
    best_assignment: list[int] = []
    best_sweeps = 0
    for chain in range(cfg.chains):
        rng = np.random.default_rng(cfg.seed + chain)
        if shared_init is not None:
            init = shared_init
        else:
            perm = rng.permutation(n)
            init = [0] * n
            for pos, v in enumerate(perm):
                init[int(v)] = pos % B if pos < B else int(rng.integers(0, B))
        chain_b, _, executed = _run_chain(adj, init, B, rng, cfg)
        dl = _BlockState(adj, chain_b, B).description_length()
        key = (dl, chain)
        if best is None or key < best:
            best = key
            best_assignment = chain_b
            best_sweeps = executed
    assert best is not None
    return Partition(
        assignment=best_assignment,
        B=B,
        description_length=best[0],
        seed=cfg.seed,
        sweeps=best_sweeps,
    )


# ---------------------------------------------------------------------------
# anchor labeling


def label_communities(
    partition: Partition,
    graph: InteractionGraph,
    anchors: dict[str, str],
) -> CommunityLabels:
    """Label blocks by where the anchor handles landed.

    `anchors` maps handle -> label.  Each block gets the label whose present
    anchors form a majority inside it; absent anchors are recorded but only
    fatal when a label has none present.  Splits without a majority, or two
    labels claiming the same block, raise AmbiguousAnchorsError.
    """
    handle_to_user = {h.lower(): u for u, h in graph.handles.items()}
    evidence: dict[str, dict[str, int | None]] = {}
    label_blocks: dict[str, list[int]] = {}
    for handle, label in anchors.items():
        user = handle_to_user.get(handle.lower())
        block: int | None = None
        if user is not None and graph.has_node(user):
            block = partition.assignment[graph.index_of(user)]
        evidence.setdefault(label, {})[handle] = block
        if block is not None:
            label_blocks.setdefault(label, []).append(block)

    block_labels: dict[int, str] = {}
    for label in sorted(evidence):
        blocks = label_blocks.get(label, [])
        if not blocks:
            raise MissingAnchorsError(f"no anchor for label {label!r} present in graph")
        counts = Counter(blocks).most_common()
        if len(counts) > 1 and counts[0][1] == counts[1][1]:
            raise AmbiguousAnchorsError(
                f"anchors for label {label!r} split {dict(Counter(blocks))} with no majority"
            )
        block = counts[0][0]
        if block in block_labels:
            raise AmbiguousAnchorsError(
                f"labels {block_labels[block]!r} and {label!r} both resolve to block {block}"
            )
        block_labels[block] = label

    membership = {
        user: block_labels[partition.assignment[idx]]
        for idx, user in enumerate(graph.node_ids)
        if partition.assignment[idx] in block_labels
    }
    return CommunityLabels(
        window=graph.window,
        block_labels=block_labels,
        anchor_evidence=evidence,
        membership=membership,
    )


def export_partition(
    partition: Partition,
    graph: InteractionGraph,
    labels: CommunityLabels | None,
    path: str,
) -> None:
    """Write `user_id,block,label` CSV in node index order."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as fp:
            writer = csv.writer(fp)
            writer.writerow(["user_id", "block", "label"])
            for idx, user in enumerate(graph.node_ids):
                block = partition.assignment[idx]
                label = ""
                if labels is not None:
                    label = labels.block_labels.get(block, "")
                writer.writerow([user, block, label])
    except OSError as exc:
        raise DataError(f"cannot write partition to {path}: {exc}") from exc


def load_partition(path: str) -> tuple[dict[UserId, int], dict[UserId, str]]:
    """Read a partition CSV back as (user -> block, user -> label)."""
    blocks: dict[UserId, int] = {}
    labels: dict[UserId, str] = {}
    try:
        with open(path, newline="", encoding="utf-8") as fp:
            for row in csv.DictReader(fp):
                blocks[row["user_id"]] = int(row["block"])
                if row.get("label"):
                    labels[row["user_id"]] = row["label"]
    except OSError as exc:
        raise DataError(f"cannot read partition from {path}: {exc}") from exc
    except (KeyError, ValueError) as exc:
        raise DataError(f"bad partition file {path}: {exc}") from exc
    return blocks, labels
