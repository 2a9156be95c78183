"""Node influence metrics for directed, weighted supply networks.

Twelve metrics are exposed under short column codes:

==  =============================================================
ID  in-degree fraction, k_in / (N - 1)
OD  out-degree fraction, k_out / (N - 1)
CC  clustering coefficient over the union in/out neighborhood
BC  betweenness, raw geodesic sums on the directed unweighted graph
IC  in-closeness (reachability-weighted, disconnected-safe)
OC  out-closeness
PR  PageRank on calorie-weighted transitions
HU  HITS hub score (unweighted by default)
AU  HITS authority score
IM  within-module degree z-score (see foodnet.community)
OM  outside-module degree z-score
MI  log trade-imbalance index (sums to zero over the network)
==  =============================================================

All scoring functions return plain ``{node: value}`` dicts over the full
node set and iterate nodes and edges in canonical sorted order, so
repeated runs produce bit-identical floats.  ``RankingTable`` attaches
deterministic 1-based ranks (score descending, id ascending).
"""

from __future__ import annotations

import csv
import json
import math
from collections.abc import Mapping
from dataclasses import dataclass

from .errors import DegenerateNetworkError, IterationLimitError
from .graph import SupplyNetwork

METRICS = ("ID", "OD", "CC", "BC", "IC", "OC", "PR", "HU", "AU", "IM", "OM", "MI")

#: Metrics whose scores depend on a module partition.
MODULE_METRICS = ("IM", "OM")


def rank_nodes(scores: Mapping[str, float]) -> list[str]:
    """Node ids sorted by score descending, ties broken by id ascending."""
    return sorted(scores, key=lambda v: (-scores[v], v))


@dataclass(frozen=True)
class RankingTable:
    """Scores plus deterministic ranks (1 = most influential)."""

    metric: str
    scores: dict[str, float]
    ranks: dict[str, int]

    @classmethod
    def from_scores(cls, metric: str, scores: Mapping[str, float]) -> "RankingTable":
        order = rank_nodes(scores)
        return cls(
            metric=metric,
            scores=dict(scores),
            ranks={v: i + 1 for i, v in enumerate(order)},
        )

    def ordered(self) -> list[str]:
        return sorted(self.ranks, key=self.ranks.__getitem__)

    def top(self, k: int = 10) -> list[tuple[str, float]]:
        return [(v, self.scores[v]) for v in self.ordered()[:k]]

    def to_csv(self, path, extra: Mapping[str, Mapping[str, float]] | None = None) -> None:
        """Write ``node,score,rank`` rows (plus any extra columns) by rank."""
        extra = extra or {}
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["node", "score", "rank", *extra])
            for v in self.ordered():
                writer.writerow(
                    [v, repr(self.scores[v]), self.ranks[v]]
                    + [repr(extra[c][v]) for c in extra]
                )

    def to_json(self) -> str:
        return json.dumps(
            {"metric": self.metric, "scores": self.scores, "ranks": self.ranks},
            indent=2,
            sort_keys=True,
        )


def _require_pair(net: SupplyNetwork) -> int:
    n = net.n_nodes
    if n < 2:
        raise DegenerateNetworkError(f"metric needs at least 2 nodes, network has {n}")
    return n


def in_degree_centrality(net: SupplyNetwork) -> dict[str, float]:
    n = _require_pair(net)
    return {v: len(net.in_adj[v]) / (n - 1) for v in net.node_list}


def out_degree_centrality(net: SupplyNetwork) -> dict[str, float]:
    n = _require_pair(net)
    return {v: len(net.out_adj[v]) / (n - 1) for v in net.node_list}


def clustering_coefficient(net: SupplyNetwork) -> dict[str, float]:
    """Fraction of ordered neighbor pairs joined by a directed edge.

    The neighborhood of a node is the union of its in- and out-neighbors;
    each directed edge among them counts once.  Nodes with fewer than two
    neighbors score 0.
    """
    _require_pair(net)
    und = net.undirected_adj
    out_adj = net.out_adj
    scores = {}
    for v in net.node_list:
        nbrs = sorted(und[v])
        k = len(nbrs)
        if k < 2:
            scores[v] = 0.0
            continue
        links = 0
        for u in nbrs:
            targets = out_adj[u]
            for w in nbrs:
                if w != u and w in targets:
                    links += 1
        scores[v] = links / (k * (k - 1))
    return scores


def _bfs_shortest_paths(
    adj: Mapping[str, Mapping[str, float]], source: str
) -> tuple[dict[str, int], dict[str, int]]:
    """Hop distances and geodesic counts from ``source`` (unweighted)."""
    dist = {source: 0}
    sigma = {source: 1}
    layer = [source]
    while layer:
        nxt = []
        for u in layer:
            du = dist[u]
            su = sigma[u]
            for v in adj[u]:
                if v not in dist:
                    dist[v] = du + 1
                    sigma[v] = 0
                    nxt.append(v)
                if dist[v] == du + 1:
                    sigma[v] += su
        layer = nxt
    return dist, sigma


def betweenness_centrality(net: SupplyNetwork) -> dict[str, float]:
    """Directed betweenness as a raw sum of geodesic fractions.

    For every ordered pair (j, k), j != k, the fraction of shortest j->k
    paths passing through an interior node i is added to i's score;
    unreachable pairs contribute nothing and endpoints are excluded.
    Pairs are visited in sorted order and each per-pair fraction is one
    exact integer division, which keeps the accumulation reproducible
    down to the last bit.
    """
    _require_pair(net)
    nodes = net.node_list
    out_adj = net.out_adj
    sp = {s: _bfs_shortest_paths(out_adj, s) for s in nodes}
    bc = {v: 0.0 for v in nodes}
    for j in nodes:
        dist_j, sigma_j = sp[j]
        for k in nodes:
            if k == j:
                continue
            d = dist_j.get(k)
            if d is None or d < 2:
                continue
            g = sigma_j[k]
            for i in nodes:
                if i == j or i == k:
                    continue
                di = dist_j.get(i)
                if di is None or not 0 < di < d:
                    continue
                dist_i, sigma_i = sp[i]
                if dist_i.get(k) == d - di:
                    bc[i] += (sigma_j[i] * sigma_i[k]) / g
    return bc


def betweenness_normalized(bc: Mapping[str, float]) -> dict[str, float]:
    """Raw betweenness divided by (N-1)(N-2), the ordered-pair count."""
    n = len(bc)
    if n < 3:
        return {v: 0.0 for v in bc}
    return {v: s / ((n - 1) * (n - 2)) for v, s in bc.items()}


def _closeness(net: SupplyNetwork, adj: Mapping[str, Mapping[str, float]]) -> dict[str, float]:
    n = _require_pair(net)
    scores = {}
    for v in net.node_list:
        dist, _ = _bfs_shortest_paths(adj, v)
        reached = len(dist) - 1
        total = sum(dist.values())
        if reached == 0 or total == 0:
            scores[v] = 0.0
        else:
            scores[v] = (reached / (n - 1)) * (reached / total)
    return scores


def out_closeness(net: SupplyNetwork) -> dict[str, float]:
    """Closeness over nodes reachable *from* each node.

    The classical inverse-distance form blows up on disconnected graphs,
    so the reachable count D enters twice: (D / (N-1)) * (D / sum of
    distances).  Nodes reaching nobody score 0.
    """
    return _closeness(net, net.out_adj)


def in_closeness(net: SupplyNetwork) -> dict[str, float]:
    """Closeness over nodes that can reach each node (supply side)."""
    return _closeness(net, net.in_adj)


def pagerank(
    net: SupplyNetwork,
    damping: float = 0.85,
    tol: float = 1e-10,
    max_iter: int = 10000,
    weighted: bool = True,
) -> dict[str, float]:
    """PageRank with uniform teleport and uniform dangling mass.

    Transition weight from u to v is w(u,v) / out-strength(u); with
    ``weighted`` off every out-link gets equal probability.  Iteration
    stops when the largest per-node change drops below ``tol``;
    exceeding ``max_iter`` raises :class:`IterationLimitError` carrying
    the last iterate.
    """
    n = _require_pair(net)
    if not 0.0 < damping < 1.0:
        raise ValueError(f"damping must be in (0, 1), got {damping}")
    nodes = net.node_list
    if weighted:
        denom = net.out_strength
        weight = lambda u, v: net.out_adj[u][v]
    else:
        denom = {v: float(len(net.out_adj[v])) for v in nodes}
        weight = lambda u, v: 1.0
    in_adj = net.in_adj
    dangling = [v for v in nodes if denom[v] == 0.0]
    x = {v: 1.0 / n for v in nodes}
    for _ in range(max_iter):
        loose = math.fsum(x[v] for v in dangling)
        base = (1.0 - damping) / n + damping * loose / n
        new = {}
        for v in nodes:
            flow = math.fsum(x[u] * (weight(u, v) / denom[u]) for u in in_adj[v])
            new[v] = base + damping * flow
        delta = max(abs(new[v] - x[v]) for v in nodes)
        x = new
        if delta < tol:
            return x
    raise IterationLimitError(
        f"PageRank did not converge within {max_iter} iterations", last_scores=x
    )


def hits(
    net: SupplyNetwork,
    tol: float = 1e-10,
    max_iter: int = 10000,
    weighted: bool = False,
) -> tuple[dict[str, float], dict[str, float]]:
    """HITS mutual recursion; returns ``(authorities, hubs)``.

    Each sweep updates authorities from hubs, L2-normalizes, then hubs
    from authorities, L2-normalizes.  The adjacency is binary unless
    ``weighted`` is set.  An edgeless network collapses the iterate to
    zero, which is reported as :class:`DegenerateNetworkError`.
    """
    n = _require_pair(net)
    nodes = net.node_list
    out_adj = net.out_adj
    in_adj = net.in_adj
    wt = (lambda u, v: net.edges[(u, v)]) if weighted else (lambda u, v: 1.0)
    hubs = {v: 1.0 / math.sqrt(n) for v in nodes}
    auth = {v: 1.0 / math.sqrt(n) for v in nodes}
    for _ in range(max_iter):
        new_auth = {
            v: math.fsum(hubs[u] * wt(u, v) for u in in_adj[v]) for v in nodes
        }
        _l2_normalize(new_auth, nodes)
        new_hubs = {
            v: math.fsum(new_auth[u] * wt(v, u) for u in out_adj[v]) for v in nodes
        }
        _l2_normalize(new_hubs, nodes)
        delta = max(
            max(abs(new_auth[v] - auth[v]) for v in nodes),
            max(abs(new_hubs[v] - hubs[v]) for v in nodes),
        )
        auth, hubs = new_auth, new_hubs
        if delta < tol:
            return auth, hubs
    raise IterationLimitError(
        f"HITS did not converge within {max_iter} iterations",
        last_scores={"authorities": auth, "hubs": hubs},
    )


def _l2_normalize(vec: dict[str, float], nodes) -> None:
    norm = math.sqrt(math.fsum(vec[v] * vec[v] for v in nodes))
    if norm == 0.0:
        raise DegenerateNetworkError(
            "HITS iterate collapsed to zero (network has no edges)"
        )
    for v in nodes:
        vec[v] /= norm


def trade_imbalance(net: SupplyNetwork) -> dict[str, float]:
    """Log-scale exporter/importer imbalance; antisymmetric per edge.

    Each edge (i, j, w) contributes ln(s_out(i)/w) - ln(s_in(j)/w) to the
    exporter and the negation to the importer, so the scores sum to zero
    over the whole network.  Isolated nodes score 0.
    """
    _require_pair(net)
    mi = {v: 0.0 for v in net.node_list}
    s_out = net.out_strength
    s_in = net.in_strength
    for (i, j) in net.edge_list:
        w = net.edges[(i, j)]
        info = math.log(s_out[i] / w) - math.log(s_in[j] / w)
        mi[i] += info
        mi[j] -= info
    return mi


def compute_metrics(
    net: SupplyNetwork,
    modules=None,
    *,
    seed: int = 0,
    damping: float = 0.85,
    tol: float = 1e-10,
    max_iter: int = 10000,
) -> dict[str, dict[str, float]]:
    """All twelve metrics keyed by their column code.

    ``modules`` supplies the partition for IM/OM (a ModulePartition or a
    plain mapping); when omitted it is detected with seeded label
    propagation.
    """
    from . import community

    if modules is None:
        modules = community.label_propagation(net, seed=seed)
    auth, hubs = hits(net, tol=tol, max_iter=max_iter)
    return {
        "ID": in_degree_centrality(net),
        "OD": out_degree_centrality(net),
        "CC": clustering_coefficient(net),
        "BC": betweenness_centrality(net),
        "IC": in_closeness(net),
        "OC": out_closeness(net),
        "PR": pagerank(net, damping=damping, tol=tol, max_iter=max_iter),
        "HU": hubs,
        "AU": auth,
        "IM": community.within_module_degree(net, modules),
        "OM": community.outside_module_degree(net, modules),
        "MI": trade_imbalance(net),
    }


METRIC_FUNCS = {
    "ID": in_degree_centrality,
    "OD": out_degree_centrality,
    "CC": clustering_coefficient,
    "BC": betweenness_centrality,
    "IC": in_closeness,
    "OC": out_closeness,
    "PR": pagerank,
    "MI": trade_imbalance,
}


def compute_metric(
    net: SupplyNetwork,
    code: str,
    modules=None,
    *,
    seed: int = 0,
) -> dict[str, float]:
    """One metric by code; cheaper than :func:`compute_metrics` for rankings."""
    if code in METRIC_FUNCS:
        return METRIC_FUNCS[code](net)
    if code in ("HU", "AU"):
        auth, hubs = hits(net)
        return hubs if code == "HU" else auth
    if code in MODULE_METRICS:
        from . import community

        if modules is None:
            modules = community.label_propagation(net, seed=seed)
        if code == "IM":
            return community.within_module_degree(net, modules)
        return community.outside_module_degree(net, modules)
    raise KeyError(f"unknown metric code {code!r}; expected one of {METRICS}")
