"""Directed weighted supply-network substrate.

A :class:`SupplyNetwork` is an immutable directed graph of economies for one
year, with edge weights in kilocalories per year.  Connectivity queries run on
the undirected projection (a severed supply relationship breaks access in both
roles), and the fraction-of-largest-component helper keeps the ORIGINAL node
count in the denominator so shock series stay comparable.
"""

from __future__ import annotations

import csv
import re
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping


@dataclass(frozen=True)
class SupplyNetwork:
    """Directed weighted graph of economies for one year.

    Invariants enforced at construction: no self-loops, strictly positive
    weights, at most one edge per ordered (source, target) pair (the edge map
    guarantees the last), and every edge endpoint present in ``nodes``.
    Instances are immutable; shocks build new instances or private overlays.
    """

    year: int
    edges: dict[tuple[str, str], float]
    nodes: frozenset[str] = field(default=frozenset())

    def __post_init__(self):
        edges = dict(self.edges)
        nodes = set(self.nodes)
        for (src, dst), w in edges.items():
            if src == dst:
                raise ValueError(f"self-loop {src}->{dst} is not allowed")
            if not w > 0:
                raise ValueError(f"edge {src}->{dst} has non-positive weight {w}")
            nodes.add(src)
            nodes.add(dst)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "nodes", frozenset(nodes))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def node_list(self) -> tuple[str, ...]:
        """Nodes in canonical (sorted) order; the iteration order everywhere."""
        return tuple(sorted(self.nodes))

    @cached_property
    def edge_list(self) -> tuple[tuple[str, str], ...]:
        return tuple(sorted(self.edges))

    @cached_property
    def out_adj(self) -> dict[str, dict[str, float]]:
        adj: dict[str, dict[str, float]] = {n: {} for n in self.node_list}
        for (src, dst) in self.edge_list:
            adj[src][dst] = self.edges[(src, dst)]
        return adj

    @cached_property
    def in_adj(self) -> dict[str, dict[str, float]]:
        adj: dict[str, dict[str, float]] = {n: {} for n in self.node_list}
        for (src, dst) in self.edge_list:
            adj[dst][src] = self.edges[(src, dst)]
        return adj

    @cached_property
    def out_strength(self) -> dict[str, float]:
        return {n: sum(nbrs.values()) for n, nbrs in self.out_adj.items()}

    @cached_property
    def in_strength(self) -> dict[str, float]:
        return {n: sum(nbrs.values()) for n, nbrs in self.in_adj.items()}

    @cached_property
    def undirected_adj(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {n: set() for n in self.node_list}
        for src, dst in self.edges:
            adj[src].add(dst)
            adj[dst].add(src)
        return adj

    def incident_edges(self, node: str) -> tuple[tuple[str, str], ...]:
        """All directed edges touching ``node``, in canonical order."""
        out = [(node, v) for v in self.out_adj.get(node, ())]
        inc = [(u, node) for u in self.in_adj.get(node, ())]
        return tuple(sorted(out + inc))

    def without_edges(self, removed: Iterable[tuple[str, str]]) -> "SupplyNetwork":
        """A copy with the given edges deleted; the node set is preserved."""
        gone = set(removed)
        kept = {e: w for e, w in self.edges.items() if e not in gone}
        return SupplyNetwork(year=self.year, edges=kept, nodes=self.nodes)


@dataclass(frozen=True)
class ComponentReport:
    """Weakly connected component sizes, largest first."""

    sizes: tuple[int, ...]
    lcc_fraction: float


def build_network(flows, year: int, isolates: Iterable[str] = ()) -> SupplyNetwork:
    """Aggregate trade flows for one year into a supply network.

    Parallel flows between the same ordered pair are summed; flows with
    non-positive kilocalories are dropped.  The node set is the union of
    surviving edge endpoints plus any explicitly registered isolates.
    Node identifiers are case-normalized to uppercase.
    """
    weights: dict[tuple[str, str], float] = {}
    for flow in flows:
        if flow.year != year:
            continue
        if flow.kilocalories <= 0:
            continue
        key = (flow.exporter.upper(), flow.importer.upper())
        weights[key] = weights.get(key, 0.0) + flow.kilocalories
    nodes = frozenset(n.upper() for n in isolates)
    return SupplyNetwork(year=year, edges=weights, nodes=nodes)


def density(net: SupplyNetwork) -> float:
    """Edge count over the maximum N(N-1) directed edges; 0 when N < 2."""
    n = net.n_nodes
    if n < 2:
        return 0.0
    return net.n_edges / (n * (n - 1))


def component_sizes(nodes: Iterable[str], adjacency: Mapping[str, Iterable[str]]) -> list[int]:
    """Connected component sizes (descending) by breadth-first flood fill."""
    seen: set[str] = set()
    sizes: list[int] = []
    for start in sorted(nodes):
        if start in seen:
            continue
        size = 0
        queue = deque([start])
        seen.add(start)
        while queue:
            u = queue.popleft()
            size += 1
            for v in adjacency.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        sizes.append(size)
    return sorted(sizes, reverse=True)


def connected_components(net: SupplyNetwork) -> ComponentReport:
    """Component report on the undirected projection of the network."""
    sizes = component_sizes(net.nodes, net.undirected_adj)
    if not sizes:
        return ComponentReport(sizes=(), lcc_fraction=0.0)
    return ComponentReport(sizes=tuple(sizes), lcc_fraction=sizes[0] / net.n_nodes)


def largest_connected_fraction(net: SupplyNetwork, original_n: int) -> float:
    """Largest weakly connected component size over ``original_n``.

    ``original_n`` is the pre-shock node count, so the fraction is comparable
    across shock steps.  A fully edgeless network scores 1/original_n.
    """
    if original_n <= 0:
        raise ValueError("original_n must be a positive integer")
    sizes = component_sizes(net.nodes, net.undirected_adj)
    largest = sizes[0] if sizes else 0
    return largest / original_n


def write_network_csv(net: SupplyNetwork, path) -> None:
    """Edge list as ``src,dst,kcal``; isolated nodes appended with empty dst."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["src", "dst", "kcal"])
        linked = set()
        for src, dst in net.edge_list:
            writer.writerow([src, dst, repr(net.edges[(src, dst)])])
            linked.add(src)
            linked.add(dst)
        for node in net.node_list:
            if node not in linked:
                writer.writerow([node, "", ""])


def read_network_csv(path, year: int | None = None) -> SupplyNetwork:
    """Read a ``src,dst,kcal`` edge list; rows with an empty dst are isolates.

    When ``year`` is omitted it is taken from the last number in the filename
    (the ``network_<year>.csv`` convention), defaulting to 0.
    """
    path = Path(path)
    if year is None:
        found = re.findall(r"(\d{4})", path.stem)
        year = int(found[-1]) if found else 0
    edges: dict[tuple[str, str], float] = {}
    isolates: list[str] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"src", "dst", "kcal"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected header src,dst,kcal")
        for row in reader:
            src = (row["src"] or "").strip().upper()
            dst = (row["dst"] or "").strip().upper()
            if not src:
                continue
            if not dst:
                isolates.append(src)
                continue
            edges[(src, dst)] = edges.get((src, dst), 0.0) + float(row["kcal"])
    return SupplyNetwork(year=year, edges=edges, nodes=frozenset(isolates))
