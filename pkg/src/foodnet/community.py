"""Module detection and module-relative degree scores.

Communities come from asynchronous label propagation on the undirected
projection of the supply network (antiparallel edge weights summed).
Every stochastic choice (sweep order, tie-breaks) is driven by one
seeded generator, so a given (network, seed) pair always yields the
same partition.  On top of a partition, nodes get within-module and
outside-module degree z-scores.
"""

from __future__ import annotations

import math
import random
from collections.abc import Mapping
from dataclasses import dataclass

from .graph import SupplyNetwork


@dataclass(frozen=True)
class ModulePartition:
    """A node -> module assignment with its provenance.

    Module ids are dense integers 0..M-1, numbered by first appearance
    over the sorted node list.  ``iterations`` is the number of sweeps
    executed; ``converged`` is False when the sweep cap cut the run
    short (reported, not fatal).
    """

    assignment: dict[str, int]
    seed: int
    iterations: int
    converged: bool

    @property
    def n_modules(self) -> int:
        return len(set(self.assignment.values()))

    def members(self) -> dict[int, tuple[str, ...]]:
        """Module id -> sorted member tuple."""
        groups: dict[int, list[str]] = {}
        for v in sorted(self.assignment):
            groups.setdefault(self.assignment[v], []).append(v)
        return {m: tuple(vs) for m, vs in sorted(groups.items())}

    def to_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["node", "module"])
            for v in sorted(self.assignment):
                writer.writerow([v, self.assignment[v]])


def undirected_projection(net: SupplyNetwork) -> dict[str, dict[str, float]]:
    """Symmetric weighted adjacency; antiparallel edge weights are summed."""
    proj: dict[str, dict[str, float]] = {v: {} for v in net.node_list}
    for (i, j) in net.edge_list:
        w = net.edges[(i, j)]
        proj[i][j] = proj[i].get(j, 0.0) + w
        proj[j][i] = proj[j].get(i, 0.0) + w
    return proj


def label_propagation(
    net: SupplyNetwork,
    seed: int = 0,
    max_sweeps: int = 100,
    weighted: bool = True,
) -> ModulePartition:
    """Asynchronous label propagation on the undirected projection.

    Each node starts in its own module.  A sweep visits all nodes in a
    freshly shuffled order; a node adopts the label with the largest
    total neighbor weight (neighbor count when ``weighted`` is off),
    keeping its current label whenever that label is among the leaders
    and otherwise drawing uniformly from the sorted leaders.  The walk
    stops at the first sweep with no label change; hitting
    ``max_sweeps`` first is recorded on the partition, not raised.
    """
    nodes = list(net.node_list)
    if not nodes:
        return ModulePartition(assignment={}, seed=seed, iterations=0, converged=True)
    proj = undirected_projection(net)
    labels = {v: idx for idx, v in enumerate(nodes)}
    rng = random.Random(seed)
    sweeps = 0
    converged = False
    while sweeps < max_sweeps:
        sweeps += 1
        order = nodes[:]
        rng.shuffle(order)
        changed = 0
        for v in order:
            nbrs = proj[v]
            if not nbrs:
                continue
            tally: dict[int, float] = {}
            for u in sorted(nbrs):
                lab = labels[u]
                tally[lab] = tally.get(lab, 0.0) + (nbrs[u] if weighted else 1.0)
            top = max(tally.values())
            leaders = sorted(lab for lab, wt in tally.items() if wt == top)
            if labels[v] in leaders:
                continue
            labels[v] = leaders[0] if len(leaders) == 1 else rng.choice(leaders)
            changed += 1
        if changed == 0:
            converged = True
            break
    return ModulePartition(
        assignment=_densify(labels, nodes),
        seed=seed,
        iterations=sweeps,
        converged=converged,
    )


def _densify(labels: dict[str, int], nodes: list[str]) -> dict[str, int]:
    remap: dict[int, int] = {}
    out = {}
    for v in nodes:
        lab = labels[v]
        if lab not in remap:
            remap[lab] = len(remap)
        out[v] = remap[lab]
    return out


def assignment_of(partition) -> dict[str, int]:
    """Accept either a ModulePartition or a bare node -> module mapping."""
    if isinstance(partition, ModulePartition):
        return partition.assignment
    if isinstance(partition, Mapping):
        return dict(partition)
    raise TypeError(f"expected ModulePartition or mapping, got {type(partition)!r}")


def _module_edge_counts(
    net: SupplyNetwork, modules: Mapping[str, int], inside: bool
) -> dict[str, int]:
    """Directed edge count (in + out) from each node to its own module
    (``inside``) or to the rest of the network."""
    counts = {}
    for v in net.node_list:
        mod = modules[v]
        total = 0
        for u in net.out_adj[v]:
            if (modules[u] == mod) == inside:
                total += 1
        for u in net.in_adj[v]:
            if (modules[u] == mod) == inside:
                total += 1
        counts[v] = total
    return counts


def _zscore_by_group(
    counts: Mapping[str, int], groups: Mapping[str, list[str] | tuple[str, ...]]
) -> dict[str, float]:
    """z-score each node's count against its group's population stats."""
    scores = {}
    for v, members in groups.items():
        vals = [counts[u] for u in members]
        mean = sum(vals) / len(vals)
        sd = math.sqrt(sum((x - mean) ** 2 for x in vals) / len(vals))
        scores[v] = (counts[v] - mean) / sd if sd > 0.0 else 0.0
    return scores


def _validate_partition(net: SupplyNetwork, modules: Mapping[str, int]) -> None:
    missing = [v for v in net.node_list if v not in modules]
    if missing:
        raise ValueError(f"module partition is missing nodes: {missing[:5]}")


def _own_module_groups(net, modules) -> dict[str, list[str]]:
    by_module: dict[int, list[str]] = {}
    for v in net.node_list:
        by_module.setdefault(modules[v], []).append(v)
    return {v: by_module[modules[v]] for v in net.node_list}


def within_module_degree(net: SupplyNetwork, partition) -> dict[str, float]:
    """Within-module degree z-score (IM).

    The degree is the count of directed edges (in plus out) joining a
    node to members of its own module, z-scored against the node's
    module using the population standard deviation.  A module with zero
    spread (cliques, singletons) maps to 0 rather than +-inf.
    """
    modules = assignment_of(partition)
    _validate_partition(net, modules)
    counts = _module_edge_counts(net, modules, inside=True)
    return _zscore_by_group(counts, _own_module_groups(net, modules))


def outside_module_degree(
    net: SupplyNetwork, partition, literal: bool = False
) -> dict[str, float]:
    """Outside-module degree z-score (OM).

    Counts directed edges (in plus out) crossing the node's module
    boundary.  By default the z-score is taken against the node's own
    module, mirroring the within-module score.  ``literal=True``
    standardizes against the complement instead: each node is compared
    with the crossing-degree of all nodes outside its module.
    """
    modules = assignment_of(partition)
    _validate_partition(net, modules)
    counts = _module_edge_counts(net, modules, inside=False)
    if not literal:
        return _zscore_by_group(counts, _own_module_groups(net, modules))
    by_module: dict[int, list[str]] = {}
    for v in net.node_list:
        by_module.setdefault(modules[v], []).append(v)
    groups = {}
    for v in net.node_list:
        outsiders = [u for m, vs in by_module.items() if m != modules[v] for u in vs]
        groups[v] = outsiders if outsiders else [v]
    return _zscore_by_group(counts, groups)
