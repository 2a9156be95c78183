"""Targeted and random shock simulation on supply networks.

A shock scenario has two knobs: *broadness* p, the fraction of economies
attacked (highest-ranked first under some influence metric, or in random
order), and *severity* q, the fraction of each attacked economy's
surviving trade links that are severed.  Attacks accumulate: the n-th
stage hits the n-th economy of a ranking fixed before the first blow,
on top of all damage done so far.  Connectivity S after each stage is
the share of the *original* node count inside the largest weakly
connected component; economies are isolated, never deleted.

Summary indices: R_p is the mean of S over the full internal broadness
grid n = 1..N at one severity; R_pq is the grand mean of S over the
whole (p, q) grid with q = 1/M .. 1.

Stochastic settings (q strictly between 0 and 1, or random targeting)
are averaged over replications.  Every (severity, replication) pair owns
an independent generator stream derived from (seed, replication, bit
pattern of q), so results are reproducible, replications can run in
parallel under any schedule, and a curve computed standalone is
bit-identical to the matching severity row of a surface.
"""

from __future__ import annotations

import json
import math
import struct
from collections.abc import Mapping
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import community
from .centrality import METRICS, MODULE_METRICS, compute_metric, rank_nodes
from .errors import DegenerateNetworkError
from .graph import SupplyNetwork, component_sizes

RANDOM_STRATEGY = "random"


def strategies() -> tuple[str, ...]:
    """Valid targeting strategies: the twelve metric codes plus random."""
    return METRICS + (RANDOM_STRATEGY,)


def is_deterministic(strategy: str, q: float) -> bool:
    """True when a scenario involves no random draws at all."""
    return strategy != RANDOM_STRATEGY and q in (0.0, 1.0)


@dataclass(frozen=True)
class ShockSpec:
    """Scenario parameters; validated on construction."""

    strategy: str
    q: float
    p_step: float = 0.02
    replications: int = 100
    seed: int = 0
    #: Re-rank the surviving network after every stage instead of using
    #: the static initial ranking.  Off by default; ranked strategies only.
    adaptive: bool = False

    def __post_init__(self):
        if self.strategy not in strategies():
            raise ValueError(
                f"unknown strategy {self.strategy!r}; expected one of {strategies()}"
            )
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"severity q must be in [0, 1], got {self.q}")
        if not 0.0 < self.p_step <= 1.0:
            raise ValueError(f"p_step must be in (0, 1], got {self.p_step}")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.replications == 1 and not is_deterministic(self.strategy, self.q):
            raise ValueError(
                "replications=1 is only valid for deterministic runs "
                "(ranked strategy with q of exactly 0 or 1)"
            )
        if self.adaptive and self.strategy == RANDOM_STRATEGY:
            raise ValueError("adaptive re-ranking needs a ranked strategy")


def severed_count(k: int, q: float) -> int:
    """Links to cut at a node with k surviving links under severity q.

    ceil(q * k), clamped to [1, k] whenever q > 0 and k > 0.  The small
    subtraction guards against ceil() jumping a rung on products like
    0.55 * 20 that land a hair above an integer.
    """
    if k <= 0 or q <= 0.0:
        return 0
    return min(k, max(1, math.ceil(q * k - 1e-9)))


def snap_targets(p: float, n_nodes: int) -> int:
    """Reporting grid: broadness p mapped to a target count (round-half-up)."""
    return max(1, min(n_nodes, math.floor(p * n_nodes + 0.5)))


def reporting_fractions(p_step: float) -> list[float]:
    """The coarse p grid {p_step, 2 p_step, ...} with the last step at 1."""
    if not 0.0 < p_step <= 1.0:
        raise ValueError(f"p_step must be in (0, 1], got {p_step}")
    steps = math.floor(1.0 / p_step + 1e-9)
    ps = [k * p_step for k in range(1, steps + 1)]
    if ps[-1] < 1.0 - 1e-9:
        ps.append(1.0)
    return ps


@dataclass(frozen=True)
class RobustnessCurve:
    """Mean/std connectivity after each cumulative stage, one severity.

    ``points`` holds (p, S mean, S std) at every internal broadness step
    p = n/N; ``r_p`` is the mean of S over that full grid.
    """

    strategy: str
    q: float
    seed: int
    replications: int
    n_nodes: int
    points: tuple[tuple[float, float, float], ...]
    r_p: float

    @property
    def s_values(self) -> tuple[float, ...]:
        return tuple(pt[1] for pt in self.points)

    def report_rows(self, p_step: float) -> list[tuple[float, int, float, float]]:
        """(p, targets, S mean, S std) on the coarse reporting grid."""
        rows = []
        for p in reporting_fractions(p_step):
            n = snap_targets(p, self.n_nodes)
            _, mean, std = self.points[n - 1]
            rows.append((p, n, mean, std))
        return rows


@dataclass(frozen=True)
class RobustnessSurface:
    """One curve per severity q = 1/M .. 1 plus the grid's grand mean."""

    strategy: str
    seed: int
    replications: int
    n_nodes: int
    q_values: tuple[float, ...]
    curves: tuple[RobustnessCurve, ...]
    r_pq: float

    def row(self, q: float) -> RobustnessCurve:
        for curve in self.curves:
            if curve.q == q:
                return curve
        raise KeyError(f"no severity row q={q!r}; grid is {self.q_values}")


def _rng_stream(seed: int, rep: int, q: float) -> np.random.Generator:
    (q_bits,) = struct.unpack("<Q", struct.pack("<d", q))
    return np.random.default_rng(np.random.SeedSequence((seed, rep, q_bits)))


def rank_targets(
    net: SupplyNetwork,
    metric: str,
    modules=None,
    *,
    seed: int = 0,
) -> list[str]:
    """Static attack order: metric on the intact network, score desc, id asc."""
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    return rank_nodes(compute_metric(net, metric, modules, seed=seed))


def _incident_index(net: SupplyNetwork) -> dict[str, list[tuple[str, str]]]:
    incident: dict[str, list[tuple[str, str]]] = {v: [] for v in net.node_list}
    for e in net.edge_list:
        incident[e[0]].append(e)
        incident[e[1]].append(e)
    return incident


def _sever_node(target, q, rng, alive, incident) -> None:
    """Cut ceil(q * surviving) of the target's surviving incident links."""
    surviving = [e for e in incident[target] if e in alive]
    cut = severed_count(len(surviving), q)
    if cut == 0:
        return
    if cut == len(surviving):
        chosen = surviving
    else:
        picks = rng.choice(len(surviving), size=cut, replace=False)
        chosen = [surviving[int(i)] for i in picks]
    alive.difference_update(chosen)


def apply_shock(
    net: SupplyNetwork,
    targets,
    q: float,
    rng: np.random.Generator,
) -> SupplyNetwork:
    """Hit the targets in list order, severing per-node incident links.

    Severed links are sampled without replacement from the target's
    links *surviving at the moment it is processed*, so a link removed
    through one endpoint is never double-counted at the other.  q=0 is
    the identity; q=1 strips every incident link of every target.
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"severity q must be in [0, 1], got {q}")
    unknown = [t for t in targets if t not in net.nodes]
    if unknown:
        raise ValueError(f"targets not in network: {unknown[:5]}")
    alive = set(net.edge_list)
    incident = _incident_index(net)
    for target in targets:
        _sever_node(target, q, rng, alive, incident)
    return net.without_edges(set(net.edge_list) - alive)


def _weak_lcc_size(nodes, alive) -> int:
    adj: dict[str, list[str]] = {v: [] for v in nodes}
    for (a, b) in alive:
        adj[a].append(b)
        adj[b].append(a)
    sizes = component_sizes(nodes, adj)
    return sizes[0] if sizes else 0


def _run_cascade(net, order, q, rng) -> list[float]:
    """S after each cumulative stage, visiting every node in ``order``."""
    nodes = net.node_list
    original_n = len(nodes)
    alive = set(net.edge_list)
    incident = _incident_index(net)
    s_values = []
    for target in order:
        _sever_node(target, q, rng, alive, incident)
        s_values.append(_weak_lcc_size(nodes, alive) / original_n)
    return s_values


def _adaptive_cascade(net, metric, modules, q, rng) -> list[float]:
    """Cascade that re-ranks the damaged network before every stage.

    The module partition (for IM/OM) stays the one detected on the
    intact network; once the damaged network degenerates below what a
    metric can score, remaining nodes are taken in id order.
    """
    nodes = net.node_list
    original_n = len(nodes)
    alive = set(net.edge_list)
    incident = _incident_index(net)
    remaining = set(nodes)
    s_values = []
    while remaining:
        damaged = net.without_edges(set(net.edge_list) - alive)
        try:
            scores = compute_metric(damaged, metric, modules)
        except DegenerateNetworkError:
            scores = {v: 0.0 for v in nodes}
        target = min(remaining, key=lambda v: (-scores[v], v))
        remaining.discard(target)
        _sever_node(target, q, rng, alive, incident)
        s_values.append(_weak_lcc_size(nodes, alive) / original_n)
    return s_values


def _replicate_once(net, strategy, order, q, rep, seed, modules, adaptive):
    rng = _rng_stream(seed, rep, q)
    if adaptive:
        return _adaptive_cascade(net, strategy, modules, q, rng)
    if strategy == RANDOM_STRATEGY:
        perm = rng.permutation(len(net.node_list))
        order = [net.node_list[int(i)] for i in perm]
    return _run_cascade(net, order, q, rng)


_WORKER_STATE = None


def _init_worker(net, strategy, order, seed, modules, adaptive):
    global _WORKER_STATE
    _WORKER_STATE = (net, strategy, order, seed, modules, adaptive)


def _worker_task(task):
    q, rep = task
    net, strategy, order, seed, modules, adaptive = _WORKER_STATE
    return _replicate_once(net, strategy, order, q, rep, seed, modules, adaptive)


def _run_replications(net, strategy, order, tasks, seed, jobs, modules, adaptive):
    if jobs <= 1:
        return [
            _replicate_once(net, strategy, order, q, rep, seed, modules, adaptive)
            for q, rep in tasks
        ]
    chunk = max(1, len(tasks) // (4 * jobs))
    with ProcessPoolExecutor(
        max_workers=jobs,
        initializer=_init_worker,
        initargs=(net, strategy, order, seed, modules, adaptive),
    ) as pool:
        return list(pool.map(_worker_task, tasks, chunksize=chunk))


def _effective_reps(strategy: str, q: float, replications: int) -> int:
    # A deterministic scenario yields the same run every time; one pass
    # keeps the grid values exact instead of round-tripping an average.
    return 1 if is_deterministic(strategy, q) else replications


def _mean_std(vals: list[float]) -> tuple[float, float]:
    # The mean of identical values is exactly that value; skipping the
    # fsum/divide round-trip preserves analytic identities like S = 1/N.
    if min(vals) == max(vals):
        return vals[0], 0.0
    mean = math.fsum(vals) / len(vals)
    var = math.fsum((v - mean) ** 2 for v in vals) / len(vals)
    return mean, math.sqrt(var)


def _exact_mean(vals) -> float:
    vals = list(vals)
    if min(vals) == max(vals):
        return vals[0]
    return math.fsum(vals) / len(vals)


def _resolve_modules(net, strategy, modules, seed):
    if strategy in MODULE_METRICS and modules is None:
        return community.label_propagation(net, seed=seed).assignment
    if modules is not None:
        return community.assignment_of(modules)
    return None


def _build_curve(net, strategy, order, q, seed, replications, jobs, modules, adaptive):
    reps = _effective_reps(strategy, q, replications)
    tasks = [(q, r) for r in range(reps)]
    runs = _run_replications(net, strategy, order, tasks, seed, jobs, modules, adaptive)
    n = net.n_nodes
    points = []
    for i in range(n):
        mean, std = _mean_std([run[i] for run in runs])
        points.append(((i + 1) / n, mean, std))
    return RobustnessCurve(
        strategy=strategy,
        q=q,
        seed=seed,
        replications=reps,
        n_nodes=n,
        points=tuple(points),
        r_p=_exact_mean(pt[1] for pt in points),
    )


def _prepare(net, spec, modules):
    if net.n_nodes == 0:
        raise DegenerateNetworkError("cannot shock an empty network")
    modules = _resolve_modules(net, spec.strategy, modules, spec.seed)
    order = None
    if spec.strategy != RANDOM_STRATEGY and not spec.adaptive:
        order = rank_targets(net, spec.strategy, modules, seed=spec.seed)
    return order, modules


def robustness_curve(
    net: SupplyNetwork,
    spec: ShockSpec,
    q: float | None = None,
    *,
    modules=None,
    jobs: int = 1,
) -> RobustnessCurve:
    """Connectivity curve over the full broadness grid at one severity.

    ``q`` overrides ``spec.q`` when given (the surface sweep uses this).
    """
    if q is None:
        q = spec.q
    elif not 0.0 <= q <= 1.0:
        raise ValueError(f"severity q must be in [0, 1], got {q}")
    order, modules = _prepare(net, spec, modules)
    return _build_curve(
        net, spec.strategy, order, q, spec.seed, spec.replications, jobs,
        modules, spec.adaptive,
    )


def robustness_surface(
    net: SupplyNetwork,
    spec: ShockSpec,
    q_steps: int,
    *,
    modules=None,
    jobs: int = 1,
) -> RobustnessSurface:
    """Curves for every severity q = m/M, m = 1..M, plus the grand mean.

    R_pq is one arithmetic mean over all N x M grid cells, not a mean of
    per-row means, matching the volume definition and keeping analytic
    cases (edgeless network: every cell 1/N) exact.
    """
    if q_steps < 1:
        raise ValueError("q_steps must be >= 1")
    order, modules = _prepare(net, spec, modules)
    q_values = [m / q_steps for m in range(1, q_steps + 1)]
    curves = []
    for q in q_values:
        curves.append(
            _build_curve(
                net, spec.strategy, order, q, spec.seed, spec.replications,
                jobs, modules, spec.adaptive,
            )
        )
    cells = [pt[1] for curve in curves for pt in curve.points]
    return RobustnessSurface(
        strategy=spec.strategy,
        seed=spec.seed,
        replications=spec.replications,
        n_nodes=net.n_nodes,
        q_values=tuple(q_values),
        curves=tuple(curves),
        r_pq=_exact_mean(cells),
    )


def random_shock_curve(
    net: SupplyNetwork,
    q: float,
    p_step: float = 0.02,
    replications: int = 100,
    seed: int = 0,
    *,
    jobs: int = 1,
) -> RobustnessCurve:
    """Random-order shock curve; a fresh uniform shuffle per replication."""
    spec = ShockSpec(
        strategy=RANDOM_STRATEGY, q=q, p_step=p_step,
        replications=replications, seed=seed,
    )
    return robustness_curve(net, spec, jobs=jobs)


@dataclass(frozen=True)
class EvolutionRow:
    """One (year, index) cell of a yearly robustness table."""

    year: int
    strategy: str
    q: float | None
    index: str  # "R_p" or "R_pq"
    value: float


def yearly_evolution(
    networks: Mapping[int, SupplyNetwork],
    spec: ShockSpec,
    q_steps: int | None = None,
    *,
    jobs: int = 1,
) -> list[EvolutionRow]:
    """Robustness indices per year, tidy long form.

    Without ``q_steps`` each year contributes one R_p row at spec.q;
    with it, one R_p row per severity plus the year's R_pq volume.
    """
    rows: list[EvolutionRow] = []
    for year in sorted(networks):
        net = networks[year]
        if q_steps is None:
            curve = robustness_curve(net, spec, jobs=jobs)
            rows.append(EvolutionRow(year, spec.strategy, curve.q, "R_p", curve.r_p))
        else:
            surface = robustness_surface(net, spec, q_steps, jobs=jobs)
            for curve in surface.curves:
                rows.append(
                    EvolutionRow(year, spec.strategy, curve.q, "R_p", curve.r_p)
                )
            rows.append(EvolutionRow(year, spec.strategy, None, "R_pq", surface.r_pq))
    return rows


def _spec_echo(strategy, q, seed, replications, p_step) -> str:
    parts = [f"strategy={strategy}"]
    if q is not None:
        parts.append(f"q={q!r}")
    parts.extend([f"seed={seed}", f"replications={replications}", f"p_step={p_step!r}"])
    return "# " + " ".join(parts)


def write_curve_csv(curve: RobustnessCurve, path, p_step: float = 0.02) -> None:
    """Long-form ``q,p,S_mean,S_std`` rows on the reporting grid."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(
            _spec_echo(curve.strategy, curve.q, curve.seed, curve.replications, p_step)
            + "\n"
        )
        fh.write("q,p,S_mean,S_std\n")
        for p, _, mean, std in curve.report_rows(p_step):
            fh.write(f"{curve.q!r},{p!r},{mean!r},{std!r}\n")


def write_surface_csv(surface: RobustnessSurface, path, p_step: float = 0.02) -> None:
    """Long-form ``q,p,S_mean`` rows, one block per severity."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(
            _spec_echo(
                surface.strategy, None, surface.seed, surface.replications, p_step
            )
            + "\n"
        )
        fh.write("q,p,S_mean\n")
        for curve in surface.curves:
            for p, _, mean, _ in curve.report_rows(p_step):
                fh.write(f"{curve.q!r},{p!r},{mean!r}\n")


def surface_to_json(surface: RobustnessSurface) -> str:
    """Full-resolution grid plus the volume index."""
    return json.dumps(
        {
            "strategy": surface.strategy,
            "seed": surface.seed,
            "replications": surface.replications,
            "grid": {
                "p": [pt[0] for pt in surface.curves[0].points],
                "q": list(surface.q_values),
                "s_mean": [[pt[1] for pt in c.points] for c in surface.curves],
            },
            "volume": surface.r_pq,
        },
        indent=2,
    )
