"""Independent reference implementations used to cross-check the library.

Everything here is deliberately written with different algorithms than
the package: Floyd-Warshall instead of BFS, exhaustive path enumeration
instead of accumulation, dense matrix iteration instead of sparse dict
sweeps, eigendecompositions instead of power sweeps, and normal
equations instead of QR/SVD least squares.  Agreement between the two
routes is the evidence the tests rely on.
"""

from __future__ import annotations

import math

import numpy as np

INF = math.inf


def floyd_warshall(nodes, edges) -> dict[tuple[str, str], float]:
    """All-pairs hop distances on the directed unweighted view."""
    nodes = sorted(nodes)
    dist = {(a, b): (0 if a == b else INF) for a in nodes for b in nodes}
    for (a, b) in edges:
        dist[(a, b)] = 1
    for k in nodes:
        for i in nodes:
            ik = dist[(i, k)]
            if ik is INF:
                continue
            for j in nodes:
                alt = ik + dist[(k, j)]
                if alt < dist[(i, j)]:
                    dist[(i, j)] = alt
    return dist


def _all_geodesics(out_nbrs, dist, src, dst):
    """Every shortest src -> dst path, found by depth-first descent."""
    target_len = dist[(src, dst)]
    if target_len is INF:
        return []
    paths = []

    def walk(node, trail):
        if node == dst:
            paths.append(tuple(trail))
            return
        for nxt in sorted(out_nbrs.get(node, ())):
            if dist[(nxt, dst)] == target_len - len(trail):
                walk(nxt, trail + [nxt])

    walk(src, [src])
    return paths


def betweenness_oracle(nodes, edges) -> dict[str, float]:
    """Raw betweenness by literally enumerating every geodesic.

    Interior incidence counts are exact integers; the per-pair fraction
    is accumulated in sorted (source, sink) order so the float result is
    directly comparable with the library's accumulation.
    """
    nodes = sorted(nodes)
    out_nbrs: dict[str, list[str]] = {}
    for (a, b) in edges:
        out_nbrs.setdefault(a, []).append(b)
    dist = floyd_warshall(nodes, edges)
    bc = {v: 0.0 for v in nodes}
    for j in nodes:
        for k in nodes:
            if j == k or dist[(j, k)] is INF or dist[(j, k)] < 2:
                continue
            paths = _all_geodesics(out_nbrs, dist, j, k)
            total = len(paths)
            through: dict[str, int] = {}
            for path in paths:
                for node in path[1:-1]:
                    through[node] = through.get(node, 0) + 1
            for i in nodes:
                if i in through:
                    bc[i] += through[i] / total
    return bc


def closeness_oracle(nodes, edges, direction: str) -> dict[str, float]:
    """Double-fraction closeness evaluated straight from the formula."""
    nodes = sorted(nodes)
    n = len(nodes)
    dist = floyd_warshall(nodes, edges)
    scores = {}
    for v in nodes:
        if direction == "in":
            finite = [dist[(u, v)] for u in nodes if u != v and dist[(u, v)] is not INF]
        else:
            finite = [dist[(v, u)] for u in nodes if u != v and dist[(v, u)] is not INF]
        d = len(finite)
        total = sum(finite)
        scores[v] = 0.0 if d == 0 or total == 0 else (d / (n - 1)) * (d / total)
    return scores


def clustering_oracle(nodes, edges) -> dict[str, float]:
    """Clustering over the union neighborhood, by direct pair counting."""
    nodes = sorted(nodes)
    edge_set = set(edges)
    nbrs = {v: set() for v in nodes}
    for (a, b) in edge_set:
        nbrs[a].add(b)
        nbrs[b].add(a)
    scores = {}
    for v in nodes:
        k = len(nbrs[v])
        if k < 2:
            scores[v] = 0.0
            continue
        present = sum(
            1
            for a in nbrs[v]
            for b in nbrs[v]
            if a != b and (a, b) in edge_set
        )
        scores[v] = present / (k * (k - 1))
    return scores


def pagerank_oracle(
    nodes, edges, damping=0.85, tol=1e-12, max_iter=100000
) -> dict[str, float]:
    """Dense Google-matrix fixed point, iterated in numpy."""
    nodes = sorted(nodes)
    n = len(nodes)
    index = {v: i for i, v in enumerate(nodes)}
    W = np.zeros((n, n))
    for (a, b), w in edges.items():
        W[index[a], index[b]] = w
    out = W.sum(axis=1)
    P = np.full((n, n), 1.0 / n)
    rows = out > 0
    P[rows] = W[rows] / out[rows, None]
    G = damping * P + (1.0 - damping) / n
    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = x @ G
        if np.max(np.abs(nxt - x)) < tol:
            x = nxt
            break
        x = nxt
    return {v: float(x[index[v]]) for v in nodes}


def hits_oracle(nodes, edges) -> tuple[dict, dict, float] | None:
    """Principal eigenvectors of A^T A (authority) and A A^T (hub).

    Returns None when the dominant eigenvalue is (near) degenerate,
    because then the HITS fixed point is not unique and comparing
    against any single eigenvector is meaningless.
    """
    nodes = sorted(nodes)
    n = len(nodes)
    index = {v: i for i, v in enumerate(nodes)}
    A = np.zeros((n, n))
    for (a, b) in edges:
        A[index[a], index[b]] = 1.0
    ata = A.T @ A
    aat = A @ A.T
    ev_a, vec_a = np.linalg.eigh(ata)
    ev_h, vec_h = np.linalg.eigh(aat)
    lead = ev_a[-1]
    if lead <= 1e-12:
        return None
    gap = min(lead - ev_a[-2], lead - ev_h[-2]) if n > 1 else lead
    if gap < 1e-6 * lead:
        return None
    authority = vec_a[:, -1]
    hub = vec_h[:, -1]
    # eigenvectors are sign-ambiguous; HITS vectors are non-negative
    if authority.sum() < 0:
        authority = -authority
    if hub.sum() < 0:
        hub = -hub
    if (authority < -1e-9).any() or (hub < -1e-9).any():
        return None
    return (
        {v: float(authority[index[v]]) for v in nodes},
        {v: float(hub[index[v]]) for v in nodes},
        float(gap),
    )


def components_oracle(nodes, edges) -> list[int]:
    """Weak component sizes via boolean transitive closure."""
    nodes = sorted(nodes)
    n = len(nodes)
    index = {v: i for i, v in enumerate(nodes)}
    reach = np.eye(n, dtype=bool)
    for (a, b) in edges:
        reach[index[a], index[b]] = True
        reach[index[b], index[a]] = True
    for _ in range(n):
        nxt = reach | (reach @ reach)
        if (nxt == reach).all():
            break
        reach = nxt
    seen = set()
    sizes = []
    for i in range(n):
        if i in seen:
            continue
        comp = {j for j in range(n) if reach[i, j]}
        seen |= comp
        sizes.append(len(comp))
    return sorted(sizes, reverse=True)


def ols_oracle(X: np.ndarray, y: np.ndarray):
    """Least squares via the normal equations, with classical errors."""
    XtX = X.T @ X
    beta = np.linalg.solve(XtX, X.T @ y)
    resid = y - X @ beta
    n, p = X.shape
    sigma2 = float(resid @ resid) / (n - p)
    se = np.sqrt(np.diag(sigma2 * np.linalg.inv(XtX)))
    return beta, se


def ridge_oracle(X: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """Closed-form (X'X + lam I*)^-1 X'y with a free intercept column."""
    p = X.shape[1]
    penalty = np.eye(p)
    penalty[0, 0] = 0.0
    return np.linalg.solve(X.T @ X + lam * penalty, X.T @ y)


def spearman_no_ties_oracle(x, y) -> float:
    """Classic 1 - 6 sum d^2 / (n (n^2 - 1)); valid only without ties."""
    n = len(x)
    rank_x = {v: i + 1 for i, v in enumerate(sorted(x))}
    rank_y = {v: i + 1 for i, v in enumerate(sorted(y))}
    d2 = sum((rank_x[a] - rank_y[b]) ** 2 for a, b in zip(x, y))
    return 1.0 - 6.0 * d2 / (n * (n * n - 1))
