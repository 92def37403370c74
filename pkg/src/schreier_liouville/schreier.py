"""Finite pieces of Schreier graphs and isoperimetric diagnostics."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np
import scipy.sparse as sp

from .groups import GroupAction


class DisconnectedGraph(ValueError):
    pass


@dataclass
class SchreierBall:
    """BFS ball ``B(o, r)`` with exact distances and labelled edges.

    ``edges`` holds every generator move ``(u, label, v)`` with both ends in
    the ball, so it is the induced subgraph; vertices at distance < r have
    all their moves present.  ``shells[d]`` lists distance-d vertices in
    sorted key order.
    """

    action: GroupAction
    basepoint: Any
    radius: int
    dist: dict
    shells: list
    edges: list = field(default_factory=list)

    @property
    def vertices(self) -> list:
        return [v for shell in self.shells for v in shell]

    def __len__(self):
        return len(self.dist)

    def __contains__(self, x):
        return x in self.dist

    def neighbors(self) -> dict:
        """Undirected simple adjacency, self-loops dropped."""
        adj: dict = {v: set() for v in self.dist}
        for u, _, v in self.edges:
            if u != v:
                adj[u].add(v)
                adj[v].add(u)
        return adj

    def write_csv(self, edge_path, vertex_path):
        fmt = self.action.format_point
        with open(edge_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["src_key", "generator_label", "dst_key"])
            for u, label, v in self.edges:
                w.writerow([fmt(u), label, fmt(v)])
        with open(vertex_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["key", "distance"])
            for v in self.vertices:
                w.writerow([fmt(v), self.dist[v]])


def orbit_ball(action: GroupAction, o, r: int) -> SchreierBall:
    """BFS closure of ``o`` under ``S u S^-1`` to depth ``r``."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    gens = action.symmetric_generators()
    dist = {o: 0}
    shells = [[o]]
    edges = []
    for d in range(r):
        nxt = set()
        for u in shells[d]:
            for label, g in gens:
                v = action.act(g, u)
                if v not in dist:
                    dist[v] = d + 1
                    nxt.add(v)
                edges.append((u, label, v))
        shells.append(sorted(nxt, key=action.point_key))
    # close up the outer shell against itself (induced subgraph)
    for u in shells[r]:
        for label, g in gens:
            v = action.act(g, u)
            if v in dist:
                edges.append((u, label, v))
    return SchreierBall(action, o, r, dist, shells, edges)


def schreier_distance(action: GroupAction, x, y, limit: int = 64, max_nodes: int = 2_000_000):
    """Graph distance between two points by bidirectional BFS.

    Returns None when the frontiers fail to meet within ``limit`` steps or
    ``max_nodes`` visited points.
    """
    if x == y:
        return 0
    gens = [g for _, g in action.symmetric_generators()]
    seen = [{x: 0}, {y: 0}]
    front = [[x], [y]]
    for step in range(1, limit + 1):
        side = 0 if len(front[0]) <= len(front[1]) else 1
        mine, other = seen[side], seen[1 - side]
        new = []
        best = None
        for u in front[side]:
            du = mine[u]
            for g in gens:
                v = action.act(g, u)
                if v in mine:
                    continue
                mine[v] = du + 1
                new.append(v)
                if v in other:
                    cand = du + 1 + other[v]
                    best = cand if best is None else min(best, cand)
        if best is not None:
            return best
        front[side] = new
        if not new:
            return None
        if len(mine) + len(other) > max_nodes:
            return None
    return None


def inradius(ball: SchreierBall, K: Iterable) -> int:
    """Largest ``r`` with ``B(o, r)`` contained in ``K`` (capped at the ball radius)."""
    K = set(K)
    if ball.basepoint not in K:
        raise ValueError("basepoint is not in K")
    for d, shell in enumerate(ball.shells):
        if any(v not in K for v in shell):
            return d - 1
    return ball.radius


# -- isoperimetry -------------------------------------------------------------

EXACT_LIMIT = 20


@dataclass
class CheegerReport:
    """Isoperimetric numbers of a finite connected graph.

    ``edge_expansion`` is ``min |dS|/|S|`` over ``|S| <= |V|/2`` and
    ``conductance`` is ``min |dS|/min(vol S, vol S^c)``; both are exact and
    only filled in for graphs with at most ``EXACT_LIMIT`` vertices.
    ``lambda1`` is the second-smallest eigenvalue of the normalized
    Laplacian and ``spectral_lower_bound = lambda1/2`` bounds the
    conductance from below.
    """

    size: int
    n_edges: int
    lambda1: float
    spectral_lower_bound: float
    edge_expansion: float | None = None
    conductance: float | None = None
    iterations: int = 0

    @property
    def band_ok(self) -> bool | None:
        return cheeger_band_ok(self)


def cheeger_band_ok(rep: CheegerReport, tol: float = 1e-6) -> bool | None:
    if rep.conductance is None:
        return None
    return rep.lambda1 / 2 - tol <= rep.conductance <= math.sqrt(2 * max(rep.lambda1, 0.0)) + tol


def _adjacency(adj: dict):
    verts = sorted(adj, key=_sortable)
    index = {v: i for i, v in enumerate(verts)}
    rows, cols = [], []
    for v, nbrs in adj.items():
        for w in nbrs:
            rows.append(index[v])
            cols.append(index[w])
    n = len(verts)
    A = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    return verts, A


def _sortable(v):
    return (type(v).__name__, v)


def _check_connected(adj: dict):
    start = next(iter(adj))
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    if len(seen) != len(adj):
        raise DisconnectedGraph(f"graph has {len(adj) - len(seen)} unreachable vertices")


def spectral_gap(A, tol: float = 1e-8, max_iter: int = 200_000, seed: int = 0):
    """Second-smallest normalized-Laplacian eigenvalue by power iteration.

    Iterates ``M = (I + D^-1/2 A D^-1/2)/2`` (spectrum in [0, 1]) on the
    complement of its top eigenvector ``sqrt(deg)``; ``lambda1 = 2(1 - mu2)``.
    Stops once the eigen-residual ``|Mv - mu v|`` drops below ``tol``.
    """
    n = A.shape[0]
    if n < 2:
        return 0.0, 0
    deg = np.asarray(A.sum(axis=1)).ravel()
    dinv = 1.0 / np.sqrt(deg)
    N = sp.diags(dinv) @ A @ sp.diags(dinv)
    top = np.sqrt(deg)
    top /= np.linalg.norm(top)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v -= top * (top @ v)
    v /= np.linalg.norm(v)
    mu = 0.0
    it = 0
    for it in range(1, max_iter + 1):
        w = 0.5 * (v + N @ v)
        w -= top * (top @ w)
        mu = float(v @ w)
        resid = np.linalg.norm(w - mu * v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            break
        v = w / nw
        if resid < tol:
            break
    return 2.0 * (1.0 - mu), it


def exact_isoperimetry(adj: dict) -> tuple[float, float]:
    """Brute-force edge expansion and conductance over all vertex subsets."""
    verts = sorted(adj, key=_sortable)
    n = len(verts)
    if n > EXACT_LIMIT:
        raise ValueError(f"exhaustive search limited to {EXACT_LIMIT} vertices")
    index = {v: i for i, v in enumerate(verts)}
    nbr_mask = [0] * n
    for v, nbrs in adj.items():
        for w in nbrs:
            nbr_mask[index[v]] |= 1 << index[w]
    deg = [bin(m).count("1") for m in nbr_mask]
    vol_total = sum(deg)
    full = (1 << n) - 1
    h = math.inf
    phi = math.inf
    for mask in range(1, full):
        size = bin(mask).count("1")
        boundary = 0
        vol = 0
        m = mask
        while m:
            low = m & -m
            i = low.bit_length() - 1
            boundary += bin(nbr_mask[i] & ~mask & full).count("1")
            vol += deg[i]
            m ^= low
        if 2 * size <= n:
            h = min(h, boundary / size)
        small_vol = min(vol, vol_total - vol)
        if small_vol:
            phi = min(phi, boundary / small_vol)
    return h, phi


def graph_from_edges(edges: Iterable[tuple[Any, Any]]) -> dict:
    adj: dict = {}
    for u, v in edges:
        adj.setdefault(u, set())
        adj.setdefault(v, set())
        if u != v:
            adj[u].add(v)
            adj[v].add(u)
    return adj


def cheeger(graph, tol: float = 1e-8) -> CheegerReport:
    """Isoperimetric report for a ball (or a plain adjacency dict)."""
    adj = graph.neighbors() if isinstance(graph, SchreierBall) else graph
    if not adj:
        raise ValueError("empty graph")
    _check_connected(adj)
    n_edges = sum(len(s) for s in adj.values()) // 2
    if len(adj) == 1:
        return CheegerReport(1, 0, 0.0, 0.0)
    _, A = _adjacency(adj)
    lam, iters = spectral_gap(A, tol=tol)
    rep = CheegerReport(len(adj), n_edges, lam, lam / 2, iterations=iters)
    if len(adj) <= EXACT_LIMIT:
        rep.edge_expansion, rep.conductance = exact_isoperimetry(adj)
    return rep


def cycle_graph(n: int) -> dict:
    return graph_from_edges((i, (i + 1) % n) for i in range(n))


def complete_graph(n: int) -> dict:
    return graph_from_edges(itertools.combinations(range(n), 2))
