"""Rooted balls, injectivity radii and empirical Benjamini-Schramm statistics.

Rooted balls get an exact canonical key from color refinement seeded with
(distance to root, degree in ball), followed by individualization search
with automorphism pruning. Two balls share a key iff a root-preserving
isomorphism exists between them.
"""
from __future__ import annotations

import json
import struct
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from qegraphs.graph_core import Graph, cartesian_product

BALL_SIZE_GUARD = 10_000


class BallSizeError(RuntimeError):
    pass


# --- canonical labeling -----------------------------------------------------

def _rank(keys: list) -> list[int]:
    table = {k: i for i, k in enumerate(sorted(set(keys)))}
    return [table[k] for k in keys]


def _refine(adj: list[tuple[int, ...]], colors: list[int]) -> list[int]:
    ncol = len(set(colors))
    while True:
        sig = [(colors[v], tuple(sorted(colors[w] for w in adj[v]))) for v in range(len(adj))]
        new = _rank(sig)
        k = len(set(new))
        if k == ncol:
            return new
        colors, ncol = new, k


def _individualize(colors: list[int], v: int) -> list[int]:
    return _rank([(c, u != v) for u, c in enumerate(colors)])


def _orbit_roots(n: int, gens: list[list[int]]) -> list[int]:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for g in gens:
        for v, w in enumerate(g):
            a, b = find(v), find(w)
            if a != b:
                parent[max(a, b)] = min(a, b)
    return [find(v) for v in range(n)]


def canonical_labeling(adj: list[tuple[int, ...]], colors: list[int]) -> tuple[list[int], tuple]:
    """Return ``(label, encoding)`` where ``label[v]`` is v's canonical position.

    ``encoding`` is the sorted relabeled edge list, minimal over the search
    tree; it depends only on the isomorphism class of the colored graph.
    """
    n = len(adj)
    edges = [(u, v) for u in range(n) for v in adj[u] if u < v]
    state: dict = {"best": None, "best_lab": None, "first": None, "first_lab": None}
    gens: list[list[int]] = []

    def leaf(lab):
        enc = tuple(sorted((min(lab[u], lab[v]), max(lab[u], lab[v])) for u, v in edges))
        if state["first"] is None:
            state.update(first=enc, first_lab=lab, best=enc, best_lab=lab)
            return
        for ref in ("first", "best"):
            if enc == state[ref]:
                inv = [0] * n
                for v, p in enumerate(state[ref + "_lab"]):
                    inv[p] = v
                gens.append([inv[lab[v]] for v in range(n)])
                return
        if enc < state["best"]:
            state.update(best=enc, best_lab=lab)

    def search(colors, path):
        colors = _refine(adj, colors)
        counts = Counter(colors)
        target = min((c for c, k in counts.items() if k > 1), default=None)
        if target is None:
            leaf(colors)
            return
        cell = [v for v in range(n) if colors[v] == target]
        tried: list[int] = []
        for v in cell:
            if tried:
                fixing = [g for g in gens if all(g[p] == p for p in path)]
                if fixing:
                    roots = _orbit_roots(n, fixing)
                    if any(roots[v] == roots[t] for t in tried):
                        continue
            search(_individualize(colors, v), path + [v])
            tried.append(v)

    search(_rank(colors), [])
    return state["best_lab"], state["best"]


def encode_key(n: int, enc: tuple) -> bytes:
    """Vertex count (4 bytes, big endian) + packed upper-triangular adjacency bits."""
    bits = np.zeros((n, n), dtype=np.uint8)
    for u, v in enc:
        bits[u, v] = 1
    iu = np.triu_indices(n, 1)
    return struct.pack(">I", n) + np.packbits(bits[iu]).tobytes()


# --- balls ------------------------------------------------------------------

@dataclass(frozen=True)
class RootedBall:
    """Induced ball of radius ``radius``; local vertex 0 is the root."""

    radius: int
    root: int
    graph: Graph
    vertices: tuple[int, ...]
    dist: tuple[int, ...]
    canonical_key: bytes = field(repr=False)

    @property
    def key_hex(self) -> str:
        return self.canonical_key.hex()

    def is_tree(self) -> bool:
        return self.graph.num_edges == self.graph.n - 1


def _bfs(g: Graph, v: int, R: int) -> dict[int, int]:
    dist = {v: 0}
    frontier = [v]
    for r in range(1, R + 1):
        nxt = []
        for u in frontier:
            for w in g.adj[u]:
                if w not in dist:
                    dist[w] = r
                    nxt.append(w)
                    if len(dist) > BALL_SIZE_GUARD:
                        raise BallSizeError(f"ball of radius {R} exceeds {BALL_SIZE_GUARD} vertices")
        if not nxt:
            break
        frontier = nxt
    return dist


def rooted_ball_key(g: Graph, dist: list[int]) -> bytes:
    colors = [(dist[v], len(g.adj[v])) for v in range(g.n)]
    label, enc = canonical_labeling(list(g.adj), colors)
    return encode_key(g.n, enc)


def ball(g: Graph, v: int, R: int) -> RootedBall:
    if R < 0:
        raise ValueError("radius must be nonnegative")
    dist = _bfs(g, v, R)
    verts = list(dist)                      # BFS order, root first
    local = {u: i for i, u in enumerate(verts)}
    edges = [(local[u], local[w]) for u in verts for w in g.adj[u] if w in local and local[u] < local[w]]
    sub = Graph.from_edges(len(verts), edges)
    dl = [dist[u] for u in verts]
    return RootedBall(R, v, sub, tuple(verts), tuple(dl), rooted_ball_key(sub, dl))


def injectivity_radius(g: Graph, v: int, cap: int) -> int:
    """Largest ``r <= cap`` whose induced ball around ``v`` is a tree."""
    if cap < 0:
        raise ValueError("cap must be nonnegative")
    dist = {v: 0}
    frontier = [v]
    n_vert, n_edge = 1, 0
    for r in range(1, cap + 1):
        nxt = []
        for u in frontier:
            for w in g.adj[u]:
                if w not in dist:
                    dist[w] = r
                    nxt.append(w)
        cross = within = 0
        for w in nxt:
            for x in g.adj[w]:
                dx = dist.get(x)
                if dx is None:
                    continue
                if dx < r:
                    cross += 1
                elif dx == r:
                    within += 1
        n_vert += len(nxt)
        n_edge += cross + within // 2
        if n_edge != n_vert - 1:
            return r - 1
        frontier = nxt
    return cap


def bst_profile(g: Graph, R: int) -> float:
    """Fraction of vertices whose injectivity radius is below ``R``."""
    if R < 1:
        raise ValueError("R must be >= 1")
    if g.n == 0:
        return 0.0
    short = sum(1 for v in range(g.n) if injectivity_radius(g, v, R) < R)
    return short / g.n


# --- histograms -------------------------------------------------------------

@dataclass(frozen=True)
class BallHistogram:
    radius: int
    freqs: dict[bytes, float]
    samples: int

    @classmethod
    def from_keys(cls, radius: int, keys: list[bytes]) -> "BallHistogram":
        c = Counter(keys)
        total = len(keys)
        return cls(radius, {k: c[k] / total for k in sorted(c)}, total)

    @classmethod
    def point_mass(cls, b: RootedBall) -> "BallHistogram":
        return cls(b.radius, {b.canonical_key: 1.0}, 1)

    def to_json(self) -> str:
        classes = [{"key": k.hex(), "freq": f} for k, f in sorted(self.freqs.items())]
        return json.dumps({"R": self.radius, "samples": self.samples, "classes": classes})


def ball_distribution(g: Graph, R: int, sample: int | None = None, seed: int = 0) -> BallHistogram:
    """Histogram of rooted R-ball classes over all vertices, or a seeded uniform sample."""
    if sample is None:
        roots = range(g.n)
    else:
        rng = np.random.default_rng(seed)
        roots = rng.integers(0, g.n, size=sample).tolist()
    return BallHistogram.from_keys(R, [ball(g, v, R).canonical_key for v in roots])


def tree_ball_graph(d: int, depth: int) -> Graph:
    """Depth-``depth`` ball of the d-regular tree, root 0, vertices in BFS order."""
    size = 1
    layer = 1
    for r in range(depth):
        layer *= d if r == 0 else d - 1
        size += layer
        if size > BALL_SIZE_GUARD:
            raise BallSizeError(f"tree ball of depth {depth} exceeds {BALL_SIZE_GUARD} vertices")
    edges = []
    frontier = [0]
    nxt_id = 1
    for r in range(depth):
        new = []
        for u in frontier:
            for _ in range(d if r == 0 else d - 1):
                edges.append((u, nxt_id))
                new.append(nxt_id)
                nxt_id += 1
        frontier = new
    return Graph.from_edges(nxt_id, edges)


def limit_ball_product_tree(d: int, X: Graph, x0: int, R: int) -> RootedBall:
    """Radius-R ball of ``T_d x X`` rooted at ``(o, x0)``.

    Only tree vertices within distance R of the root can appear, so a
    depth-R tree ball stands in for the infinite tree.
    """
    t = tree_ball_graph(d, R)
    if t.n * X.n > BALL_SIZE_GUARD:
        raise BallSizeError("product ball exceeds size guard")
    return ball(cartesian_product(t, X), x0, R)


def limit_histogram_product_tree(d: int, X: Graph, R: int) -> BallHistogram:
    """Radius-R marginal of the tree-product limit, root fiber uniform over X."""
    keys = [limit_ball_product_tree(d, X, x, R).canonical_key for x in range(X.n)]
    return BallHistogram.from_keys(R, keys)


def bs_distance(h1: BallHistogram, h2: BallHistogram) -> float:
    """Total variation distance between two ball histograms of equal radius."""
    if h1.radius != h2.radius:
        raise ValueError(f"radius mismatch {h1.radius} != {h2.radius}")
    keys = set(h1.freqs) | set(h2.freqs)
    return 0.5 * sum(abs(h1.freqs.get(k, 0.0) - h2.freqs.get(k, 0.0)) for k in keys)
