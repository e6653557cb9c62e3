"""Simple undirected graphs, generators, Cartesian products and hub gluing.

Graphs are immutable: every transform returns a new :class:`Graph`.
Product vertices are flattened row-major, ``(u, v) -> u * |G2| + v``.
"""
from __future__ import annotations

import bisect
import io
import warnings
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np


class GraphFormatError(ValueError):
    """Raised for malformed edge lists or graphs violating simplicity."""


@dataclass(frozen=True)
class Graph:
    """Finite simple undirected graph stored as sorted neighbor tuples."""

    n: int
    adj: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 0:
            raise GraphFormatError(f"negative vertex count {self.n}")
        if len(self.adj) != self.n:
            raise GraphFormatError(f"adjacency has {len(self.adj)} rows, expected {self.n}")
        for u, nbrs in enumerate(self.adj):
            prev = -1
            for v in nbrs:
                if not 0 <= v < self.n:
                    raise GraphFormatError(f"neighbor {v} of {u} out of range")
                if v == u:
                    raise GraphFormatError(f"self-loop at {u}")
                if v <= prev:
                    raise GraphFormatError(f"neighbors of {u} not sorted/unique")
                prev = v
        for u, nbrs in enumerate(self.adj):
            for v in nbrs:
                if not _contains(self.adj[v], u):
                    raise GraphFormatError(f"asymmetric adjacency: {u}->{v} without {v}->{u}")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise GraphFormatError(f"self-loop at {u}")
            if v in nbrs[u]:
                raise GraphFormatError(f"repeated edge ({u}, {v})")
            nbrs[u].add(v)
            nbrs[v].add(u)
        return cls(n, tuple(tuple(sorted(s)) for s in nbrs))

    def edges(self) -> list[tuple[int, int]]:
        """Edges ``(u, v)`` with ``u < v`` in lexicographic order."""
        return [(u, v) for u in range(self.n) for v in self.adj[u] if u < v]

    @property
    def num_edges(self) -> int:
        return sum(len(a) for a in self.adj) // 2

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adj], dtype=int)

    def has_edge(self, u: int, v: int) -> bool:
        return 0 <= u < self.n and _contains(self.adj[u], v)

    def regularity(self) -> int | None:
        """Common degree if the graph is regular, else None."""
        degs = {len(a) for a in self.adj}
        return degs.pop() if len(degs) == 1 else None

    def adjacency_matrix(self, dtype=float) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=dtype)
        for u, nbrs in enumerate(self.adj):
            A[u, list(nbrs)] = 1
        return A

    def is_connected(self) -> bool:
        if self.n == 0:
            return True
        seen = np.zeros(self.n, dtype=bool)
        seen[0] = True
        stack = [0]
        while stack:
            u = stack.pop()
            for v in self.adj[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        return bool(seen.all())

    def relabel(self, perm) -> "Graph":
        """Graph with vertex ``u`` renamed to ``perm[u]``."""
        perm = [int(p) for p in perm]
        if sorted(perm) != list(range(self.n)):
            raise ValueError("perm is not a permutation of the vertices")
        return Graph.from_edges(self.n, ((perm[u], perm[v]) for u, v in self.edges()))


def _contains(sorted_tuple: tuple[int, ...], x: int) -> bool:
    i = bisect.bisect_left(sorted_tuple, x)
    return i < len(sorted_tuple) and sorted_tuple[i] == x


def cycle_graph(k: int) -> Graph:
    if k < 3:
        raise ValueError(f"cycle needs at least 3 vertices, got {k}")
    return Graph.from_edges(k, ((i, (i + 1) % k) for i in range(k)))


def random_regular(n: int, d: int, seed: int, max_restarts: int = 1000) -> Graph:
    """Random simple d-regular graph on n vertices from the pairing model.

    Stubs are paired uniformly; pairs forming loops or repeated edges are
    returned to the pool and re-paired. A pool with no admissible pair left
    restarts the whole sample, up to ``max_restarts`` times.
    """
    if n < 0 or d < 0:
        raise ValueError("n and d must be nonnegative")
    if (n * d) % 2:
        raise ValueError(f"n*d must be even (n={n}, d={d})")
    if d >= n and not (n == 0 and d == 0):
        raise ValueError(f"need d < n (n={n}, d={d})")
    rng = np.random.default_rng(seed)
    for _ in range(max_restarts):
        edges = _try_pairing(n, d, rng)
        if edges is not None:
            return Graph.from_edges(n, sorted(edges))
    raise RuntimeError(f"no simple {d}-regular graph on {n} vertices after {max_restarts} restarts")


def _try_pairing(n: int, d: int, rng: np.random.Generator) -> set[tuple[int, int]] | None:
    edges: set[tuple[int, int]] = set()
    stubs = np.repeat(np.arange(n), d)
    while stubs.size:
        rng.shuffle(stubs)
        leftover: list[int] = []
        for s1, s2 in zip(stubs[0::2].tolist(), stubs[1::2].tolist()):
            if s1 > s2:
                s1, s2 = s2, s1
            if s1 != s2 and (s1, s2) not in edges:
                edges.add((s1, s2))
            else:
                leftover += [s1, s2]
        if leftover and not _admissible_pair_exists(leftover, edges):
            return None
        stubs = np.array(leftover, dtype=int)
    return edges


def _admissible_pair_exists(stubs: list[int], edges: set[tuple[int, int]]) -> bool:
    verts = sorted(set(stubs))
    for i, a in enumerate(verts):
        for b in verts[i + 1:]:
            if (a, b) not in edges:
                return True
    return False


def product_index(u: int, v: int, n2: int) -> int:
    return u * n2 + v


def product_vertex(index: int, n2: int) -> tuple[int, int]:
    return divmod(index, n2)


def cartesian_product(g1: Graph, g2: Graph) -> Graph:
    """Cartesian product; adjacency is ``A1 (x) I + I (x) A2`` in row-major order."""
    n2 = g2.n
    adj = []
    for u in range(g1.n):
        for v in range(n2):
            nb = [w * n2 + v for w in g1.adj[u]] + [u * n2 + w for w in g2.adj[v]]
            adj.append(tuple(sorted(nb)))
    return Graph(g1.n * n2, tuple(adj))


def delete_edge(g: Graph, u: int, v: int) -> Graph:
    if not g.has_edge(u, v):
        raise ValueError(f"edge ({u}, {v}) not in graph")
    adj = list(g.adj)
    adj[u] = tuple(w for w in adj[u] if w != v)
    adj[v] = tuple(w for w in adj[v] if w != u)
    return Graph(g.n, tuple(adj))


@dataclass(frozen=True)
class HubGraph:
    """``copies`` edge-deleted copies of a regular graph joined through one hub.

    Copy ``k`` occupies vertices ``offsets[k] .. offsets[k] + n - 1``; the hub
    is the last vertex.
    """

    graph: Graph
    base: Graph
    copies: int
    deleted_edge: tuple[int, int]
    offsets: tuple[int, ...] = field(default=())

    @property
    def n_base(self) -> int:
        return self.base.n

    @property
    def hub(self) -> int:
        return self.copies * self.base.n

    @property
    def degree(self) -> int:
        return self.base.degree(self.deleted_edge[0]) + 1

    @property
    def conforming(self) -> bool:
        d = self.degree
        return d % 2 == 0 and d >= 8 and self.copies == d // 2

    def copy_vertices(self, k: int) -> range:
        off = self.offsets[k]
        return range(off, off + self.base.n)

    def endpoints(self, k: int) -> tuple[int, int]:
        """Deleted-edge endpoints inside copy ``k`` (global indices)."""
        u, v = self.deleted_edge
        return self.offsets[k] + u, self.offsets[k] + v


def hub_glue(f: Graph, edge: tuple[int, int] | None = None, copies: int | None = None) -> HubGraph:
    """Delete ``edge`` from d-regular ``f``, take copies, wire all endpoints to a new hub.

    ``edge`` defaults to the lexicographically smallest edge and ``copies``
    to ``d // 2``, which makes the result d-regular.
    """
    d = f.regularity()
    if d is None:
        raise ValueError("base graph must be regular")
    if d % 2:
        raise ValueError(f"degree must be even, got {d}")
    if copies is None:
        copies = d // 2
    if copies < 1:
        raise ValueError("need at least one copy")
    if edge is None:
        edge = f.edges()[0]
    u0, v0 = sorted(edge)
    base = delete_edge(f, u0, v0)
    if d < 8 or copies != d // 2:
        warnings.warn(
            f"hub graph with d={d}, copies={copies} is outside the d>=8, copies=d/2 regime",
            stacklevel=2,
        )
    n = f.n
    offsets = tuple(k * n for k in range(copies))
    hub = copies * n
    edges = [(off + a, off + b) for off in offsets for a, b in base.edges()]
    for off in offsets:
        edges += [(off + u0, hub), (off + v0, hub)]
    graph = Graph.from_edges(hub + 1, edges)
    return HubGraph(graph=graph, base=base, copies=copies, deleted_edge=(u0, v0), offsets=offsets)


def write_edge_list(g: Graph, sink: TextIO | None = None) -> str:
    """Write ``"n m"`` then one ``"u v"`` line per edge (u < v, sorted)."""
    edges = g.edges()
    text = f"{g.n} {len(edges)}\n" + "".join(f"{u} {v}\n" for u, v in edges)
    if sink is not None:
        sink.write(text)
    return text


def read_edge_list(source: TextIO | str) -> Graph:
    if isinstance(source, str):
        source = io.StringIO(source)
    lines = [ln.strip() for ln in source.read().split("\n")]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise GraphFormatError("empty edge list")
    n, m = _parse_pair(lines[0], 1)
    if n < 0 or m < 0:
        raise GraphFormatError("negative header values")
    body = lines[1:]
    if len(body) != m:
        raise GraphFormatError(f"header declares {m} edges, found {len(body)}")
    edges = [_parse_pair(ln, i + 2) for i, ln in enumerate(body)]
    return Graph.from_edges(n, edges)


def _parse_pair(line: str, lineno: int) -> tuple[int, int]:
    parts = line.split()
    if len(parts) != 2:
        raise GraphFormatError(f"line {lineno}: expected two integers, got {line!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise GraphFormatError(f"line {lineno}: non-integer field in {line!r}") from None
