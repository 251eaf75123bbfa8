"""Finite graphs with optional loops, products, powers and generators."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product as _cartesian
from typing import Iterable, Mapping, Sequence

Edge = tuple[int, int]


class GraphError(ValueError):
    pass


class SearchCapExceeded(Exception):
    """Raised when an exact exponential search would exceed its size cap."""


@dataclass(frozen=True)
class Graph:
    """Simple graph on vertices ``0..n-1``; loops are kept apart from edges."""

    n: int
    edges: frozenset[Edge] = frozenset()
    loops: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        if self.n < 0:
            raise GraphError("negative vertex count")
        for u, v in self.edges:
            if not u < v:
                raise GraphError(f"edge {(u, v)} is not normalized as (min, max)")
            if v >= self.n or u < 0:
                raise GraphError(f"edge {(u, v)} references a vertex outside 0..{self.n - 1}")
        for v in self.loops:
            if not 0 <= v < self.n:
                raise GraphError(f"loop at {v} references a vertex outside 0..{self.n - 1}")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]] = (), loops: Iterable[int] = ()) -> "Graph":
        """Build a graph, normalizing pairs and moving ``(v, v)`` pairs into loops."""
        es = set()
        ls = set(loops)
        for u, v in edges:
            if u == v:
                ls.add(u)
            else:
                es.add((min(u, v), max(u, v)))
        return cls(n, frozenset(es), frozenset(ls))

    @cached_property
    def adj(self) -> tuple[frozenset[int], ...]:
        nb: list[set[int]] = [set() for _ in range(self.n)]
        for u, v in self.edges:
            nb[u].add(v)
            nb[v].add(u)
        return tuple(frozenset(s) for s in nb)

    @property
    def vertices(self) -> range:
        return range(self.n)

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges if u != v else False

    def adjacent_or_loop(self, u: int, v: int) -> bool:
        """Adjacency in the loop-graph sense: equal vertices are adjacent iff looped."""
        if u == v:
            return u in self.loops
        return (min(u, v), max(u, v)) in self.edges

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def max_degree(self) -> int:
        return max((len(a) for a in self.adj), default=0)

    def is_reflexive(self) -> bool:
        return len(self.loops) == self.n

    def reflexive(self) -> "Graph":
        return Graph(self.n, self.edges, frozenset(range(self.n)))

    def without_loops(self) -> "Graph":
        return Graph(self.n, self.edges)

    def complement(self) -> "Graph":
        es = {(u, v) for u in range(self.n) for v in range(u + 1, self.n)} - self.edges
        return Graph(self.n, frozenset(es), self.loops)

    def distances_from(self, sources: Iterable[int], limit: int | None = None) -> dict[int, int]:
        """BFS distance to the nearest source, optionally cut off at ``limit``."""
        dist = {}
        queue = deque()
        for s in sources:
            if s not in dist:
                dist[s] = 0
                queue.append(s)
        while queue:
            u = queue.popleft()
            d = dist[u]
            if limit is not None and d >= limit:
                continue
            for w in self.adj[u]:
                if w not in dist:
                    dist[w] = d + 1
                    queue.append(w)
        return dist

    def induced(self, vertices: Iterable[int]) -> tuple["Graph", list[int]]:
        """Induced subgraph on ``vertices`` (renumbered in increasing order) and the old ids."""
        old = sorted(set(vertices))
        new = {v: i for i, v in enumerate(old)}
        es = [(new[u], new[v]) for u, v in self.edges if u in new and v in new]
        ls = [new[v] for v in self.loops if v in new]
        return Graph.from_edges(len(old), es, ls), old

    def components(self) -> list[list[int]]:
        seen: set[int] = set()
        comps = []
        for v in range(self.n):
            if v not in seen:
                comp = sorted(self.distances_from([v]))
                seen.update(comp)
                comps.append(comp)
        return comps

    def diameter(self) -> int:
        """Largest finite distance between two vertices (0 for graphs with < 2 vertices)."""
        return max((max(self.distances_from([v]).values()) for v in range(self.n)), default=0)


@dataclass(frozen=True)
class ColoredGraph:
    """A graph with a color (natural number) on every vertex."""

    graph: Graph
    colors: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        if len(self.colors) != self.graph.n:
            raise GraphError(f"{len(self.colors)} colors given for {self.graph.n} vertices")

    @classmethod
    def uniform(cls, g: Graph, color: int = 1) -> "ColoredGraph":
        return cls(g, (color,) * g.n)

    @property
    def n(self) -> int:
        return self.graph.n

    def induced(self, vertices: Iterable[int]) -> tuple["ColoredGraph", list[int]]:
        sub, old = self.graph.induced(vertices)
        return ColoredGraph(sub, tuple(self.colors[v] for v in old)), old


def product_index(q: int, m: int, m_count: int) -> int:
    """Row-major flattening of the product vertex ``[q, m]``."""
    return q * m_count + m


def product_pair(v: int, m_count: int) -> tuple[int, int]:
    return divmod(v, m_count)


def strong_product(left: Graph, right: Graph) -> Graph:
    """Strong product; vertex ``[q, m]`` gets id ``q * right.n + m``. Input loops are ignored."""
    nm = right.n
    ladj = [a | {q} for q, a in enumerate(left.adj)]
    radj = [a | {m} for m, a in enumerate(right.adj)]
    es = set()
    for q in range(left.n):
        for m in range(nm):
            u = q * nm + m
            for q2 in ladj[q]:
                for m2 in radj[m]:
                    v = q2 * nm + m2
                    if u < v:
                        es.add((u, v))
    return Graph(left.n * nm, frozenset(es))


def power(g: Graph, r: int, reflexive: bool = False) -> Graph:
    """Edges between distinct vertices at distance at most ``r``; loops everywhere if reflexive."""
    if r < 1:
        raise GraphError("power needs r >= 1")
    es = set()
    for u in range(g.n):
        for v in g.distances_from([u], limit=r):
            if u < v:
                es.add((u, v))
    loops = frozenset(range(g.n)) if reflexive else frozenset()
    return Graph(g.n, frozenset(es), loops)


# -- generators ---------------------------------------------------------------


def _positive(*dims: int) -> None:
    for d in dims:
        if not isinstance(d, int) or d < 1:
            raise GraphError(f"dimension must be a positive integer, got {d!r}")


def path(n: int) -> Graph:
    _positive(n)
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle(n: int) -> Graph:
    if n < 3:
        raise GraphError("a cycle needs at least 3 vertices")
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete(n: int) -> Graph:
    _positive(n)
    return Graph.from_edges(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


def grid2d(a: int, b: int) -> Graph:
    """``a`` x ``b`` grid; vertex ``(i, j)`` has id ``i * b + j``."""
    _positive(a, b)
    es = []
    for i in range(a):
        for j in range(b):
            v = i * b + j
            if i + 1 < a:
                es.append((v, v + b))
            if j + 1 < b:
                es.append((v, v + 1))
    return Graph.from_edges(a * b, es)


def grid3d(a: int, b: int, c: int) -> Graph:
    """``a`` x ``b`` x ``c`` grid; vertex ``(i, j, k)`` has id ``(i * b + j) * c + k``."""
    _positive(a, b, c)
    es = []
    for i, j, k in _cartesian(range(a), range(b), range(c)):
        v = (i * b + j) * c + k
        if i + 1 < a:
            es.append((v, v + b * c))
        if j + 1 < b:
            es.append((v, v + c))
        if k + 1 < c:
            es.append((v, v + 1))
    return Graph.from_edges(a * b * c, es)


def grid3d_coords(v: int, side: int) -> tuple[int, int, int]:
    i, rest = divmod(v, side * side)
    j, k = divmod(rest, side)
    return i, j, k


def pinned_grid(n: int) -> Graph:
    """The n^2 x n^2 grid plus an apex (id n^4) adjacent to the 1-based points [in, jn]."""
    _positive(n)
    side = n * n
    g = grid2d(side, side)
    apex = side * side
    es = set(g.edges)
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            es.add(((i * n - 1) * side + (j * n - 1), apex))
    return Graph(apex + 1, frozenset(es))


def half_graph(n: int) -> Graph:
    """Vertices ``u_i = i - 1`` and ``v_j = n + j - 1``; ``u_i v_j`` is an edge iff ``i <= j``."""
    _positive(n)
    return Graph.from_edges(2 * n, [(i, n + j) for i in range(n) for j in range(i, n)])


def disjoint_copies(g: Graph, n: int) -> Graph:
    """``n`` disjoint copies of ``g``; copy ``c`` occupies ids ``c * g.n .. (c + 1) * g.n - 1``."""
    _positive(n)
    es = [(u + c * g.n, v + c * g.n) for c in range(n) for u, v in g.edges]
    ls = [v + c * g.n for c in range(n) for v in g.loops]
    return Graph.from_edges(g.n * n, es, ls)


GENERATORS = {
    "path": path,
    "cycle": cycle,
    "complete": complete,
    "grid2d": grid2d,
    "grid3d": grid3d,
    "pinned_grid": pinned_grid,
    "half_graph": half_graph,
}


def generate(kind: str, *args) -> Graph:
    """Named generator, e.g. ``generate("grid2d", 2, 3)``.

    ``disjoint_copies`` takes an inner descriptor tuple: ``generate("disjoint_copies", ("pinned_grid", 2), 3)``.
    """
    if kind == "disjoint_copies":
        inner, n = args
        return disjoint_copies(generate(*inner), n)
    if kind not in GENERATORS:
        raise GraphError(f"unknown generator {kind!r}")
    return GENERATORS[kind](*args)


# -- colorings, balls, half-graphs --------------------------------------------


def greedy_proper_coloring(g: Graph) -> tuple[int, ...]:
    """Least free color, vertices in id order; colors start at 0."""
    col: list[int] = []
    for v in range(g.n):
        used = {col[u] for u in g.adj[v] if u < v}
        c = 0
        while c in used:
            c += 1
        col.append(c)
    return tuple(col)


@dataclass(frozen=True)
class Ball:
    graph: Graph
    vertices: tuple[int, ...]  # original ids, increasing; position = new id
    dist: Mapping[int, int]  # original id -> distance to nearest center


def ball(g: Graph, centers: Iterable[int], r: int) -> Ball:
    centers = list(centers)
    if not centers:
        raise GraphError("ball needs at least one center")
    dist = g.distances_from(centers, limit=r)
    sub, old = g.induced(dist)
    return Ball(sub, tuple(old), dist)


def _search_half_graph(g: Graph, side_a: Sequence[int], side_b: Sequence[int], order: int):
    """Backtracking over u_1, v_1, u_2, v_2, ... with all vertices distinct."""
    us: list[int] = []
    vs: list[int] = []

    def fits_u(u: int) -> bool:
        i = len(us)
        return all(g.has_edge(u, v) == (i <= j) for j, v in enumerate(vs))

    def fits_v(v: int) -> bool:
        j = len(vs)
        return all(g.has_edge(u, v) == (i <= j) for i, u in enumerate(us))

    def rec() -> bool:
        if len(vs) == order:
            return True
        if len(us) == len(vs):
            for u in side_a:
                if u not in us and u not in vs and fits_u(u):
                    us.append(u)
                    if rec():
                        return True
                    us.pop()
        else:
            for v in side_b:
                if v not in us and v not in vs and fits_v(v):
                    vs.append(v)
                    if rec():
                        return True
                    vs.pop()
        return False

    return (tuple(us), tuple(vs)) if rec() else None


def find_bi_induced_half_graph(
    g: Graph, side_a: Iterable[int], side_b: Iterable[int], order: int, cap: int = 16
) -> tuple[tuple[int, ...], tuple[int, ...]] | None:
    """Witness ``(u_1..u_k, v_1..v_k)`` with ``u_i v_j`` an edge iff ``i <= j``, or None.

    Raises SearchCapExceeded when ``|A| + |B| > cap``.
    """
    if order < 1:
        raise GraphError("half-graph order must be >= 1")
    a, b = sorted(set(side_a)), sorted(set(side_b))
    if set(a) & set(b):
        raise GraphError("sides must be disjoint")
    if len(a) + len(b) > cap:
        raise SearchCapExceeded(f"{len(a) + len(b)} vertices exceed the search cap {cap}")
    return _search_half_graph(g, a, b, order)


def find_half_graph_any_sides(g: Graph, order: int, cap: int = 16):
    """Like ``find_bi_induced_half_graph`` but over every bipartition of ``V(g)``."""
    if order < 1:
        raise GraphError("half-graph order must be >= 1")
    if g.n > cap:
        raise SearchCapExceeded(f"{g.n} vertices exceed the search cap {cap}")
    vs = list(range(g.n))
    return _search_half_graph(g, vs, vs, order)


# -- serialization --------------------------------------------------------------


def graph_to_dict(g: Graph | ColoredGraph) -> dict:
    colors = None
    if isinstance(g, ColoredGraph):
        colors = g.colors
        g = g.graph
    d: dict = {"n": g.n, "edges": [list(e) for e in sorted(g.edges)], "loops": sorted(g.loops)}
    if colors is not None:
        d["colors"] = {str(v): c for v, c in enumerate(colors)}
    return d


def graph_to_json(g: Graph | ColoredGraph) -> str:
    return json.dumps(graph_to_dict(g)) + "\n"


def graph_from_dict(d: Mapping) -> Graph | ColoredGraph:
    try:
        n = int(d["n"])
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphError("graph JSON needs an integer 'n'") from exc
    for pair in d.get("edges", []):
        if len(pair) != 2:
            raise GraphError(f"malformed edge {pair!r}")
        for v in pair:
            if not isinstance(v, int) or not 0 <= v < n:
                raise GraphError(f"dangling vertex id {v!r} in edge {pair!r}")
    for v in d.get("loops", []):
        if not isinstance(v, int) or not 0 <= v < n:
            raise GraphError(f"dangling vertex id {v!r} in loops")
    g = Graph.from_edges(n, d.get("edges", []), d.get("loops", []))
    if "colors" not in d:
        return g
    cmap = {}
    for k, c in d["colors"].items():
        v = int(k)
        if not 0 <= v < n:
            raise GraphError(f"dangling vertex id {v} in colors")
        cmap[v] = int(c)
    missing = [v for v in range(n) if v not in cmap]
    if missing:
        raise GraphError(f"vertex {missing[0]} has no color")
    return ColoredGraph(g, tuple(cmap[v] for v in range(n)))


def graph_from_json(text: str | bytes) -> Graph | ColoredGraph:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(f"malformed JSON: {exc}") from exc
    return graph_from_dict(d)


def graph_to_dot(g: Graph | ColoredGraph, name: str = "G") -> str:
    colors = g.colors if isinstance(g, ColoredGraph) else None
    base = g.graph if isinstance(g, ColoredGraph) else g
    lines = [f"graph {name} {{"]
    for v in range(base.n):
        attr = f' [label="{v}:{colors[v]}"]' if colors is not None else ""
        lines.append(f"  {v}{attr};")
    for v in sorted(base.loops):
        lines.append(f"  {v} -- {v};")
    for u, v in sorted(base.edges):
        lines.append(f"  {u} -- {v};")
    lines.append("}")
    return "\n".join(lines) + "\n"
