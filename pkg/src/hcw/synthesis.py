"""Synthesis of a bounded-width expression over ``Q_r`` for ``xi(G)``, G inside ``Q x M``.

The expression is assembled bottom-up along a normalized tree decomposition of ``M``.
At node ``t`` the current subexpression is valued ``xi(G)`` on the columns forgotten in
the subtree of ``t``, and every vertex carries its running color (see ``RunningColor``).

A running color of ``v`` is a partial map from label sets ``W`` to types. The domain is
always the full powerset of one maximal label set ``D`` (every subset of a complete set is
complete, because the coloring ``s_Q`` is injective on each ball), and the type of a
sub-tuple is a projection of the type of the full tuple. So a color is stored as
``(D, type of the full tuple)`` and the table is expanded only on request.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Hashable

from .expr import AddEdges, Create, Expr, ExpressionError, Recolor, Union, evaluate, preorder
from .graph import ColoredGraph, Graph, greedy_proper_coloring, power, strong_product
from .logic import (
    Formula, TypeEngine, TypeTable, check_strong_locality, interpret, quantifier_rank,
)
from .treedecomp import (
    TreeDecomposition, forget_order, is_normalized, normalize, validate, wreach_sets,
)


class SynthesisError(ValueError):
    pass


class TypeRankTooLow(SynthesisError):
    """Two vertex pairs share a color pair but only one of them is an edge of ``xi(G)``."""

    def __init__(self, q_type: int, extra: tuple[int, int], node: int) -> None:
        super().__init__(
            f"color pair would create the non-edge {extra} at decomposition node {node}; "
            f"type rank {q_type} is too low, retry with q_type={q_type + 1}"
        )
        self.extra = extra
        self.node = node


@dataclass(frozen=True)
class RunningColor:
    labels: frozenset[tuple[int, int]]  # maximal W: (s_Q color, vertex of M) pairs
    top: int  # type of the full tuple (Z sorted, then v)
    base: int  # type of v alone, the value at the empty W
    vertex: int = field(compare=False, hash=False, repr=False)  # a representative

    def __repr__(self) -> str:
        labels = ",".join(f"{c}:{h}" for c, h in sorted(self.labels))
        return f"RC({self.base}/{self.top}|{labels})"


@dataclass(frozen=True)
class Tagged:
    part: int  # 1, 2: children; 3: new column
    color: Hashable


class _NewVertex:
    def __repr__(self) -> str:
        return "NewVertex"


NEW_VERTEX = _NewVertex()


class SynthesisContext:
    """Everything the construction reads: factors, decomposition, orders, colorings, oracle."""

    def __init__(self, Q: Graph, M: Graph, td: TreeDecomposition, G: ColoredGraph, xi: Formula,
                 r: int, q_type: int = 2, r_sep: int | None = None, r_sep_cap: int = 16,
                 check_locality: bool = True) -> None:
        if r < 1:
            raise SynthesisError("r must be >= 1")
        self.Q, self.M, self.G, self.xi, self.r, self.q_type = Q, M, G, xi, r, q_type
        self.m_count = M.n
        if G.n != Q.n * M.n:
            raise SynthesisError(f"G has {G.n} vertices, expected |V(Q)|*|V(M)| = {Q.n * M.n}")
        product = strong_product(Q, M)
        stray = G.graph.edges - product.edges
        if stray:
            raise SynthesisError(f"edge {min(stray)} of G is not an edge of Q x M")
        if r_sep is None:
            r_sep = min(r_sep_cap, max(r, 4 ** quantifier_rank(xi)))
        self.r_sep = R = max(r, r_sep)

        verdict = validate(M, td)
        if not verdict:
            raise SynthesisError(f"invalid decomposition: {verdict.axiom} at {verdict.witness}")
        self.td = td if is_normalized(td) else normalize(td, M)
        self.forget = forget_order(self.td)
        self.Y = self.td.forgotten_below
        self.wreach = wreach_sets(M, self.forget, R)

        self.param_graph = power(Q, R, reflexive=True) if Q.n else Q
        self.output_graph = power(Q, r, reflexive=True) if Q.n else Q
        self.s_Q = greedy_proper_coloring(power(Q, 3 * R)) if Q.n else ()
        q_sorted = sorted(range(Q.n), key=lambda p: (self.s_Q[p], p))
        self.q_rank = {p: i for i, p in enumerate(q_sorted)}
        self.balls = [sorted(Q.distances_from([p], limit=R)) for p in range(Q.n)]
        k = max(self.s_Q, default=0) + 1
        self.Gs = ColoredGraph(G.graph, tuple(G.colors[v] * k + self.s_Q[v // M.n] for v in range(G.n)))

        if check_locality:
            lv = check_strong_locality(G, xi, r)
            if not lv:
                raise SynthesisError(f"formula is not strongly {r}-local here: {lv.reason} at {lv.witness}")
        self.xi_graph = interpret(G, xi)
        self.xi_edges = self.xi_graph.edges

        self.types = TypeTable()
        self.engine = TypeEngine(self.Gs, self.types)
        self._color_cache: dict = {}

    # -- coordinates and orders

    def vertex(self, p: int, h: int) -> int:
        return p * self.m_count + h

    def coords(self, v: int) -> tuple[int, int]:
        return divmod(v, self.m_count)

    def g_key(self, v: int) -> tuple[int, int]:
        p, h = self.coords(v)
        return (self.forget.rank[h], self.q_rank[p])

    # -- running colors

    def tuple_for(self, v: int, hs) -> tuple[int, ...]:
        """``Z`` for the maximal label set over columns ``hs``, sorted, followed by ``v``."""
        p, _ = self.coords(v)
        z = [self.vertex(p2, h2) for p2 in self.balls[p] for h2 in hs]
        z.sort(key=self.g_key)
        return tuple(z) + (v,)

    def color_at(self, v: int, t: int | None) -> RunningColor:
        """``c_{v,t}``; ``t=None`` gives the initial color."""
        p, h = self.coords(v)
        hs = self.wreach[h] if t is None else self.wreach[h] - self.Y[t]
        key = (v, hs)
        got = self._color_cache.get(key)
        if got is None:
            labels = frozenset((self.s_Q[p2], h2) for p2 in self.balls[p] for h2 in hs)
            top = self.engine.type_of(self.tuple_for(v, hs), self.q_type)
            base = self.engine.type_of((v,), self.q_type)
            got = self._color_cache[key] = RunningColor(labels, top, base, v)
        return got

    def color_table(self, c: RunningColor) -> dict[frozenset, int]:
        """Expand a color to its full map ``W -> type`` (exponential in ``|D|``)."""
        v = c.vertex
        p, _ = self.coords(v)
        ball = {self.s_Q[p2]: p2 for p2 in self.balls[p]}
        labels = sorted(c.labels)
        out = {}
        for size in range(len(labels) + 1):
            for w in combinations(labels, size):
                z = sorted((self.vertex(ball[s], h) for s, h in w), key=self.g_key)
                out[frozenset(w)] = self.engine.type_of(tuple(z) + (v,), self.q_type)
        return out

    def direct_initial_table(self, v: int) -> dict[frozenset, int]:
        """The initial color straight from its definition: scan every candidate ``W``."""
        p, h = self.coords(v)
        universe = sorted({(s, h2) for s in set(self.s_Q) for h2 in self.wreach[h]})
        ball = set(self.balls[p])
        out = {}
        for size in range(len(universe) + 1):
            for w in combinations(universe, size):
                ws = set(w)
                z = [u for u in range(self.G.n)
                     if self.coords(u)[0] in ball
                     and (self.s_Q[self.coords(u)[0]], self.coords(u)[1]) in ws]
                realized = {(self.s_Q[self.coords(u)[0]], self.coords(u)[1]) for u in z}
                if realized != ws:
                    continue
                z.sort(key=self.g_key)
                out[frozenset(w)] = self.engine.type_of(tuple(z) + (v,), self.q_type)
        return out


def initial_color(ctx: SynthesisContext, v: int) -> RunningColor:
    return ctx.color_at(v, None)


def restrict_color(c: RunningColor, t: int, ctx: SynthesisContext) -> RunningColor:
    """Drop the labels of columns forgotten below ``t``."""
    p, h = ctx.coords(c.vertex)
    restricted = ctx.color_at(c.vertex, t)
    if not restricted.labels <= c.labels:
        raise SynthesisError("restriction must shrink the domain")
    return restricted


# -- assembly ------------------------------------------------------------------------


@dataclass
class _Part:
    """A built subexpression with its value tracked alongside."""

    expr: Expr
    color: dict[int, Hashable]  # vertex -> current color
    order: list[int]  # vertices in creation order
    edges: set[tuple[int, int]]


def _sort_key(c) -> str:
    return repr(c)


def build_column_expression(ctx: SynthesisContext, h: int) -> _Part:
    """Column ``V(Q) x {h}`` by single-vertex insertion; colors ``(s_Q(p), initial color)``."""
    expr = None
    color: dict[int, Hashable] = {}
    order: list[int] = []
    edges: set[tuple[int, int]] = set()
    adj = ctx.xi_graph.adj
    for p in range(ctx.Q.n):
        v = ctx.vertex(p, h)
        own = (ctx.s_Q[p], ctx.color_at(v, None))
        if expr is None:
            expr = Create(p, own)
        else:
            expr = Union(expr, Create(p, NEW_VERTEX))
            for u in order:
                if u in adj[v]:
                    target = color[u]
                    # the target color names exactly one vertex near p
                    hits = [w for w in order if color[w] == target
                            and ctx.param_graph.adjacent_or_loop(ctx.coords(w)[0], p)]
                    if hits != [u]:
                        raise SynthesisError(f"column color {target!r} is ambiguous near param {p}")
                    expr = AddEdges(NEW_VERTEX, target, expr)
                    edges.add((min(u, v), max(u, v)))
            expr = Recolor(NEW_VERTEX, own, expr)
        color[v] = own
        order.append(v)
    return _Part(expr, color, order, edges)


@dataclass
class NodeReport:
    node: int
    colors: int  # distinct colors in the node's value
    vertices: int
    missing: int  # xi-edges inside the node's columns absent from the value
    extra: int  # value edges that are not xi-edges


def _recolor_all(part: _Part, mapping: dict) -> None:
    """Apply ``mapping`` (old color -> new color) as a sequence of Recolor operations."""
    for src in sorted(mapping, key=_sort_key):
        dst = mapping[src]
        if src != dst:
            part.expr = Recolor(src, dst, part.expr)
    for v, c in part.color.items():
        part.color[v] = mapping[c]


def assemble_node(ctx: SynthesisContext, t: int, children: list[_Part | None],
                  strict: bool = True) -> _Part | None:
    """Steps 1-5 at node ``t`` given the parts built at its children (``None`` = empty)."""
    fresh = [h for h in ctx.td.bags[t]
             if ctx.td.parent[t] is None or h not in ctx.td.bags[ctx.td.parent[t]]]
    if len(fresh) > 1:
        raise SynthesisError(f"node {t} forgets {len(fresh)} vertices; decomposition not smooth")
    present = [(i, c) for i, c in enumerate(children, start=1) if c is not None]

    if not present and not fresh:
        return None

    if not present:
        # step 1: a leaf (or a node whose subtrees are empty) forgetting its vertex
        part = build_column_expression(ctx, fresh[0])
        _recolor_all(part, _target_map(ctx, part, t))
        return part

    # step 2: tag children and union them
    parts: list[_Part] = []
    where: dict[int, int] = {}
    for i, child in present:
        _recolor_all(child, {c: Tagged(i, c) for c in set(child.color.values())})
        parts.append(child)
        for v in child.color:
            where[v] = i
    # step 3: the column forgotten here
    if fresh:
        col = build_column_expression(ctx, fresh[0])
        _recolor_all(col, {c: Tagged(3, c) for c in set(col.color.values())})
        parts.append(col)
        for v in col.color:
            where[v] = 3
    merged = parts[0]
    for other in parts[1:]:
        merged.expr = Union(merged.expr, other.expr)
        merged.color.update(other.color)
        merged.order.extend(other.order)
        merged.edges |= other.edges

    # step 4: one AddEdges per color pair realized by a cross-part xi-edge
    adj = ctx.xi_graph.adj
    pairs: set[tuple] = set()
    for u in merged.order:
        for v in adj[u]:
            if v in where and where[u] < where[v]:
                pairs.add((merged.color[u], merged.color[v]))
    by_color: dict[Hashable, dict[int, list[int]]] = {}
    for v, c in merged.color.items():
        by_color.setdefault(c, {}).setdefault(ctx.coords(v)[0], []).append(v)
    padj = [set(a) | {p} for p, a in enumerate(ctx.param_graph.adj)]
    for a, b in sorted(pairs, key=lambda ab: (_sort_key(ab[0]), _sort_key(ab[1]))):
        merged.expr = AddEdges(a, b, merged.expr)
        for p, xs in by_color[a].items():
            for p2 in padj[p]:
                for y in by_color[b].get(p2, ()):
                    for x in xs:
                        if x == y:
                            continue
                        e = (min(x, y), max(x, y))
                        if e not in ctx.xi_edges and strict:
                            raise TypeRankTooLow(ctx.q_type, e, t)
                        merged.edges.add(e)

    # step 5: recolor to the running colors at t
    _recolor_all(merged, _target_map(ctx, merged, t))
    return merged


def _target_map(ctx: SynthesisContext, part: _Part, t: int) -> dict:
    mapping: dict = {}
    for v, c in part.color.items():
        target = ctx.color_at(v, t)
        if mapping.setdefault(c, target) != target:
            raise SynthesisError(f"color {c!r} splits into two running colors at node {t}")
    return mapping


@dataclass
class SynthesisResult:
    expression: Expr  # natural colors, over ``param_graph``
    param_graph: Graph  # reflexive Q_r
    vertex_order: list[int]  # value vertex (creation order) -> vertex of G
    palette: int
    node_reports: list[NodeReport]
    r_sep: int
    raw: Expr  # before renumbering, running colors as labels

    def value_graph(self) -> Graph:
        """The value relabeled to vertices of G."""
        val = evaluate(self.expression, self.param_graph)
        return Graph.from_edges(
            val.n, [(self.vertex_order[u], self.vertex_order[v]) for u, v in val.graph.edges]
        )


def synthesize(ctx: SynthesisContext, strict: bool = True, audit_nodes: bool = False) -> SynthesisResult:
    """Run the construction over the whole decomposition and renumber colors to naturals."""
    built: dict[int, _Part | None] = {}
    reports: list[NodeReport] = []
    td = ctx.td
    for t in reversed(td.preorder):
        kids = [built.pop(c) for c in td.children[t]]
        part = assemble_node(ctx, t, kids, strict=strict)
        built[t] = part
        if part is not None:
            missing = extra = 0
            if audit_nodes:
                cols = set(part.color)
                want = {e for e in ctx.xi_edges if e[0] in cols and e[1] in cols}
                missing, extra = len(want - part.edges), len(part.edges - want)
            reports.append(NodeReport(t, len(set(part.color.values())), len(part.color), missing, extra))
    root = built[td.root]
    if root is None:
        raise SynthesisError("nothing to build: M has no vertices")
    expr, pal = renumber_colors(root.expr)
    return SynthesisResult(expr, ctx.output_graph, list(root.order), pal, reports, ctx.r_sep, root.expr)


# -- renumbering -------------------------------------------------------------------


def renumber_colors(expr: Expr, bound: int | None = None) -> tuple[Expr, int]:
    """Rename colors to ``0..f-1`` where ``f`` is the palette, top-down.

    A child reuses its parent's numbers; the recolored color of a Recolor node takes the
    number of its target unless the target is already present below, in which case it
    gets the least number unused at the parent. No-op operations are dropped.
    """
    nodes = list(preorder(expr))
    index = {id(n): i for i, n in enumerate(nodes)}
    if len(index) != len(nodes):
        raise ExpressionError("renumbering needs a tree without shared nodes")
    kids = [[index[id(k)] for k in n.kids] for n in nodes]
    present: list[frozenset] = [frozenset()] * len(nodes)
    for i in reversed(range(len(nodes))):
        n = nodes[i]
        if isinstance(n, Create):
            present[i] = frozenset([n.color])
        elif isinstance(n, Union):
            present[i] = present[kids[i][0]] | present[kids[i][1]]
        elif isinstance(n, Recolor):
            below = present[kids[i][0]]
            present[i] = (below - {n.src}) | {n.dst} if n.src in below else below
        else:
            present[i] = present[kids[i][0]]
    f = max(len(s) for s in present)
    if bound is not None and f > bound:
        raise ExpressionError(f"a subexpression has {f} colors, above the bound {bound}")

    num: list[dict | None] = [None] * len(nodes)
    num[0] = {c: k for k, c in enumerate(sorted(present[0], key=_sort_key))}
    for i, n in enumerate(nodes):
        o = num[i]
        for j in kids[i]:
            if isinstance(n, Recolor) and n.src in present[j] and n.src != n.dst:
                child = {c: o[c] for c in present[j] if c != n.src}
                if n.dst in present[j]:
                    used = set(o.values())
                    child[n.src] = next(x for x in range(f) if x not in used)
                else:
                    child[n.src] = o[n.dst]
                num[j] = child
            else:
                num[j] = {c: o[c] for c in present[j]}

    out: list[Expr | None] = [None] * len(nodes)
    for i in reversed(range(len(nodes))):
        n, o = nodes[i], num[i]
        if isinstance(n, Create):
            out[i] = Create(n.param, o[n.color])
        elif isinstance(n, Union):
            out[i] = Union(out[kids[i][0]], out[kids[i][1]])
        elif isinstance(n, Recolor):
            j = kids[i][0]
            if n.src not in present[j] or num[j][n.src] == o[n.dst]:
                out[i] = out[j]
            else:
                out[i] = Recolor(num[j][n.src], o[n.dst], out[j])
        else:
            j = kids[i][0]
            if n.c1 in present[i] and n.c2 in present[i]:
                out[i] = AddEdges(o[n.c1], o[n.c2], out[j])
            else:
                out[i] = out[j]
        for j in kids[i]:
            out[j] = None
            num[j] = None
    return out[0], f


__all__ = [
    "NEW_VERTEX", "NodeReport", "RunningColor", "SynthesisContext", "SynthesisError",
    "SynthesisResult", "Tagged", "TypeRankTooLow", "assemble_node", "build_column_expression",
    "initial_color", "renumber_colors", "restrict_color", "synthesize",
]
