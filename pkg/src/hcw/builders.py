"""Constructive translations between graphs, products and expressions."""

from __future__ import annotations

from dataclasses import dataclass

from .expr import (
    AddEdges, Create, Expr, ExpressionError, Recolor, Union, deparameterize, evaluate, fold,
    k1_loop, postorder, union_all,
)
from .graph import Graph, GraphError, path, strong_product

# grid colors: two shades per column pair plus one frozen color
DARK_RED, LIGHT_RED, DARK_GREEN, LIGHT_GREEN, BLUE = range(5)


def _column(b: int, dark: int, light: int) -> Expr:
    """One grid column over the reflexive path on ``b`` rows, inserted top to bottom.

    Each new row vertex starts BLUE, gets joined to the previous row's shade and is then
    recolored to its own shade (even rows dark, odd rows light).
    """
    expr: Expr = Create(0, dark)
    for j in range(1, b):
        prev_shade = dark if (j - 1) % 2 == 0 else light
        own_shade = dark if j % 2 == 0 else light
        expr = Union(expr, Create(j, BLUE))
        expr = AddEdges(prev_shade, BLUE, expr)
        expr = Recolor(BLUE, own_shade, expr)
    return expr


def grid_expression(a: int, b: int) -> Expr:
    """Expression over the reflexive path ``P_b`` valued the ``a`` x ``b`` grid.

    Vertex (column i, row j) is created as the ``i * b + j``-th vertex with param ``j``,
    matching ``grid2d(a, b)`` numbering.
    """
    if a < 1 or b < 1:
        raise GraphError("grid dimensions must be positive")
    pairs = [(DARK_RED, LIGHT_RED), (DARK_GREEN, LIGHT_GREEN)]
    expr = _column(b, *pairs[0])
    for i in range(1, a):
        prev, new = pairs[(i - 1) % 2], pairs[i % 2]
        expr = Union(expr, _column(b, *new))
        expr = AddEdges(prev[0], new[0], expr)
        expr = AddEdges(prev[1], new[1], expr)
        expr = Recolor(prev[0], BLUE, expr)
        expr = Recolor(prev[1], BLUE, expr)
    return expr


def reflexive_path(n: int) -> Graph:
    return path(n).reflexive()


# -- strong products ------------------------------------------------------------


def product_to_expression(ho: Graph, m_expr: Expr, keep=None, return_order: bool = False):
    """Expression over ``ho`` valued the subgraph of ``(ho - loops) x M`` induced by ``keep``.

    ``M`` is the value of ``m_expr`` (params ignored). Each Create(c) of ``m_expr`` becomes a
    row of vertices ``[q, h]`` with param ``q`` and color ``c`` followed by AddEdges(c, c).
    Product vertices use the flattening ``q * |V(M)| + h``. With ``return_order`` the list of
    product vertices in creation order is returned as well.
    """
    m_count = sum(1 for node in postorder(m_expr) if isinstance(node, Create))
    total = ho.n * m_count
    if keep is None:
        kept = set(range(total))
    else:
        kept = set(keep)
        bad = [v for v in kept if not (isinstance(v, int) and 0 <= v < total)]
        if bad:
            raise ExpressionError(f"keep references absent product vertex {sorted(bad)[0]}")
    order: list[int] = []
    counter = [0]

    def leaf(node: Create):
        h = counter[0]
        counter[0] += 1
        row = [Create(q, node.color) for q in range(ho.n) if q * m_count + h in kept]
        order.extend(q * m_count + h for q in range(ho.n) if q * m_count + h in kept)
        if not row:
            return None
        return AddEdges(node.color, node.color, union_all(row))

    def union(node, left, right):
        if left is None:
            return right
        if right is None:
            return left
        return Union(left, right)

    def recolor(node, child):
        return None if child is None else Recolor(node.src, node.dst, child)

    def add_edges(node, child):
        return None if child is None else AddEdges(node.c1, node.c2, child)

    out = fold(m_expr, leaf, union, recolor, add_edges)
    if out is None:
        raise ExpressionError("keep selects no vertex")
    return (out, order) if return_order else out


@dataclass(frozen=True)
class ProductEmbedding:
    left: Graph  # H' = parameter graph without loops
    right: Graph  # M = deparameterized value
    injection: tuple[tuple[int, int], ...]  # value vertex -> (param, vertex of M)

    def flat(self, v: int) -> int:
        q, m = self.injection[v]
        return q * self.right.n + m

    def holds_for(self, g: Graph) -> bool:
        """``g`` equals the subgraph of ``left x right`` induced by the image, edge-exactly."""
        prod = strong_product(self.left, self.right)
        image = [self.flat(v) for v in range(g.n)]
        if len(set(image)) != g.n:
            return False
        return all(
            g.has_edge(u, v) == prod.has_edge(image[u], image[v])
            for u in range(g.n) for v in range(u + 1, g.n)
        )


def expression_to_product(expr: Expr, ho: Graph) -> ProductEmbedding:
    """``v -> (param(v), v)`` into ``(ho - loops) x value(deparameterize(expr))``."""
    value = evaluate(expr, ho)
    m = evaluate(deparameterize(expr), k1_loop()).graph
    return ProductEmbedding(ho.without_loops(), m, tuple((value.params[v], v) for v in range(value.n)))


# -- path powers ----------------------------------------------------------------


def contract_path_power(expr: Expr, r: int, path_len: int | None = None) -> tuple[Expr, Graph]:
    """Re-express an expression over the reflexive ``r``-th power of a path over a plain reflexive path.

    Param ``i`` moves to block ``i // r``; color ``c`` becomes ``c * 3r + (i mod 3r)``.
    AddEdges between two residue classes is kept exactly when the residues are within
    circular distance ``r`` modulo ``3r``: two params in adjacent blocks differ by less than
    ``2r``, and for such differences the residue distance is at most ``r`` iff ``|i - j| <= r``.
    Returns the new expression and the reflexive path it lives over.
    """
    if r < 1:
        raise ExpressionError("r must be >= 1")
    params = [node.param for node in postorder(expr) if isinstance(node, Create)]
    colors = [node.color for node in postorder(expr) if isinstance(node, Create)]
    for c in colors:
        if not isinstance(c, int) or c < 0:
            raise ExpressionError("contract_path_power needs natural colors")
    n = path_len if path_len is not None else max(params) + 1
    if min(params) < 0 or max(params) >= n:
        raise ExpressionError("parameter outside the path")
    period = 3 * r

    def enc(c: int, res: int) -> int:
        return c * period + res

    def close(a: int, b: int) -> bool:
        d = (a - b) % period
        return min(d, period - d) <= r

    results = []
    # build the new tree in one bottom-up pass carrying residue tables
    for node in postorder(expr):
        if isinstance(node, Create):
            results.append((Create(node.param // r, enc(node.color, node.param % period)),
                            {node.color: {node.param % period}}))
        elif isinstance(node, Union):
            (re, rt), (le, lt) = results.pop(), results.pop()
            table = {c: set(s) for c, s in lt.items()}
            for c, s in rt.items():
                table.setdefault(c, set()).update(s)
            results.append((Union(le, re), table))
        elif isinstance(node, Recolor):
            child, table = results.pop()
            if node.src == node.dst or node.src not in table:
                results.append((child, table))
                continue
            moved = table.pop(node.src)
            for res in sorted(moved):
                child = Recolor(enc(node.src, res), enc(node.dst, res), child)
            table.setdefault(node.dst, set()).update(moved)
            results.append((child, table))
        else:
            child, table = results.pop()
            ra, rb = table.get(node.c1, set()), table.get(node.c2, set())
            done = set()
            for a in sorted(ra):
                for b in sorted(rb):
                    key = (enc(node.c1, a), enc(node.c2, b))
                    if close(a, b) and key not in done and key[::-1] not in done:
                        done.add(key)
                        child = AddEdges(key[0], key[1], child)
            results.append((child, table))
    out = results.pop()[0]
    return out, reflexive_path((n - 1) // r + 1)


def literal_congruence_contraction(expr: Expr, r: int) -> Expr:
    """Variant keeping residue pairs with ``|a - b|`` congruent to 0 or 1 mod 3r.

    Kept only to demonstrate that this rule drops edges once ``r >= 2``.
    """
    period = 3 * r
    results = []
    for node in postorder(expr):
        if isinstance(node, Create):
            results.append((Create(node.param // r, node.color * period + node.param % period),
                            {node.color: {node.param % period}}))
        elif isinstance(node, Union):
            (re, rt), (le, lt) = results.pop(), results.pop()
            table = {c: set(s) for c, s in lt.items()}
            for c, s in rt.items():
                table.setdefault(c, set()).update(s)
            results.append((Union(le, re), table))
        elif isinstance(node, Recolor):
            child, table = results.pop()
            if node.src != node.dst and node.src in table:
                moved = table.pop(node.src)
                for res in sorted(moved):
                    child = Recolor(node.src * period + res, node.dst * period + res, child)
                table.setdefault(node.dst, set()).update(moved)
            results.append((child, table))
        else:
            child, table = results.pop()
            for a in sorted(table.get(node.c1, ())):
                for b in sorted(table.get(node.c2, ())):
                    if abs(a - b) % period in (0, 1):
                        child = AddEdges(node.c1 * period + a, node.c2 * period + b, child)
            results.append((child, table))
    return results.pop()[0]


# -- layered construction --------------------------------------------------------


def bfs_layers(g: Graph) -> list[int]:
    """Layer of each vertex: BFS distance from the smallest vertex of its component."""
    layer = [-1] * g.n
    for comp in g.components():
        for v, d in g.distances_from([comp[0]]).items():
            layer[v] = d
    return layer


def layered_expression(g: Graph, layers=None, return_order: bool = False):
    """Expression over a reflexive path valued ``g`` (edge-exact).

    ``layers[v]`` is the param of ``v``; edges may only join equal or consecutive layers.
    While a layer is active its vertices carry private colors; once the next layer is
    joined, the older one is recolored to a single retired color. Palette is at most the
    largest two consecutive layers plus one.
    """
    layers = bfs_layers(g) if layers is None else list(layers)
    if len(layers) != g.n:
        raise GraphError("one layer per vertex required")
    for u, v in g.edges:
        if abs(layers[u] - layers[v]) > 1:
            raise GraphError(f"edge {(u, v)} spans non-consecutive layers")
    if g.n == 0:
        raise GraphError("empty graph has no expression")
    depth = max(layers) + 1
    members = [[] for _ in range(depth)]
    for v in range(g.n):
        members[layers[v]].append(v)
    retired = 0
    color = {}
    for x, vs in enumerate(members):
        for k, v in enumerate(vs):
            color[v] = 1 + 2 * k + (x % 2)
    expr = None
    order: list[int] = []
    for x, vs in enumerate(members):
        if not vs:
            continue
        part = union_all([Create(x, color[v]) for v in vs])
        order.extend(vs)
        vset = set(vs)
        for u, v in sorted(g.edges):
            if u in vset and v in vset:
                part = AddEdges(color[u], color[v], part)
        if expr is None:
            expr = part
            continue
        expr = Union(expr, part)
        prev = set(members[x - 1]) if x > 0 else set()
        for u, v in sorted(g.edges):
            if (u in prev and v in vset) or (v in prev and u in vset):
                expr = AddEdges(color[u], color[v], expr)
        for u in members[x - 1] if x > 0 else []:
            expr = Recolor(color[u], retired, expr)
    return (expr, order) if return_order else expr


__all__ = [
    "BLUE", "DARK_GREEN", "DARK_RED", "LIGHT_GREEN", "LIGHT_RED", "ProductEmbedding",
    "bfs_layers", "contract_path_power", "expression_to_product", "grid_expression",
    "layered_expression", "literal_congruence_contraction", "product_to_expression",
    "reflexive_path",
]
