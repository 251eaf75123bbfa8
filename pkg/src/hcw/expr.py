"""Parameterized clique-width expressions: terms, evaluation, palette, stability.

Terms can be thousands of levels deep (synthesized expressions are), so every
traversal here is iterative.
"""

from __future__ import annotations

import json
import sys
import threading
from dataclasses import dataclass
from typing import Callable, Hashable, Iterator

from .graph import Graph, SearchCapExceeded, find_half_graph_any_sides

Color = Hashable


class ExpressionError(ValueError):
    pass


class Expr:
    __slots__ = ()

    @property
    def kids(self) -> tuple["Expr", ...]:
        return ()


@dataclass(frozen=True, eq=False, slots=True)
class Create(Expr):
    param: int
    color: Color


@dataclass(frozen=True, eq=False, slots=True)
class Union(Expr):
    left: Expr
    right: Expr

    @property
    def kids(self) -> tuple[Expr, ...]:
        return (self.left, self.right)


@dataclass(frozen=True, eq=False, slots=True)
class Recolor(Expr):
    src: Color
    dst: Color
    child: Expr

    @property
    def kids(self) -> tuple[Expr, ...]:
        return (self.child,)


@dataclass(frozen=True, eq=False, slots=True)
class AddEdges(Expr):
    c1: Color
    c2: Color
    child: Expr

    @property
    def kids(self) -> tuple[Expr, ...]:
        return (self.child,)


def k1_loop() -> Graph:
    """The single looped vertex, parameter graph of ordinary clique-width."""
    return Graph(1, frozenset(), frozenset({0}))


def union_all(parts: list[Expr]) -> Expr:
    """Left-nested union of a nonempty list."""
    if not parts:
        raise ExpressionError("union of nothing")
    out = parts[0]
    for p in parts[1:]:
        out = Union(out, p)
    return out


# -- traversal ----------------------------------------------------------------


def postorder(expr: Expr) -> Iterator[Expr]:
    """Children before parents, left before right."""
    stack: list[tuple[Expr, bool]] = [(expr, False)]
    while stack:
        node, done = stack.pop()
        if done or isinstance(node, Create):
            yield node
            continue
        stack.append((node, True))
        for k in reversed(node.kids):
            stack.append((k, False))


def preorder(expr: Expr) -> Iterator[Expr]:
    """Preorder; the i-th yielded node has node id i."""
    stack = [expr]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.kids))


def size(expr: Expr) -> int:
    return sum(1 for _ in preorder(expr))


def vertex_count(expr: Expr) -> int:
    return sum(1 for n in preorder(expr) if isinstance(n, Create))


def fold(expr: Expr, leaf: Callable, union: Callable, recolor: Callable, add_edges: Callable):
    """Bottom-up fold without recursion; each callback receives the node and child results."""
    results: list = []
    for node in postorder(expr):
        if isinstance(node, Create):
            results.append(leaf(node))
        elif isinstance(node, Union):
            right = results.pop()
            left = results.pop()
            results.append(union(node, left, right))
        elif isinstance(node, Recolor):
            results.append(recolor(node, results.pop()))
        else:
            results.append(add_edges(node, results.pop()))
    return results.pop()


def rebuild(expr: Expr, leaf: Callable[[Create], Expr | None],
            op: Callable[[Expr, Expr], Expr | None] | None = None) -> Expr | None:
    """Map leaves through ``leaf`` (None deletes) and rebuild; ``op(node, new_child)`` maps unary ops.

    Unions with one deleted side collapse to the other; unary ops over nothing vanish.
    """
    def union(node, left, right):
        if left is None:
            return right
        if right is None:
            return left
        return Union(left, right)

    def unary(node, child):
        if child is None:
            return None
        if op is not None:
            return op(node, child)
        if isinstance(node, Recolor):
            return Recolor(node.src, node.dst, child)
        return AddEdges(node.c1, node.c2, child)

    return fold(expr, leaf, union, unary, unary)


# -- evaluation -----------------------------------------------------------------


@dataclass(frozen=True)
class LabeledGraph:
    """Value of an expression; vertices numbered in creation order (left to right)."""

    graph: Graph
    params: tuple[int, ...]
    colors: tuple[Color, ...]

    @property
    def n(self) -> int:
        return self.graph.n


class _Value:
    """Mutable evaluation state of one subexpression: color -> param -> vertices."""

    __slots__ = ("classes",)

    def __init__(self) -> None:
        self.classes: dict[Color, dict[int, list[int]]] = {}

    def merge(self, other: "_Value") -> "_Value":
        big, small = (self, other) if len(self.classes) >= len(other.classes) else (other, self)
        for c, by_param in small.classes.items():
            tgt = big.classes.setdefault(c, {})
            for p, vs in by_param.items():
                tgt.setdefault(p, []).extend(vs)
        return big


def evaluate(expr: Expr, h: Graph) -> LabeledGraph:
    """Bottom-up semantics; AddEdges joins pairs whose params are adjacent (or equal and looped)."""
    params: list[int] = []
    colors: list[Color] = []
    edges: set[tuple[int, int]] = set()
    hadj = [set(a) | ({p} if p in h.loops else set()) for p, a in enumerate(h.adj)]

    def leaf(node: Create) -> _Value:
        if not (isinstance(node.param, int) and 0 <= node.param < h.n):
            raise ExpressionError(f"parameter {node.param!r} is not a vertex of the parameter graph")
        v = len(params)
        params.append(node.param)
        colors.append(node.color)
        val = _Value()
        val.classes[node.color] = {node.param: [v]}
        return val

    def union(node, left: _Value, right: _Value) -> _Value:
        return left.merge(right)

    def recolor(node: Recolor, val: _Value) -> _Value:
        if node.src == node.dst or node.src not in val.classes:
            return val
        moved = val.classes.pop(node.src)
        tgt = val.classes.setdefault(node.dst, {})
        for p, vs in moved.items():
            tgt.setdefault(p, []).extend(vs)
            for v in vs:
                colors[v] = node.dst
        return val

    def add_edges(node: AddEdges, val: _Value) -> _Value:
        a = val.classes.get(node.c1)
        b = val.classes.get(node.c2)
        if not a or not b:
            return val
        for p, us in a.items():
            for p2 in hadj[p]:
                ws = b.get(p2)
                if not ws:
                    continue
                for u in us:
                    for w in ws:
                        if u != w:
                            edges.add((u, w) if u < w else (w, u))
        return val

    fold(expr, leaf, union, recolor, add_edges)
    return LabeledGraph(Graph(len(params), frozenset(edges)), tuple(params), tuple(colors))


def is_homomorphism(value: LabeledGraph, h: Graph) -> bool:
    """Every value edge maps to an edge of ``h`` or a looped vertex."""
    return all(h.adjacent_or_loop(value.params[u], value.params[v]) for u, v in value.graph.edges)


def color_sets(expr: Expr) -> list[frozenset]:
    """Colors present in each subexpression value, indexed by postorder position."""
    out: list[frozenset] = []

    def leaf(node):
        s = frozenset([node.color])
        out.append(s)
        return s

    def union(node, a, b):
        s = a | b
        out.append(s)
        return s

    def recolor(node, s):
        if node.src in s:
            s = (s - {node.src}) | {node.dst}
        out.append(s)
        return s

    def add_edges(node, s):
        out.append(s)
        return s

    fold(expr, leaf, union, recolor, add_edges)
    return out


def palette(expr: Expr) -> int:
    """Largest number of distinct colors present in any subexpression value."""
    best = 0

    def leaf(node):
        nonlocal best
        best = max(best, 1)
        return {node.color}

    def union(node, a, b):
        nonlocal best
        if len(a) < len(b):
            a, b = b, a
        a |= b
        best = max(best, len(a))
        return a

    def recolor(node, s):
        nonlocal best
        if node.src in s:
            s.discard(node.src)
            s.add(node.dst)
        return s

    fold(expr, leaf, union, recolor, lambda node, s: s)
    return best


def colors_used(expr: Expr) -> set:
    out = set()
    for node in preorder(expr):
        if isinstance(node, Create):
            out.add(node.color)
        elif isinstance(node, Recolor):
            out.update((node.src, node.dst))
        elif isinstance(node, AddEdges):
            out.update((node.c1, node.c2))
    return out


def deparameterize(expr: Expr) -> Expr:
    """Replace every parameter with vertex 0 of the single looped vertex."""
    return rebuild(expr, lambda node: Create(0, node.color))


def restrict(expr: Expr, keep) -> tuple[Expr | None, dict[int, int]]:
    """Delete the Create leaves whose creation index is not in ``keep``.

    Returns the restricted expression and the map old creation index -> new one.
    """
    keep = set(keep)
    counter = [0]
    mapping: dict[int, int] = {}

    def leaf(node: Create):
        i = counter[0]
        counter[0] += 1
        if i in keep:
            mapping[i] = len(mapping)
            return node
        return None

    return rebuild(expr, leaf), mapping


def node_at(expr: Expr, node_id: int) -> Expr:
    for i, node in enumerate(preorder(expr)):
        if i == node_id:
            return node
    raise ExpressionError(f"no node with id {node_id}")


@dataclass(frozen=True)
class StabilityVerdict:
    status: str  # "stable" | "witness" | "inconclusive"
    witness: tuple | None = None


def is_k_stable(expr: Expr, k: int, cap: int = 16) -> StabilityVerdict:
    """Search the deparameterized value for a bi-induced half-graph of order ``k``."""
    if k < 1:
        raise ExpressionError("k must be >= 1")
    g = evaluate(deparameterize(expr), k1_loop()).graph
    if 2 * k > g.n:
        return StabilityVerdict("stable")
    try:
        w = find_half_graph_any_sides(g, k, cap=cap)
    except SearchCapExceeded:
        return StabilityVerdict("inconclusive")
    return StabilityVerdict("witness", w) if w else StabilityVerdict("stable")


# -- serialization ----------------------------------------------------------------


def _color_json(c) -> str:
    if isinstance(c, bool) or not isinstance(c, int) or c < 0:
        raise ExpressionError(f"only natural colors can be serialized, got {c!r}")
    return str(c)


def to_json(expr: Expr) -> str:
    """Nested-object JSON written without recursion; deterministic byte output."""
    parts: list[str] = []
    stack: list = [expr]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            parts.append(item)
        elif isinstance(item, Create):
            parts.append(f'{{"op": "create", "param": {int(item.param)}, "color": {_color_json(item.color)}}}')
        elif isinstance(item, Union):
            stack.extend(["}", item.right, ', "right": ', item.left])
            parts.append('{"op": "union", "left": ')
        elif isinstance(item, Recolor):
            stack.extend(["}", item.child])
            parts.append(f'{{"op": "recolor", "from": {_color_json(item.src)}, "to": {_color_json(item.dst)}, "child": ')
        else:
            stack.extend(["}", item.child])
            parts.append(f'{{"op": "add_edges", "c1": {_color_json(item.c1)}, "c2": {_color_json(item.c2)}, "child": ')
    return "".join(parts)


def _deep(fn, *args):
    """Run ``fn`` on a thread with a large stack so the C JSON parser can nest deeply."""
    result: list = []
    error: list = []

    def run():
        old = sys.getrecursionlimit()
        sys.setrecursionlimit(max(old, 200000))
        try:
            result.append(fn(*args))
        except BaseException as exc:  # re-raised on the caller's thread
            error.append(exc)
        finally:
            sys.setrecursionlimit(old)

    old_size = threading.stack_size()
    threading.stack_size(512 * 1024 * 1024)
    try:
        t = threading.Thread(target=run)
        t.start()
        t.join()
    finally:
        threading.stack_size(old_size)
    if error:
        raise error[0]
    return result[0]


def from_dict(d) -> Expr:
    """Convert parsed JSON into an expression, iteratively."""
    results: list[Expr] = []
    stack: list = [(d, False)]
    while stack:
        obj, done = stack.pop()
        if not isinstance(obj, dict) or "op" not in obj:
            raise ExpressionError(f"malformed expression node: {str(obj)[:80]}")
        op = obj["op"]
        try:
            if op == "create":
                results.append(Create(int(obj["param"]), int(obj["color"])))
            elif op == "union":
                if done:
                    right = results.pop()
                    left = results.pop()
                    results.append(Union(left, right))
                else:
                    stack.extend([(obj, True), (obj["right"], False), (obj["left"], False)])
            elif op in ("recolor", "add_edges"):
                if done:
                    child = results.pop()
                    if op == "recolor":
                        results.append(Recolor(int(obj["from"]), int(obj["to"]), child))
                    else:
                        results.append(AddEdges(int(obj["c1"]), int(obj["c2"]), child))
                else:
                    stack.extend([(obj, True), (obj["child"], False)])
            else:
                raise ExpressionError(f"unknown op {op!r}")
        except KeyError as exc:
            raise ExpressionError(f"node {op!r} lacks field {exc}") from exc
    return results.pop()


def from_json(text: str | bytes) -> Expr:
    try:
        d = _deep(json.loads, text)
    except json.JSONDecodeError as exc:
        raise ExpressionError(f"malformed JSON: {exc}") from exc
    return from_dict(d)


def labeled_to_dict(value: LabeledGraph) -> dict:
    from .graph import graph_to_dict

    d = graph_to_dict(value.graph)
    d["params"] = list(value.params)
    d["labels"] = [repr(c) if not isinstance(c, int) else c for c in value.colors]
    return d


__all__ = [
    "AddEdges", "Create", "Expr", "ExpressionError", "k1_loop", "LabeledGraph", "Recolor",
    "StabilityVerdict", "Union", "color_sets", "colors_used", "deparameterize", "evaluate",
    "fold", "from_json", "is_homomorphism", "is_k_stable", "node_at", "palette", "postorder",
    "preorder", "rebuild", "restrict", "size", "to_json", "union_all", "vertex_count",
]
