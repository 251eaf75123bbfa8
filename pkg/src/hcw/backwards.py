"""Constructive pieces of the converse direction: twin-free half-graphs, factor formulas, leaf encoding."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import count
from typing import Sequence

from .graph import ColoredGraph, Graph, GraphError
from .logic import (
    CompiledFormula, E, Eq, Exists, Forall, Formula, HasColor, Implies, Not, conj, disj,
)


class PreconditionError(ValueError):
    pass


# -- twin-free half-graphs ------------------------------------------------------------


def is_bi_induced_half_graph(g: Graph, us: Sequence[int], vs: Sequence[int]) -> bool:
    """``u_i v_j`` is an edge iff ``i <= j``; edges inside a side are not constrained."""
    if len(us) != len(vs) or len(set(us) | set(vs)) != 2 * len(us):
        return False
    return all(g.has_edge(u, v) == (i <= j) for i, u in enumerate(us) for j, v in enumerate(vs))


def are_twins(g: Graph, u: int, v: int) -> bool:
    return u != v and g.adj[u] - {v} == g.adj[v] - {u}


def twin_pairs(g: Graph, vertices: Sequence[int]) -> list[tuple[int, int]]:
    vs = list(vertices)
    return [(a, b) for i, a in enumerate(vs) for b in vs[i + 1:] if are_twins(g, a, b)]


def extract_twin_free_half_graph(j: Graph, side_a: Sequence[int], side_b: Sequence[int], kprime: int):
    """Order ``k'+1`` bi-induced half-graph without twins, picked block by block.

    ``side_a``, ``side_b`` list a half-graph of order at least ``2(k'+2)^2`` in order. Blocks
    have ``k'+2`` consecutive vertices; the ``j``-th pick on the A side comes from block
    ``2j-1`` and on the B side from block ``2j``, each avoiding twins of earlier picks.
    """
    if kprime < 0:
        raise PreconditionError("k' must be >= 0")
    need = 2 * (kprime + 2) ** 2
    if len(side_a) != len(side_b) or len(side_a) < need:
        raise PreconditionError(f"sides must both have length >= {need}")
    if not is_bi_induced_half_graph(j, side_a, side_b):
        raise PreconditionError("sides do not realize a bi-induced half-graph")
    size = kprime + 2

    def block(side, i):  # 1-based block index
        return side[(i - 1) * size: i * size]

    picked_a: list[int] = []
    picked_b: list[int] = []
    for step in range(1, kprime + 2):
        a = next((x for x in block(side_a, 2 * step - 1)
                  if not any(are_twins(j, x, y) for y in picked_b)), None)
        if a is None:
            raise PreconditionError(f"no twin-free pick in A block {2 * step - 1}")
        picked_a.append(a)
        b = next((y for y in block(side_b, 2 * step)
                  if not any(are_twins(j, y, x) for x in picked_a)), None)
        if b is None:
            raise PreconditionError(f"no twin-free pick in B block {2 * step}")
        picked_b.append(b)
    us, vs = tuple(picked_a), tuple(picked_b)
    assert is_bi_induced_half_graph(j, us, vs)
    assert not twin_pairs(j, us + vs)
    return us, vs


# -- universal vertex -----------------------------------------------------------------


def augment_universal(m: Graph) -> tuple[Graph, int]:
    """Add a vertex adjacent to every other vertex; it gets the largest id."""
    u = m.n
    return Graph.from_edges(m.n + 1, list(m.edges) + [(v, u) for v in range(m.n)], m.loops), u


# -- factor formulas ------------------------------------------------------------------


@dataclass(frozen=True)
class FactorFormulas:
    """Formulas in ``x1, x2`` over a product colored by ``c1 * c2_count + c2``."""

    sigma1: Formula  # same row
    sigma2: Formula  # adjacent rows
    sigma3: Formula  # same column, for rows equal or adjacent
    sigma4: Formula  # adjacent columns outside the universal column, same assumption
    c1_count: int
    c2_count: int


def product_coloring(c1: Sequence[int], c2: Sequence[int]) -> tuple[int, ...]:
    """Color of ``[q, m]`` (id ``q * |M| + m``) is ``c1[q] * c2_count + c2[m]``."""
    k2 = max(c2) + 1
    return tuple(a * k2 + b for a in c1 for b in c2)


def factor_formulas(c1_count: int, c2_count: int) -> FactorFormulas:
    """Row and column relations of ``Q' x M_uni`` recovered from the product coloring.

    The universal vertex must hold the last ``c2`` color (``c2_count - 1``), which no other
    vertex of ``M_uni`` uses under a proper coloring.
    """
    if c1_count < 1 or c2_count < 1:
        raise PreconditionError("color counts must be positive")
    fresh = (f"y{i}" for i in count(1))

    def c1_is(a: int, v: str) -> Formula:
        return disj(*(HasColor(a * c2_count + b, v) for b in range(c2_count)))

    def c2_is(b: int, v: str) -> Formula:
        return disj(*(HasColor(a * c2_count + b, v) for a in range(c1_count)))

    def same_c1(*vs: str) -> Formula:
        return disj(*(conj(*(c1_is(a, v) for v in vs)) for a in range(c1_count)))

    def same_c2(x: str, y: str) -> Formula:
        return disj(*(conj(c2_is(b, x), c2_is(b, y)) for b in range(c2_count)))

    def s1(x: str, y: str) -> Formula:
        z = next(fresh)
        return disj(
            Eq(x, y),
            conj(same_c1(x, y), E(x, y)),
            Exists(z, conj(E(x, z), E(z, y), same_c1(x, y, z))),
        )

    def s2(x: str, y: str) -> Formula:
        z = next(fresh)
        return conj(Not(s1(x, y)), Exists(z, conj(E(y, z), s1(x, z))))

    def s3(x: str, y: str) -> Formula:
        return disj(Eq(x, y), conj(E(x, y), same_c2(x, y)))

    uni = c2_count - 1

    def s4(x: str, y: str) -> Formula:
        z = next(fresh)
        return conj(Not(s3(x, y)), Not(c2_is(uni, x)), Not(c2_is(uni, y)),
                    Exists(z, conj(E(y, z), s3(x, z))))

    return FactorFormulas(s1("x1", "x2"), s2("x1", "x2"), s3("x1", "x2"), s4("x1", "x2"),
                          c1_count, c2_count)


def pair_checker(s: ColoredGraph, phi: Formula) -> CompiledFormula:
    return CompiledFormula(s, phi, ("x1", "x2"))


# -- leaf encoding of colors ----------------------------------------------------------


def encode_colored_graph_as_leaves(g: ColoredGraph) -> tuple[Graph, dict]:
    """Attach ``c(v)+1`` pendant leaves to each vertex; originals keep ids ``0..n-1``.

    Returns the graph and decoding formulas: ``original`` (free ``x1``), ``color_<c>`` for
    each color ``c`` in use (free ``x1``) and ``edge`` (free ``x1, x2``).
    """
    if any(not isinstance(c, int) or c < 1 for c in g.colors):
        raise GraphError("colors must be in 1..k")
    edges = list(g.graph.edges)
    nxt = g.n
    for v, c in enumerate(g.colors):
        for _ in range(c + 1):
            edges.append((v, nxt))
            nxt += 1
    k = max(g.colors, default=0)
    return Graph.from_edges(nxt, edges), decoding_formulas(k)


def _degree_one(v: str, w: str, w2: str) -> Formula:
    """``v`` has exactly one neighbor (bound names ``w``, ``w2``)."""
    return Exists(w, conj(E(v, w), Forall(w2, Implies(E(v, w2), Eq(w2, w)))))


def original_formula(x: str = "x1") -> Formula:
    """Degree at least two."""
    return Exists("y1", Exists("y2", conj(E(x, "y1"), E(x, "y2"), Not(Eq("y1", "y2")))))


def color_formula(c: int, x: str = "x1") -> Formula:
    """Exactly ``c+1`` neighbors of degree one."""
    names = [f"y{i}" for i in range(1, c + 3)]

    def leaf(y: str) -> Formula:
        i = int(y[1:])
        return conj(E(x, y), _degree_one(y, f"y{100 + i}", f"y{200 + i}"))

    at_least = [names[:c + 1], names[:c + 2]]

    def many(vs: list[str]) -> Formula:
        # each quantifier carries its own conjuncts so evaluation prunes early
        body = None
        for i in reversed(range(len(vs))):
            y = vs[i]
            parts = [leaf(y), *(Not(Eq(y, b)) for b in vs[:i])]
            body = Exists(y, conj(*parts, *([body] if body is not None else [])))
        return body

    return conj(original_formula(x), many(at_least[0]), Not(many(at_least[1])))


def decoding_formulas(k: int) -> dict:
    out = {"original": original_formula(), "edge": conj(original_formula("x1"),
                                                       original_formula("x2"), E("x1", "x2"))}
    for c in range(1, k + 1):
        out[f"color_{c}"] = color_formula(c)
    return out


def decode_leaves(h: Graph, k: int) -> ColoredGraph:
    """Recover the colored graph from its leaf encoding using only the decoding formulas."""
    forms = decoding_formulas(k)
    s = ColoredGraph.uniform(h, 1)
    orig = CompiledFormula(s, forms["original"], ("x1",))
    keep = [v for v in range(h.n) if orig(v)]
    colors = []
    checks = {c: CompiledFormula(s, forms[f"color_{c}"], ("x1",)) for c in range(1, k + 1)}
    for v in keep:
        hits = [c for c in range(1, k + 1) if checks[c](v)]
        if len(hits) != 1:
            raise GraphError(f"vertex {v} decodes to colors {hits}")
        colors.append(hits[0])
    edge = CompiledFormula(s, forms["edge"], ("x1", "x2"))
    pos = {v: i for i, v in enumerate(keep)}
    es = [(pos[u], pos[v]) for u in keep for v in keep if u < v and edge(u, v)]
    return ColoredGraph(Graph.from_edges(len(keep), es), tuple(colors))


__all__ = [
    "FactorFormulas", "PreconditionError", "are_twins", "augment_universal",
    "color_formula", "decode_leaves", "decoding_formulas", "encode_colored_graph_as_leaves",
    "extract_twin_free_half_graph", "factor_formulas", "is_bi_induced_half_graph",
    "original_formula", "pair_checker", "product_coloring", "twin_pairs",
]
