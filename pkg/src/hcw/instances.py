"""Seeded random instances. Every function takes a numpy ``Generator`` (PCG64 via ``make_rng``)."""

from __future__ import annotations

import numpy as np

from .expr import AddEdges, Create, Expr, Recolor, Union
from .graph import ColoredGraph, Graph, strong_product
from .lower_bounds import Perturbation
from .treedecomp import TreeDecomposition, decomposition_from_elimination


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def random_tree(n: int, rng: np.random.Generator) -> Graph:
    """Vertex ``i > 0`` hangs from a uniform earlier vertex."""
    return Graph.from_edges(n, [(int(rng.integers(0, i)), i) for i in range(1, n)])


def random_partial_ktree(n: int, k: int, rng: np.random.Generator,
                         keep: float = 0.5) -> tuple[Graph, TreeDecomposition]:
    """Random subgraph of a random ``k``-tree, with a decomposition of width at most ``k``."""
    base = min(n, k + 1)
    edges = {(u, v) for u in range(base) for v in range(u + 1, base)}
    cliques = [tuple(range(base))] if base == k + 1 else []
    for v in range(base, n):
        host = cliques[int(rng.integers(0, len(cliques)))]
        drop = int(rng.integers(0, len(host)))
        clique = tuple(x for i, x in enumerate(host) if i != drop)
        for u in clique:
            edges.add((u, v))
        for i in range(len(clique)):
            cliques.append(tuple(x for j, x in enumerate(clique) if j != i) + (v,))
        cliques.append(clique + (v,))
    kept = [e for e in sorted(edges) if rng.random() < keep]
    g = Graph.from_edges(n, kept)
    # reversed insertion order is a perfect elimination order of the k-tree
    return g, decomposition_from_elimination(g, list(reversed(range(n))))


def random_colored_subgraph(q: Graph, m: Graph, rng: np.random.Generator,
                            p_edge: float = 0.7, colors: int = 2) -> ColoredGraph:
    """Random spanning subgraph of ``q x m`` with colors ``1..colors``."""
    prod = strong_product(q, m)
    edges = [e for e in sorted(prod.edges) if rng.random() < p_edge]
    cols = tuple(int(c) for c in rng.integers(1, colors + 1, size=prod.n))
    return ColoredGraph(Graph.from_edges(prod.n, edges), cols)


def random_expression(h: Graph, max_vertices: int, rng: np.random.Generator, colors: int = 3) -> Expr:
    """Random expression over ``h``: random leaves, merged in random order with random operations."""
    count = int(rng.integers(1, max_vertices + 1))
    parts: list[Expr] = [Create(int(rng.integers(0, h.n)), int(rng.integers(0, colors)))
                         for _ in range(count)]

    def sprinkle(e: Expr) -> Expr:
        for _ in range(int(rng.integers(0, 3))):
            a, b = (int(x) for x in rng.integers(0, colors, size=2))
            e = AddEdges(a, b, e) if rng.random() < 0.6 else Recolor(a, b, e)
        return e

    while len(parts) > 1:
        i, j = sorted(int(x) for x in rng.choice(len(parts), size=2, replace=False))
        right = parts.pop(j)
        left = parts.pop(i)
        parts.append(sprinkle(Union(left, right)))
    return sprinkle(parts[0])


def random_perturbation(n: int, k: int, rng: np.random.Generator, min_part: int = 0) -> Perturbation:
    """Uniform labels in ``0..k-1`` (resampled until each part exceeds ``min_part``) and a random flip."""
    if k * (min_part + 1) > n:
        raise ValueError(f"cannot split {n} vertices into {k} parts larger than {min_part}")
    while True:
        labels = [int(x) for x in rng.integers(0, k, size=n)]
        if all(labels.count(c) > min_part for c in range(k)):
            break
    flip = [(i, j) for i in range(k) for j in range(i, k) if rng.random() < 0.5]
    return Perturbation.make(labels, flip)


def random_balanced_partition(total: int, rng: np.random.Generator) -> list[bool]:
    """Random A/B split with both sides holding at least a third of the vertices."""
    lo, hi = -(-total // 3), total - (-(-total // 3))
    size = int(rng.integers(lo, hi + 1))
    chosen = set(int(x) for x in rng.choice(total, size=size, replace=False))
    return [v in chosen for v in range(total)]


__all__ = [
    "make_rng", "random_balanced_partition", "random_colored_subgraph", "random_expression",
    "random_partial_ktree", "random_perturbation", "random_tree",
]
