"""Perturbations of grids and a step-by-step audit of the color lower bound for them."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct
from math import ceil
from typing import Sequence

from .expr import Create, Expr, Union, evaluate, node_at, palette, preorder, restrict
from .graph import Graph, GraphError, grid2d, grid3d, pinned_grid, disjoint_copies

SMALL_3D = 12  # a class meeting a subgrid in at most this many vertices is small
SMALL_PINNED = 8  # same, counted over grid vertices, for the pinned-grid variant


class PerturbationError(ValueError):
    pass


class GridTooSmall(ValueError):
    pass


class ImbalanceError(ValueError):
    pass


@dataclass(frozen=True)
class Perturbation:
    labels: tuple[int, ...]  # vertex -> class in 0..k-1
    flip: frozenset[tuple[int, int]]  # pairs i <= j

    def __post_init__(self):
        for i, j in self.flip:
            if i > j:
                raise PerturbationError("store flipped pairs as (i, j) with i <= j")

    @property
    def k(self) -> int:
        return max(self.labels, default=-1) + 1

    @staticmethod
    def make(labels: Sequence[int], flip) -> "Perturbation":
        """Symmetrize ``flip`` and check the labels."""
        labels = tuple(labels)
        if any(not isinstance(c, int) or c < 0 for c in labels):
            raise PerturbationError("class labels must be natural numbers")
        pairs = frozenset((min(i, j), max(i, j)) for i, j in flip)
        return Perturbation(labels, pairs)

    @staticmethod
    def from_parts(parts: Sequence[Sequence[int]], flip, n: int | None = None) -> "Perturbation":
        total = sum(len(p) for p in parts) if n is None else n
        labels = [-1] * total
        for i, part in enumerate(parts):
            for v in part:
                if not 0 <= v < total or labels[v] != -1:
                    raise PerturbationError(f"vertex {v} is out of range or in two parts")
                labels[v] = i
        if -1 in labels:
            raise PerturbationError(f"vertex {labels.index(-1)} is in no part")
        return Perturbation.make(labels, flip)

    def flipped(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.flip

    def parts(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.k)]
        for v, c in enumerate(self.labels):
            out[c].append(v)
        return out

    def restrict(self, keep: Sequence[int]) -> "Perturbation":
        """Restriction to ``keep`` (listed in the new vertex order); labels are kept."""
        return Perturbation(tuple(self.labels[v] for v in keep), self.flip)

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "flip": sorted([list(p) for p in self.flip])}

    @staticmethod
    def from_dict(d) -> "Perturbation":
        return Perturbation.make(d["labels"], [tuple(p) for p in d["flip"]])


def apply_perturbation(g: Graph, p: Perturbation) -> Graph:
    """``uv`` is an edge iff (``uv`` in ``g``) differs from (classes flipped)."""
    if len(p.labels) != g.n:
        raise PerturbationError(f"perturbation covers {len(p.labels)} vertices, graph has {g.n}")
    lab = p.labels
    edges = []
    for u in range(g.n):
        nbrs = g.adj[u]
        for v in range(u + 1, g.n):
            if (v in nbrs) != p.flipped(lab[u], lab[v]):
                edges.append((u, v))
    return Graph.from_edges(g.n, edges)


# -- clean subgrids ----------------------------------------------------------------


@dataclass(frozen=True)
class Subgrid:
    origin: tuple[int, int, int]
    side: int

    def vertices(self, n: int) -> list[int]:
        """Ids in the ``n``-sided cube, in the subgrid's own lexicographic order."""
        a, b, c = self.origin
        s = self.side
        return [((a + i) * n + (b + j)) * n + (c + k)
                for i in range(s) for j in range(s) for k in range(s)]


def third_subgrid(n: int, current: Subgrid, avoid: set[int]) -> Subgrid:
    """First of the 27 disjoint third-sized subgrids (lexicographic) missing ``avoid``."""
    side = current.side // 3
    if side == 0:
        raise GridTooSmall(f"subgrid of side {current.side} cannot be split in thirds")
    a, b, c = current.origin
    for x, y, z in iproduct(range(3), repeat=3):
        sub = Subgrid((a + x * side, b + y * side, c + z * side), side)
        if avoid.isdisjoint(sub.vertices(n)):
            return sub
    raise GridTooSmall("every third-subgrid meets the class")  # impossible for small classes


def prune_to_clean_subgrid(n: int, p: Perturbation, small: int = SMALL_3D):
    """Shrink the ``n``-cube until every class misses it or meets it in more than ``small`` vertices.

    Returns ``(subgrid, restricted perturbation, rounds)``.
    """
    if len(p.labels) != n ** 3:
        raise PerturbationError("perturbation does not match the grid")
    current = Subgrid((0, 0, 0), n)
    rounds = 0
    while True:
        inside = current.vertices(n)
        count = Counter(p.labels[v] for v in inside)
        bad = sorted(c for c, cnt in count.items() if cnt <= small)
        if not bad:
            return current, p.restrict(inside), rounds
        cls = bad[0]
        current = third_subgrid(n, current, {v for v in inside if p.labels[v] == cls})
        rounds += 1
        if rounds > p.k:
            raise AssertionError("pruning took more rounds than classes")


# -- balanced subexpression ----------------------------------------------------------


@dataclass(frozen=True)
class BalancedSplit:
    node: int  # preorder id of the union node
    child: int  # preorder id of the chosen child
    lo: int  # the child's vertices are creation indices lo..hi-1
    hi: int


def _leaf_ranges(expr: Expr) -> tuple[list[Expr], list[tuple[int, int]], list[list[int]]]:
    nodes = list(preorder(expr))
    index = {id(n): i for i, n in enumerate(nodes)}
    kids = [[index[id(k)] for k in n.kids] for n in nodes]
    ranges: list[tuple[int, int]] = [(0, 0)] * len(nodes)
    counter = 0
    # leaves appear in preorder in creation order
    first = [0] * len(nodes)
    count = [0] * len(nodes)
    for i in reversed(range(len(nodes))):
        if isinstance(nodes[i], Create):
            count[i] = 1
        else:
            count[i] = sum(count[j] for j in kids[i])
    for i, node in enumerate(nodes):
        if isinstance(node, Create):
            first[i] = counter
            counter += 1
    for i in reversed(range(len(nodes))):
        if not isinstance(nodes[i], Create):
            first[i] = first[kids[i][0]]
        ranges[i] = (first[i], first[i] + count[i])
    return nodes, ranges, kids


def balanced_union_subexpression(expr: Expr) -> BalancedSplit:
    """Bottommost union node with at least ``2N/3`` vertices, and its larger child."""
    nodes, ranges, kids = _leaf_ranges(expr)
    total = ranges[0][1] - ranges[0][0]
    if total < 3:
        raise GraphError(f"need at least 3 vertices, got {total}")

    def big(i: int) -> bool:
        lo, hi = ranges[i]
        return 3 * (hi - lo) >= 2 * total

    i = 0
    while True:
        if isinstance(nodes[i], Union):
            nxt = [j for j in kids[i] if big(j)]
            if not nxt:
                break
            i = nxt[0]
        else:
            i = kids[i][0]
    left, right = kids[i]
    sz = [ranges[j][1] - ranges[j][0] for j in (left, right)]
    child = left if sz[0] >= sz[1] else right
    lo, hi = ranges[child]
    assert total <= 3 * (hi - lo) <= 2 * total
    return BalancedSplit(i, child, lo, hi)


# -- induced matchings in bicolored grids -------------------------------------------


def _line_edge(line: Sequence[int], side_a: Sequence[bool]):
    """First edge of a line path whose endpoints have different colors, or None."""
    for x, y in zip(line, line[1:]):
        if side_a[x] != side_a[y]:
            return (x, y)
    return None


def _mono(line: Sequence[int], side_a: Sequence[bool]):
    """True/False for an all-A/all-B line, None when mixed."""
    first = side_a[line[0]]
    return first if all(side_a[v] == first for v in line) else None


def _plane_edges(rows: list[list[int]], cols: list[list[int]], side_a) -> list[tuple[int, int]]:
    """Two-colored edges of a balanced plane, one per non-monochromatic line."""
    for lines, other in ((rows, cols), (cols, rows)):
        monos = {_mono(line, side_a) for line in lines} - {None}
        if monos == {True, False}:
            return [e for e in (_line_edge(line, side_a) for line in other) if e]
    return [e for e in (_line_edge(line, side_a) for line in rows) if e]


def _balanced(vs, side_a, eps: Fraction) -> bool:
    a = sum(1 for v in vs if side_a[v])
    return a >= eps * len(vs) and len(vs) - a >= eps * len(vs)


def two_colored_edges(side: int, dim: int, side_a: Sequence[bool]) -> list[tuple[int, int]]:
    """Candidate two-colored grid edges from the plane/line census."""
    m = side
    if dim == 2:
        rows = [[i * m + j for j in range(m)] for i in range(m)]
        cols = [[i * m + j for i in range(m)] for j in range(m)]
        return _plane_edges(rows, cols, side_a)

    def vid(i, j, k):
        return (i * m + j) * m + k

    planes = [[vid(i, j, k) for j in range(m) for k in range(m)] for i in range(m)]
    sixth = Fraction(1, 6)
    skewed = {}
    for i, plane in enumerate(planes):
        if not _balanced(plane, side_a, sixth):
            skewed.setdefault(sum(side_a[v] for v in plane) * 2 > len(plane), i)
    if len(skewed) == 2:
        # lines across the planes that pass an A-heavy and a B-heavy plane
        lines = [[vid(i, j, k) for i in range(m)] for j in range(m) for k in range(m)]
        return [e for e in (_line_edge(line, side_a) for line in lines) if e]
    out = []
    for i, plane in enumerate(planes):
        if _balanced(plane, side_a, sixth):
            rows = [[vid(i, j, k) for k in range(m)] for j in range(m)]
            cols = [[vid(i, j, k) for j in range(m)] for k in range(m)]
            out.extend(_plane_edges(rows, cols, side_a))
    return out


def greedy_induced_matching(g: Graph, candidates) -> list[tuple[int, int]]:
    """Keep an edge when neither endpoint is equal or adjacent to an endpoint already kept."""
    blocked: set[int] = set()
    chosen = []
    for u, v in candidates:
        if u in blocked or v in blocked:
            continue
        chosen.append((min(u, v), max(u, v)))
        for x in (u, v):
            blocked.add(x)
            blocked.update(g.adj[x])
    return chosen


def induced_matching_bicolored_grid(side: int, dim: int, partition: Sequence[bool]) -> list[tuple[int, int]]:
    """Induced matching between A (``partition[v]`` true) and B in the grid of the given side."""
    if dim not in (2, 3):
        raise ValueError("dim must be 2 or 3")
    total = side ** dim
    if len(partition) != total:
        raise ValueError(f"partition has {len(partition)} entries, grid has {total}")
    a = sum(1 for x in partition if x)
    if 3 * a < total or 3 * (total - a) < total:
        raise ImbalanceError(f"|A|={a}, |B|={total - a} is not 1/3-balanced")
    g = grid2d(side, side) if dim == 2 else grid3d(side, side, side)
    return greedy_induced_matching(g, two_colored_edges(side, dim, partition))


def is_induced_matching(g: Graph, edges, side_a=None) -> bool:
    """Every pair is an edge, endpoints are distinct, no edge joins two different pairs."""
    ends = [x for e in edges for x in e]
    if len(set(ends)) != len(ends):
        return False
    owner = {}
    for i, (u, v) in enumerate(edges):
        if not g.has_edge(u, v):
            return False
        if side_a is not None and side_a[u] == side_a[v]:
            return False
        owner[u] = owner[v] = i
    return all(owner.get(w, owner[x]) == owner[x] for x in owner for w in g.adj[x])


# -- the audit ----------------------------------------------------------------------


@dataclass
class AuditReport:
    variant: str
    ok: bool = True
    failures: list[str] = field(default_factory=list)
    figures: dict = field(default_factory=dict)

    def check(self, cond: bool, what: str) -> bool:
        if not cond:
            self.ok = False
            self.failures.append(what)
        return cond

    def to_dict(self) -> dict:
        return {"variant": self.variant, "ok": self.ok, "failures": list(self.failures),
                **{k: v for k, v in self.figures.items()}}


def _bfs_all(h: Graph, sources) -> dict[int, dict[int, int]]:
    return {s: h.distances_from([s]) for s in sources}


def _audit_tail(report: AuditReport, sub_expr: Expr, keep_ids: Sequence[int], local_side: int,
                dim: int, params: list[int], k: int, full_palette: int, param_graph: Graph):
    """Balanced split, matching, pigeonhole class and the color count, on the restricted expression.

    ``keep_ids[i]`` is the grid-local id of the ``i``-th value vertex of ``sub_expr``.
    """
    split = balanced_union_subexpression(sub_expr)
    total = len(keep_ids)
    in_a = [False] * total
    for i in range(split.lo, split.hi):
        in_a[keep_ids[i]] = True
    report.figures["balanced_split"] = {"node": split.node, "child": split.child,
                                        "size": split.hi - split.lo, "total": total}
    matching = induced_matching_bicolored_grid(local_side, dim, in_a)
    g = grid2d(local_side, local_side) if dim == 2 else grid3d(local_side, local_side, local_side)
    report.check(is_induced_matching(g, matching, in_a), "matching is not an induced A-B matching")
    bound = Fraction(local_side ** 2, 36 * 61) if dim == 3 else Fraction(local_side, 75)
    report.check(len(matching) >= bound, f"matching size {len(matching)} below {bound}")
    report.figures["matching"] = len(matching)
    report.figures["matching_bound"] = str(bound)

    # pigeonhole over parameters of A endpoints
    where = {g_id: i for i, g_id in enumerate(keep_ids)}
    a_ends = [u if in_a[u] else v for u, v in matching]
    by_param = Counter(params[where[x]] for x in a_ends)
    p_i, size_i = min(by_param.items(), key=lambda kv: (-kv[1], kv[0]))
    class_a = sorted(x for x in a_ends if params[where[x]] == p_i)
    span = max(params) - min(params) + 1
    report.figures["span"] = span
    report.figures["pigeon_param"] = p_i
    report.figures["pigeon_class"] = size_i
    l_class = ceil(size_i / (k * k))
    report.figures["L_class"] = l_class
    report.figures["L_measured_span"] = str(Fraction(len(matching), span * k * k))

    # colors of the class in the value of the chosen child
    child_val = evaluate(node_at(sub_expr, split.child), param_graph)
    colors = {child_val.colors[where[x] - split.lo] for x in class_a}
    report.figures["class_colors"] = len(colors)
    report.check(len(colors) >= l_class, f"class uses {len(colors)} colors, fewer than {l_class}")
    report.check(full_palette >= l_class, f"palette {full_palette} below L={l_class}")
    # per-color, the class members must spread over classes of the perturbation
    for c in colors:
        members = [x for x in class_a if child_val.colors[where[x] - split.lo] == c]
        report.check(len(members) <= k * k, f"color {c!r} holds {len(members)} > k^2 class vertices")



def audit_color_lower_bound(expr: Expr, param_graph: Graph, n: int, p: Perturbation,
                            variant: str = "grid3d", vertex_map: Sequence[int] | None = None) -> AuditReport:
    """Replay the lower-bound argument on a concrete expression for a perturbed grid.

    ``vertex_map[i]`` is the grid vertex of the ``i``-th created vertex (identity by default).
    """
    report = AuditReport(variant)
    if variant == "grid3d":
        base = grid3d(n, n, n)
    elif variant == "pinned":
        base = disjoint_copies(pinned_grid(n), n)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    target = apply_perturbation(base, p)
    value = evaluate(expr, param_graph)
    vmap = list(range(value.n)) if vertex_map is None else list(vertex_map)
    if value.n != base.n or sorted(vmap) != list(range(base.n)):
        report.check(False, "expression value does not cover the grid")
        return report
    got = {(min(vmap[u], vmap[v]), max(vmap[u], vmap[v])) for u, v in value.graph.edges}
    if not report.check(got == set(target.edges), "expression value is not the perturbed grid"):
        return report
    full_palette = palette(expr)
    report.figures["palette"] = full_palette
    k = max(1, p.k)
    report.figures["k"] = k
    grid_of = {i: vmap[i] for i in range(value.n)}
    inv = {g_id: i for i, g_id in grid_of.items()}

    if variant == "grid3d":
        try:
            sub, _, rounds = prune_to_clean_subgrid(n, p)
        except GridTooSmall as exc:
            report.check(False, f"clean subgrid: {exc}")
            return report
        m = sub.side
        inside = sub.vertices(n)
        report.figures["subgrid"] = {"origin": list(sub.origin), "side": m, "rounds": rounds}
        counts = Counter(p.labels[v] for v in inside)
        report.check(all(c > SMALL_3D for c in counts.values()), "a class is small in the subgrid")
        report.check(rounds <= p.k and m >= n // 3 ** p.k, "pruning exceeded its budget")
        h_sub, _ = target.induced(inside)
        g_sub = grid3d(m, m, m)
        dist = _bfs_all(h_sub, range(h_sub.n))
        far = [e for e in g_sub.edges if dist[e[0]].get(e[1], 99) > 3]
        report.check(not far, f"grid neighbors at perturbed distance > 3: {far[:1]}")
        diam = max((max(d.values()) if len(d) == h_sub.n else 10 ** 9) for d in dist.values())
        report.figures["diameter"] = diam
        report.check(diam < 9 * m, f"perturbed subgrid diameter {diam} not below {9 * m}")
        keep = [inv[v] for v in inside]
        local = {v: i for i, v in enumerate(inside)}
        sub_expr, mapping = restrict(expr, keep)
        back = sorted(mapping, key=mapping.get)
        keep_ids = [local[grid_of[i]] for i in back]
        params = [value.params[i] for i in back]
        span = max(params) - min(params) + 1
        report.check(span <= 9 * m, f"parameter span {span} exceeds {9 * m}")
        report.figures["L_worst_case"] = str(Fraction(m, 9 * 36 * 61 * k * k))
        _audit_tail(report, sub_expr, keep_ids, m, 3, params, k, full_palette, param_graph)
        return report

    # pinned variant
    copy_size = n ** 4 + 1
    alive = list(range(n))

    def grid_vs(j):
        return range(j * copy_size, j * copy_size + n ** 4)

    def apex(j):
        return j * copy_size + n ** 4

    removed = 0
    while alive:
        grid_count = Counter(p.labels[v] for j in alive for v in grid_vs(j))
        small = {c for c, cnt in grid_count.items() if cnt <= SMALL_PINNED}
        apex_count = Counter(p.labels[apex(j)] for j in alive)
        drop = None
        for j in alive:
            if any(p.labels[v] in small for v in grid_vs(j)) or apex_count[p.labels[apex(j)]] == 1:
                drop = j
                break
        if drop is None:
            break
        alive.remove(drop)
        removed += 1
    report.figures["removed_copies"] = removed
    report.check(removed <= 9 * p.k, "removal rounds exceeded 9k")
    if not report.check(bool(alive), "every copy was removed; n too small for k"):
        return report
    d1 = alive[0]
    keep_all = sorted(v for j in alive for v in (*grid_vs(j), apex(j)))
    h2, _ = target.induced(keep_all)
    pos = {v: i for i, v in enumerate(keep_all)}
    xs = list(grid_vs(d1))
    limit = 18 * n + 4
    worst = 0
    for x in xs:
        d = h2.distances_from([pos[x]])
        worst = max(worst, max(d.get(pos[y], 10 ** 9) for y in xs))
    report.figures["copy"] = d1
    report.figures["grid_distance"] = worst
    report.check(worst <= limit, f"grid vertices of the copy at distance {worst} > {limit}")
    keep = [inv[v] for v in xs]
    local = {v: i for i, v in enumerate(xs)}
    sub_expr, mapping = restrict(expr, keep)
    back = sorted(mapping, key=mapping.get)
    keep_ids = [local[grid_of[i]] for i in back]
    params = [value.params[i] for i in back]
    report.check(max(params) - min(params) <= limit, "parameter span exceeds 18n+4")
    report.figures["L_worst_case"] = str(Fraction(n * n, 75 * (limit + 1) * k * k))
    _audit_tail(report, sub_expr, keep_ids, n * n, 2, params, k, full_palette, param_graph)
    return report


__all__ = [
    "AuditReport", "BalancedSplit", "GridTooSmall", "ImbalanceError", "Perturbation",
    "PerturbationError", "SMALL_3D", "SMALL_PINNED", "Subgrid", "apply_perturbation",
    "audit_color_lower_bound", "balanced_union_subexpression", "greedy_induced_matching",
    "induced_matching_bicolored_grid", "is_induced_matching", "prune_to_clean_subgrid",
    "third_subgrid", "two_colored_edges",
]
