"""Tree decompositions: validation, normal form, forget orders, weak reachability."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .graph import Graph


class DecompositionError(ValueError):
    pass


@dataclass(frozen=True)
class TreeDecomposition:
    """Rooted tree over nodes ``0..len(bags)-1`` given by a parent map (``None`` at the root)."""

    parent: tuple[int | None, ...]
    bags: tuple[frozenset[int], ...]
    root: int

    def __post_init__(self) -> None:
        if len(self.parent) != len(self.bags) or not self.bags:
            raise DecompositionError("parent map and bags must be nonempty and of equal length")
        if self.parent[self.root] is not None:
            raise DecompositionError("the root has a parent")
        roots = [t for t, p in enumerate(self.parent) if p is None]
        if roots != [self.root]:
            raise DecompositionError(f"expected a single root, found {roots}")
        seen = set()
        for t in self.preorder:
            seen.add(t)
        if len(seen) != len(self.bags):
            raise DecompositionError("parent map does not describe a tree")

    @classmethod
    def build(cls, parent: Sequence[int | None], bags: Sequence[Iterable[int]]) -> "TreeDecomposition":
        root = [t for t, p in enumerate(parent) if p is None]
        if len(root) != 1:
            raise DecompositionError(f"expected a single root, found {root}")
        return cls(tuple(parent), tuple(frozenset(b) for b in bags), root[0])

    @property
    def nodes(self) -> range:
        return range(len(self.bags))

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        ch: list[list[int]] = [[] for _ in self.bags]
        for t, p in enumerate(self.parent):
            if p is not None and 0 <= p < len(self.bags):
                ch[p].append(t)
        return tuple(tuple(c) for c in ch)

    @cached_property
    def preorder(self) -> tuple[int, ...]:
        out = []
        stack = [self.root]
        seen = set()
        while stack:
            t = stack.pop()
            if t in seen:
                break
            seen.add(t)
            out.append(t)
            stack.extend(reversed(self.children[t]))
        return tuple(out)

    @property
    def width(self) -> int:
        return max(len(b) for b in self.bags) - 1

    @cached_property
    def vertices(self) -> frozenset[int]:
        return frozenset().union(*self.bags)

    @cached_property
    def below(self) -> tuple[frozenset[int], ...]:
        """``X_t^+``: union of the bags in the subtree of ``t``."""
        acc: list[frozenset[int]] = list(self.bags)
        for t in reversed(self.preorder):
            p = self.parent[t]
            if p is not None:
                acc[p] = acc[p] | acc[t]
        return tuple(acc)

    @cached_property
    def forgotten_below(self) -> tuple[frozenset[int], ...]:
        """``Y_t = X_t^+ minus X_parent``; the root gets every vertex."""
        out = []
        for t in self.nodes:
            p = self.parent[t]
            out.append(self.vertices if p is None else self.below[t] - self.bags[p])
        return tuple(out)


@dataclass(frozen=True)
class Verdict:
    ok: bool
    axiom: str | None = None
    witness: object = None

    def __bool__(self) -> bool:
        return self.ok


def validate(m: Graph, td: TreeDecomposition) -> Verdict:
    """Check vertex coverage, edge coverage and interpolation."""
    for b in td.bags:
        for v in b:
            if not 0 <= v < m.n:
                return Verdict(False, "vertex-range", v)
    covered = td.vertices
    for v in range(m.n):
        if v not in covered:
            return Verdict(False, "vertex-coverage", v)
    for u, v in sorted(m.edges):
        if not any(u in b and v in b for b in td.bags):
            return Verdict(False, "edge-coverage", (u, v))
    for v in sorted(covered):
        holders = [t for t in td.nodes if v in td.bags[t]]
        # connected iff exactly one holder has its parent outside the holder set
        tops = [t for t in holders if td.parent[t] is None or v not in td.bags[td.parent[t]]]
        if len(tops) != 1:
            return Verdict(False, "interpolation", v)
    return Verdict(True)


def is_normalized(td: TreeDecomposition) -> bool:
    if td.bags[td.root]:
        return False
    for t in td.nodes:
        ch = td.children[t]
        if len(ch) > 2:
            return False
        if not ch and t != td.root and len(td.bags[t]) != 1:
            return False
        p = td.parent[t]
        if p is not None:
            if len(td.bags[t] - td.bags[p]) > 1 or len(td.bags[p] - td.bags[t]) > 1:
                return False
    return True


def normalize(td: TreeDecomposition, graph: Graph | None = None) -> TreeDecomposition:
    """Binarize, smooth, add an empty root and singleton leaves; width is unchanged.

    With ``graph`` the input is validated against it, otherwise only interpolation is checked.
    """
    if graph is not None:
        verdict = validate(graph, td)
    else:
        n = max(td.vertices, default=-1) + 1
        verdict = validate(Graph(n), td)
        if not verdict and verdict.axiom == "vertex-coverage":
            verdict = Verdict(True)
    if not verdict:
        raise DecompositionError(f"invalid decomposition: {verdict.axiom} violated at {verdict.witness}")

    bags: list[frozenset[int]] = list(td.bags)
    parent: list[int | None] = list(td.parent)
    children: list[list[int]] = [list(c) for c in td.children]
    root = td.root

    def new_node(bag: frozenset[int], par: int | None) -> int:
        bags.append(bag)
        parent.append(par)
        children.append([])
        if par is not None:
            children[par].append(len(bags) - 1)
        return len(bags) - 1

    def reparent(t: int, new_par: int) -> None:
        old = parent[t]
        if old is not None:
            children[old].remove(t)
        parent[t] = new_par
        children[new_par].append(t)

    # binarize: a node with many children hands all but one to a copy of itself
    queue = deque(range(len(bags)))
    while queue:
        t = queue.popleft()
        if len(children[t]) > 2:
            rest = children[t][1:]
            copy = new_node(bags[t], t)
            for c in rest:
                reparent(c, copy)
            queue.append(copy)

    # smooth: interpolate each tree edge one vertex at a time
    for c in range(len(bags)):
        p = parent[c]
        if p is None:
            continue
        lose = sorted(bags[c] - bags[p])
        gain = sorted(bags[p] - bags[c])
        if len(lose) <= 1 and len(gain) <= 1:
            continue
        steps = []
        cur = set(bags[c])
        for x in lose:
            cur.discard(x)
            steps.append(frozenset(cur))
        for x in gain:
            cur.add(x)
            steps.append(frozenset(cur))
        steps.pop()  # equals the parent bag
        below = c
        for bag in steps:
            mid = new_node(bag, None)
            children[p].remove(below)
            parent[below] = mid
            children[mid].append(below)
            parent[mid] = p
            children[p].append(mid)
            below = mid

    # empty root
    if bags[root]:
        cur = set(bags[root])
        top = root
        for x in sorted(bags[root]):
            cur.discard(x)
            nxt = new_node(frozenset(cur), None)
            parent[top] = nxt
            children[nxt].append(top)
            top = nxt
        root = top

    # drop empty non-root leaves, then grow singleton chains under the others
    alive = [True] * len(bags)
    changed = True
    while changed:
        changed = False
        for t in range(len(bags)):
            if alive[t] and t != root and not bags[t] and not children[t]:
                alive[t] = False
                children[parent[t]].remove(t)
                changed = True
    for t in range(len(bags)):
        if alive[t] and t != root and not children[t] and len(bags[t]) > 1:
            cur = set(bags[t])
            above = t
            for x in sorted(bags[t])[:-1]:
                cur.discard(x)
                above = new_node(frozenset(cur), above)
                alive.append(True)

    # renumber in preorder, children in creation order
    order = []
    stack = [root]
    while stack:
        t = stack.pop()
        order.append(t)
        stack.extend(reversed(children[t]))
    new_id = {t: i for i, t in enumerate(order)}
    return TreeDecomposition(
        tuple(None if parent[t] is None else new_id[parent[t]] for t in order),
        tuple(bags[t] for t in order),
        0,
    )


@dataclass(frozen=True)
class ForgetOrder:
    order: tuple[int, ...]  # vertices, smallest first
    forget_node: Mapping[int, int]

    @cached_property
    def rank(self) -> dict[int, int]:
        return {v: i for i, v in enumerate(self.order)}

    def precedes(self, a: int, b: int) -> bool:
        return self.rank[a] <= self.rank[b]


def forget_order(td: TreeDecomposition) -> ForgetOrder:
    """Order vertices by the preorder position of their forget node (root first), ties by id."""
    if not is_normalized(td):
        raise DecompositionError("forget_order needs a normalized decomposition")
    pos = {t: i for i, t in enumerate(td.preorder)}
    fnode = {}
    for t in td.nodes:
        p = td.parent[t]
        for h in td.bags[t]:
            if p is None or h not in td.bags[p]:
                if h in fnode:
                    raise DecompositionError(f"vertex {h} has two forget nodes")
                fnode[h] = t
    order = sorted(fnode, key=lambda h: (pos[fnode[h]], h))
    return ForgetOrder(tuple(order), fnode)


def _rank_of(order: Sequence[int] | ForgetOrder) -> dict[int, int]:
    if isinstance(order, ForgetOrder):
        return order.rank
    return {v: i for i, v in enumerate(order)}


def wreach_sets(m: Graph, order: Sequence[int] | ForgetOrder, r: int) -> list[frozenset[int]]:
    """``wreach_r`` of every vertex: one bounded BFS per vertex inside the vertices above it."""
    rank = _rank_of(order)
    if len(rank) != m.n:
        raise DecompositionError("order must list every vertex exactly once")
    acc: list[set[int]] = [set() for _ in range(m.n)]
    for u in range(m.n):
        ru = rank[u]
        dist = {u: 0}
        queue = deque([u])
        while queue:
            x = queue.popleft()
            acc[x].add(u)
            if dist[x] == r:
                continue
            for w in m.adj[x]:
                if w not in dist and rank[w] > ru:
                    dist[w] = dist[x] + 1
                    queue.append(w)
    return [frozenset(s) for s in acc]


def wreach(m: Graph, order: Sequence[int] | ForgetOrder, r: int, v: int) -> frozenset[int]:
    return wreach_sets(m, order, r)[v]


def _elimination_width(m: Graph, cap: int) -> list[int]:
    """Optimal elimination order via the subset recursion TW(S) = min_v max(TW(S-v), |Q(S-v, v)|)."""
    n = m.n
    if n > cap:
        raise DecompositionError(f"decompose_small handles at most {cap} vertices, got {n}")
    adjm = [sum(1 << w for w in m.adj[v]) for v in range(n)]

    def q_size(s: int, v: int) -> int:
        # vertices outside s | {v} reachable from v through s
        seen = 1 << v
        frontier = adjm[v]
        out = 0
        while frontier:
            frontier &= ~seen
            if not frontier:
                break
            seen |= frontier
            out |= frontier & ~s
            inner = frontier & s
            nxt = 0
            while inner:
                low = inner & -inner
                nxt |= adjm[low.bit_length() - 1]
                inner ^= low
            frontier = nxt
        return bin(out & ~(1 << v)).count("1")

    best = {0: (-1, None)}
    for s in range(1, 1 << n):
        val, arg = None, None
        bits = s
        while bits:
            low = bits & -bits
            v = low.bit_length() - 1
            bits ^= low
            rest = s ^ low
            cand = max(best[rest][0], q_size(rest, v))
            if val is None or cand < val:
                val, arg = cand, v
        best[s] = (val, arg)
    order = []
    s = (1 << n) - 1
    while s:
        v = best[s][1]
        order.append(v)
        s ^= 1 << v
    order.reverse()
    return order


def decomposition_from_elimination(m: Graph, order: Sequence[int]) -> TreeDecomposition:
    if m.n == 0:
        return TreeDecomposition((None,), (frozenset(),), 0)
    pos = {v: i for i, v in enumerate(order)}
    nb = [set(a) for a in m.adj]
    bags, parent_vertex = [], []
    for v in order:
        later = {w for w in nb[v] if pos[w] > pos[v]}
        bags.append(frozenset(later | {v}))
        parent_vertex.append(min(later, key=pos.__getitem__) if later else None)
        for a in later:
            nb[a] |= later - {a}
    last = len(order) - 1
    parent: list[int | None] = []
    for i, pv in enumerate(parent_vertex):
        if i == last:
            parent.append(None)
        elif pv is None:
            parent.append(last)
        else:
            parent.append(pos[pv])
    return TreeDecomposition.build(parent, bags)


def decompose_small(m: Graph, cap: int = 10) -> TreeDecomposition:
    """Minimum-width decomposition by exhaustive subset dynamic programming."""
    return decomposition_from_elimination(m, _elimination_width(m, cap))


def td_to_dict(td: TreeDecomposition) -> dict:
    return {
        "nodes": len(td.bags),
        "root": td.root,
        "parent": list(td.parent),
        "bags": [sorted(b) for b in td.bags],
    }


def td_to_json(td: TreeDecomposition) -> str:
    return json.dumps(td_to_dict(td)) + "\n"


def td_from_dict(d: Mapping) -> TreeDecomposition:
    try:
        parent = [None if p is None or p < 0 else int(p) for p in d["parent"]]
        bags = [frozenset(int(v) for v in b) for b in d["bags"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise DecompositionError(f"malformed decomposition JSON: {exc}") from exc
    if "nodes" in d and d["nodes"] != len(bags):
        raise DecompositionError("'nodes' does not match the number of bags")
    td = TreeDecomposition.build(parent, bags)
    if "root" in d and d["root"] != td.root:
        raise DecompositionError("'root' does not match the parent map")
    return td


def td_from_json(text: str | bytes) -> TreeDecomposition:
    return td_from_dict(json.loads(text))
