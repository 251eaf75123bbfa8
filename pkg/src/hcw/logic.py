"""First-order logic over colored graphs: formulas, evaluation, interpretations, types, EF games.

Formula text syntax (s-expressions)::

    (E x1 x2)  (color 1 x1)  (= x1 y1)  (true)  (false)
    (not f)  (and f ...)  (or f ...)  (implies f g)
    (exists y1 f)  (forall y1 f)

Free variables are named ``x<i>``, bound variables ``y<i>``.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping, Sequence

from .graph import ColoredGraph, Graph


class FormulaError(ValueError):
    pass


class Formula:
    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Const(Formula):
    value: bool


@dataclass(frozen=True)
class Rel(Formula):
    a: str
    b: str


@dataclass(frozen=True)
class Eq(Formula):
    a: str
    b: str


@dataclass(frozen=True)
class HasColor(Formula):
    color: int
    a: str


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    parts: tuple[Formula, ...]


@dataclass(frozen=True)
class Or(Formula):
    parts: tuple[Formula, ...]


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


TRUE, FALSE = Const(True), Const(False)


def E(a: str, b: str) -> Formula:
    return Rel(a, b)


def conj(*parts: Formula) -> Formula:
    flat = []
    for p in parts:
        flat.extend(p.parts if isinstance(p, And) else (p,))
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def disj(*parts: Formula) -> Formula:
    flat = []
    for p in parts:
        flat.extend(p.parts if isinstance(p, Or) else (p,))
    if not flat:
        return FALSE
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


_FREE = re.compile(r"x\d+$")
_BOUND = re.compile(r"y\d+$")


def _check_var(name: str, bound: bool) -> None:
    if bound and not _BOUND.match(name):
        raise FormulaError(f"quantified variable {name!r} must be named y<i>")
    if not bound and not (_FREE.match(name) or _BOUND.match(name)):
        raise FormulaError(f"variable {name!r} must be named x<i> or y<i>")


def free_vars(phi: Formula) -> frozenset[str]:
    if isinstance(phi, Const):
        return frozenset()
    if isinstance(phi, (Rel, Eq)):
        return frozenset((phi.a, phi.b))
    if isinstance(phi, HasColor):
        return frozenset((phi.a,))
    if isinstance(phi, Not):
        return free_vars(phi.body)
    if isinstance(phi, (And, Or)):
        return frozenset().union(*(free_vars(p) for p in phi.parts))
    if isinstance(phi, Implies):
        return free_vars(phi.left) | free_vars(phi.right)
    if isinstance(phi, (Exists, Forall)):
        return free_vars(phi.body) - {phi.var}
    raise FormulaError(f"not a formula: {phi!r}")


def quantifier_rank(phi: Formula) -> int:
    if isinstance(phi, (Const, Rel, Eq, HasColor)):
        return 0
    if isinstance(phi, Not):
        return quantifier_rank(phi.body)
    if isinstance(phi, (And, Or)):
        return max((quantifier_rank(p) for p in phi.parts), default=0)
    if isinstance(phi, Implies):
        return max(quantifier_rank(phi.left), quantifier_rank(phi.right))
    return 1 + quantifier_rank(phi.body)


# -- text format --------------------------------------------------------------------


def to_text(phi: Formula) -> str:
    if isinstance(phi, Const):
        return "(true)" if phi.value else "(false)"
    if isinstance(phi, Rel):
        return f"(E {phi.a} {phi.b})"
    if isinstance(phi, Eq):
        return f"(= {phi.a} {phi.b})"
    if isinstance(phi, HasColor):
        return f"(color {phi.color} {phi.a})"
    if isinstance(phi, Not):
        return f"(not {to_text(phi.body)})"
    if isinstance(phi, And):
        return "(and " + " ".join(to_text(p) for p in phi.parts) + ")"
    if isinstance(phi, Or):
        return "(or " + " ".join(to_text(p) for p in phi.parts) + ")"
    if isinstance(phi, Implies):
        return f"(implies {to_text(phi.left)} {to_text(phi.right)})"
    kw = "exists" if isinstance(phi, Exists) else "forall"
    return f"({kw} {phi.var} {to_text(phi.body)})"


def _tokens(text: str) -> list[str]:
    text = re.sub(r";[^\n]*", " ", text)  # comments
    return re.findall(r"\(|\)|[^\s()]+", text)


def parse(text: str) -> Formula:
    toks = _tokens(text)
    pos = 0

    def expect(tok: str) -> None:
        nonlocal pos
        if pos >= len(toks) or toks[pos] != tok:
            got = toks[pos] if pos < len(toks) else "end of input"
            raise FormulaError(f"expected {tok!r}, got {got!r}")
        pos += 1

    def atom() -> str:
        nonlocal pos
        if pos >= len(toks) or toks[pos] in "()":
            raise FormulaError("expected a symbol")
        pos += 1
        return toks[pos - 1]

    def var() -> str:
        name = atom()
        _check_var(name, bound=False)
        return name

    def form() -> Formula:
        nonlocal pos
        expect("(")
        head = atom()
        if head == "true":
            out = TRUE
        elif head == "false":
            out = FALSE
        elif head == "E":
            out = Rel(var(), var())
        elif head == "=":
            out = Eq(var(), var())
        elif head == "color":
            c = atom()
            if not c.isdigit():
                raise FormulaError(f"color must be a natural number, got {c!r}")
            out = HasColor(int(c), var())
        elif head == "not":
            out = Not(form())
        elif head in ("and", "or"):
            parts = []
            while pos < len(toks) and toks[pos] == "(":
                parts.append(form())
            if not parts:
                out = TRUE if head == "and" else FALSE
            else:
                out = (And if head == "and" else Or)(tuple(parts))
        elif head == "implies":
            out = Implies(form(), form())
        elif head in ("exists", "forall"):
            v = atom()
            _check_var(v, bound=True)
            out = (Exists if head == "exists" else Forall)(v, form())
        else:
            raise FormulaError(f"unknown connective {head!r}")
        expect(")")
        return out

    phi = form()
    if pos != len(toks):
        raise FormulaError(f"trailing input starting at {toks[pos]!r}")
    for v in free_vars(phi):
        if not _FREE.match(v):
            raise FormulaError(f"bound-style variable {v!r} occurs free")
    return phi


# -- evaluation ------------------------------------------------------------------


class _Structure:
    """Adjacency (loops included) and colors in lookup-friendly form."""

    def __init__(self, s: ColoredGraph) -> None:
        g = s.graph
        self.n = g.n
        self.adj = [set(a) | ({v} if v in g.loops else set()) for v, a in enumerate(g.adj)]
        self.colors = s.colors
        self.all = range(g.n)


def _guard(body: Formula, var: str, positive: bool) -> str | None:
    """A variable z such that the quantifier over ``var`` may range over N(z) only."""
    if positive:
        parts = body.parts if isinstance(body, And) else (body,)
        for p in parts:
            if isinstance(p, Rel) and var in (p.a, p.b):
                other = p.b if p.a == var else p.a
                if other != var:
                    return other
    else:
        if isinstance(body, Implies):
            left = body.left.parts if isinstance(body.left, And) else (body.left,)
            for p in left:
                if isinstance(p, Rel) and var in (p.a, p.b):
                    other = p.b if p.a == var else p.a
                    if other != var:
                        return other
        if isinstance(body, Or):
            for p in body.parts:
                if isinstance(p, Not) and isinstance(p.body, Rel) and var in (p.body.a, p.body.b):
                    other = p.body.b if p.body.a == var else p.body.a
                    if other != var:
                        return other
    return None


def _compile(phi: Formula, slots: dict[str, int], st: _Structure) -> Callable[[list], bool]:
    if isinstance(phi, Const):
        val = phi.value
        return lambda env: val
    if isinstance(phi, Rel):
        ia, ib, adj = slots[phi.a], slots[phi.b], st.adj
        return lambda env: env[ib] in adj[env[ia]]
    if isinstance(phi, Eq):
        ia, ib = slots[phi.a], slots[phi.b]
        return lambda env: env[ia] == env[ib]
    if isinstance(phi, HasColor):
        ia, c, colors = slots[phi.a], phi.color, st.colors
        return lambda env: colors[env[ia]] == c
    if isinstance(phi, Not):
        f = _compile(phi.body, slots, st)
        return lambda env: not f(env)
    if isinstance(phi, And):
        fs = [_compile(p, slots, st) for p in phi.parts]
        return lambda env: all(f(env) for f in fs)
    if isinstance(phi, Or):
        fs = [_compile(p, slots, st) for p in phi.parts]
        return lambda env: any(f(env) for f in fs)
    if isinstance(phi, Implies):
        fl, fr = _compile(phi.left, slots, st), _compile(phi.right, slots, st)
        return lambda env: (not fl(env)) or fr(env)
    # quantifier: give the variable a fresh slot (shadowing allowed)
    inner = dict(slots)
    inner[phi.var] = slot = max(slots.values(), default=-1) + 1
    body = _compile(phi.body, inner, st)
    guard = _guard(phi.body, phi.var, isinstance(phi, Exists))
    gslot = slots.get(guard) if guard is not None else None
    adj, everything = st.adj, st.all

    def domain(env):
        return adj[env[gslot]] if gslot is not None else everything

    if isinstance(phi, Exists):
        def run(env):
            for v in domain(env):
                env[slot] = v
                if body(env):
                    return True
            return False
    else:
        def run(env):
            for v in domain(env):
                env[slot] = v
                if not body(env):
                    return False
            return True
    return run


class CompiledFormula:
    """A formula bound to a structure; call with the values of ``free`` in order."""

    def __init__(self, s: ColoredGraph, phi: Formula, free: Sequence[str]) -> None:
        missing = free_vars(phi) - set(free)
        if missing:
            raise FormulaError(f"unassigned free variable {sorted(missing)[0]}")
        slots = {v: i for i, v in enumerate(free)}
        self.width = len(slots) + _depth(phi) + 1
        self.fn = _compile(phi, slots, _Structure(s))

    def __call__(self, *values: int) -> bool:
        env = list(values) + [0] * self.width
        return self.fn(env)


def _depth(phi: Formula) -> int:
    if isinstance(phi, (Const, Rel, Eq, HasColor)):
        return 0
    if isinstance(phi, Not):
        return _depth(phi.body)
    if isinstance(phi, (And, Or)):
        return max((_depth(p) for p in phi.parts), default=0)
    if isinstance(phi, Implies):
        return max(_depth(phi.left), _depth(phi.right))
    return 1 + _depth(phi.body)


def eval_formula(s: ColoredGraph, phi: Formula, assignment: Mapping[str, int]) -> bool:
    free = sorted(assignment)
    return CompiledFormula(s, phi, free)(*(assignment[v] for v in free))


def _as_colored(g: Graph | ColoredGraph) -> ColoredGraph:
    return g if isinstance(g, ColoredGraph) else ColoredGraph.uniform(g, 1)


def _pair_vars(xi: Formula) -> tuple[str, str]:
    extra = free_vars(xi) - {"x1", "x2"}
    if extra:
        raise FormulaError(f"free variables must be among x1, x2; found {sorted(extra)}")
    return "x1", "x2"


class AsymmetricFormula(FormulaError):
    def __init__(self, u: int, v: int) -> None:
        super().__init__(f"formula is not symmetric on the pair ({u}, {v})")
        self.pair = (u, v)


def interpret(g: Graph | ColoredGraph, xi: Formula) -> Graph:
    """Graph on ``V(g)`` with ``uv`` an edge iff ``g |= xi(u, v)`` (no loops)."""
    s = _as_colored(g)
    f = CompiledFormula(s, xi, _pair_vars(xi))
    edges = []
    for u in range(s.n):
        for v in range(u + 1, s.n):
            a, b = f(u, v), f(v, u)
            if a != b:
                raise AsymmetricFormula(u, v)
            if a:
                edges.append((u, v))
    return Graph.from_edges(s.n, edges)


@dataclass(frozen=True)
class LocalityVerdict:
    holds: bool
    witness: tuple[int, int] | None = None
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.holds


def check_strong_locality(g: Graph | ColoredGraph, xi: Formula, r: int) -> LocalityVerdict:
    """Check on every pair that satisfaction is decided in the ``r``-ball and implies distance <= r."""
    s = _as_colored(g)
    fv = free_vars(xi)
    if not fv <= {"x1", "x2"}:
        raise FormulaError("locality is checked for formulas over x1, x2 only")
    f = CompiledFormula(s, xi, ("x1", "x2"))
    dist = [s.graph.distances_from([v]) for v in range(s.n)]
    near = [{w for w, d in dv.items() if d <= r} for dv in dist]
    cache: dict[frozenset, tuple[ColoredGraph, dict[int, int], CompiledFormula]] = {}
    pairs = [(u, u) for u in range(s.n)] + [(u, v) for u in range(s.n) for v in range(s.n) if u != v]
    if fv <= {"x1"}:
        pairs = [(u, u) for u in range(s.n)]
    for u, v in pairs:
        sat = f(u, v)
        if sat and dist[u].get(v, r + 1) > r:
            return LocalityVerdict(False, (u, v), "distance")
        key = frozenset(near[u] | near[v])
        if key not in cache:
            sub, old = s.induced(key)
            cache[key] = (sub, {o: i for i, o in enumerate(old)}, CompiledFormula(sub, xi, ("x1", "x2")))
        _, idx, fb = cache[key]
        if fb(idx[u], idx[v]) != sat:
            return LocalityVerdict(False, (u, v), "ball")
    return LocalityVerdict(True)


# -- rank-q types -----------------------------------------------------------------


class TypeTable:
    """Interning table: structural type descriptions -> dense integer ids.

    Descriptions only mention colors, loop flags and relation codes, so ids are comparable
    across structures.
    """

    def __init__(self) -> None:
        self._ids: dict = {}
        self._lock = threading.Lock()

    def intern(self, key) -> int:
        got = self._ids.get(key)
        if got is not None:
            return got
        with self._lock:
            return self._ids.setdefault(key, len(self._ids))

    def __len__(self) -> int:
        return len(self._ids)


TYPES = TypeTable()

# relation codes of a vertex y to a tuple element t: 0 non-adjacent, 1 adjacent, 2 equal
_NON, _ADJ, _EQ = 0, 1, 2


class TypeEngine:
    """Computes rank-q types of tuples in one colored graph.

    A tuple is tracked by its atomic id and its profile vector: the interned
    (color, loop, relation codes to the tuple) of every vertex. Extending the tuple by
    ``x`` is a single pass over the profile vector.
    """

    def __init__(self, s: ColoredGraph, table: TypeTable = TYPES) -> None:
        self.s = s
        self.table = table
        g = s.graph
        self.n = g.n
        self.rel = [[_NON] * g.n for _ in range(g.n)]
        for u, v in g.edges:
            self.rel[u][v] = self.rel[v][u] = _ADJ
        for v in range(g.n):
            self.rel[v][v] = _EQ
        self.loop = [v in g.loops for v in range(g.n)]
        intern = table.intern
        self.base = [intern(("p", s.colors[v], self.loop[v])) for v in range(g.n)]
        self.root = intern(("atomic",))

    def _extend(self, state, x: int):
        atomic, prof = state
        intern = self.table.intern
        row = self.rel[x]
        new_atomic = intern(("a", atomic, prof[x]))
        new_prof = [intern(("e", prof[y], row[y])) for y in range(self.n)]
        return new_atomic, new_prof

    def state(self, tup: Sequence[int]):
        st = (self.root, self.base)
        for x in tup:
            st = self._extend(st, x)
        return st

    def _type(self, state, q: int) -> int:
        atomic, prof = state
        intern = self.table.intern
        if q == 0:
            return intern(("T", 0, atomic))
        if q == 1:
            return intern(("T", 1, atomic, frozenset(intern(("T", 0, intern(("a", atomic, p))))
                                                     for p in set(prof))))
        if q == 2:
            # rank-1 type of an extension is determined by (atomic, profile multiset shape)
            exts = set()
            for x in range(self.n):
                row = self.rel[x]
                a2 = intern(("a", atomic, prof[x]))
                inner = frozenset(
                    intern(("T", 0, intern(("a", a2, intern(("e", prof[y], row[y]))))))
                    for y in range(self.n)
                )
                exts.add(intern(("T", 1, a2, inner)))
            return intern(("T", 2, atomic, frozenset(exts)))
        return intern(("T", q, atomic, frozenset(self._type(self._extend(state, x), q - 1)
                                                for x in range(self.n))))

    def type_of(self, tup: Sequence[int], q: int) -> int:
        return self._type(self.state(tup), q)


class CapExceeded(ValueError):
    pass


def rank_type(s: ColoredGraph, tup: Sequence[int], q: int, max_q: int = 3, max_len: int = 4,
              table: TypeTable = TYPES) -> int:
    """Canonical id of the rank-``q`` type of ``tup`` in ``s``."""
    if q > max_q or len(tup) > max_len:
        raise CapExceeded(f"rank {q} / tuple length {len(tup)} exceed caps ({max_q}, {max_len})")
    return TypeEngine(s, table).type_of(tup, q)


def _partial_iso(s1: ColoredGraph, t1: Sequence[int], s2: ColoredGraph, t2: Sequence[int]) -> bool:
    g1, g2 = s1.graph, s2.graph
    for i in range(len(t1)):
        a, b = t1[i], t2[i]
        if s1.colors[a] != s2.colors[b] or (a in g1.loops) != (b in g2.loops):
            return False
        for j in range(i):
            c, d = t1[j], t2[j]
            if (a == c) != (b == d) or g1.has_edge(a, c) != g2.has_edge(b, d):
                return False
    return True


def ef_equivalent(s1: ColoredGraph, t1: Sequence[int], s2: ColoredGraph, t2: Sequence[int], q: int,
                  max_q: int = 3, max_len: int = 4) -> bool:
    """Whether Duplicator wins the ``q``-round Ehrenfeucht-Fraisse game from ``(t1, t2)``."""
    if q > max_q or len(t1) > max_len or len(t2) > max_len:
        raise CapExceeded("EF game caps exceeded")
    if len(t1) != len(t2):
        return False

    @lru_cache(maxsize=None)
    def wins(a: tuple, b: tuple, rounds: int) -> bool:
        if not _partial_iso(s1, a, s2, b):
            return False
        if rounds == 0:
            return True
        for x in range(s1.n):
            if not any(wins(a + (x,), b + (y,), rounds - 1) for y in range(s2.n)):
                return False
        for y in range(s2.n):
            if not any(wins(a + (x,), b + (y,), rounds - 1) for x in range(s1.n)):
                return False
        return True

    return wins(tuple(t1), tuple(t2), q)


# -- formula library ----------------------------------------------------------------


LIBRARY_SOURCES: dict[str, tuple[str, int]] = {
    # name: (text, locality radius)
    "adj": ("(E x1 x2)", 1),
    "adj_c1": ("(and (color 1 x1) (color 1 x2) (E x1 x2))", 1),
    "dist2": ("(or (E x1 x2) (exists y1 (and (E x1 y1) (E y1 x2))))", 2),
    "dist2_c1": ("(and (color 1 x1) (color 1 x2) "
                 "(or (E x1 x2) (exists y1 (and (E x1 y1) (color 1 y1) (E y1 x2)))))", 2),
    "common_c2": ("(exists y1 (and (E x1 y1) (color 2 y1) (E y1 x2)))", 2),
    "triangle_edge": ("(and (E x1 x2) (exists y1 (and (E x1 y1) (E x2 y1))))", 1),
    "far_c1_pair": ("(and (not (E x1 x2)) (not (= x1 x2)) "
                    "(exists y1 (and (E x1 y1) (color 1 y1) (E y1 x2))))", 2),
    "edge_both_branch": ("(and (E x1 x2) "
                         "(exists y1 (and (E x1 y1) (not (= y1 x2)) "
                         "(exists y2 (and (E y1 y2) (not (= y2 x1)))))) "
                         "(exists y1 (and (E x2 y1) (not (= y1 x1)) "
                         "(exists y2 (and (E y1 y2) (not (= y2 x2)))))))", 2),
    "edge_c2_cover": ("(and (E x1 x2) (color 1 x1) (color 1 x2) "
                      "(forall y1 (implies (E x1 y1) (exists y2 (and (E y1 y2) (color 2 y2))))) "
                      "(forall y1 (implies (E x2 y1) (exists y2 (and (E y1 y2) (color 2 y2))))))", 2),
}


def library() -> dict[str, tuple[Formula, int]]:
    """Named strongly local formulas with their locality radius (all of rank <= 2)."""
    return {name: (parse(text), r) for name, (text, r) in LIBRARY_SOURCES.items()}


__all__ = [
    "And", "AsymmetricFormula", "CapExceeded", "CompiledFormula", "Const", "E", "Eq", "Exists",
    "FALSE", "Forall", "Formula", "FormulaError", "HasColor", "Implies", "LIBRARY_SOURCES",
    "LocalityVerdict", "Not", "Or", "Rel", "TRUE", "TYPES", "TypeEngine", "TypeTable",
    "check_strong_locality", "conj", "disj", "ef_equivalent", "eval_formula", "free_vars",
    "interpret", "library", "parse", "quantifier_rank", "rank_type", "to_text",
]
