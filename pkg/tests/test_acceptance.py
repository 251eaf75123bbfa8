"""The eleven acceptance criteria, one test each, each printing a single PASS/FAIL line.

Run standalone with ``python3 tests/test_acceptance.py`` for just the summary lines.
"""

import sys
import time
from itertools import combinations, combinations_with_replacement, permutations, product
from math import comb

import pytest

from hcw.backwards import augment_universal, factor_formulas, pair_checker, product_coloring
from hcw.builders import (
    bfs_layers, contract_path_power, expression_to_product, grid_expression, layered_expression,
    product_to_expression, reflexive_path,
)
from hcw.expr import AddEdges, Create, Recolor, deparameterize, evaluate, palette, union_all
from hcw.graph import (
    ColoredGraph, Graph, cycle, greedy_proper_coloring, grid2d, grid3d, path, power, strong_product,
)
from hcw.instances import (
    make_rng, random_balanced_partition, random_colored_subgraph, random_expression,
    random_partial_ktree, random_perturbation, random_tree,
)
from hcw.logic import TypeTable, ef_equivalent, library, rank_type
from hcw.lower_bounds import (
    Perturbation, apply_perturbation, audit_color_lower_bound, induced_matching_bicolored_grid,
)
from hcw.synthesis import SynthesisContext, synthesize
from hcw.treedecomp import decompose_small, forget_order, normalize, wreach_sets


def report(number, title, ok, detail, seconds):
    line = f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}: {detail} ({seconds:.1f}s)"
    print("\n" + line, flush=True)
    return line


def timed(fn):
    t0 = time.perf_counter()
    ok, detail = fn()
    return ok, detail, time.perf_counter() - t0


# -- independent checkers ------------------------------------------------------------


def matching_ok(edges, side, dim, side_a):
    def coords(v):
        out = []
        for _ in range(dim):
            v, x = divmod(v, side)
            out.append(x)
        return tuple(out)

    def adjacent(a, b):
        return sum(abs(x - y) for x, y in zip(a, b)) == 1

    pts = [(coords(u), coords(v)) for u, v in edges]
    ends = [x for e in edges for x in e]
    if len(set(ends)) != len(ends):
        return False
    if any(not adjacent(a, b) or side_a[u] == side_a[v] for (a, b), (u, v) in zip(pts, edges)):
        return False
    return not any(adjacent(x, y) for (a1, b1), (a2, b2) in combinations(pts, 2)
                   for x in (a1, b1) for y in (a2, b2))


def canonical_colored(n, edges, colors):
    best = None
    for perm in permutations(range(n)):
        inv = sorted(range(n), key=lambda v: perm[v])
        key = (tuple(colors[i] for i in inv),
               tuple(sorted(tuple(sorted((perm[u], perm[v]))) for u, v in edges)))
        if best is None or key < best:
            best = key
    return best


# -- criteria ------------------------------------------------------------------------


def criterion_1():
    bad = []
    t0 = time.perf_counter()
    for a, b in product(range(1, 7), repeat=2):
        e = grid_expression(a, b)
        v = evaluate(e, reflexive_path(b))
        if v.graph.edges != grid2d(a, b).edges or palette(e) != 5:
            bad.append((a, b, palette(e)))
    slow = time.perf_counter() - t0 >= 1
    ok = not bad and not slow
    return ok, "all 36 grids exact with palette 5" if ok else \
        f"{len(bad)}/36 sizes off, e.g. (a,b,palette)={bad[:4]}" + (" (too slow)" if slow else "")


def criterion_2():
    rng = make_rng(2)
    hosts = [path(n).reflexive() for n in range(1, 6)] + [cycle(n).reflexive() for n in (3, 4, 5)]
    t0 = time.perf_counter()
    for _ in range(200):
        h = hosts[int(rng.integers(0, len(hosts)))]
        e = random_expression(h, 8, rng)
        value = evaluate(e, h)
        emb = expression_to_product(e, h)
        if not emb.holds_for(value.graph):
            return False, "embedding invariant broken"
        keep = [emb.flat(v) for v in range(value.n)]
        back, order = product_to_expression(h, deparameterize(e), keep, return_order=True)
        where = {x: i for i, x in enumerate(keep)}
        got = {tuple(sorted((where[order[u]], where[order[v]]))) for u, v in evaluate(back, h).graph.edges}
        if got != set(value.graph.edges):
            return False, "round trip not edge-exact"
    took = time.perf_counter() - t0
    return took < 10, f"200 expressions, both directions exact in {took:.1f}s"


def criterion_3():
    lib = library()
    names = sorted(lib)
    rng = make_rng(3)
    mismatches = 0
    t0 = time.perf_counter()
    for _ in range(200):
        qn = int(rng.integers(1, 7))
        q = cycle(qn) if qn >= 3 and rng.random() < 0.5 else path(qn)
        mn = int(rng.integers(1, 5))
        m = random_tree(mn, rng) if rng.random() < 0.5 else path(mn)
        r = int(rng.integers(1, 3))
        cands = [n for n in names if lib[n][1] <= r]
        xi = lib[cands[int(rng.integers(0, len(cands)))]][0]
        if rng.random() < 0.4:
            prod = strong_product(q, m)
            g = ColoredGraph(prod, tuple(int(c) for c in rng.integers(1, 3, size=prod.n)))
        else:
            g = random_colored_subgraph(q, m, rng)
        ctx = SynthesisContext(q, m, decompose_small(m), g, xi, r)
        if synthesize(ctx).value_graph() != ctx.xi_graph:
            mismatches += 1
    took = time.perf_counter() - t0
    return mismatches == 0 and took < 300, f"200 instances, {mismatches} mismatches"


def criterion_4():
    xi, r = library()["adj"]
    m = path(3)
    sizes = (4, 8, 16, 32)
    pals = []
    for n in sizes:
        q = path(n)
        prod = strong_product(q, m)
        g = ColoredGraph(prod, (1,) * prod.n)
        pals.append(synthesize(SynthesisContext(q, m, decompose_small(m), g, xi, r, q_type=2)).palette)
    sat = next(i for i in range(len(pals)) if len(set(pals[i:])) == 1)
    ok = sat < len(pals) - 1
    return ok, f"palettes {dict(zip(sizes, pals))}, constant from |V(Q)|={sizes[sat]}"


def criterion_5():
    reps = {}
    for n in range(1, 6):
        pairs = list(combinations(range(n), 2))
        for mask in range(1 << len(pairs)):
            es = [e for i, e in enumerate(pairs) if mask >> i & 1]
            for cs in product((1, 2), repeat=n):
                reps.setdefault((n, canonical_colored(n, es, cs)), (n, es, cs))
    games = 0
    for n, es, cs in reps.values():
        s = ColoredGraph(Graph.from_edges(n, es), cs)
        tuples = [(v,) for v in range(n)] + list(product(range(n), repeat=2))
        for q in (0, 1, 2):
            table = TypeTable()
            for length in (1, 2):
                classes = {}
                for t in tuples:
                    if len(t) == length:
                        classes.setdefault(rank_type(s, t, q, table=table), []).append(t)
                # chain inside each class plus pairwise representatives decides every pair
                for members in classes.values():
                    for a, b in zip(members, members[1:]):
                        games += 1
                        if not ef_equivalent(s, a, s, b, q):
                            return False, f"types equal but EF differs: {es} {cs} {a} {b} q={q}"
                for a, b in combinations([m[0] for m in classes.values()], 2):
                    games += 1
                    if ef_equivalent(s, a, s, b, q):
                        return False, f"types differ but EF agrees: {es} {cs} {a} {b} q={q}"
    return True, f"{len(reps)} structures up to isomorphism, {games} games"


def criterion_6():
    rng = make_rng(6)
    worst = 0.0
    for _ in range(100):
        k = int(rng.integers(1, 3))
        r = int(rng.integers(1, 5))
        g, td = random_partial_ktree(int(rng.integers(2, 13)), k, rng)
        fo = forget_order(normalize(td, g))
        bound = comb(r + k, k)
        top = max(len(s) for s in wreach_sets(g, fo, r))
        if top > bound:
            return False, f"|wreach_{r}|={top} > binom({r}+{k},{k})={bound}"
        worst = max(worst, top / bound)
    return True, f"100 instances, largest |wreach|/bound = {worst:.2f}"


def criterion_7():
    rng = make_rng(7)
    count = 0
    for dim in (2, 3):
        for side in (6, 12, 18):
            bound = side ** 2 / (36 * 61) if dim == 3 else side / 75
            for _ in range(50):
                part = random_balanced_partition(side ** dim, rng)
                m = induced_matching_bicolored_grid(side, dim, part)
                if not matching_ok(m, side, dim, part) or len(m) < bound:
                    return False, f"side {side} dim {dim}: size {len(m)} vs bound {bound:.3f}"
                count += 1
    return True, f"{count} partitions, all valid and above the bounds"


def criterion_8():
    rng = make_rng(8)
    for _ in range(100):
        n = int(rng.integers(1, 10))
        pairs = list(combinations(range(n), 2))
        g = Graph.from_edges(n, [e for e in pairs if rng.random() < 0.4])
        p = random_perturbation(n, int(rng.integers(1, min(n, 3) + 1)), rng)
        h = apply_perturbation(g, p)
        if h.n != g.n or apply_perturbation(h, p) != g:
            return False, "involution failed"
    g = grid2d(3, 3)
    comp = apply_perturbation(g, Perturbation.make([0] * g.n, [(0, 0)])) == g.complement()
    return comp, "100 involutions; k=1 full flip is the complement" if comp else "complement check failed"


def criterion_9():
    rng = make_rng(9)
    details = []
    for n in (3, 4):
        for k in (1, 2):
            p = random_perturbation(n ** 3, k, rng, min_part=12)
            h = apply_perturbation(grid3d(n, n, n), p)
            layers = bfs_layers(h)
            e, order = layered_expression(h, layers, return_order=True)
            t0 = time.perf_counter()
            rep = audit_color_lower_bound(e, reflexive_path(max(layers) + 1), n, p, vertex_map=order)
            took = time.perf_counter() - t0
            if not rep.ok or rep.figures["L_class"] > rep.figures["palette"] or took > 120:
                return False, f"n={n} k={k}: {rep.failures}"
            details.append(f"n={n},k={k}: L={rep.figures['L_class']}<=palette {rep.figures['palette']}")
    return True, "; ".join(details)


def criterion_10():
    def trees(n):
        return [Graph.from_edges(n, [(p, i + 1) for i, p in enumerate(ps)])
                for ps in product(*(range(i) for i in range(1, n)))]

    checked = 0
    for q in [path(n) for n in range(1, 6)] + [cycle(n) for n in (3, 4, 5)]:
        for mn in range(1, 5):
            for m in trees(mn):
                m_uni, uni = augment_universal(m)
                c1 = greedy_proper_coloring(q)
                base = greedy_proper_coloring(m)
                c2 = list(base) + [max(base) + 1]
                s = ColoredGraph(strong_product(q, m_uni), product_coloring(c1, c2))
                ff = factor_formulas(max(c1) + 1, c2[uni] + 1)
                fs = [pair_checker(s, f) for f in (ff.sigma1, ff.sigma2, ff.sigma3, ff.sigma4)]
                w = m_uni.n
                for x in range(s.n):
                    for y in range(s.n):
                        (qx, mx), (qy, my) = divmod(x, w), divmod(y, w)
                        ok = fs[0](x, y) == (qx == qy) and fs[1](x, y) == q.has_edge(qx, qy)
                        if qx == qy or q.has_edge(qx, qy):
                            want4 = mx != uni and my != uni and m.has_edge(mx, my)
                            ok = ok and fs[2](x, y) == (mx == my) and fs[3](x, y) == want4
                        if not ok:
                            return False, f"Q={q.n} M={sorted(m.edges)} pair {(x, y)}"
                        checked += 1
    return True, f"{checked} pairs exact"


def criterion_11():
    cases = 0
    for r in (1, 2, 3):
        n = 3 * r + 1
        h = power(path(n), r, reflexive=True)
        for v in range(1, 7):
            for params in combinations_with_replacement(range(n), v):
                distinct = union_all([Create(p, i) for i, p in enumerate(params)])
                for i, j in combinations(range(v), 2):
                    distinct = AddEdges(i, j, distinct)
                two = union_all([Create(p, i % 2) for i, p in enumerate(params)])
                two = AddEdges(0, 0, Recolor(1, 0, AddEdges(0, 1, two)))
                for e in (distinct, two):
                    c, hp = contract_path_power(e, r, path_len=n)
                    if evaluate(c, hp).graph != evaluate(e, h).graph:
                        return False, f"r={r} params={params}"
                    if palette(c) > 3 * r * palette(e):
                        return False, f"palette grew past 3r*l at r={r}"
                    cases += 1
    return True, f"{cases} expressions exact, palette within 3r*l"


CRITERIA = [
    (1, "grid expressions, palette exactly 5 for a,b in 1..6", criterion_1),
    (2, "expression <-> product embedding", criterion_2),
    (3, "synthesis end to end", criterion_3),
    (4, "palette stability in |V(Q)|", criterion_4),
    (5, "rank types vs EF games, exhaustive", criterion_5),
    (6, "weak coloring bound", criterion_6),
    (7, "induced matching bounds", criterion_7),
    (8, "perturbation algebra", criterion_8),
    (9, "lower-bound audit soundness", criterion_9),
    (10, "factor formulas sigma1-sigma4", criterion_10),
    (11, "path-power contraction", criterion_11),
]


@pytest.mark.parametrize("number,title,fn", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(number, title, fn, capsys):
    ok, detail, seconds = timed(fn)
    with capsys.disabled():
        report(number, title, ok, detail, seconds)
    assert ok, detail


if __name__ == "__main__":
    results = []
    for number, title, fn in CRITERIA:
        ok, detail, seconds = timed(fn)
        report(number, title, ok, detail, seconds)
        results.append(ok)
    sys.exit(0 if all(results) else 1)
