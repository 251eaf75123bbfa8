from itertools import combinations, product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hcw.backwards import (
    PreconditionError, are_twins, augment_universal, decode_leaves, encode_colored_graph_as_leaves,
    extract_twin_free_half_graph, factor_formulas, is_bi_induced_half_graph, pair_checker,
    product_coloring, twin_pairs,
)
from hcw.graph import (
    ColoredGraph, Graph, complete, cycle, greedy_proper_coloring, half_graph, path, strong_product,
)
from hcw.treedecomp import decompose_small
from strategies import colored_graphs, trees


def neighborhoods_equal(g, u, v):
    """Twin test written out pairwise over every third vertex."""
    return u != v and all(g.has_edge(u, w) == g.has_edge(v, w) for w in range(g.n) if w not in (u, v))


def half_graph_with_sides(order, extra=()):
    g = half_graph(order)
    edges = set(g.edges) | set(extra)
    return Graph.from_edges(g.n, edges), list(range(order)), list(range(order, 2 * order))


def all_trees(n):
    """Labeled trees via parent arrays; enough for n <= 4."""
    out = []
    for parents in product(*(range(i) for i in range(1, n))):
        out.append(Graph.from_edges(n, [(p, i + 1) for i, p in enumerate(parents)]))
    return out


def factor_setup(q, m):
    m_uni, uni = augment_universal(m)
    c1 = greedy_proper_coloring(q)
    base = greedy_proper_coloring(m) if m.n else []
    c2 = list(base) + [max(base, default=-1) + 1]
    k1, k2 = max(c1) + 1, c2[uni] + 1
    prod = strong_product(q, m_uni)
    s = ColoredGraph(prod, product_coloring(c1, c2))
    return s, m_uni, uni, k1, k2


class TestTwinFree:
    def test_order_two_from_18(self):
        g, a, b = half_graph_with_sides(18)
        us, vs = extract_twin_free_half_graph(g, a, b, 1)
        assert len(us) == len(vs) == 2
        assert is_bi_induced_half_graph(g, us, vs)
        assert not any(neighborhoods_equal(g, x, y) for x, y in combinations(us + vs, 2))

    def test_block_scheme(self):
        g, a, b = half_graph_with_sides(18)
        us, vs = extract_twin_free_half_graph(g, a, b, 1)
        # blocks of size 3: A picks from blocks 1, 3; B picks from blocks 2, 4
        assert us[0] in a[0:3] and us[1] in a[6:9]
        assert vs[0] in b[3:6] and vs[1] in b[9:12]

    def test_side_cliques_have_twins(self):
        # with both sides cliques, a_1 and b_n are twins
        n = 18
        extra = [(i, j) for i, j in combinations(range(n), 2)] + \
                [(i, j) for i, j in combinations(range(n, 2 * n), 2)]
        g, a, b = half_graph_with_sides(n, extra)
        assert are_twins(g, a[0], b[-1])
        us, vs = extract_twin_free_half_graph(g, a, b, 1)
        assert not twin_pairs(g, us + vs)

    def test_precondition(self):
        g, a, b = half_graph_with_sides(10)
        with pytest.raises(PreconditionError):
            extract_twin_free_half_graph(g, a, b, 1)
        g, a, b = half_graph_with_sides(18)
        with pytest.raises(PreconditionError):
            extract_twin_free_half_graph(g, a, list(reversed(b)), 1)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2), st.data())
    def test_random_inside_edges(self, kprime, data):
        n = 2 * (kprime + 2) ** 2
        inside = list(combinations(range(n), 2)) + list(combinations(range(n, 2 * n), 2))
        extra = data.draw(st.lists(st.sampled_from(inside), unique=True, max_size=60))
        g, a, b = half_graph_with_sides(n, extra)
        us, vs = extract_twin_free_half_graph(g, a, b, kprime)
        assert len(us) == kprime + 1 and is_bi_induced_half_graph(g, us, vs)
        assert not any(neighborhoods_equal(g, x, y) for x, y in combinations(us + vs, 2))


class TestUniversal:
    def test_k1(self):
        g, u = augment_universal(Graph.from_edges(1))
        assert g == complete(2) and u == 1

    def test_p3_fan(self):
        g, u = augment_universal(path(3))
        assert len(g.edges) == 2 + 3 and g.adj[u] == {0, 1, 2}

    @given(trees(min_n=1, max_n=7))
    def test_width_grows_by_at_most_one(self, t):
        g, _ = augment_universal(t)
        assert decompose_small(g).width <= decompose_small(t).width + 1


class TestFactorFormulas:
    def test_zero_counts(self):
        with pytest.raises(PreconditionError):
            factor_formulas(0, 2)

    def test_p3_p2_same_row(self):
        s, m_uni, _, k1, k2 = factor_setup(path(3), path(2))
        f = pair_checker(s, factor_formulas(k1, k2).sigma1)
        for x in range(s.n):
            for y in range(s.n):
                assert f(x, y) == (x // m_uni.n == y // m_uni.n)

    def test_sigma4_excludes_universal(self):
        s, m_uni, uni, k1, k2 = factor_setup(path(3), path(3))
        f = pair_checker(s, factor_formulas(k1, k2).sigma4)
        for x in range(s.n):
            for y in range(s.n):
                if x % m_uni.n == uni or y % m_uni.n == uni:
                    assert not f(x, y)

    @pytest.mark.parametrize("q", [path(n) for n in range(1, 6)] + [cycle(n) for n in (3, 4, 5)])
    def test_exhaustive(self, q):
        for mn in range(1, 5):
            for m in all_trees(mn):
                s, m_uni, uni, k1, k2 = factor_setup(q, m)
                ff = factor_formulas(k1, k2)
                fs = [pair_checker(s, ff.sigma1), pair_checker(s, ff.sigma2),
                      pair_checker(s, ff.sigma3), pair_checker(s, ff.sigma4)]
                w = m_uni.n
                for x in range(s.n):
                    for y in range(s.n):
                        (qx, mx), (qy, my) = divmod(x, w), divmod(y, w)
                        assert fs[0](x, y) == (qx == qy)
                        assert fs[1](x, y) == q.has_edge(qx, qy)
                        if qx == qy or q.has_edge(qx, qy):
                            assert fs[2](x, y) == (mx == my)
                            want = m.has_edge(mx, my) if mx != uni and my != uni else False
                            assert fs[3](x, y) == want


class TestLeafEncoding:
    def test_single_vertex(self):
        h, _ = encode_colored_graph_as_leaves(ColoredGraph(Graph.from_edges(1), (2,)))
        assert h.n == 4 and h.adj[0] == {1, 2, 3}

    def test_p3_round_trip(self):
        g = ColoredGraph.uniform(path(3), 1)
        h, _ = encode_colored_graph_as_leaves(g)
        assert h.n == 3 + 6
        back = decode_leaves(h, 1)
        assert back.graph == g.graph and back.colors == g.colors

    def test_empty(self):
        h, _ = encode_colored_graph_as_leaves(ColoredGraph(Graph.from_edges(0), ()))
        assert h.n == 0

    def test_bad_color(self):
        with pytest.raises(ValueError):
            encode_colored_graph_as_leaves(ColoredGraph(path(2), (0, 1)))

    @settings(max_examples=100, deadline=None)
    @given(colored_graphs(min_n=1, max_n=8, colors=4))
    def test_round_trip(self, g):
        h, forms = encode_colored_graph_as_leaves(g)
        back = decode_leaves(h, 4)
        assert back.graph == g.graph and back.colors == g.colors
        assert {"original", "edge"} <= set(forms)
