from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hcw.expr import (
    AddEdges, Create, ExpressionError, Recolor, Union, evaluate, is_homomorphism, palette,
    postorder, to_json,
)
from hcw.graph import ColoredGraph, Graph, cycle, path, power, strong_product
from hcw.logic import FALSE, E, interpret, library, parse, rank_type
from hcw.synthesis import (
    SynthesisContext, SynthesisError, TypeRankTooLow, build_column_expression, initial_color,
    renumber_colors, restrict_color, synthesize,
)
from hcw.treedecomp import decompose_small
from strategies import param_and_expression, trees

LIB = library()


def full(q, m, colors=None):
    p = strong_product(q, m)
    return ColoredGraph(p, tuple(colors) if colors else (1,) * p.n)


def ctx_for(q, m, g, xi, r, **kw):
    return SynthesisContext(q, m, decompose_small(m), g, xi, r, **kw)


@st.composite
def instances(draw):
    qn = draw(st.integers(1, 6))
    q = cycle(qn) if qn >= 3 and draw(st.booleans()) else path(qn)
    m = draw(st.one_of(trees(min_n=1, max_n=4), st.integers(1, 4).map(path)))
    r = draw(st.integers(1, 2))
    name = draw(st.sampled_from(sorted(n for n, (_, rad) in LIB.items() if rad <= r)))
    prod = strong_product(q, m)
    edges = sorted(prod.edges)
    if draw(st.booleans()):
        kept = edges
    else:
        kept = [e for e in edges if draw(st.booleans())]
    colors = draw(st.lists(st.integers(1, 2), min_size=prod.n, max_size=prod.n))
    g = ColoredGraph(Graph.from_edges(prod.n, kept), tuple(colors))
    return q, m, g, LIB[name][0], r


class TestContext:
    def test_size_mismatch(self):
        with pytest.raises(SynthesisError):
            ctx_for(path(2), path(2), full(path(2), path(1)), E("x1", "x2"), 1)

    def test_stray_edge(self):
        g = ColoredGraph(Graph.from_edges(4, [(0, 3), (0, 2)]), (1,) * 4)
        g2 = ColoredGraph(Graph.from_edges(6, [(0, 5)]), (1,) * 6)
        ctx_for(path(2), path(2), g, E("x1", "x2"), 1)  # (0,3) is a diagonal of P2 x P2
        with pytest.raises(SynthesisError):
            ctx_for(path(3), path(2), g2, E("x1", "x2"), 1)

    def test_locality_counterexample(self):
        with pytest.raises(SynthesisError, match="local"):
            ctx_for(path(4), path(1), full(path(4), path(1)), parse("(not (E x1 x2))"), 1)

    def test_r_sep_default_and_cap(self):
        ctx = ctx_for(path(3), path(2), full(path(3), path(2)), LIB["dist2"][0], 2)
        assert ctx.r_sep == 4
        ctx = ctx_for(path(3), path(2), full(path(3), path(2)), LIB["edge_c2_cover"][0], 2, r_sep_cap=5)
        assert ctx.r_sep == 5

    def test_s_q_separates(self):
        ctx = ctx_for(path(12), path(1), full(path(12), path(1)), LIB["dist2"][0], 2)
        far = power(path(12), 3 * ctx.r_sep)
        assert all(ctx.s_Q[a] != ctx.s_Q[b] for a, b in far.edges)


class TestRunningColors:
    def setup_method(self):
        q, m = path(3), path(2)
        self.ctx = ctx_for(q, m, full(q, m, (1, 2, 2, 1, 1, 2)), LIB["dist2_c1"][0], 2)

    def test_empty_label_is_rank_type(self):
        ctx = self.ctx
        for v in range(ctx.G.n):
            table = ctx.color_table(initial_color(ctx, v))
            assert table[frozenset()] == rank_type(ctx.Gs, [v], ctx.q_type, table=ctx.types)

    def test_table_matches_definition(self):
        ctx = self.ctx
        for v in range(ctx.G.n):
            assert ctx.color_table(initial_color(ctx, v)) == ctx.direct_initial_table(v)

    def test_absent_color_not_in_domain(self):
        ctx = self.ctx
        for v in range(ctx.G.n):
            p, _ = ctx.coords(v)
            near = {ctx.s_Q[x] for x in ctx.balls[p]}
            for w in ctx.color_table(initial_color(ctx, v)):
                assert {s for s, _ in w} <= near

    def test_root_keeps_only_empty(self):
        ctx = self.ctx
        root = ctx.td.root
        for v in range(ctx.G.n):
            c = restrict_color(initial_color(ctx, v), root, ctx)
            assert c.labels == frozenset() and list(ctx.color_table(c)) == [frozenset()]

    def test_first_forget_drops_its_column(self):
        ctx = self.ctx
        singles = [t for t in ctx.td.nodes if len(ctx.Y[t]) == 1]
        assert singles
        for t in singles:
            (h,) = ctx.Y[t]
            for v in range(ctx.G.n):
                c0 = initial_color(ctx, v)
                c = restrict_color(c0, t, ctx)
                assert c.labels == {(s, x) for s, x in c0.labels if x != h}

    def test_monotone_along_root_paths(self):
        ctx = self.ctx
        for t in ctx.td.nodes:
            p = ctx.td.parent[t]
            if p is None:
                continue
            for v in range(ctx.G.n):
                assert ctx.color_at(v, p).labels <= ctx.color_at(v, t).labels

    @settings(max_examples=25, deadline=None)
    @given(instances())
    def test_table_matches_definition_random(self, inst):
        q, m, g, xi, r = inst
        if q.n * m.n > 12:
            return
        ctx = ctx_for(q, m, g, xi, r, r_sep=r)
        for v in range(g.n):
            assert ctx.color_table(initial_color(ctx, v)) == ctx.direct_initial_table(v)


class TestColumns:
    def test_k1(self):
        ctx = ctx_for(path(1), path(2), full(path(1), path(2)), E("x1", "x2"), 1)
        part = build_column_expression(ctx, 0)
        v = evaluate(part.expr, ctx.param_graph)
        assert v.n == 1 and not v.graph.edges

    def test_p2_column(self):
        ctx = ctx_for(path(2), path(1), full(path(2), path(1)), E("x1", "x2"), 1)
        part = build_column_expression(ctx, 0)
        assert evaluate(part.expr, ctx.param_graph).graph == path(2)

    @settings(max_examples=40, deadline=None)
    @given(instances())
    def test_column_edges_local(self, inst):
        q, m, g, xi, r = inst
        ctx = ctx_for(q, m, g, xi, r)
        out = power(q, r, reflexive=True)
        for h in range(m.n):
            part = build_column_expression(ctx, h)
            val = evaluate(part.expr, ctx.param_graph)
            assert all(out.adjacent_or_loop(val.params[a], val.params[b]) for a, b in val.graph.edges)
            col = [ctx.vertex(p, h) for p in range(q.n)]
            want = {e for e in ctx.xi_edges if e[0] in col and e[1] in col}
            got = {tuple(sorted((part.order[a], part.order[b]))) for a, b in val.graph.edges}
            assert got == want


class TestSynthesize:
    def test_p2_edge(self):
        ctx = ctx_for(path(2), path(1), full(path(2), path(1)), E("x1", "x2"), 1)
        res = synthesize(ctx)
        assert res.value_graph() == path(2)

    def test_false_is_edgeless(self):
        q, m = path(3), path(2)
        res = synthesize(ctx_for(q, m, full(q, m), FALSE, 1))
        g = res.value_graph()
        assert g.n == 6 and not g.edges

    def test_p4_p2_dist2_c1(self):
        q, m = path(4), path(2)
        prod = strong_product(q, m)
        kept = [e for i, e in enumerate(sorted(prod.edges)) if i % 3 != 1]
        g = ColoredGraph(Graph.from_edges(prod.n, kept), tuple(1 + (v % 3 == 0) for v in range(prod.n)))
        ctx = ctx_for(q, m, g, LIB["dist2_c1"][0], 2)
        assert synthesize(ctx).value_graph() == ctx.xi_graph

    @settings(max_examples=200, deadline=None)
    @given(instances())
    def test_end_to_end(self, inst):
        q, m, g, xi, r = inst
        ctx = ctx_for(q, m, g, xi, r)
        res = synthesize(ctx, audit_nodes=True)
        assert res.value_graph() == ctx.xi_graph
        assert palette(res.expression) == res.palette
        for rep in res.node_reports:
            assert rep.missing == 0 and rep.extra == 0

    @settings(max_examples=40, deadline=None)
    @given(instances())
    def test_separation_radius_evaluation(self, inst):
        # same expression over the wider parameter graph gives the same value
        q, m, g, xi, r = inst
        ctx = ctx_for(q, m, g, xi, r)
        res = synthesize(ctx)
        assert evaluate(res.expression, ctx.param_graph).graph == evaluate(res.expression, ctx.output_graph).graph

    def test_homomorphism_every_subexpression(self):
        q, m = path(4), path(2)
        ctx = ctx_for(q, m, full(q, m), LIB["adj"][0], 1)
        res = synthesize(ctx)
        for node in postorder(res.expression):
            assert is_homomorphism(evaluate(node, ctx.output_graph), ctx.output_graph)

    def test_deterministic(self):
        q, m = path(5), path(3)
        a = synthesize(ctx_for(q, m, full(q, m), LIB["dist2"][0], 2))
        b = synthesize(ctx_for(q, m, full(q, m), LIB["dist2"][0], 2))
        assert to_json(a.expression) == to_json(b.expression) and a.vertex_order == b.vertex_order

    def test_palette_saturates(self):
        pal = []
        for n in (16, 24, 32):
            q, m = path(n), path(2)
            pal.append(synthesize(ctx_for(q, m, full(q, m), LIB["adj"][0], 1)).palette)
        assert pal[0] == pal[1] == pal[2]


class TestTypeRankCheck:
    def instance(self):
        g = ColoredGraph(Graph.from_edges(6, [(0, 1), (0, 3), (1, 2), (1, 3), (1, 5), (2, 4), (2, 5), (4, 5)]),
                         (2, 1, 1, 1, 2, 2))
        return path(2), path(3), g

    def test_rank_zero_too_low(self):
        q, m, g = self.instance()
        with pytest.raises(TypeRankTooLow) as info:
            synthesize(ctx_for(q, m, g, LIB["dist2"][0], 2, q_type=0))
        assert info.value.extra not in interpret(g, LIB["dist2"][0]).edges

    def test_rank_two_suffices(self):
        q, m, g = self.instance()
        ctx = ctx_for(q, m, g, LIB["dist2"][0], 2)
        assert synthesize(ctx).value_graph() == ctx.xi_graph

    def test_lenient_mode_reports_extra(self):
        q, m, g = self.instance()
        ctx = ctx_for(q, m, g, LIB["dist2"][0], 2, q_type=0)
        res = synthesize(ctx, strict=False, audit_nodes=True)
        assert res.value_graph().edges > ctx.xi_graph.edges
        assert any(rep.extra for rep in res.node_reports)


class TestRenumber:
    def test_bijective_when_small(self):
        e = AddEdges("a", "b", Union(Create(0, "a"), Create(0, "b")))
        out, f = renumber_colors(e)
        assert f == 2 and evaluate(out, path(1).reflexive()).graph.edges == {(0, 1)}
        assert sorted({n.color for n in postorder(out) if isinstance(n, Create)}) == [0, 1]

    def test_recolor_onto_present_color(self):
        # the child already holds the target, so the source gets a fresh number
        inner = Union(Create(0, "x"), Create(0, "y"))
        e = AddEdges("y", "z", Union(Recolor("x", "y", inner), Create(0, "z")))
        out, f = renumber_colors(e)
        h = path(1).reflexive()
        assert f == 2
        rec = [n for n in postorder(out) if isinstance(n, Recolor)]
        assert len(rec) == 1 and rec[0].src != rec[0].dst
        assert evaluate(out, h).graph == evaluate(e, h).graph == Graph.from_edges(3, [(0, 2), (1, 2)])

    def test_bound(self):
        e = Union(Create(0, 1), Union(Create(0, 2), Create(0, 3)))
        with pytest.raises(ExpressionError):
            renumber_colors(e, bound=2)

    @settings(max_examples=100, deadline=None)
    @given(param_and_expression())
    def test_value_preserved(self, he):
        h, e = he
        out, f = renumber_colors(e)
        assert evaluate(out, h).graph == evaluate(e, h).graph
        assert f == palette(e) and palette(out) == f
        used = {n.color for n in postorder(out) if isinstance(n, Create)}
        assert used <= set(range(f))
