"""Command-line front end: ``hcw <subcommand> ...``.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import builders, expr as ex, logic, lower_bounds as lb, synthesis, treedecomp
from .backwards import decode_leaves, encode_colored_graph_as_leaves, factor_formulas
from .graph import (
    ColoredGraph, Graph, GraphError, generate, graph_from_json, graph_to_dict, graph_to_dot,
    graph_to_json, power, strong_product,
)
from .instances import make_rng, random_colored_subgraph, random_partial_ktree, random_perturbation, random_tree


class UsageError(Exception):
    pass


def parse_graph(text: str | bytes) -> Graph | ColoredGraph:
    return graph_from_json(text)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _graph(path: str) -> Graph | ColoredGraph:
    return parse_graph(_read(path))


def _plain(g: Graph | ColoredGraph) -> Graph:
    return g.graph if isinstance(g, ColoredGraph) else g


def _emit(args, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_graph(args, g) -> None:
    _emit(args, graph_to_dot(g) if args.format == "dot" else graph_to_json(g))


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True)


def _bundle(expression: ex.Expr, param_graph: Graph, order=None, report=None) -> str:
    """Expression plus what is needed to evaluate it; the expression is spliced in verbatim."""
    head = {"param_graph": graph_to_dict(param_graph)}
    if order is not None:
        head["vertex_order"] = list(order)
    if report is not None:
        head["report"] = report
    return _dump(head)[:-1] + ', "expression": ' + ex.to_json(expression) + "}"


def _load_expression(path: str, param_path: str | None):
    """Returns ``(expression, param graph or None, vertex order or None)``."""
    text = _read(path)
    data = ex._deep(json.loads, text)
    if isinstance(data, dict) and "expression" in data:
        pg = graph_from_json(json.dumps(data["param_graph"])) if "param_graph" in data else None
        e = ex.from_dict(data["expression"])
        order = data.get("vertex_order")
    else:
        pg, e, order = None, ex.from_dict(data), None
    if param_path:
        pg = _plain(_graph(param_path))
    return e, pg, order


# -- subcommands ----------------------------------------------------------------------


RANDOM_KINDS = ("random_tree", "random_ktree", "random_colored", "random_perturbation")


def cmd_generate(args) -> int:
    kind = args.kind.replace("-", "_")
    nums = [int(x) for x in args.params]
    if kind in RANDOM_KINDS:
        rng = make_rng(args.seed)
        if kind == "random_tree":
            _emit_graph(args, random_tree(*nums, rng))
        elif kind == "random_ktree":
            g, td = random_partial_ktree(nums[0], nums[1], rng)
            _emit(args, _dump({"graph": graph_to_dict(g), "td": treedecomp.td_to_dict(td)}))
        elif kind == "random_colored":
            if not (args.q and args.m):
                raise UsageError("random_colored needs --q and --m")
            _emit_graph(args, random_colored_subgraph(_plain(_graph(args.q)), _plain(_graph(args.m)), rng))
        else:
            _emit(args, _dump(random_perturbation(nums[0], nums[1], rng).to_dict()))
        return 0
    if kind == "disjoint_copies":
        inner = (args.params[0], *[int(x) for x in args.params[1:-1]])
        _emit_graph(args, generate("disjoint_copies", inner, int(args.params[-1])))
        return 0
    try:
        _emit_graph(args, generate(kind, *nums))
    except TypeError as exc:
        raise UsageError(f"bad parameters for {args.kind!r}: {exc}") from exc
    return 0


def cmd_product(args) -> int:
    _emit_graph(args, strong_product(_plain(_graph(args.left)), _plain(_graph(args.right))))
    return 0


def cmd_power(args) -> int:
    _emit_graph(args, power(_plain(_graph(args.g)), args.r, reflexive=args.reflexive))
    return 0


def cmd_build(args) -> int:
    if args.what == "grid":
        if len(args.params) != 2:
            raise UsageError("build grid A B")
        a, b = (int(x) for x in args.params)
        _emit(args, _bundle(builders.grid_expression(a, b), builders.reflexive_path(b)))
    elif args.what == "layered":
        g = _plain(_graph(args.g))
        layers = builders.bfs_layers(g)
        e, order = builders.layered_expression(g, layers, return_order=True)
        _emit(args, _bundle(e, builders.reflexive_path(max(layers) + 1), order))
    elif args.what == "product":
        ho = _plain(_graph(args.ho))
        m_expr, _, _ = _load_expression(args.expr, None)
        e, order = builders.product_to_expression(ho, m_expr, return_order=True)
        _emit(args, _bundle(e, ho, order))
    elif args.what == "contract":
        e, pg, _ = _load_expression(args.expr, args.param_graph)
        out, path = builders.contract_path_power(e, args.r, path_len=pg.n if pg else None)
        _emit(args, _bundle(out, path))
    else:
        raise UsageError(f"unknown build target {args.what!r}")
    return 0


def cmd_convert(args) -> int:
    if args.expr:
        e, pg, _ = _load_expression(args.expr, args.param_graph)
        if pg is None:
            raise UsageError("convert needs a parameter graph")
        emb = builders.expression_to_product(e, pg)
        _emit(args, _dump({"left": graph_to_dict(emb.left), "right": graph_to_dict(emb.right),
                           "injection": [list(p) for p in emb.injection]}))
    elif args.g and args.decompose:
        _emit(args, treedecomp.td_to_json(treedecomp.decompose_small(_plain(_graph(args.g)))))
    elif args.g:
        _emit_graph(args, _graph(args.g))
    else:
        raise UsageError("convert needs --expr or --g")
    return 0


def cmd_interpret(args) -> int:
    g = _graph(args.g)
    xi = logic.parse(_read(args.xi))
    if args.check_locality is not None:
        verdict = logic.check_strong_locality(g, xi, args.check_locality)
        if not verdict:
            sys.stderr.write(f"not strongly local: {verdict.reason} at {verdict.witness}\n")
            return 1
    _emit_graph(args, logic.interpret(g, xi))
    return 0


def cmd_synthesize(args) -> int:
    q, m = _plain(_graph(args.q)), _plain(_graph(args.m))
    td = treedecomp.td_from_json(_read(args.td))
    g = _graph(args.g)
    if not isinstance(g, ColoredGraph):
        g = ColoredGraph.uniform(g, 1)
    xi = logic.parse(_read(args.xi))
    ctx = synthesis.SynthesisContext(q, m, td, g, xi, args.r, q_type=args.q_type,
                                     r_sep_cap=args.r_sep_cap)
    try:
        res = synthesis.synthesize(ctx, audit_nodes=True)
    except synthesis.TypeRankTooLow as exc:
        sys.stderr.write(f"hcw synthesize: {exc}\n")
        return 1
    verified = res.value_graph().edges == ctx.xi_edges
    report = {
        "palette": res.palette,
        "r_sep": res.r_sep,
        "verified": verified,
        "nodes": [{"node": n.node, "colors": n.colors, "vertices": n.vertices,
                   "missing": n.missing, "extra": n.extra} for n in res.node_reports],
    }
    _emit(args, _bundle(res.expression, res.param_graph, res.vertex_order, report))
    return 0 if verified else 1


def cmd_verify(args) -> int:
    e, pg, order = _load_expression(args.expr, args.param_graph)
    if pg is None:
        raise UsageError("verify needs a parameter graph")
    value = ex.evaluate(e, pg)
    order = list(range(value.n)) if order is None else order
    got = Graph.from_edges(value.n, [(order[u], order[v]) for u, v in value.graph.edges])
    want = _plain(_graph(args.against))
    ok = got.n == want.n and got.edges == want.edges
    _emit(args, _dump({"match": ok, "vertices": got.n, "edges": len(got.edges),
                       "expected_edges": len(want.edges)}))
    return 0 if ok else 1


def cmd_check_stable(args) -> int:
    e, _, _ = _load_expression(args.expr, None)
    v = ex.is_k_stable(e, args.k, cap=args.cap)
    _emit(args, _dump({"status": v.status, "witness": v.witness}))
    return {"stable": 0, "witness": 1}.get(v.status, 2)


def cmd_lower_bound(args) -> int:
    p = lb.Perturbation.from_dict(json.loads(_read(args.perturbation)))
    if args.action == "apply":
        _emit_graph(args, lb.apply_perturbation(_plain(_graph(args.g)), p))
        return 0
    if args.action == "build":
        base = _named_grid(args.variant, args.n)
        h = lb.apply_perturbation(base, p)
        layers = builders.bfs_layers(h)
        e, order = builders.layered_expression(h, layers, return_order=True)
        _emit(args, _bundle(e, builders.reflexive_path(max(layers) + 1), order))
        return 0
    e, pg, order = _load_expression(args.expr, args.param_graph)
    if pg is None:
        raise UsageError("audit needs a parameter graph")
    report = lb.audit_color_lower_bound(e, pg, args.n, p, args.variant, vertex_map=order)
    _emit(args, _dump(report.to_dict()))
    return 0 if report.ok else 1


def _named_grid(variant: str, n: int) -> Graph:
    if variant == "grid3d":
        return generate("grid3d", n, n, n)
    return generate("disjoint_copies", ("pinned_grid", n), n)


def cmd_backwards(args) -> int:
    if args.action == "encode-colors":
        g = _graph(args.g)
        if not isinstance(g, ColoredGraph):
            raise UsageError("encode-colors needs a colored graph")
        h, forms = encode_colored_graph_as_leaves(g)
        back = decode_leaves(h, max(g.colors, default=0))
        ok = back.colors == g.colors and back.graph.edges == g.graph.edges
        _emit(args, _dump({"graph": graph_to_dict(h), "round_trip": ok,
                           "formulas": {k: logic.to_text(f) for k, f in sorted(forms.items())}}))
        return 0 if ok else 1
    if args.c1 is None or args.c2 is None:
        raise UsageError("factor-formulas needs --c1 and --c2")
    ff = factor_formulas(args.c1, args.c2)
    texts = {f"sigma{i}": logic.to_text(getattr(ff, f"sigma{i}")) for i in range(1, 5)}
    if args.output:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in texts.items():
            (out / f"{name}.sx").write_text(text + "\n")
    else:
        sys.stdout.write(_dump(texts) + "\n")
    return 0


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    def flags(parser, suppress):
        # the same flags are accepted before and after the subcommand
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        parser.add_argument("--seed", type=int, default=d(0), help="seed for the PCG64 generator")
        parser.add_argument("-o", "--output", default=d(None), help="output file (default stdout)")
        parser.add_argument("--format", choices=("json", "dot"), default=d("json"))
        return parser

    common = flags(argparse.ArgumentParser(add_help=False), suppress=True)
    p = flags(argparse.ArgumentParser(prog="hcw", description="H-clique-width toolkit"), suppress=False)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("generate", parents=[common], help="named or random graphs")
    s.add_argument("kind")
    s.add_argument("params", nargs="*")
    s.add_argument("--q")
    s.add_argument("--m")
    s.set_defaults(fn=cmd_generate)

    s = sub.add_parser("product", parents=[common], help="strong product")
    s.add_argument("--left", required=True)
    s.add_argument("--right", required=True)
    s.set_defaults(fn=cmd_product)

    s = sub.add_parser("power", parents=[common], help="graph power")
    s.add_argument("--g", required=True)
    s.add_argument("--r", type=int, required=True)
    s.add_argument("--reflexive", action="store_true")
    s.set_defaults(fn=cmd_power)

    s = sub.add_parser("build", parents=[common], help="expressions: grid, layered, product, contract")
    s.add_argument("what", choices=("grid", "layered", "product", "contract"))
    s.add_argument("params", nargs="*")
    s.add_argument("--g")
    s.add_argument("--ho")
    s.add_argument("--expr")
    s.add_argument("--param-graph")
    s.add_argument("--r", type=int, default=1)
    s.set_defaults(fn=cmd_build)

    s = sub.add_parser("convert", parents=[common], help="expression to product embedding, graph to DOT, graph to decomposition")
    s.add_argument("--expr")
    s.add_argument("--param-graph")
    s.add_argument("--g")
    s.add_argument("--decompose", action="store_true", help="emit a minimum-width decomposition of --g")
    s.set_defaults(fn=cmd_convert)

    s = sub.add_parser("interpret", parents=[common], help="apply a binary formula")
    s.add_argument("--g", required=True)
    s.add_argument("--xi", required=True)
    s.add_argument("--check-locality", type=int)
    s.set_defaults(fn=cmd_interpret)

    s = sub.add_parser("synthesize", parents=[common], help="expression for xi(G) from a product structure")
    s.add_argument("--q", required=True)
    s.add_argument("--m", required=True)
    s.add_argument("--td", required=True)
    s.add_argument("--g", required=True)
    s.add_argument("--xi", required=True)
    s.add_argument("--r", type=int, required=True)
    s.add_argument("--q-type", type=int, default=2)
    s.add_argument("--r-sep-cap", type=int, default=16)
    s.set_defaults(fn=cmd_synthesize)

    s = sub.add_parser("check-stable", parents=[common], help="half-graph check on the deparameterized value")
    s.add_argument("--expr", required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--cap", type=int, default=16)
    s.set_defaults(fn=cmd_check_stable)

    s = sub.add_parser("lower-bound", parents=[common], help="perturbations and the color audit")
    s.add_argument("action", choices=("apply", "build", "audit"))
    s.add_argument("--perturbation", required=True)
    s.add_argument("--g")
    s.add_argument("--expr")
    s.add_argument("--param-graph")
    s.add_argument("--n", type=int)
    s.add_argument("--variant", choices=("grid3d", "pinned"), default="grid3d")
    s.set_defaults(fn=cmd_lower_bound)

    s = sub.add_parser("backwards", parents=[common], help="leaf encoding and factor formulas")
    s.add_argument("action", choices=("encode-colors", "factor-formulas"))
    s.add_argument("--g")
    s.add_argument("--c1", type=int)
    s.add_argument("--c2", type=int)
    s.set_defaults(fn=cmd_backwards)

    s = sub.add_parser("verify", parents=[common], help="compare an expression's value with a graph")
    s.add_argument("--expr", required=True)
    s.add_argument("--against", required=True)
    s.add_argument("--param-graph")
    s.set_defaults(fn=cmd_verify)
    return p


def run_command(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        return args.fn(args)
    except (UsageError, GraphError, ValueError, KeyError, TypeError) as exc:
        sys.stderr.write(f"hcw {args.command}: {exc}\n")
        return 2


def main() -> None:
    sys.exit(run_command())


__all__ = ["build_parser", "main", "parse_graph", "run_command"]
