"""Graph expressions over parameter graphs: construction, evaluation, synthesis from product structure."""

from .expr import AddEdges, Create, Expr, Recolor, Union, evaluate, palette
from .graph import ColoredGraph, Graph, power, strong_product

__all__ = [
    "AddEdges", "ColoredGraph", "Create", "Expr", "Graph", "Recolor", "Union", "evaluate",
    "palette", "power", "strong_product",
]
