import sys
from pathlib import Path

import networkx as nx
import pytest

from anondyn.netsim import load_trace

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def t3():
    """n=3, inputs a a b, static path 0-1-2."""
    return load_trace(FIXTURES / "t3.trace")


def as_digraph(view):
    """Plain networkx encoding of a view, independent of node digests."""
    g = nx.DiGraph()
    for d, node in view.nodes.items():
        g.add_node(d, label=node.label, root=node.parent is None, bottom=d == view.bottom)
    for d, node in view.nodes.items():
        if node.parent is not None:
            g.add_edge(node.parent, d, kind="black", m=0)
        for src, m in node.reds:
            if g.has_edge(src, d):
                g.edges[src, d]["m"] += m  # a red edge parallel to the black one
                g.edges[src, d]["kind"] = "both"
            else:
                g.add_edge(src, d, kind="red", m=m)
    return g


def brute_isomorphic(a, b):
    ga, gb = as_digraph(a), as_digraph(b)
    return nx.is_isomorphic(
        ga, gb,
        node_match=lambda x, y: x == y,
        edge_match=lambda x, y: x == y,
    )


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance.summary_lines():
        terminalreporter.write_line(line)
