from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anondyn import counting as ct
from anondyn import views as vw
from anondyn.netsim import (NetworkTrace, RoundGraph, generate_trace, oracle_history_tree,
                            oracle_view, truncated)
from anondyn.netsim.checks import dominance_total
from anondyn.views import RawView

F = Fraction


@pytest.fixture(scope="module")
def fig1():
    """Seven agents in four input classes of sizes 2, 2, 2, 1.

    Round 1 pairs c1-c2 and c2-c3 by matchings; the lone c4 agent hears
    both c3 agents.
    """
    inputs = ("c1", "c1", "c2", "c2", "c3", "c3", "c4")
    links = ((0, 2), (1, 3), (2, 4), (3, 5), (4, 6), (5, 6))
    trace = NetworkTrace(inputs, (RoundGraph(7, links),), 0)
    return oracle_history_tree(trace, 1)


def test_fig1_exposed_pairs(fig1):
    v = fig1.view
    l0 = {v.nodes[d].label: d for d in v.level(0)}
    assert ct.exposed_pairs(v) == {
        frozenset((l0["c1"], l0["c2"])),
        frozenset((l0["c2"], l0["c3"])),
        frozenset((l0["c3"], l0["c4"])),
    }
    assert v.reds_out[l0["c3"]][ct.unique_children(v)[l0["c4"]]] == 2


def test_fig1_weights(fig1):
    v = fig1.view
    weights = ct.anonymity_weights(v, v.level(0))
    by_label = {v.nodes[d].label: w for d, w in weights.items()}
    assert by_label == {"c1": F(2, 7), "c2": F(2, 7), "c3": F(2, 7), "c4": F(1, 7)}
    truth = fig1.anonymity_by_digest()
    assert all(w == F(truth[d], 7) for d, w in weights.items())
    assert ct.compute_frequencies(v, v.level(0)) == ct.census(["c1"] * 2 + ["c2"] * 2 + ["c3"] * 2 + ["c4"])


def test_t3_level_one(t3):
    tree = oracle_history_tree(t3, 2)
    v = tree.view
    assert ct.counting_levels(v) == [1]
    assert ct.compute_frequencies(v, v.level(1)) == {"a": F(2, 3), "b": F(1, 3)}
    pairs = ct.exposed_pairs(v)
    mid = tree.node_of(1, 1)
    assert pairs == {frozenset((tree.node_of(0, 1), mid)), frozenset((tree.node_of(2, 1), mid))}


def test_t3_agents_count_from_their_views(t3):
    for p in range(3):
        assert ct.level_output(oracle_view(t3, p, 4)) == {"a": F(2, 3), "b": F(1, 3)}
    # too early: agent 0 sees only its own class and counts it as everyone
    assert ct.level_output(oracle_view(t3, 0, 1)) == {"a": F(1)}


def test_t3_cuts_and_dominance(t3):
    tree = oracle_history_tree(t3, 3)
    v = truncated(tree, 3)
    l1, l2 = frozenset(v.level(1)), frozenset(v.level(2))
    assert ct.counting_cuts(v) == (l1, l2)
    assert ct.dominates(l1, l2, v)
    assert not ct.dominates(l2, l1, v)
    assert not ct.dominates(l1, l1, v)
    assert ct.dominant_counting_cut(v) == l1
    assert dominance_total(v, ct.counting_cuts(v)) == []


def test_root_is_a_counting_cut_when_inputs_agree():
    trace = generate_trace("static_path", 2, 2, 0, inputs=["a", "a"])
    v = truncated(oracle_history_tree(trace, 2), 2)
    assert frozenset((vw.ROOT,)) in ct.counting_cuts(v)
    assert ct.dominant_counting_cut(v) == frozenset((vw.ROOT,))
    assert ct.compute_frequencies(v, [vw.ROOT]) == {"a": F(1)}


def test_cuts_isomorphic_across_agents(t3):
    a, b = oracle_view(t3, 0, 4), oracle_view(t3, 2, 4)
    ca, cb = ct.dominant_counting_cut(a), ct.dominant_counting_cut(b)
    assert ca is not None and cb is not None
    assert ct.cuts_isomorphic(ca, a, cb, b)
    other = generate_trace("static_path", 3, 4, 0, inputs=["a", "b", "b"])
    c = oracle_view(other, 0, 4)
    assert not ct.cuts_isomorphic(ca, a, ct.dominant_counting_cut(c), c)


def test_rejections(t3):
    v = truncated(oracle_history_tree(t3, 2), 2)
    with pytest.raises(ct.NotACountingCut):
        ct.anonymity_weights(v, v.level(0))  # the a node has two children
    with pytest.raises(ct.NotACountingCut):
        ct.anonymity_weights(v, v.level(1)[:1])
    with pytest.raises(ct.CountingError):
        ct.dominates(v.level(1)[:1], v.level(1), v)


def test_inconsistent_ratios_are_detected():
    # triangle of exposed pairs whose ratios multiply to 2 instead of 1
    raw = RawView(
        labels=[None, "a", "b", "c", "a", "b", "c", "a"],
        parents=[-1, 0, 0, 0, 1, 2, 3, 4],
        reds=[[], [], [], [], [(2, 2), (3, 1)], [(1, 1), (3, 1)], [(1, 1), (2, 1)],
              [(5, 1), (6, 1)]],
        bottom=7,
    )
    v = vw.view_from_raw(raw)
    assert len(ct.exposed_pairs(v)) == 3
    with pytest.raises(ct.InconsistentSystem):
        ct.anonymity_weights(v, v.level(0))
    assert ct.dominant_cut_output(v) is None


def test_census_and_triples():
    assert ct.census("aab") == {"a": F(2, 3), "b": F(1, 3)}
    assert ct.frequencies_to_triples({"b": F(1, 3), "a": F(2, 3)}) == [("a", 2, 3), ("b", 1, 3)]


# -- independent enumeration ---------------------------------------------------

def _brute_counting_cuts(v):
    kids = {d: [c for c, node in v.nodes.items() if node.parent == d] for d in v.nodes}
    cands = sorted(d for d in v.nodes if len(kids[d]) == 1)
    leaves = [d for d in v.nodes if not kids[d]]

    def path(d):
        out = []
        while d is not None:
            out.append(d)
            d = v.nodes[d].parent
        return out

    paths = [set(path(leaf)) for leaf in leaves]
    child = {d: kids[d][0] for d in cands}
    red = {(s, d) for d, node in v.nodes.items() for s, _ in node.reds}

    def linked(x, y):
        return (x, child[y]) in red and (y, child[x]) in red

    found = set()
    for k in range(1, len(cands) + 1):
        for combo in combinations(cands, k):
            s = set(combo)
            if any(len(p & s) != 1 for p in paths):
                continue
            seen, todo = {combo[0]}, [combo[0]]
            while todo:
                x = todo.pop()
                for y in s - seen:
                    if linked(x, y):
                        seen.add(y)
                        todo.append(y)
            if k == 1 or seen == s:
                found.add(frozenset(s))
    return found


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 3), st.integers(1, 3), st.sampled_from(["random_connected", "path_rotating", "ring"]),
       st.integers(0, 10_000))
def test_counting_cuts_match_enumeration(n, t, kind, seed):
    tree = oracle_history_tree(generate_trace(kind, n, t, seed), t)
    for v in [tree.view] + [oracle_view(tree, p, t) for p in range(n)]:
        if sum(1 for d in v.nodes if len(v.children[d]) == 1) > 14:
            continue
        assert set(ct.counting_cuts(v)) == _brute_counting_cuts(v)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(1, 5), st.sampled_from(["random_connected", "star_rotating",
                                                              "two_clique_bridge", "path_rotating"]),
       st.integers(0, 10_000))
def test_collective_cuts_give_true_anonymities(n, t, kind, seed):
    trace = generate_trace(kind, n, t, seed)
    tree = oracle_history_tree(trace, t)
    truth = tree.anonymity_by_digest()
    v = tree.view
    cuts = ct.counting_cuts(v)
    for cut in cuts:
        weights = ct.anonymity_weights(v, cut)
        assert all(w == F(truth[d], n) for d, w in weights.items())
        assert ct.compute_frequencies(v, cut) == ct.census(trace.inputs)
    # levels where nobody splits are counting cuts of the full tree
    for lv in ct.counting_levels(v):
        assert frozenset(v.level(lv)) in cuts
    assert dominance_total(v, cuts) == []
