"""Counting levels and cuts, dominance, and exact input frequencies."""

from __future__ import annotations

from collections import deque
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Iterable

from .views import ROOT, View, ViewError

Cut = frozenset  # frozenset of node references (digests)
FrequencyMap = dict  # input label -> Fraction


class CountingError(ValueError):
    pass


class NotACountingCut(CountingError):
    pass


class InconsistentSystem(CountingError):
    """The exposed-pair equations contradict each other (garbage view)."""


@lru_cache(maxsize=512)
def unique_children(view: View) -> dict[bytes, bytes]:
    # shared between callers; treat as read-only
    return {d: kids[0] for d, kids in view.children.items() if len(kids) == 1}


def counting_levels(view: View) -> list[int]:
    out = []
    for t in range(view.height - 1):
        level = view.level(t)
        if level and all(len(view.children[d]) == 1 for d in level):
            out.append(t)
    return out


@lru_cache(maxsize=512)
def exposed_pairs(view: View) -> frozenset[frozenset[bytes]]:
    uniq = unique_children(view)
    out = set()
    for v, cv in uniq.items():
        for u, _ in view.nodes[cv].reds:
            if u != v and u in uniq and uniq[u] in view.reds_out[v]:
                out.add(frozenset((u, v)))
    return frozenset(out)


def _adjacency(pairs: Iterable[frozenset[bytes]]) -> dict[bytes, set[bytes]]:
    adj: dict[bytes, set[bytes]] = {}
    for pair in pairs:
        a, b = tuple(pair)
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    return adj


def _connected(members: frozenset[bytes], adj: dict[bytes, set[bytes]]) -> bool:
    start = next(iter(members))
    seen = {start}
    stack = [start]
    while stack:
        for w in adj.get(stack.pop(), ()):
            if w in members and w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(members)


def is_cut(view: View, members: Iterable[bytes]) -> bool:
    """Every root-to-leaf black path meets ``members`` exactly once."""
    members = frozenset(members)
    if not members or not members <= view.nodes.keys():
        return False
    for leaf in view.leaves:
        hits = (leaf in members) + len(view.ancestors(leaf) & members)
        if hits != 1:
            return False
    return True


def _covers(view: View, x: bytes, comp: frozenset[bytes], memo: dict) -> list[frozenset[bytes]]:
    if x in memo:
        return memo[x]
    kids = view.children[x]
    options: list[frozenset[bytes]] = []
    if x in comp:
        options.append(frozenset((x,)))
    if kids:
        parts = []
        for k in kids:
            sub = _covers(view, k, comp, memo)
            if not sub:
                parts = None
                break
            parts.append(sub)
        if parts is not None:
            for combo in product(*parts):
                options.append(frozenset().union(*combo))
    memo[x] = options
    return options


def _components(nodes: Iterable[bytes], adj: dict[bytes, set[bytes]]) -> list[frozenset[bytes]]:
    seen: set[bytes] = set()
    comps = []
    for start in sorted(nodes):
        if start in seen:
            continue
        seen.add(start)
        comp = [start]
        stack = [start]
        while stack:
            for w in adj.get(stack.pop(), ()):
                if w not in seen:
                    seen.add(w)
                    comp.append(w)
                    stack.append(w)
        comps.append(frozenset(comp))
    return comps


@lru_cache(maxsize=8192)
def counting_cuts(view: View) -> tuple[Cut, ...]:
    """All cuts of unique-child nodes inducing a connected exposed-pair subgraph.

    Cuts are built per connected component of the exposed-pair graph by
    covering the black tree branch by branch with that component's nodes.
    """
    uniq = unique_children(view)
    adj = _adjacency(exposed_pairs(view))
    leaves = view.leaves
    found: set[Cut] = set()
    for comp in _components(uniq, adj):
        # every leaf must have an ancestor-or-self in the component
        if any(leaf not in comp and not (view.ancestors(leaf) & comp) for leaf in leaves):
            continue
        for cut in _covers(view, ROOT, comp, {}):
            if len(cut) == 1 or _connected(cut, adj):
                found.add(cut)
    return tuple(sorted(found, key=lambda c: (sorted(view.depth[d] for d in c), sorted(c))))


def _check_cut(view: View, cut: Iterable[bytes]) -> frozenset[bytes]:
    cut = frozenset(cut)
    if not is_cut(view, cut):
        raise CountingError("not a cut of this view")
    return cut


def dominates(a: Iterable[bytes], b: Iterable[bytes], view: View) -> bool:
    """Every node of ``b`` has a strict black ancestor in ``a``."""
    a = _check_cut(view, a)
    b = _check_cut(view, b)
    return all(view.ancestors(d) & a for d in b)


@lru_cache(maxsize=8192)
def dominant_counting_cut(view: View) -> Cut | None:
    cuts = counting_cuts(view)
    if not cuts:
        return None
    # only a cut whose members are shallowest can dominate all others
    for cand in cuts:
        if all(other == cand or all(view.ancestors(d) & cand for d in other) for other in cuts):
            return cand
    return None


def cuts_isomorphic(a: Iterable[bytes], va: View, b: Iterable[bytes], vb: View) -> bool:
    """Compare the sets of unique-children sub-views of two counting cuts."""
    a = _check_cut(va, a)
    b = _check_cut(vb, b)
    if len(a) != len(b):
        return False
    ca = {va.children[d][0] for d in a if len(va.children[d]) == 1}
    cb = {vb.children[d][0] for d in b if len(vb.children[d]) == 1}
    if len(ca) != len(a) or len(cb) != len(b):
        raise NotACountingCut("cut members must have a unique child")
    return ca == cb


def anonymity_weights(view: View, cut: Iterable[bytes]) -> dict[bytes, Fraction]:
    """Relative anonymities of the cut members, normalized to sum 1.

    For an exposed pair (v, u) with m1 red links from v into u's child and
    m2 from u into v's child, every u-agent hears m1 v-agents and every
    v-agent hears m2 u-agents, so m1*a(u) = m2*a(v).
    """
    cut = frozenset(cut)
    if not cut or not cut <= view.nodes.keys():
        raise NotACountingCut("cut members are not nodes of this view")
    uniq = unique_children(view)
    if any(d not in uniq for d in cut):
        raise NotACountingCut("cut members must have a unique child")
    if not is_cut(view, cut):
        raise NotACountingCut("not a cut of this view")
    pairs = [p for p in exposed_pairs(view) if p <= cut]
    adj = _adjacency(pairs)
    start = min(cut)
    weight = {start: Fraction(1)}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for u in sorted(adj.get(v, ())):
            if u not in weight:
                m1 = view.reds_out[v][uniq[u]]
                m2 = view.reds_out[u][uniq[v]]
                weight[u] = weight[v] * m2 / m1
                queue.append(u)
    if len(weight) != len(cut):
        raise NotACountingCut("exposed-pair graph on the cut is not connected")
    for pair in pairs:
        v, u = tuple(pair)
        if view.reds_out[v][uniq[u]] * weight[u] != view.reds_out[u][uniq[v]] * weight[v]:
            raise InconsistentSystem("exposed-pair equations are inconsistent")
    total = sum(weight.values())
    return {d: w / total for d, w in weight.items()}


def compute_frequencies(view: View, cut: Iterable[bytes]) -> FrequencyMap:
    uniq = unique_children(view)
    out: dict[str, Fraction] = {}
    for d, w in anonymity_weights(view, cut).items():
        # the root carries no label; its unique child does
        label = view.nodes[uniq[d]].label
        out[label] = out.get(label, Fraction(0)) + w
    return dict(sorted(out.items()))


def level_output(view: View) -> FrequencyMap | None:
    """Frequencies from the first usable counting level, or None."""
    for t in counting_levels(view):
        try:
            return compute_frequencies(view, view.level(t))
        except CountingError:
            continue
    return None


def dominant_cut_output(view: View) -> FrequencyMap | None:
    cut = dominant_counting_cut(view)
    if cut is None:
        return None
    try:
        return compute_frequencies(view, cut)
    except CountingError:
        return None


def frequencies_to_triples(freq: FrequencyMap) -> list[tuple[str, int, int]]:
    return [(k, v.numerator, v.denominator) for k, v in sorted(freq.items())]


def census(inputs: Iterable[str]) -> FrequencyMap:
    inputs = list(inputs)
    if not inputs:
        raise ViewError("empty census")
    out: dict[str, Fraction] = {}
    for x in inputs:
        out[x] = out.get(x, Fraction(0)) + Fraction(1, len(inputs))
    return dict(sorted(out.items()))
