"""Per-round structural checks on finite-state runs.

The monitor watches the collective tree and every agent's view round by
round and reports any violation of the counting-cut theory as a string.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

from ..counting import counting_cuts, dominant_counting_cut, exposed_pairs, unique_children
from ..views import View
from .oracle import collective_tree


def _has_strict_ancestor_in(view: View, node: bytes, cut: frozenset[bytes]) -> bool:
    return bool(view.ancestors(node) & cut)


def dominance_total(view: View, cuts: Sequence[frozenset[bytes]]) -> list[tuple]:
    """Pairs of distinct counting cuts neither of which dominates the other."""
    bad = []
    for a, b in combinations(cuts, 2):
        ab = all(_has_strict_ancestor_in(view, d, a) for d in b)
        ba = all(_has_strict_ancestor_in(view, d, b) for d in a)
        if ab == ba:
            bad.append((a, b))
    return bad


@dataclass
class LemmaMonitor:
    n: int
    birth: dict[bytes, int] = field(default_factory=dict)
    prev_cuts: frozenset = frozenset()
    prev_leaves: int = 0
    prev_view_cuts: list = field(default_factory=list)
    prev_view_leaves: list = field(default_factory=list)
    collective_branchings: int = 0
    view_branchings: list = field(default_factory=list)
    undominated_rounds: int = 0  # rounds where some view had cuts but no dominant one
    started: bool = False
    violations: list[str] = field(default_factory=list)

    def observe(self, t: int, views: Sequence[View]) -> dict:
        """Check the state after round ``t``; returns the round's branch events."""
        coll = collective_tree(views)
        for d in coll.nodes:
            self.birth.setdefault(d, t)
        cuts = frozenset(counting_cuts(coll))
        leaves = len(coll.leaves)
        view_cuts = [frozenset(counting_cuts(v)) for v in views]
        view_leaves = [len(v.leaves) for v in views]
        events = {"collective": 0, "views": []}

        for a, b in dominance_total(coll, sorted(cuts, key=sorted)):
            self.violations.append(f"round {t}: incomparable counting cuts in collective tree")
            break

        uniq = unique_children(coll)
        for pair in exposed_pairs(coll):
            v, u = tuple(pair)
            if self.birth[uniq[v]] != self.birth[uniq[u]]:
                self.violations.append(f"round {t}: exposed pair children born in different rounds")
                break

        if leaves > self.n:
            self.violations.append(f"round {t}: collective tree has {leaves} > n leaves")
        for i, lv in enumerate(view_leaves):
            if lv > self.n:
                self.violations.append(f"round {t}: view of agent {i} has {lv} > n leaves")

        if any(dominant_counting_cut(v) is None for v, c in zip(views, view_cuts) if c):
            self.undominated_rounds += 1

        if self.started:
            branched = leaves > self.prev_leaves
            if branched:
                events["collective"] = leaves - self.prev_leaves
                self.collective_branchings += leaves - self.prev_leaves
            if self.prev_cuts - cuts and not branched:
                self.violations.append(f"round {t}: collective tree lost a cut without branching")
            for i in range(len(views)):
                grew = view_leaves[i] > self.prev_view_leaves[i]
                if grew:
                    events["views"].append(i)
                    self.view_branchings[i] += view_leaves[i] - self.prev_view_leaves[i]
                if self.prev_view_cuts[i] - view_cuts[i] and not grew:
                    self.violations.append(f"round {t}: view of agent {i} lost a cut without branching")
            if not any(self.prev_view_cuts) and not branched:
                gained = len(cuts - self.prev_cuts)
                if gained != 1:
                    self.violations.append(
                        f"round {t}: quiet round acquired {gained} counting cuts, expected 1")
            if self.collective_branchings > self.n - 1:
                self.violations.append(f"round {t}: collective branchings exceed n-1")
            for i, b in enumerate(self.view_branchings):
                if b > self.n - 1:
                    self.violations.append(f"round {t}: view of agent {i} branched more than n-1 times")
        else:
            self.view_branchings = [0] * len(views)
            self.started = True

        self.prev_cuts = cuts
        self.prev_leaves = leaves
        self.prev_view_cuts = view_cuts
        self.prev_view_leaves = view_leaves
        return events


def total_agreement(views: Sequence[View]) -> bool:
    """All views have dominant counting cuts, pairwise isomorphic."""
    keys = set()
    for v in views:
        cut = dominant_counting_cut(v)
        if cut is None:
            return False
        uniq = unique_children(v)
        keys.add(frozenset(uniq[d] for d in cut))
    return len(keys) == 1
