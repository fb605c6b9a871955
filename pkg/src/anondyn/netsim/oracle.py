"""Ground truth: the history tree by partition refinement, and collective trees."""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass
from typing import Iterable

from .. import views as vw
from ..views import RawView, View
from .trace import NetworkTrace


@dataclass(frozen=True)
class OracleTree:
    """History tree of a trace up to some level, with per-node ground truth."""

    raw: RawView  # index 0 is the root
    level_of: tuple[int, ...]  # level of each raw node (-1 for the root)
    anonymity: tuple[int, ...]
    agent_class: tuple[tuple[int, ...], ...]  # agent_class[t][p] = raw index of p in L_t
    view: View  # the same structure as a compound view

    digests: tuple[bytes, ...]  # node reference of each raw node in ``view``

    @property
    def up_to(self) -> int:
        return len(self.agent_class) - 1

    def node_of(self, agent: int, t: int) -> bytes:
        return self.digests[self.agent_class[t][agent]]

    def anonymity_by_digest(self) -> dict[bytes, int]:
        return dict(zip(self.digests, self.anonymity))


def oracle_history_tree(trace: NetworkTrace, up_to: int) -> OracleTree:
    """Refine agent classes round by round.

    Level 0 groups agents by input; level t splits each level t-1 class by
    the multiset of level t-1 classes heard during round t.
    """
    if up_to > trace.horizon:
        raise ValueError("up_to exceeds the trace horizon")
    n = trace.n
    labels: list[str | None] = [None]
    parents = [-1]
    reds: list[list[tuple[int, int]]] = [[]]
    level_of = [-1]
    anonymity = [n]

    first: dict[str, int] = {}
    cls = []
    for p in range(n):
        x = trace.inputs[p]
        if x not in first:
            first[x] = len(labels)
            labels.append(x)
            parents.append(0)
            reds.append([])
            level_of.append(0)
            anonymity.append(0)
        cls.append(first[x])
        anonymity[first[x]] += 1
    agent_class = [tuple(cls)]

    for t in range(1, up_to + 1):
        g = trace.graph(t)
        heard = [Counter() for _ in range(n)]
        for a, b in g.links:
            heard[a][cls[b]] += 1
            heard[b][cls[a]] += 1
        sig_index: dict[tuple, int] = {}
        new_cls = []
        for p in range(n):
            sig = (cls[p], tuple(sorted(heard[p].items())))
            if sig not in sig_index:
                sig_index[sig] = len(labels)
                labels.append(trace.inputs[p])
                parents.append(cls[p])
                reds.append(sorted(heard[p].items()))
                level_of.append(t)
                anonymity.append(0)
            idx = sig_index[sig]
            if labels[idx] != trace.inputs[p]:
                raise AssertionError("class mixes inputs")
            anonymity[idx] += 1
            new_cls.append(idx)
        cls = new_cls
        agent_class.append(tuple(cls))

    # every agent of a class hears exactly m members of each source class
    for t in range(1, up_to + 1):
        g = trace.graph(t)
        prev = agent_class[t - 1]
        for p in range(n):
            counts = Counter(prev[q] for q in g.neighbors(p))
            if sorted(counts.items()) != reds[agent_class[t][p]]:
                raise AssertionError("ill-defined red multiplicity")

    raw = RawView(labels, parents, reds, None, vw.STANDARD)
    view = _compound_from_raw(raw)
    return OracleTree(raw, tuple(level_of), tuple(anonymity), tuple(agent_class), view,
                      tuple(vw._raw_digests(raw)))


def _compound_from_raw(raw: RawView) -> View:
    digests = vw._raw_digests(raw)
    if digests is None or len(set(digests)) != len(digests):
        raise AssertionError("refinement produced duplicate classes")
    nodes = {vw.ROOT: vw.Node(None, None, ())}
    for i in range(1, len(digests)):
        rs = tuple(sorted((digests[s], m) for s, m in raw.reds[i]))
        nodes[digests[i]] = vw.Node(raw.labels[i], digests[raw.parents[i]], rs)
    return View(nodes, None, vw.STANDARD)


def oracle_view(tree: OracleTree | NetworkTrace, agent: int, t: int) -> View:
    """The view of ``agent`` at round ``t``: all shortest root paths to its class."""
    if isinstance(tree, NetworkTrace):
        tree = oracle_history_tree(tree, t)
    if t > tree.up_to:
        raise ValueError("round beyond the computed oracle tree")
    raw = tree.raw
    target = tree.agent_class[t][agent]
    size = len(raw.labels)
    succ: list[list[int]] = [[] for _ in range(size)]
    pred: list[list[int]] = [[] for _ in range(size)]
    for i in range(1, size):
        for s in [raw.parents[i]] + [s for s, _ in raw.reds[i]]:
            succ[s].append(i)
            pred[i].append(s)
    from_root = _bfs(0, succ, size)
    to_target = _bfs(target, pred, size)
    total = from_root[target]
    keep = [i for i in range(size)
            if from_root[i] is not None and to_target[i] is not None
            and from_root[i] + to_target[i] == total]
    index = {old: new for new, old in enumerate(keep)}

    def on_path(a: int, b: int) -> bool:
        return (a in index and b in index
                and from_root[a] + 1 + to_target[b] == total)

    labels = [raw.labels[i] for i in keep]
    parents = [-1] + [index[raw.parents[i]] for i in keep[1:]]
    for i in keep[1:]:
        if not on_path(raw.parents[i], i):
            raise AssertionError("black edge off every shortest path")
    reds = [[(index[s], m) for s, m in raw.reds[i] if on_path(s, i)] for i in keep]
    sub = RawView(labels, parents, reds, index[target], vw.STANDARD)
    return vw.view_from_raw(sub)


def _bfs(start: int, adj: list[list[int]], size: int) -> list[int | None]:
    dist: list[int | None] = [None] * size
    dist[start] = 0
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for y in adj[x]:
            if dist[y] is None:
                dist[y] = dist[x] + 1
                queue.append(y)
    return dist


def truncated(tree: OracleTree, t: int) -> View:
    """The history tree restricted to levels L_0 .. L_t, as a compound."""
    keep = [i for i, lv in enumerate(tree.level_of) if lv <= t]
    index = {old: new for new, old in enumerate(keep)}
    raw = tree.raw
    sub = RawView([raw.labels[i] for i in keep],
                  [-1] + [index[raw.parents[i]] for i in keep[1:]],
                  [[(index[s], m) for s, m in raw.reds[i]] for i in keep],
                  None, vw.STANDARD)
    return _compound_from_raw(sub)


def collective_tree(views: Iterable[View]) -> View:
    """Match-and-merge of all agents' views."""
    return vw.merge(views)
