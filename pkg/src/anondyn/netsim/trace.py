"""Dynamic network traces and adversary schedules."""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

KINDS = ("random_connected", "path_rotating", "ring", "star_rotating", "static_path",
         "two_clique_bridge")

Link = tuple[int, int]


@dataclass(frozen=True)
class RoundGraph:
    n: int
    links: tuple[Link, ...]  # multiset of unordered pairs, each stored (lo, hi)

    def __post_init__(self):
        for a, b in self.links:
            if a == b:
                raise ValueError("self-loops are not allowed")
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ValueError(f"link {a}-{b} out of range for n={self.n}")

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        adj: dict[int, set[int]] = {i: set() for i in range(self.n)}
        for a, b in self.links:
            adj[a].add(b)
            adj[b].add(a)
        seen = {0}
        stack = [0]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n

    def neighbors(self, agent: int) -> list[int]:
        """Neighbor indices, one entry per incident link."""
        out = []
        for a, b in self.links:
            if a == agent:
                out.append(b)
            elif b == agent:
                out.append(a)
        return sorted(out)


def _graph(n: int, links) -> RoundGraph:
    return RoundGraph(n, tuple(sorted((min(a, b), max(a, b)) for a, b in links)))


@dataclass(frozen=True)
class NetworkTrace:
    inputs: tuple[str, ...]
    graphs: tuple[RoundGraph, ...]  # graphs[0] is G_1
    seed: int = 0

    @property
    def n(self) -> int:
        return len(self.inputs)

    @property
    def horizon(self) -> int:
        return len(self.graphs)

    def graph(self, t: int) -> RoundGraph:
        """The communication graph of round ``t`` (t >= 1)."""
        return self.graphs[t - 1]

    def validate(self) -> None:
        for g in self.graphs:
            if g.n != self.n:
                raise ValueError("round graph size does not match the inputs")
            if not g.is_connected():
                raise ValueError("every round graph must be connected")


def shift(trace: NetworkTrace) -> NetworkTrace:
    """Drop the first round graph."""
    return NetworkTrace(trace.inputs, trace.graphs[1:], trace.seed)


def round_rng(seed: int, *tags) -> random.Random:
    # counter-based: each (seed, tags) pair gets its own independent stream
    return random.Random(":".join(str(x) for x in (seed, *tags)))


def _random_connected(n: int, rng: random.Random) -> list[Link]:
    if n == 1:
        return []
    links = []
    cur = rng.randrange(n)
    seen = {cur}
    while len(seen) < n:  # Aldous-Broder walk on the complete graph
        nxt = rng.randrange(n - 1)
        nxt += nxt >= cur
        if nxt not in seen:
            seen.add(nxt)
            links.append((cur, nxt))
        cur = nxt
    for _ in range(rng.randint(0, n)):
        a, b = rng.sample(range(n), 2)
        links.append((a, b))
    return links


def _path(order: Sequence[int]) -> list[Link]:
    return [(order[i], order[i + 1]) for i in range(len(order) - 1)]


def round_graph(kind: str, n: int, t: int, seed: int) -> RoundGraph:
    if kind not in KINDS:
        raise ValueError(f"unknown adversary kind {kind!r}")
    if n < 1:
        raise ValueError("n must be positive")
    if kind == "random_connected":
        return _graph(n, _random_connected(n, round_rng(seed, kind, n, t)))
    if kind == "static_path":
        return _graph(n, _path(range(n)))
    if kind == "path_rotating":
        order = [(i + t) % n for i in range(n)]
        if t % 2:
            order.reverse()
        return _graph(n, _path(order))
    if kind == "ring":
        if n == 2:
            return _graph(n, [(0, 1), (0, 1)])
        if n < 3:
            return _graph(n, [])
        return _graph(n, _path(range(n)) + [(n - 1, 0)])
    if kind == "star_rotating":
        c = t % n
        return _graph(n, [(c, i) for i in range(n) if i != c])
    # two cliques joined by one bridge that moves every round
    half = (n + 1) // 2
    left, right = range(half), range(half, n)
    links = [(a, b) for a in left for b in left if a < b]
    links += [(a, b) for a in right for b in right if a < b]
    if right:
        rng = round_rng(seed, kind, n, t)
        links.append((rng.choice(left), rng.choice(right)))
    return _graph(n, links)


def random_inputs(n: int, seed: int, alphabet: Sequence[str] = ("a", "b", "c")) -> tuple[str, ...]:
    rng = round_rng(seed, "inputs", n)
    return tuple(rng.choice(alphabet) for _ in range(n))


def generate_trace(kind: str, n: int, horizon: int, seed: int,
                   inputs: Sequence[str] | None = None) -> NetworkTrace:
    if horizon < 1:
        raise ValueError("horizon must be positive")
    if inputs is None:
        inputs = random_inputs(n, seed)
    if len(inputs) != n:
        raise ValueError("inputs length must equal n")
    graphs = tuple(round_graph(kind, n, t, seed) for t in range(1, horizon + 1))
    trace = NetworkTrace(tuple(inputs), graphs, seed)
    trace.validate()
    return trace


# -- trace files -----------------------------------------------------------------

def dumps_trace(trace: NetworkTrace) -> str:
    lines = [f"n={trace.n} seed={trace.seed}", "inputs: " + " ".join(trace.inputs)]
    for t, g in enumerate(trace.graphs, start=1):
        lines.append(f"{t}: " + " ".join(f"{a}-{b}" for a, b in g.links))
    return "\n".join(line.rstrip() for line in lines) + "\n"


def loads_trace(text: str) -> NetworkTrace:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if len(lines) < 2:
        raise ValueError("trace file needs a header and an inputs line")
    header = dict(tok.split("=", 1) for tok in lines[0].split())
    n = int(header["n"])
    seed = int(header.get("seed", 0))
    tag, _, rest = lines[1].partition(":")
    if tag.strip() != "inputs":
        raise ValueError("second line must list the inputs")
    inputs = tuple(rest.split())
    if len(inputs) != n:
        raise ValueError("inputs line does not match n")
    graphs = []
    for expected, line in enumerate(lines[2:], start=1):
        tag, _, rest = line.partition(":")
        if int(tag) != expected:
            raise ValueError(f"expected round {expected}, got {tag}")
        links = [tuple(int(x) for x in tok.split("-")) for tok in rest.split()]
        graphs.append(_graph(n, links))
    trace = NetworkTrace(inputs, tuple(graphs), seed)
    trace.validate()
    return trace


def load_trace(path: str | Path) -> NetworkTrace:
    return loads_trace(Path(path).read_text())


def save_trace(trace: NetworkTrace, path: str | Path) -> None:
    Path(path).write_text(dumps_trace(trace))
