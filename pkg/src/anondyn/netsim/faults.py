"""Initial-state corruption for self-stabilization experiments."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from .. import agents as ag
from .. import views as vw
from ..views import RawView
from .oracle import oracle_view
from .trace import generate_trace, round_rng

FAULT_KINDS = ("none", "random_bytes", "bogus_view", "stale_view")


@dataclass(frozen=True)
class FaultSpec:
    kind: str = "none"
    p: float = 1.0  # random_bytes: probability that an agent is corrupted
    h: int = 1  # bogus_view: height of the injected views

    def __post_init__(self):
        if self.kind not in FAULT_KINDS:
            raise ValueError(f"unknown fault kind {self.kind!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must be a probability")
        if self.h < 0:
            raise ValueError("h must be non-negative")


@dataclass(frozen=True)
class Injection:
    states: tuple[ag.AgentState, ...]
    coefficients: tuple[int, ...]

    @property
    def min_coefficient(self) -> int:
        return min(self.coefficients)


def bogus_view(h: int, rng: random.Random, labels: Sequence[str] = ("a", "b", "x"),
               max_width: int = 3, max_mult: int = 4) -> vw.View:
    """A well-formed standard view of height ``h`` with random content."""
    if h == 0:
        return vw.root_view()
    names: list[str | None] = [None]
    parents = [-1]
    reds: list[list[tuple[int, int]]] = [[]]
    prev = [0]
    for t in range(h):
        cur = []
        for _ in range(rng.randint(1, max_width)):
            i = len(names)
            names.append(rng.choice(labels))
            parents.append(rng.choice(prev))
            edges = []
            if t > 0:
                for src in rng.sample(prev, rng.randint(0, len(prev))):
                    edges.append((src, rng.randint(1, max_mult)))
            reds.append(edges)
            cur.append(i)
        prev = cur
    return vw.canonicalize(RawView(names, parents, reds, rng.choice(prev)))


def stale_view(max_height: int, rng: random.Random, label: str | None = None,
               labels: Sequence[str] = ("a", "b", "c")) -> vw.View:
    """The genuine view of some agent in an unrelated network.

    With ``label`` given, that agent has this input, so the view looks like
    a plausible leftover state of the receiving agent.
    """
    n = rng.randint(2, 5)
    height = rng.randint(1, max(1, max_height))
    seed = rng.randrange(2**31)
    inputs = [rng.choice(labels) for _ in range(n)]
    who = rng.randrange(n)
    if label is not None:
        inputs[who] = label
    trace = generate_trace("random_connected", n, max(height - 1, 1), seed, inputs=inputs)
    return oracle_view(trace, who, height - 1)


def _encode(view: vw.View, flag: int | None) -> bytes:
    return ag.Message(vw.encode_view(view), flag).to_bytes()


def inject_faults(spec: FaultSpec, algorithm: str, inputs: Sequence[str], seed: int,
                  n: int | None = None) -> Injection:
    """Build initial states per ``spec``; deterministic in ``seed``."""
    n_param = n if n is not None else len(inputs)
    states = []
    for p, x in enumerate(inputs):
        rng = round_rng(seed, "faults", spec.kind, p)
        blob: bytes | None = None
        flag = rng.randint(0, 1) if algorithm == ag.SELFSTAB else None
        if spec.kind == "random_bytes":
            if rng.random() < spec.p:
                blob = bytes(rng.randrange(256) for _ in range(rng.randint(1, 64)))
        elif spec.kind == "bogus_view":
            blob = _encode(bogus_view(spec.h, rng), flag)
        elif spec.kind == "stale_view":
            blob = _encode(stale_view(max(1, 2 * n_param - 2), rng, x), flag)
        states.append(ag.init(algorithm, x, n_param, blob))
    coeffs = tuple(ag.garbage_coefficient(s) for s in states)
    return Injection(tuple(states), coeffs)
