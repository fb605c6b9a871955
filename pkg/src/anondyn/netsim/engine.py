"""Round-synchronous simulation of the agent automata over a trace."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .. import agents as ag
from ..counting import FrequencyMap, census, frequencies_to_triples
from ..views import View
from .checks import LemmaMonitor, total_agreement
from .faults import FaultSpec, Injection, inject_faults
from .trace import NetworkTrace, generate_trace, random_inputs


def bound(algorithm: str, n: int, h: int = 1) -> int:
    """Proven stabilization bound (in rounds) for ``algorithm``."""
    if algorithm in (ag.BASELINE, ag.KNOWN_N):
        return 2 * n - 2
    if algorithm == ag.SELFSTAB:
        return max(4 * n - 2 * h, 2 * h)
    if algorithm == ag.FINITE_STATE:
        return 3 * n * n
    raise ValueError(f"unknown algorithm {algorithm!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    algorithm: str
    n: int
    inputs: tuple[str, ...] | None = None
    adversary: str = "random_connected"
    seed: int = 0
    horizon: int | None = None  # None: twice the bound
    faults: FaultSpec = FaultSpec()
    workers: int = 1
    checks: bool = False
    trace: NetworkTrace | None = None  # explicit trace overrides the adversary

    def __post_init__(self):
        if self.algorithm not in ag.ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.inputs is not None and len(self.inputs) != self.n:
            raise ValueError("inputs length must equal n")
        if self.trace is not None and self.trace.n != self.n:
            raise ValueError("trace size must equal n")
        if self.horizon is not None and self.horizon < 1:
            raise ValueError("horizon must be positive")
        if self.workers < 1:
            raise ValueError("workers must be positive")


@dataclass
class RoundRecord:
    round: int
    outputs: list[FrequencyMap]
    state_bits: list[int]
    frozen: list[bool]
    discard_count: int = 0
    branch_events: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({
            "round": self.round,
            "agentOutputs": [frequencies_to_triples(o) for o in self.outputs],
            "stateBits": self.state_bits,
            "frozenFlags": self.frozen,
            "discardCount": self.discard_count,
            "branchEvents": self.branch_events,
        }, sort_keys=True, separators=(",", ":"))


@dataclass
class RunResult:
    config: ExperimentConfig
    trace: NetworkTrace
    injection: Injection
    truth: FrequencyMap
    records: list[RoundRecord]
    final_views: list[View | None]
    violations: list[str] = field(default_factory=list)
    agreement_round: int | None = None  # finite-state: first round of total agreement
    undominated_rounds: int = 0

    @property
    def horizon(self) -> int:
        return len(self.records) - 1

    @property
    def bound(self) -> int:
        return bound(self.config.algorithm, self.config.n, self.injection.min_coefficient)

    @property
    def stabilization_round(self) -> int | None:
        return stabilization_round(self.records, self.truth)

    @property
    def max_state_bits(self) -> int:
        return max(max(r.state_bits) for r in self.records)

    def stream(self) -> str:
        return "".join(r.to_json() + "\n" for r in self.records)

    def summary(self) -> dict:
        stab = self.stabilization_round
        return {
            "algorithm": self.config.algorithm,
            "n": self.config.n,
            "seed": self.config.seed,
            "horizon": self.horizon,
            "minGarbageCoefficient": self.injection.min_coefficient,
            "stabilizationRound": stab,
            "bound": self.bound,
            "boundSatisfied": stab is not None and stab <= self.bound,
            "maxStateBits": self.max_state_bits,
            "truthCensus": frequencies_to_triples(self.truth),
            "agreementRound": self.agreement_round,
            "violations": self.violations,
        }


def stabilization_round(records: Sequence[RoundRecord], truth: FrequencyMap) -> int | None:
    """Smallest t with every output correct from t through the horizon."""
    t = None
    for rec in reversed(records):
        if all(o == truth for o in rec.outputs):
            t = rec.round
        else:
            break
    return t


def build_trace(config: ExperimentConfig, horizon: int) -> NetworkTrace:
    if config.trace is not None:
        if config.trace.horizon < horizon:
            raise ValueError("explicit trace is shorter than the horizon")
        return NetworkTrace(config.trace.inputs, config.trace.graphs[:horizon], config.trace.seed)
    inputs = config.inputs or random_inputs(config.n, config.seed)
    return generate_trace(config.adversary, config.n, horizon, config.seed, inputs)


def _step_all(pool, states, inboxes):
    work = [(s, box) for s, box in zip(states, inboxes)]
    if pool is None:
        return [ag.step_info(s, box) for s, box in work]
    return list(pool.map(lambda w: ag.step_info(*w), work))


Observer = Callable[[int, Sequence[ag.AgentState]], None]


def run(config: ExperimentConfig, observer: Observer | None = None) -> RunResult:
    """Simulate ``config``; ``observer(t, states)`` sees the states after each round."""
    inputs = config.trace.inputs if config.trace is not None else (
        config.inputs or random_inputs(config.n, config.seed))
    injection = inject_faults(config.faults, config.algorithm, inputs, config.seed, config.n)
    horizon = config.horizon
    if horizon is None:
        horizon = max(2 * bound(config.algorithm, config.n, injection.min_coefficient), 4)
    trace = build_trace(config, horizon)
    truth = census(trace.inputs)
    n = config.n
    finite = config.algorithm == ag.FINITE_STATE
    monitor = LemmaMonitor(n) if (config.checks and finite) else None
    violations: list[str] = []
    agreement_round = None

    states = list(injection.states)
    pool = ThreadPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        # round 0: no communication; the finite-state agent grows its first level
        if finite:
            results = _step_all(pool, states, [[] for _ in states])
            states = [r[0] for r in results]
            outputs = [r[1] for r in results]
        else:
            outputs = [ag.output_of(s) for s in states]
        records = [RoundRecord(0, outputs, [ag.state_size_bits(s) for s in states],
                               [False] * n)]
        if observer is not None:
            observer(0, states)
        if monitor is not None:
            monitor.observe(0, [s.view for s in states])
        if finite and total_agreement([s.view for s in states]):
            agreement_round = 0

        for t in range(1, horizon + 1):
            ready = [ag.sanitize(s) for s in states]
            messages = [ag.make_message(s) for s in ready]
            g = trace.graph(t)
            nbrs = [g.neighbors(i) for i in range(n)]
            inboxes = [[messages[j] for j in nbrs[i]] for i in range(n)]
            results = _step_all(pool, ready, inboxes)
            new_states = [r[0] for r in results]
            frozen = [a.view == b.view and a.flag == b.flag and a.raw == b.raw
                      for a, b in zip(states, new_states)]
            discards = 0
            if finite:
                masks = [r[2].discarded for r in results]
                discards = sum(sum(m) for m in masks)
                for i in range(n):
                    for k, j in enumerate(nbrs[i]):
                        back = nbrs[j].index(i)
                        if masks[i][k] != masks[j][back]:
                            violations.append(f"round {t}: asymmetric discard between {i} and {j}")
            states = new_states
            if observer is not None:
                observer(t, states)
            events = {"views": [i for i, (a, b) in enumerate(zip(ready, states))
                                if len(b.view.leaves) > len(a.view.leaves)]}
            if monitor is not None:
                events = monitor.observe(t, [s.view for s in states])
            records.append(RoundRecord(t, [r[1] for r in results],
                                       [ag.state_size_bits(s) for s in states],
                                       frozen, discards, events))
            if finite and agreement_round is None and total_agreement([s.view for s in states]):
                agreement_round = t
    finally:
        if pool is not None:
            pool.shutdown()

    if monitor is not None:
        violations.extend(monitor.violations)
    if agreement_round is not None:
        for rec in records[agreement_round + 1:]:
            if not all(rec.frozen):
                violations.append(f"round {rec.round}: state changed after total agreement")
                break
    return RunResult(config, trace, injection, truth, records, [s.view for s in states],
                     violations, agreement_round,
                     monitor.undominated_rounds if monitor is not None else 0)
