"""Named property suites behind ``anondyn verify``.

Each suite walks a grid of (n, seed, adversary) instances in increasing
order and stops at the first failure, so the reported case is the smallest
one found.  Failures carry a config that reproduces them with ``anondyn run``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

from . import agents as ag
from . import views as vw
from .netsim import (ExperimentConfig, FaultSpec, generate_trace, oracle_history_tree,
                     oracle_view, run, shift)
from .netsim.trace import KINDS


@dataclass
class Failure:
    message: str
    config: ExperimentConfig


@dataclass
class SuiteReport:
    suite: str
    instances: int = 0
    failure: Failure | None = None

    @property
    def ok(self) -> bool:
        return self.failure is None


def _grid(ns: Iterable[int], seeds: int, kinds: Sequence[str]) -> Iterator[tuple[int, int, str]]:
    for n in ns:
        for seed in range(seeds):
            for kind in kinds:
                yield n, seed, kind


def _chop_lemma(ns, seeds, kinds, report):
    for n, seed, kind in _grid(ns, seeds, kinds):
        horizon = 2 * n
        trace = generate_trace(kind, n, horizon, seed)
        tree = oracle_history_tree(trace, horizon)
        shifted = oracle_history_tree(shift(trace), horizon - 1)
        for t in range(1, horizon + 1):
            for p in range(n):
                report.instances += 1
                if vw.chop(oracle_view(tree, p, t)) != oracle_view(shifted, p, t - 1):
                    cfg = ExperimentConfig(ag.BASELINE, n, trace.inputs, kind, seed, t)
                    return Failure(f"chop of agent {p}'s view at round {t} differs from the "
                                   "shifted network's view", cfg)
    return None


def _violations_matching(words: Sequence[str]):
    def check(ns, seeds, kinds, report):
        for n, seed, kind in _grid(ns, seeds, kinds):
            cfg = ExperimentConfig(ag.FINITE_STATE, n, adversary=kind, seed=seed, checks=True)
            res = run(cfg)
            report.instances += 1
            bad = [v for v in res.violations if any(w in v for w in words)]
            if bad:
                return Failure(bad[0], cfg)
        return None
    return check


def _fault_grid(algorithm: str, n: int) -> list[FaultSpec]:
    if algorithm == ag.KNOWN_N:
        hs = sorted({1, n, 2 * n - 2})
        return ([FaultSpec(), FaultSpec("random_bytes"), FaultSpec("stale_view")]
                + [FaultSpec("bogus_view", h=h) for h in hs])
    if algorithm == ag.SELFSTAB:
        return [FaultSpec("bogus_view", h=h) for h in sorted({0, 1, n, 2 * n, 3 * n})]
    return [FaultSpec()]


def _bounds(algorithm: str):
    def check(ns, seeds, kinds, report):
        for n, seed, kind in _grid(ns, seeds, kinds):
            for faults in _fault_grid(algorithm, n):
                cfg = ExperimentConfig(algorithm, n, adversary=kind, seed=seed, faults=faults)
                res = run(cfg)
                report.instances += 1
                stab = res.stabilization_round
                if stab is None or stab > res.bound:
                    return Failure(f"stabilization round {stab} exceeds bound {res.bound}", cfg)
                if algorithm == ag.KNOWN_N and res.max_state_bits > ag.memory_cap_bits(n):
                    return Failure(f"state of {res.max_state_bits} bits exceeds the cap", cfg)
                if res.violations:
                    return Failure(res.violations[0], cfg)
        return None
    return check


def _baseline_views(ns, seeds, kinds, report):
    for n, seed, kind in _grid(ns, seeds, kinds):
        cfg = ExperimentConfig(ag.BASELINE, n, adversary=kind, seed=seed, horizon=2 * n)
        seen: list[list[vw.View]] = []
        res = run(cfg, lambda t, states: seen.append([s.view for s in states]))
        tree = oracle_history_tree(res.trace, res.horizon)
        for t, views in enumerate(seen):
            for p, v in enumerate(views):
                report.instances += 1
                if v != oracle_view(tree, p, t):
                    return Failure(f"agent {p}'s view at round {t} differs from the oracle", cfg)
    return None


def _frozen_states(ns, seeds, kinds, report):
    for n, seed, kind in _grid(ns, seeds, kinds):
        cfg = ExperimentConfig(ag.FINITE_STATE, n, adversary=kind, seed=seed)
        res = run(cfg)
        report.instances += 1
        if res.agreement_round is None:
            return Failure("agents never reached total agreement", cfg)
        bad = [v for v in res.violations if "after total agreement" in v]
        if bad:
            return Failure(bad[0], cfg)
    return None


SUITES: dict[str, Callable] = {
    "chop_lemma": _chop_lemma,
    "dominance_order": _violations_matching(["incomparable"]),
    "exposed_simultaneity": _violations_matching(["born in different rounds"]),
    "bounds_thm1": _bounds(ag.KNOWN_N),
    "bounds_thm2": _bounds(ag.SELFSTAB),
    "bounds_thm3": _bounds(ag.FINITE_STATE),
    "baseline_views": _baseline_views,
    "frozen_states": _frozen_states,
}


def run_suite(name: str, ns: Iterable[int], seeds: int,
              kinds: Sequence[str] = KINDS) -> SuiteReport:
    if name not in SUITES:
        raise KeyError(name)
    report = SuiteReport(name)
    report.failure = SUITES[name](list(ns), seeds, list(kinds), report)
    return report

