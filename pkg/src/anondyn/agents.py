"""Per-agent automata: baseline, known-n, self-stabilizing, finite-state.

Every algorithm shares the same surface: ``init`` builds a state, ``make_message``
produces what the agent broadcasts this round, and ``step`` consumes the
multiset of neighbor messages and returns the next state plus an output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from . import views as vw
from .counting import (
    FrequencyMap,
    dominant_counting_cut,
    dominant_cut_output,
    level_output,
    unique_children,
)
from .views import GENERALIZED, MAGIC, STANDARD, View

BASELINE = "baseline"
KNOWN_N = "known_n"
SELFSTAB = "selfstab"
FINITE_STATE = "finite_state"
ALGORITHMS = (BASELINE, KNOWN_N, SELFSTAB, FINITE_STATE)


@dataclass(frozen=True)
class AgentState:
    algorithm: str
    input: str
    view: View | None  # None: the state does not encode a well-formed view
    flag: int | None = None
    n: int | None = None
    raw: bytes | None = None  # verbatim bytes of a malformed injected state


@dataclass(frozen=True)
class Message:
    payload: bytes  # canonical view encoding
    flag: int | None = None
    # the sender's view itself; it always equals decoding ``payload``, so
    # receivers may skip the parse (messages built from raw bytes lack it)
    view: View | None = field(default=None, compare=False, repr=False)

    def to_bytes(self) -> bytes:
        out = MAGIC + self.payload
        if self.flag is not None:
            out += bytes([self.flag])
        return out


@dataclass(frozen=True)
class StepInfo:
    discarded: tuple[bool, ...] = ()
    updated: bool = True


def view_kind(algorithm: str) -> str:
    return GENERALIZED if algorithm == FINITE_STATE else STANDARD


def default_output(label: str) -> FrequencyMap:
    return {label: Fraction(1)}


def memory_cap_bits(n: int) -> int:
    """Bit budget for a known-n agent's state."""
    return 64 * n ** 3 * math.ceil(math.log2(n + 1))


def eval_pair(view: View, flag: int) -> int:
    return 2 * view.height + flag


# -- (de)serialization ---------------------------------------------------------

def encode_state(state: AgentState) -> bytes:
    if state.view is None:
        return state.raw or b""
    return Message(vw.encode_view(state.view), state.flag).to_bytes()


@lru_cache(maxsize=16384)
def _decode(data: bytes, with_flag: bool, kind: str) -> tuple[View, int | None] | None:
    if not data.startswith(MAGIC):
        return None
    try:
        raw, pos = vw.decode_raw(data, len(MAGIC))
    except vw.DecodeError:
        return None
    flag = None
    if with_flag:
        if pos != len(data) - 1 or data[pos] not in (0, 1):
            return None
        flag = data[pos]
    elif pos != len(data):
        return None
    view = vw.try_view_from_raw(raw, kind)
    if view is None:
        return None
    return view, flag


def decode_message(msg: Message | bytes, algorithm: str) -> tuple[View, int | None] | None:
    """Decode a received message, or None if it is malformed."""
    with_flag = algorithm == SELFSTAB
    if isinstance(msg, Message):
        v = msg.view
        if (v is not None and v.kind == view_kind(algorithm)
                and (msg.flag in (0, 1) if with_flag else msg.flag is None)):
            return v, msg.flag
        msg = msg.to_bytes()
    return _decode(msg, with_flag, view_kind(algorithm))


def state_size_bits(state: AgentState) -> int:
    return 8 * len(encode_state(state))


# -- lifecycle ---------------------------------------------------------------

def init(algorithm: str, input: str, n: int | None = None,
         initial_state: bytes | None = None) -> AgentState:
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if algorithm == KNOWN_N and (n is None or n < 1):
        raise ValueError("known_n needs n >= 1")
    flag = 0 if algorithm == SELFSTAB else None
    if initial_state is None:
        if algorithm == FINITE_STATE:
            view = vw.root_view(GENERALIZED)
        else:
            view = vw.new_leaf_view(input)
        return AgentState(algorithm, input, view, flag, n)
    decoded = _decode(bytes(initial_state), algorithm == SELFSTAB, view_kind(algorithm))
    if decoded is None:
        return AgentState(algorithm, input, None, None, n, bytes(initial_state))
    view, flag = decoded
    return AgentState(algorithm, input, view, flag, n)


def garbage_coefficient(state: AgentState) -> int:
    return 0 if state.view is None else state.view.height


def _within_cap(state: AgentState) -> AgentState:
    cap = memory_cap_bits(state.n)
    view = state.view
    while view.height > 0 and state_size_bits(replace(state, view=view)) > cap:
        view = vw.chop(view)
    return replace(state, view=view)


def _own_history(view: View, label: str) -> bool:
    """Inputs never change, so labels pass down black edges to our own bottom."""
    if view.bottom is None or view.nodes[view.bottom].label != label:
        return False
    for node in view.nodes.values():
        if node.parent is not None and node.parent != vw.ROOT:
            if view.nodes[node.parent].label != node.label:
                return False
    return True


def sanitize(state: AgentState) -> AgentState:
    """Reset states that the algorithm refuses to carry into a round."""
    if state.algorithm == KNOWN_N:
        if (state.view is None or state.view.height > 2 * state.n - 2
                or not _own_history(state.view, state.input)):
            state = AgentState(KNOWN_N, state.input, vw.new_leaf_view(state.input), None, state.n)
        return _within_cap(state)
    if state.algorithm == SELFSTAB:
        if state.view is None or state.flag not in (0, 1):
            return AgentState(SELFSTAB, state.input, vw.new_leaf_view(state.input), 0, state.n)
        return state
    if state.view is None:
        # baseline and finite-state are not self-stabilizing; restart cleanly
        return init(state.algorithm, state.input, state.n)
    return state


def make_message(state: AgentState) -> Message:
    return Message(vw.encode_view(state.view), state.flag, state.view)


def output_of(state: AgentState) -> FrequencyMap:
    view = state.view
    if view is None:
        return default_output(state.input)
    if state.algorithm == FINITE_STATE:
        out = dominant_cut_output(view)
    else:
        out = level_output(view)
    return out if out is not None else default_output(state.input)


def _same_dominant_cut(a: View, b: View) -> bool:
    ca = dominant_counting_cut(a)
    if ca is None:
        return False
    cb = dominant_counting_cut(b)
    if cb is None or len(ca) != len(cb):
        return False
    ua, ub = unique_children(a), unique_children(b)
    return {ua[d] for d in ca} == {ub[d] for d in cb}


def step_info(state: AgentState, received: Sequence[Message]) -> tuple[AgentState, FrequencyMap, StepInfo]:
    """One round; also reports which messages were discarded."""
    state = sanitize(state)
    alg = state.algorithm
    decoded = [decode_message(m, alg) for m in received]
    incoming = [d for d in decoded if d is not None]
    view = state.view
    info = StepInfo()

    if alg == BASELINE:
        view = vw.update(view, [v for v, _ in incoming], state.input)
        state = replace(state, view=view)

    elif alg == KNOWN_N:
        h = min([view.height] + [v.height for v, _ in incoming])
        view = vw.chop_to(view, h)
        view = vw.update(view, [vw.chop_to(v, h) for v, _ in incoming], state.input)
        # count on the full 2n-1 levels; only the stored state drops the oldest one
        out = output_of(replace(state, view=view))
        if view.height == 2 * state.n - 1:
            view = vw.chop(view)
        state = _within_cap(replace(state, view=view))
        return state, out, info

    elif alg == SELFSTAB:
        min_view, min_flag = min([(view, state.flag)] + incoming,
                                 key=lambda p: eval_pair(p[0], p[1]))
        h = min_view.height
        view = vw.chop_to(view, h)
        view = vw.update(view, [vw.chop_to(v, h) for v, _ in incoming], state.input)
        flag = 1 - min_flag
        if flag == 0:
            view = vw.chop(view)
        state = replace(state, view=view, flag=flag)

    else:
        mask = []
        relevant = []
        for d in decoded:
            drop = d is None or _same_dominant_cut(view, d[0])
            mask.append(drop)
            if not drop:
                relevant.append(d[0])
        updated = bool(relevant) or len(view) == 1
        if updated:
            view = vw.update(view, relevant, state.input)
            state = replace(state, view=view)
        info = StepInfo(tuple(mask), updated)

    return state, output_of(state), info


def step(state: AgentState, received: Sequence[Message]) -> tuple[AgentState, FrequencyMap]:
    state, out, _ = step_info(state, received)
    return state, out
