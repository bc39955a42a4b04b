"""Logical diagnosers: label-augmented observers under an observation mask.

An estimate is a frozenset of ``(state, label)`` members, where a label is a
frozenset of failure-class names (the empty set is the normal label ``N``).
Diagnoser states are the estimates entered by an observable event: a member
``(q', l')`` belongs to ``step(x, e)`` when some member of ``x`` reaches
``q'`` through an unobservable string followed by ``e``.  Trailing
unobservable moves are not folded in; they are accounted for at the next
observable step.
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from functools import lru_cache

from .automaton import (
    DeterministicAutomaton,
    ObservationMask,
    StochasticAutomaton,
    deduce_dfa,
    state_key,
)

NORMAL = frozenset()


class UndefinedObservation(ValueError):
    """The observed string is not the projection of any trace of the plant."""


class Certainty(enum.Enum):
    F_CERTAIN = "certain"
    F_UNCERTAIN = "uncertain"
    F_FREE = "free"


def label_str(label) -> str:
    return "+".join(sorted(label)) if label else "N"


def member_str(member) -> str:
    state, label = member
    return f"{state}{label_str(label)}"


def member_key(member):
    state, label = member
    return state_key(state), len(label), tuple(sorted(label))


def ordered(estimate) -> list:
    """Members in canonical order: by state id, then label."""
    return sorted(estimate, key=member_key)


def estimate_str(estimate) -> str:
    return "{" + ",".join(member_str(m) for m in ordered(estimate)) + "}"


def estimate_key(estimate):
    return tuple(member_key(m) for m in ordered(estimate))


def initial_estimate(machine) -> frozenset:
    return frozenset({(machine.initial, NORMAL)})


@lru_cache(maxsize=64)
def _dfa(automaton: StochasticAutomaton) -> DeterministicAutomaton:
    return deduce_dfa(automaton)


def as_dfa(machine) -> DeterministicAutomaton:
    if isinstance(machine, StochasticAutomaton):
        return _dfa(machine)
    return machine


def _relabel(dfa, label, event):
    cls = dfa.failure_class.get(event)
    return label | {cls} if cls is not None else label


def unobservable_reach(machine, seed, mask: ObservationMask) -> frozenset:
    """All members reachable from ``seed`` by events outside ``mask``."""
    dfa = as_dfa(machine)
    seen = set(seed)
    queue = deque(seed)
    while queue:
        q, label = queue.popleft()
        for e, r in dfa.out(q):
            if e in mask.observable:
                continue
            m = (r, _relabel(dfa, label, e))
            if m not in seen:
                seen.add(m)
                queue.append(m)
    return frozenset(seen)


def observe(machine, estimate, event, mask: ObservationMask):
    """Estimate entered after observing ``event``; None when no run explains it."""
    dfa = as_dfa(machine)
    nxt = set()
    for q, label in unobservable_reach(dfa, estimate, mask):
        r = dfa.step(q, event)
        if r is not None:
            nxt.add((r, _relabel(dfa, label, event)))
    return frozenset(nxt) if nxt else None


@dataclass(frozen=True)
class LogicalDiagnoser:
    mask: ObservationMask
    initial: frozenset
    states: tuple        # breadth-first discovery order
    transitions: dict    # (estimate, event) -> estimate

    def __hash__(self):
        return hash((self.mask, self.initial, self.states))

    @property
    def alphabet(self) -> tuple:
        return tuple(sorted(self.mask.observable))

    def step(self, estimate, event):
        return self.transitions.get((estimate, event))

    def run(self, observed):
        x = self.initial
        for i, e in enumerate(observed):
            nxt = self.transitions.get((x, e))
            if nxt is None:
                raise UndefinedObservation(
                    f"{tuple(observed[:i + 1])!r} is not an observation of the plant"
                )
            x = nxt
        return x

    def edges(self) -> list:
        index = {x: i for i, x in enumerate(self.states)}
        return sorted(
            ((x, e, y) for (x, e), y in self.transitions.items()),
            key=lambda t: (index[t[0]], t[1]),
        )


def build_logical_diagnoser(machine, mask: ObservationMask) -> LogicalDiagnoser:
    dfa = as_dfa(machine)
    alphabet = sorted(mask.observable)
    x0 = initial_estimate(dfa)
    states = [x0]
    seen = {x0}
    transitions = {}
    queue = deque([x0])
    while queue:
        x = queue.popleft()
        for e in alphabet:
            y = observe(dfa, x, e, mask)
            if y is None:
                continue
            transitions[(x, e)] = y
            if y not in seen:
                seen.add(y)
                states.append(y)
                queue.append(y)
    return LogicalDiagnoser(mask, x0, tuple(states), transitions)


def classify(estimate, failure_class: str) -> Certainty:
    carrying = [failure_class in label for _, label in estimate]
    if all(carrying):
        return Certainty.F_CERTAIN
    if any(carrying):
        return Certainty.F_UNCERTAIN
    return Certainty.F_FREE


def condition_function(diagnoser: LogicalDiagnoser, observed, failure_class: str) -> int:
    """1 when every trace consistent with ``observed`` contains a failure of the class."""
    estimate = diagnoser.run(observed)
    return int(classify(estimate, failure_class) is Certainty.F_CERTAIN)
