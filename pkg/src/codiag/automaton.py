"""Stochastic automata, observation masks and trace-level queries.

A :class:`StochasticAutomaton` is a finite, deterministic machine whose
transitions carry occurrence probabilities.  Events may be observable at any
subset of the local sites; failure events are observable nowhere and belong to
one named failure class.

Traces are plain tuples of event ids.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, NamedTuple

import networkx as nx

A1_TOLERANCE = 1e-9
DEFAULT_ENUMERATION_BOUND = 16

#: site id used for the union of all site masks
GLOBAL = 0

Trace = tuple


class PrefixNotInLanguage(ValueError):
    """Raised when a trace has probability zero from the initial state."""


def state_key(state):
    """Sort key giving natural order for numeric ids ("2" < "10")."""
    s = str(state)
    return (0, int(s), "") if s.isdigit() else (1, 0, s)


def prefix_closure(trace):
    return [tuple(trace[:i]) for i in range(len(trace) + 1)]


def final_event(trace):
    return trace[-1] if trace else None


@dataclass(frozen=True)
class EventDecl:
    id: str
    observability: frozenset = frozenset()
    failure_class: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "observability", frozenset(self.observability))

    @property
    def is_failure(self) -> bool:
        return self.failure_class is not None


class Transition(NamedTuple):
    source: str
    event: str
    target: str
    probability: float


@dataclass(frozen=True)
class ObservationMask:
    site: int
    observable: frozenset

    def __post_init__(self):
        object.__setattr__(self, "observable", frozenset(self.observable))

    def __contains__(self, event) -> bool:
        return event in self.observable


@dataclass(frozen=True)
class StochasticAutomaton:
    """Finite stochastic automaton with per-site observability.

    ``transitions`` is kept as the raw edge list so that :func:`validate` can
    report nondeterminism; lookups go through the first edge declared for a
    ``(state, event)`` pair.  ``a2_exempt`` lists events introduced by
    :func:`make_deadlock_free`, which are ignored by the unobservable-cycle
    check.
    """

    states: tuple
    initial: str
    events: tuple
    transitions: tuple
    sites: int = 1
    a2_exempt: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(
            self, "transitions", tuple(Transition(*t) for t in self.transitions)
        )
        object.__setattr__(self, "a2_exempt", frozenset(self.a2_exempt))

    @cached_property
    def _step(self) -> dict:
        index = {}
        for t in self.transitions:
            index.setdefault((t.source, t.event), t)
        return index

    @cached_property
    def _out(self) -> dict:
        out = defaultdict(list)
        for t in self._step.values():
            out[t.source].append(t)
        return {q: tuple(sorted(ts, key=lambda t: t.event)) for q, ts in out.items()}

    @cached_property
    def _events_by_id(self) -> dict:
        return {e.id: e for e in self.events}

    def event(self, event_id) -> EventDecl:
        return self._events_by_id[event_id]

    def step(self, state, event) -> Transition | None:
        return self._step.get((state, event))

    def out(self, state) -> tuple:
        """Outgoing transitions of ``state`` sorted by event id."""
        return self._out.get(state, ())

    def event_class(self, event) -> str | None:
        decl = self._events_by_id.get(event)
        return decl.failure_class if decl else None

    @property
    def failure_classes(self) -> tuple:
        return tuple(sorted({e.failure_class for e in self.events if e.is_failure}))

    def mask(self, site) -> ObservationMask:
        if site == GLOBAL:
            return self.global_mask()
        return ObservationMask(
            site, frozenset(e.id for e in self.events if site in e.observability)
        )

    def site_masks(self) -> list:
        return [self.mask(i) for i in range(1, self.sites + 1)]

    def global_mask(self) -> ObservationMask:
        return ObservationMask(
            GLOBAL, frozenset(e.id for e in self.events if e.observability)
        )

    def run(self, trace, start=None):
        """State reached by ``trace`` from ``start``, or None if undefined."""
        q = self.initial if start is None else start
        for e in trace:
            t = self._step.get((q, e))
            if t is None:
                return None
            q = t.target
        return q


def union_mask(masks) -> ObservationMask:
    observable = frozenset().union(*(m.observable for m in masks))
    return ObservationMask(GLOBAL, observable)


@dataclass(frozen=True)
class Violation:
    kind: str
    where: str
    detail: str

    def __str__(self):
        return f"{self.kind} at {self.where}: {self.detail}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set:
        return {v.kind for v in self.violations}

    def __str__(self):
        if self.ok:
            return "no violations"
        return "\n".join(str(v) for v in self.violations)


def validate(automaton: StochasticAutomaton, masks=None) -> ValidationReport:
    """Check structure, determinism, liveness (A1) and the unobservable-cycle bound (A2).

    A2 is checked under the union of ``masks`` (default: the automaton's own
    site masks).
    """
    found = []
    states = set(automaton.states)
    events = {e.id: e for e in automaton.events}

    if len(events) != len(automaton.events):
        found.append(Violation("duplicate-event", "events", "event ids must be unique"))
    if automaton.initial not in states:
        found.append(Violation("unknown-state", "init", f"{automaton.initial!r}"))

    for e in automaton.events:
        if e.is_failure and e.observability:
            found.append(Violation(
                "failure-observable", e.id,
                f"failure event observable at sites {sorted(e.observability)}",
            ))
        bad = [s for s in e.observability if not 1 <= s <= automaton.sites]
        if bad:
            found.append(Violation("site-range", e.id, f"sites {sorted(bad)} out of 1..{automaton.sites}"))

    seen = set()
    totals = defaultdict(float)
    for t in automaton.transitions:
        where = f"{t.source} -{t.event}-> {t.target}"
        if t.source not in states or t.target not in states:
            found.append(Violation("unknown-state", where, "undeclared state"))
        if t.event not in events:
            found.append(Violation("unknown-event", where, "undeclared event"))
        if (t.source, t.event) in seen:
            found.append(Violation("determinism", where, "second target for the same (state, event)"))
        seen.add((t.source, t.event))
        if not 0.0 < t.probability <= 1.0:
            found.append(Violation("probability", where, f"{t.probability} not in (0, 1]"))
        totals[t.source] += t.probability

    for q in automaton.states:
        total = totals.get(q, 0.0)
        if abs(total - 1.0) > A1_TOLERANCE:
            found.append(Violation("A1", str(q), f"outgoing probability sums to {total:.12g}"))

    if not {"unknown-state", "unknown-event"} & {v.kind for v in found}:
        mask = union_mask(masks) if masks is not None else automaton.global_mask()
        if not check_no_unobservable_cycles(automaton, mask):
            found.append(Violation("A2", "global", "cycle of globally unobservable events"))
    return ValidationReport(tuple(found))


def unobservable_graph(automaton: StochasticAutomaton, mask: ObservationMask) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(automaton.states)
    for t in automaton.transitions:
        if t.event not in mask and t.event not in automaton.a2_exempt:
            g.add_edge(t.source, t.target)
    return g


def check_no_unobservable_cycles(automaton: StochasticAutomaton, mask: ObservationMask) -> bool:
    return nx.is_directed_acyclic_graph(unobservable_graph(automaton, mask))


@dataclass(frozen=True)
class DeterministicAutomaton:
    """Logical skeleton of a stochastic automaton (partial transition function)."""

    states: tuple
    events: tuple
    initial: str
    delta: dict
    failure_class: dict

    def __hash__(self):
        return hash((self.states, self.events, self.initial, tuple(sorted(self.delta.items()))))

    def step(self, state, event):
        return self.delta.get((state, event))

    def edges(self) -> set:
        return {(q, e, r) for (q, e), r in self.delta.items()}

    @cached_property
    def _adjacency(self) -> dict:
        adj = defaultdict(list)
        for (q, e), r in sorted(self.delta.items(), key=lambda item: item[0][1]):
            adj[q].append((e, r))
        return dict(adj)

    def out(self, state) -> list:
        """(event, target) pairs leaving ``state``, sorted by event."""
        return self._adjacency.get(state, [])

    def accepts(self, trace) -> bool:
        q = self.initial
        for e in trace:
            q = self.delta.get((q, e))
            if q is None:
                return False
        return True


def deduce_dfa(automaton: StochasticAutomaton) -> DeterministicAutomaton:
    delta = {
        (t.source, t.event): t.target
        for t in automaton._step.values()
        if t.probability > 0
    }
    return DeterministicAutomaton(
        states=automaton.states,
        events=tuple(e.id for e in automaton.events),
        initial=automaton.initial,
        delta=delta,
        failure_class={e.id: e.failure_class for e in automaton.events},
    )


def project(trace, mask: ObservationMask) -> tuple:
    return tuple(e for e in trace if e in mask.observable)


def trace_probability(automaton: StochasticAutomaton, start, trace) -> float:
    p = 1.0
    q = start
    for e in trace:
        t = automaton.step(q, e)
        if t is None:
            return 0.0
        p *= t.probability
        q = t.target
    return p


def _paths(automaton, state, n) -> Iterator:
    """Yield (trace, probability, end state) for every length-n run from ``state``."""
    if n == 0:
        yield (), 1.0, state
        return
    for t in automaton.out(state):
        for rest, p, end in _paths(automaton, t.target, n - 1):
            yield (t.event,) + rest, t.probability * p, end


def enumerate_continuations(
    automaton: StochasticAutomaton, prefix, n: int, bound: int = DEFAULT_ENUMERATION_BOUND
) -> dict:
    """Every length-``n`` continuation of ``prefix`` with its conditional probability."""
    if n > bound:
        raise ValueError(f"length {n} exceeds enumeration bound {bound}")
    prefix = tuple(prefix)
    if trace_probability(automaton, automaton.initial, prefix) == 0.0:
        raise PrefixNotInLanguage(prefix)
    start = automaton.run(prefix)
    return {t: p for t, p, _ in _paths(automaton, start, n)}


def language(automaton: StochasticAutomaton, max_len: int) -> Iterator:
    """All traces of the generated language with length <= ``max_len`` (depth-first)."""
    stack = [((), automaton.initial)]
    while stack:
        trace, q = stack.pop()
        yield trace
        if len(trace) < max_len:
            for t in reversed(automaton.out(q)):
                stack.append((trace + (t.event,), t.target))


def failure_seeds(automaton: StochasticAutomaton, failure_class: str, max_len: int) -> set:
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    return {
        s for s in language(automaton, max_len)
        if s and automaton.event_class(s[-1]) == failure_class
    }


def make_deadlock_free(automaton: StochasticAutomaton, fresh: str = "tau") -> StochasticAutomaton:
    """Give every deadlocked state a probability-one self-loop on one new unobservable event."""
    sinks = [q for q in automaton.states if not automaton.out(q)]
    if not sinks:
        return automaton
    taken = {e.id for e in automaton.events}
    name = fresh
    while name in taken:
        name += "'"
    loops = tuple(Transition(q, name, q, 1.0) for q in sinks)
    return StochasticAutomaton(
        states=automaton.states,
        initial=automaton.initial,
        events=automaton.events + (EventDecl(name),),
        transitions=automaton.transitions + loops,
        sites=automaton.sites,
        a2_exempt=automaton.a2_exempt | {name},
    )


def is_live(automaton: StochasticAutomaton) -> bool:
    return all(automaton.out(q) for q in automaton.states)


def from_edges(states, initial, events, edges: Iterable, sites: int) -> StochasticAutomaton:
    """Convenience constructor; ``events`` maps id -> (sites, failure class or None)."""
    decls = tuple(EventDecl(eid, frozenset(obs), cls) for eid, (obs, cls) in events.items())
    return StochasticAutomaton(
        states=tuple(str(s) for s in states),
        initial=str(initial),
        events=decls,
        transitions=tuple(Transition(str(a), e, str(b), float(p)) for a, e, b, p in edges),
        sites=sites,
    )
