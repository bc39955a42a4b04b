"""Product codiagnoser and the cycle test for codiagnosability.

The codiagnoser runs the global logical diagnoser alongside every local
diagnoser.  On a globally observable event each site whose alphabet contains
the event steps; the other sites hold their estimate.  The language fails to
be codiagnosable exactly when the codiagnoser has a cycle through states that
are uncertain at every site and carry a uniform recurrent component bearing
the failure class.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import networkx as nx

from .automaton import StochasticAutomaton, ValidationReport, union_mask, validate
from .observer import (
    NORMAL,
    Certainty,
    LogicalDiagnoser,
    build_logical_diagnoser,
    classify,
    estimate_str,
    member_str,
    ordered,
)
from .stochastic import (
    ComponentNode,
    StochasticDiagnoser,
    build_stochastic_diagnoser,
    is_diagnosable_centralized,
)

EPS = "eps"


class UnreachableState(KeyError):
    pass


class ValidationFailed(ValueError):
    def __init__(self, report: ValidationReport):
        super().__init__(str(report))
        self.report = report


class CodiagEvent(NamedTuple):
    driver: str
    per_site: tuple     # the driver, or None where the site does not see it

    def render(self, eps=EPS) -> str:
        parts = [self.driver] + [e if e is not None else eps for e in self.per_site]
        return "(" + ",".join(parts) + ")"

    def __str__(self):
        return self.render()


class CodiagState(NamedTuple):
    global_estimate: frozenset
    local_estimates: tuple

    def __str__(self):
        parts = [self.global_estimate, *self.local_estimates]
        return "(" + ", ".join(estimate_str(x) for x in parts) + ")"


class Witness(NamedTuple):
    global_trace: tuple
    local_traces: tuple


@dataclass(frozen=True)
class UniformRecurrentF:
    state: CodiagState
    shared: tuple       # (plant state, label)
    witness: tuple      # plant trace

    def __str__(self):
        return f"{member_str(self.shared)} via {' '.join(self.witness) or 'eps'}"


@dataclass(frozen=True, eq=False)
class Codiagnoser:
    automaton: StochasticAutomaton
    global_diagnoser: LogicalDiagnoser
    local: tuple                    # StochasticDiagnoser per site
    initial: CodiagState
    states: tuple                   # breadth-first discovery order
    events: tuple
    transitions: dict               # (state, event) -> state
    witnesses: dict = field(repr=False)

    @property
    def sites(self) -> int:
        return len(self.local)

    @property
    def masks(self) -> list:
        return [sd.mask for sd in self.local]

    @cached_property
    def index(self) -> dict:
        return {s: i for i, s in enumerate(self.states)}

    def step(self, state, event):
        return self.transitions.get((state, event))

    def edges(self) -> list:
        return sorted(
            ((s, e, t) for (s, e), t in self.transitions.items()),
            key=lambda x: (self.index[x[0]], x[1].driver),
        )

    def graph(self, restriction=None) -> nx.DiGraph:
        keep = [s for s in self.states if restriction is None or restriction(s)]
        g = nx.DiGraph()
        g.add_nodes_from(self.index[s] for s in keep)
        kept = set(keep)
        for s, e, t in self.edges():
            if s in kept and t in kept:
                g.add_edge(self.index[s], self.index[t])
        return g

    @cached_property
    def joint_runs(self) -> dict:
        """Shortest plant trace reaching each (state, label, local estimates) triple.

        Breadth-first search over the synchronous product of the plant with
        every local diagnoser.
        """
        a = self.automaton
        start = (a.initial, NORMAL, tuple(sd.logical.initial for sd in self.local))
        runs = {start: ()}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            q, label, xs = node
            for t in a.out(q):
                cls = a.event_class(t.event)
                nxt_label = label | {cls} if cls else label
                nxt_xs = tuple(
                    sd.logical.step(x, t.event) if t.event in sd.mask.observable else x
                    for sd, x in zip(self.local, xs)
                )
                nxt = (t.target, nxt_label, nxt_xs)
                if nxt not in runs:
                    runs[nxt] = runs[node] + (t.event,)
                    queue.append(nxt)
        return runs


def codiag_events(global_mask, masks) -> list:
    return [
        CodiagEvent(e, tuple(e if e in m.observable else None for m in masks))
        for e in sorted(global_mask.observable)
    ]


def build_codiagnoser(automaton: StochasticAutomaton, masks=None) -> Codiagnoser:
    masks = list(masks) if masks is not None else automaton.site_masks()
    glob = build_logical_diagnoser(automaton, union_mask(masks))
    local = tuple(build_stochastic_diagnoser(automaton, m) for m in masks)
    events = codiag_events(glob.mask, masks)

    initial = CodiagState(glob.initial, tuple(sd.logical.initial for sd in local))
    states = [initial]
    witnesses = {initial: Witness((), tuple(() for _ in local))}
    transitions = {}
    queue = deque([initial])
    while queue:
        s = queue.popleft()
        for ev in events:
            g = glob.step(s.global_estimate, ev.driver)
            if g is None:
                continue
            xs = []
            for sd, x, e in zip(local, s.local_estimates, ev.per_site):
                xs.append(x if e is None else sd.logical.step(x, e))
            if any(x is None for x in xs):
                continue
            t = CodiagState(g, tuple(xs))
            transitions[(s, ev)] = t
            if t not in witnesses:
                w = witnesses[s]
                witnesses[t] = Witness(
                    w.global_trace + (ev.driver,),
                    tuple(
                        lt if e is None else lt + (e,)
                        for lt, e in zip(w.local_traces, ev.per_site)
                    ),
                )
                states.append(t)
                queue.append(t)
    return Codiagnoser(
        automaton, glob, local, initial, tuple(states), tuple(events), transitions, witnesses
    )


def reachability_witness(codiag: Codiagnoser, state: CodiagState) -> Witness:
    try:
        return codiag.witnesses[state]
    except KeyError:
        raise UnreachableState(state) from None


def codiag_certainty(state: CodiagState, failure_class: str):
    """Certainty shared by every local coordinate, or None when they disagree."""
    kinds = {classify(x, failure_class) for x in state.local_estimates}
    if len(kinds) == 1:
        kind = kinds.pop()
        if kind is not Certainty.F_FREE:
            return kind
    return None


def find_uniform_recurrent_F(
    codiag: Codiagnoser, state: CodiagState, failure_class: str
) -> set:
    shared = frozenset.intersection(*state.local_estimates)
    found = set()
    for member in ordered(shared):
        if failure_class not in member[1]:
            continue
        if not all(
            ComponentNode(x, member) in sd.recurrence.recurrent
            for sd, x in zip(codiag.local, state.local_estimates)
        ):
            continue
        omega = codiag.joint_runs.get((member[0], member[1], state.local_estimates))
        if omega is not None:
            found.add(UniformRecurrentF(state, member, omega))
    return found


def enumerate_cycles(codiag: Codiagnoser, restriction=None) -> list:
    """All simple cycles as [(state, event), ...], rotated to start at the earliest state."""
    g = codiag.graph(restriction)
    labels = {}
    for s, e, t in codiag.edges():
        labels.setdefault((codiag.index[s], codiag.index[t]), []).append(e)
    cycles = []
    for nodes in nx.simple_cycles(g):
        k = nodes.index(min(nodes))
        nodes = nodes[k:] + nodes[:k]
        hops = [labels[(a, b)] for a, b in zip(nodes, nodes[1:] + nodes[:1])]
        for choice in itertools.product(*hops):
            cycles.append([(codiag.states[i], e) for i, e in zip(nodes, choice)])
    cycles.sort(key=lambda c: [(codiag.index[s], e.driver) for s, e in c])
    return cycles


def _first_cycle(codiag: Codiagnoser, allowed: set):
    """Shortest cycle through the earliest allowed state that lies on one."""
    for s in codiag.states:
        if s not in allowed:
            continue
        parent = {}
        queue = deque()
        for ev in codiag.events:
            t = codiag.step(s, ev)
            if t == s:
                return [(s, ev)]
            if t in allowed and t not in parent:
                parent[t] = (s, ev)
                queue.append(t)
        while queue:
            u = queue.popleft()
            for ev in codiag.events:
                t = codiag.step(u, ev)
                if t is None or t not in allowed:
                    continue
                if t == s:
                    path = [(u, ev)]
                    while u != s:
                        u, e = parent[u]
                        path.append((u, e))
                    return path[::-1]
                if t not in parent:
                    parent[t] = (u, ev)
                    queue.append(t)
    return None


@dataclass(frozen=True)
class Verdict:
    codiagnosable: bool
    failure_class: str
    witness_cycle: tuple | None
    per_site_centralized: tuple
    qualifying: tuple = ()
    uniform: dict = field(default_factory=dict, repr=False)

    def __bool__(self):
        return self.codiagnosable


def default_failure_class(automaton: StochasticAutomaton) -> str:
    classes = automaton.failure_classes
    if len(classes) != 1:
        raise ValueError(f"pick a failure class explicitly; automaton has {list(classes)}")
    return classes[0]


def check_codiagnosability(
    automaton: StochasticAutomaton, masks=None, failure_class=None, codiag=None
) -> Verdict:
    masks = list(masks) if masks is not None else automaton.site_masks()
    report = validate(automaton, masks)
    if not report.ok:
        raise ValidationFailed(report)
    if failure_class is None:
        failure_class = default_failure_class(automaton)
    if codiag is None:
        codiag = build_codiagnoser(automaton, masks)
    centralized = tuple(is_diagnosable_centralized(sd, failure_class) for sd in codiag.local)

    if nx.is_directed_acyclic_graph(codiag.graph()):
        return Verdict(True, failure_class, None, centralized)

    uniform = {}
    qualifying = []
    for s in codiag.states:
        if codiag_certainty(s, failure_class) is not Certainty.F_UNCERTAIN:
            continue
        found = find_uniform_recurrent_F(codiag, s, failure_class)
        if found:
            uniform[s] = found
            qualifying.append(s)
    cycle = _first_cycle(codiag, set(qualifying))
    return Verdict(
        cycle is None,
        failure_class,
        tuple(cycle) if cycle else None,
        centralized,
        tuple(qualifying),
        uniform,
    )
