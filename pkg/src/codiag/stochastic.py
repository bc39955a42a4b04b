"""Stochastic diagnosers and the component-level Markov chain.

For a source estimate ``x`` and an observable event ``e`` the transition
matrix has one row per member of ``x`` and one column per member of
``step(x, e)`` (both in canonical order).  The entry for ``(q, l) -> (q', l')``
is the total probability of all runs ``u e`` from ``q`` to ``q'`` where ``u``
is unobservable at the site and the run takes label ``l`` to ``l'``.  Sums over
unobservable strings are computed in closed form with ``(I - U)^-1`` where
``U`` is the one-step matrix of site-unobservable moves on (state, label)
pairs.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import networkx as nx
import numpy as np

from .automaton import GLOBAL, ObservationMask, StochasticAutomaton
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

ROW_TOLERANCE = 1e-9


class DivergentUnobservableMass(ValueError):
    """Some probability mass can stay unobservable at a site forever."""


class ComponentNode(NamedTuple):
    estimate: frozenset
    member: tuple

    def __str__(self):
        return f"({estimate_str(self.estimate)}, {member_str(self.member)})"


@dataclass(frozen=True)
class StochasticDiagnoser:
    logical: LogicalDiagnoser
    matrices: dict          # (estimate, event) -> ndarray
    initial_mass: np.ndarray

    def __hash__(self):
        return hash(self.logical)

    def __eq__(self, other):
        return self is other

    @property
    def mask(self) -> ObservationMask:
        return self.logical.mask

    @property
    def site(self) -> int:
        return self.logical.mask.site

    def matrix(self, estimate, event) -> np.ndarray:
        return self.matrices[(estimate, event)]

    def outgoing_mass(self, estimate) -> np.ndarray:
        """Per-member total over all events and targets (1 for every member)."""
        total = np.zeros(len(estimate))
        for e in self.logical.alphabet:
            m = self.matrices.get((estimate, e))
            if m is not None:
                total += m.sum(axis=1)
        return total

    @cached_property
    def chain(self) -> "MarkovChain":
        return component_chain(self)

    @cached_property
    def recurrence(self) -> "RecurrenceReport":
        return classify_recurrence(self.chain)


def _label_space(automaton: StochasticAutomaton) -> list:
    start = (automaton.initial, NORMAL)
    seen = {start}
    order = [start]
    queue = deque([start])
    while queue:
        q, label = queue.popleft()
        for t in automaton.out(q):
            cls = automaton.event_class(t.event)
            m = (t.target, label | {cls} if cls else label)
            if m not in seen:
                seen.add(m)
                order.append(m)
                queue.append(m)
    return order


def _check_escape(nodes, unobs_succ, escapes):
    """Raise if some node cannot reach a node that observes or stops."""
    pred = {n: [] for n in nodes}
    for a, succ in unobs_succ.items():
        for b in succ:
            pred[b].append(a)
    ok = set(escapes)
    queue = deque(ok)
    while queue:
        b = queue.popleft()
        for a in pred[b]:
            if a not in ok:
                ok.add(a)
                queue.append(a)
    trapped = [n for n in nodes if n not in ok]
    if trapped:
        shown = ", ".join(member_str(m) for m in trapped[:5])
        raise DivergentUnobservableMass(
            f"no observable escape from {shown}"
        )


def build_stochastic_diagnoser(automaton: StochasticAutomaton, site) -> StochasticDiagnoser:
    """Local stochastic diagnoser for ``site`` (a site id, ``GLOBAL`` or a mask)."""
    mask = site if isinstance(site, ObservationMask) else automaton.mask(site)
    logical = build_logical_diagnoser(automaton, mask)

    nodes = _label_space(automaton)
    index = {m: i for i, m in enumerate(nodes)}
    k = len(nodes)
    unobservable = np.zeros((k, k))
    observable = {e: np.zeros((k, k)) for e in logical.alphabet}
    unobs_succ = {m: set() for m in nodes}
    escapes = []
    for m in nodes:
        q, label = m
        i = index[m]
        for t in automaton.out(q):
            cls = automaton.event_class(t.event)
            target = (t.target, label | {cls} if cls else label)
            j = index[target]
            if t.event in mask.observable:
                observable[t.event][i, j] += t.probability
            else:
                unobservable[i, j] += t.probability
                unobs_succ[m].add(target)
        # a dead end stops the run, so only hidden loops can hold mass forever
        out = automaton.out(q)
        if not out or any(t.event in mask.observable for t in out):
            escapes.append(m)
    _check_escape(nodes, unobs_succ, escapes)

    # expected number of visits along site-unobservable moves
    visits = np.linalg.solve(np.eye(k) - unobservable, np.eye(k))
    reach = {e: visits @ b for e, b in observable.items()}

    matrices = {}
    for (x, e), y in logical.transitions.items():
        rows = [index[m] for m in ordered(x)]
        cols = [index[m] for m in ordered(y)]
        matrices[(x, e)] = reach[e][np.ix_(rows, cols)]
    return StochasticDiagnoser(logical, matrices, np.array([1.0]))


@dataclass(frozen=True)
class MarkovChain:
    nodes: tuple
    matrix: np.ndarray

    def __hash__(self):
        return hash(self.nodes)

    def __eq__(self, other):
        return self is other

    @cached_property
    def index(self) -> dict:
        return {n: i for i, n in enumerate(self.nodes)}

    def weight(self, a, b) -> float:
        return float(self.matrix[self.index[a], self.index[b]])

    def successors(self, node) -> dict:
        row = self.matrix[self.index[node]]
        return {self.nodes[j]: float(row[j]) for j in np.flatnonzero(row > 0)}

    def graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(len(self.nodes)))
        rows, cols = np.nonzero(self.matrix > 0)
        g.add_edges_from(zip(rows.tolist(), cols.tolist()))
        return g


def component_chain(sd: StochasticDiagnoser) -> MarkovChain:
    start = ComponentNode(sd.logical.initial, ordered(sd.logical.initial)[0])
    nodes = [start]
    index = {start: 0}
    edges = {}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        x = node.estimate
        row = ordered(x).index(node.member)
        for e in sd.logical.alphabet:
            y = sd.logical.step(x, e)
            if y is None:
                continue
            weights = sd.matrices[(x, e)][row]
            for member, w in zip(ordered(y), weights):
                if w <= 0:
                    continue
                target = ComponentNode(y, member)
                if target not in index:
                    index[target] = len(nodes)
                    nodes.append(target)
                    queue.append(target)
                key = (index[node], index[target])
                edges[key] = edges.get(key, 0.0) + float(w)
    matrix = np.zeros((len(nodes), len(nodes)))
    for (i, j), w in edges.items():
        matrix[i, j] = w
    return MarkovChain(tuple(nodes), matrix)


@dataclass(frozen=True)
class RecurrenceReport:
    recurrent: frozenset
    transient: frozenset


def classify_recurrence(chain: MarkovChain) -> RecurrenceReport:
    """A node is recurrent iff its strongly connected component is closed."""
    g = chain.graph()
    cond = nx.condensation(g)
    recurrent = set()
    for c in cond.nodes:
        if cond.out_degree(c) == 0:
            recurrent.update(cond.nodes[c]["members"])
    rec = frozenset(chain.nodes[i] for i in recurrent)
    return RecurrenceReport(rec, frozenset(chain.nodes) - rec)


def recurrent_F_components(sd: StochasticDiagnoser, failure_class: str) -> frozenset:
    return frozenset(
        n for n in sd.recurrence.recurrent if failure_class in n.member[1]
    )


def is_diagnosable_centralized(sd: StochasticDiagnoser, failure_class: str) -> bool:
    """Every estimate holding a recurrent component that bears the class is certain."""
    return all(
        classify(n.estimate, failure_class) is Certainty.F_CERTAIN
        for n in recurrent_F_components(sd, failure_class)
    )


def transient_escape_bound(chain: MarkovChain, node, n: int) -> float:
    """Mass still on transient nodes after ``n`` chain steps from ``node``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    transient = classify_recurrence(chain).transient
    mask = np.array([x in transient for x in chain.nodes])
    v = np.zeros(len(chain.nodes))
    v[chain.index[node]] = 1.0
    for _ in range(n):
        v = v @ chain.matrix
    return float(v[mask].sum())


def global_stochastic_diagnoser(automaton: StochasticAutomaton) -> StochasticDiagnoser:
    return build_stochastic_diagnoser(automaton, GLOBAL)
