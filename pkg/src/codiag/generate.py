"""Random admissible automata and random Markov chains for property testing."""
from __future__ import annotations

import numpy as np

from .automaton import EventDecl, StochasticAutomaton, Transition, validate
from .stochastic import DivergentUnobservableMass, MarkovChain, build_stochastic_diagnoser

FAILURE_EVENT = "f"
NORMAL_EVENTS = ("a", "b", "c", "d")


def _probabilities(rng, k):
    w = rng.uniform(0.1, 1.0, size=k)
    p = [round(float(x), 3) for x in w / w.sum()]
    p[-1] = round(1.0 - sum(p[:-1]), 12)
    return p


def _candidate(rng, sites, max_states, max_events):
    n_states = int(rng.integers(2, max_states + 1))
    states = tuple(str(i) for i in range(n_states))
    normal = NORMAL_EVENTS[: int(rng.integers(1, max_events))]
    events = [EventDecl(FAILURE_EVENT, frozenset(), "F")]
    for e in normal:
        if rng.random() < 0.2:
            obs = frozenset()
        else:
            obs = frozenset(s for s in range(1, sites + 1) if rng.random() < 0.6)
            if not obs:
                obs = frozenset({int(rng.integers(1, sites + 1))})
        events.append(EventDecl(e, obs, None))

    ids = [e.id for e in events]
    transitions = []
    for q in states:
        k = int(rng.integers(1, min(3, len(ids)) + 1))
        chosen = sorted(rng.choice(len(ids), size=k, replace=False).tolist())
        for i, p in zip(chosen, _probabilities(rng, k)):
            target = states[int(rng.integers(n_states))]
            transitions.append(Transition(q, ids[i], target, p))
    return StochasticAutomaton(states, "0", tuple(events), tuple(transitions), sites)


def admissible(automaton: StochasticAutomaton) -> bool:
    """Valid, failure reachable, and every site's diagnoser can be built."""
    if not validate(automaton).ok:
        return False
    reach, stack = {automaton.initial}, [automaton.initial]
    fails = False
    while stack:
        q = stack.pop()
        for t in automaton.out(q):
            fails |= t.event == FAILURE_EVENT
            if t.target not in reach:
                reach.add(t.target)
                stack.append(t.target)
    if not fails:
        return False
    try:
        for j in range(1, automaton.sites + 1):
            build_stochastic_diagnoser(automaton, j)
    except DivergentUnobservableMass:
        return False
    return True


def random_automaton(
    rng: np.random.Generator, sites: int = 2, max_states: int = 6, max_events: int = 5
) -> StochasticAutomaton:
    """A random admissible automaton with one failure class ``F``.

    Uses at most ``max_states`` states and ``max_events`` events, including
    the single failure event ``f``.
    """
    while True:
        a = _candidate(rng, sites, max_states, max_events)
        if admissible(a):
            return a


def random_corpus(size: int, sites: int, seed: int = 0, **kw) -> list:
    rng = np.random.default_rng(seed)
    return [random_automaton(rng, sites, **kw) for _ in range(size)]


def random_chain(rng: np.random.Generator, max_nodes: int = 12) -> MarkovChain:
    """Row-stochastic chain on integer nodes with sparse random support."""
    n = int(rng.integers(1, max_nodes + 1))
    matrix = np.zeros((n, n))
    for i in range(n):
        k = int(rng.integers(1, min(3, n) + 1))
        cols = rng.choice(n, size=k, replace=False)
        w = rng.uniform(0.05, 1.0, size=k)
        matrix[i, cols] = w / w.sum()
    return MarkovChain(tuple(range(n)), matrix)
