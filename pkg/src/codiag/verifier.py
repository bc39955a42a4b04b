"""Behavioural check of codiagnosability through non-detection probabilities.

For a failure trace ``s`` and a site ``j``, the non-detection probability at
horizon ``n`` is the probability that a length-``n`` continuation ``t`` leaves
the site's condition function at 0 after observing ``P_j(st)``.  Continuations
are drawn from the per-state event probabilities.

``exact_nondetection`` propagates the joint distribution of (plant state,
site estimate) forward, so it is exact at any horizon.  ``sample_nondetection``
estimates the same quantity by simulation.  Each trial uses its own Philox
stream keyed by ``(seed, trial index)``, so results do not depend on the order
or grouping in which trials run.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache

import networkx as nx
import numpy as np

from .automaton import (
    DEFAULT_ENUMERATION_BOUND,
    PrefixNotInLanguage,
    enumerate_continuations,
    StochasticAutomaton,
    failure_seeds,
    project,
    trace_probability,
)
from .observer import Certainty, build_logical_diagnoser, classify

DEFAULT_THRESHOLD = 0.01
DEFAULT_SEED_LENGTH = 4


@dataclass(frozen=True)
class NonDetectionQuery:
    seed: tuple
    horizon: int
    site: int
    failure_class: str = "F"

    def __post_init__(self):
        object.__setattr__(self, "seed", tuple(self.seed))
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")


@lru_cache(maxsize=128)
def _site_diagnoser(automaton: StochasticAutomaton, site: int):
    return build_logical_diagnoser(automaton, automaton.mask(site))


def _check_seed(automaton, query):
    if trace_probability(automaton, automaton.initial, query.seed) == 0.0:
        raise PrefixNotInLanguage(query.seed)
    if not query.seed or automaton.event_class(query.seed[-1]) != query.failure_class:
        raise ValueError(f"seed {query.seed!r} does not end in a {query.failure_class} failure")


def _undetected(estimate, failure_class) -> bool:
    return classify(estimate, failure_class) is not Certainty.F_CERTAIN


def exact_nondetection(automaton: StochasticAutomaton, query: NonDetectionQuery) -> float:
    _check_seed(automaton, query)
    return nondetection_series(automaton, query.seed, query.site, query.horizon, query.failure_class)[-1]


def nondetection_series(automaton, seed, site, max_n, failure_class) -> list:
    """Exact non-detection probability for every horizon 0..max_n."""
    diag = _site_diagnoser(automaton, site)
    mask = diag.mask
    x = diag.run(project(seed, mask))
    dist = {(automaton.run(seed), x): 1.0}
    series = []
    for n in range(max_n + 1):
        series.append(sum(p for (_, x), p in dist.items() if _undetected(x, failure_class)))
        if n == max_n:
            break
        nxt = defaultdict(float)
        for (q, x), p in dist.items():
            for t in automaton.out(q):
                y = diag.step(x, t.event) if t.event in mask.observable else x
                nxt[(t.target, y)] += p * t.probability
        dist = nxt
    return series


def limit_nondetection(automaton, seed, site, failure_class="F") -> float:
    """Limit of the non-detection probability as the horizon grows.

    Certainty is absorbing, so every closed class of the (plant state, site
    estimate) chain is either detected throughout or never detected.  The
    limit is the probability of absorption into a never-detected class.
    """
    _check_seed(automaton, NonDetectionQuery(seed, 0, site, failure_class))
    diag = _site_diagnoser(automaton, site)
    mask = diag.mask
    start = (automaton.run(seed), diag.run(project(seed, mask)))
    index = {start: 0}
    nodes = [start]
    edges = defaultdict(float)
    for q, x in nodes:        # grows while iterating
        i = index[(q, x)]
        for t in automaton.out(q):
            nxt = (t.target, diag.step(x, t.event) if t.event in mask.observable else x)
            if nxt not in index:
                index[nxt] = len(nodes)
                nodes.append(nxt)
            edges[(i, index[nxt])] += t.probability

    g = nx.DiGraph()
    g.add_nodes_from(range(len(nodes)))
    g.add_edges_from(edges)
    cond = nx.condensation(g)
    undetected = np.zeros(len(nodes))
    closed = np.zeros(len(nodes), dtype=bool)
    for c in cond.nodes:
        if cond.out_degree(c) == 0:
            members = cond.nodes[c]["members"]
            closed[list(members)] = True
            if any(_undetected(nodes[i][1], failure_class) for i in members):
                undetected[list(members)] = 1.0
    open_ = np.flatnonzero(~closed)
    if open_.size == 0:
        return float(undetected[0])
    matrix = np.zeros((len(nodes), len(nodes)))
    for (i, j), p in edges.items():
        matrix[i, j] = p
    sub = matrix[np.ix_(open_, open_)]
    rhs = matrix[open_][:, closed] @ undetected[closed]
    h = undetected.copy()
    h[open_] = np.linalg.solve(np.eye(open_.size) - sub, rhs)
    return float(h[0])


def _trial_generator(seed_rng: int, trial: int) -> np.random.Generator:
    key = (int(trial) << 64) | (int(seed_rng) & 0xFFFFFFFFFFFFFFFF)
    return np.random.Generator(np.random.Philox(key=key))


def _simulate(automaton, seed, site, max_n, failure_class, trials, seed_rng) -> np.ndarray:
    """Boolean matrix ``undetected[trial, n]`` for horizons 0..max_n.

    Trial ``i`` consumes the first ``n`` uniforms of its own stream, so the
    column for horizon ``n`` is identical to a separate run at that horizon.
    """
    diag = _site_diagnoser(automaton, site)
    mask = diag.mask
    start_q = automaton.run(seed)
    start_x = diag.run(project(seed, mask))
    undetected = np.zeros((trials, max_n + 1), dtype=bool)
    verdict = {}
    for trial in range(trials):
        q, x = start_q, start_x
        draws = _trial_generator(seed_rng, trial).random(max_n) if max_n else ()
        row = undetected[trial]
        for n in range(max_n + 1):
            hit = verdict.get(x)
            if hit is None:
                hit = verdict[x] = _undetected(x, failure_class)
            row[n] = hit
            if n == max_n:
                break
            t = _draw(automaton.out(q), draws[n])
            if t.event in mask.observable:
                x = diag.step(x, t.event)
            q = t.target
    return undetected


def sample_nondetection(
    automaton: StochasticAutomaton, query: NonDetectionQuery, trials: int, seed_rng: int
) -> tuple:
    """Monte-Carlo estimate and its standard error."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    _check_seed(automaton, query)
    hits = _simulate(
        automaton, query.seed, query.site, query.horizon, query.failure_class, trials, seed_rng
    )[:, query.horizon]
    p = float(hits.mean())
    return p, math.sqrt(p * (1 - p) / trials)


def _draw(transitions, u):
    acc = 0.0
    for t in transitions:
        acc += t.probability
        if u < acc:
            return t
    return transitions[-1]


def witness_probability(automaton: StochasticAutomaton, seed, continuation) -> float:
    seed = tuple(seed)
    if trace_probability(automaton, automaton.initial, seed) == 0.0:
        raise PrefixNotInLanguage(seed)
    full = seed + tuple(continuation)
    if trace_probability(automaton, automaton.initial, full) == 0.0:
        raise PrefixNotInLanguage(full)
    return trace_probability(automaton, automaton.run(seed), continuation)


@dataclass
class DecayCurve:
    seed: tuple
    per_site: dict                     # site -> [(n, p), ...]
    min_envelope: list                 # [(n, min over sites), ...]
    std_error: dict = field(default_factory=dict)   # sampled mode only

    def final(self) -> float:
        return self.min_envelope[-1][1]


def decay_curve(
    automaton: StochasticAutomaton,
    sites=None,
    failure_class: str = "F",
    max_n: int = 25,
    mode: str = "exact",
    trials: int = 10000,
    seed_rng: int = 0,
    seed_length: int = DEFAULT_SEED_LENGTH,
) -> dict:
    """Per-seed decay curves for every failure seed of length <= ``seed_length``."""
    if mode not in ("exact", "sampled"):
        raise ValueError(f"unknown mode {mode!r}")
    sites = list(sites) if sites is not None else list(range(1, automaton.sites + 1))
    seeds = sorted(failure_seeds(automaton, failure_class, seed_length), key=lambda s: (len(s), s))
    curves = {}
    for seed in seeds:
        per_site = {}
        errors = {}
        for j in sites:
            if mode == "exact":
                series = nondetection_series(automaton, seed, j, max_n, failure_class)
                per_site[j] = [(n, series[n]) for n in range(1, max_n + 1)]
            else:
                hits = _simulate(automaton, seed, j, max_n, failure_class, trials, seed_rng)
                ps = hits.mean(axis=0)
                per_site[j] = [(n, float(ps[n])) for n in range(1, max_n + 1)]
                errors[j] = [
                    (n, math.sqrt(ps[n] * (1 - ps[n]) / trials)) for n in range(1, max_n + 1)
                ]
        envelope = [
            (n, min(per_site[j][n - 1][1] for j in sites)) for n in range(1, max_n + 1)
        ]
        curves[seed] = DecayCurve(seed, per_site, envelope, errors)
    return curves


def behaviourally_codiagnosable(curves: dict, threshold: float = DEFAULT_THRESHOLD) -> bool:
    return all(c.final() < threshold for c in curves.values())


def enumerated_nondetection(automaton, query, bound: int = DEFAULT_ENUMERATION_BOUND) -> float:
    """Same quantity as :func:`exact_nondetection`, by listing every continuation."""
    _check_seed(automaton, query)
    diag = _site_diagnoser(automaton, query.site)
    total = 0.0
    for t, p in enumerate_continuations(automaton, query.seed, query.horizon, bound).items():
        observed = project(query.seed + t, diag.mask)
        if _undetected(diag.run(observed), query.failure_class):
            total += p
    return total
