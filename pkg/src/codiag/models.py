"""Two seven-state plants used throughout the tests and notebooks.

Both have events ``a, b, c, d`` plus an unobservable ``uo`` and the failure
``f`` (class ``F``), and two sites that share ``a``.

``complementary_sites_plant``
    Site 1 sees ``{a, b}``, site 2 sees ``{a, c}``.  Neither site can
    diagnose the failure alone, but together they can.

``blind_spot_plant``
    Site 1 sees ``{a, b}``, site 2 sees ``{a, d}``.  After ``d f`` the
    ``c`` branch is invisible to both sites, so the plant is not
    codiagnosable.
"""
from __future__ import annotations

from .automaton import StochasticAutomaton, from_edges

_STATES = range(7)


def complementary_sites_plant() -> StochasticAutomaton:
    events = {
        "a": ({1, 2}, None),
        "b": ({1}, None),
        "c": ({2}, None),
        "d": (set(), None),
        "uo": (set(), None),
        "f": (set(), "F"),
    }
    edges = [
        (0, "d", 1, 0.5),
        (0, "uo", 4, 0.2),
        (0, "f", 5, 0.3),
        (1, "f", 2, 1.0),
        (2, "a", 2, 0.7),
        (2, "c", 3, 0.3),
        (3, "a", 3, 1.0),
        (4, "a", 4, 1.0),
        (5, "a", 5, 0.8),
        (5, "b", 6, 0.2),
        (6, "a", 6, 1.0),
    ]
    return from_edges(_STATES, 0, events, edges, sites=2)


def blind_spot_plant() -> StochasticAutomaton:
    events = {
        "a": ({1, 2}, None),
        "b": ({1}, None),
        "c": (set(), None),
        "d": ({2}, None),
        "uo": (set(), None),
        "f": (set(), "F"),
    }
    edges = [
        (0, "d", 1, 0.7),
        (0, "f", 5, 0.3),
        (1, "f", 2, 0.8),
        (1, "uo", 4, 0.2),
        (2, "a", 2, 0.7),
        (2, "c", 3, 0.3),
        (3, "a", 3, 1.0),
        (4, "a", 4, 1.0),
        (5, "a", 5, 0.8),
        (5, "b", 6, 0.2),
        (6, "a", 6, 1.0),
    ]
    return from_edges(_STATES, 0, events, edges, sites=2)
