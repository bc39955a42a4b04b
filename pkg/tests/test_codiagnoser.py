import dataclasses

import pytest

from codiag.automaton import GLOBAL, from_edges, project, trace_probability
from codiag.codiagnoser import (
    CodiagEvent,
    CodiagState,
    UnreachableState,
    ValidationFailed,
    build_codiagnoser,
    check_codiagnosability,
    codiag_certainty,
    enumerate_cycles,
    find_uniform_recurrent_F,
    reachability_witness,
)
from codiag.observer import Certainty, build_logical_diagnoser
from codiag.stochastic import ComponentNode, build_stochastic_diagnoser, is_diagnosable_centralized

from oracles import est, trace_member

AAA = CodiagEvent("a", ("a", "a"))


def cstate(g, x1, x2):
    return CodiagState(est(g), (est(x1), est(x2)))


# the self-looping states listed for each plant
LOOPS_1 = [
    cstate("3F", "2F,3F,4N,5F", "3F"),
    cstate("2F,4N,5F", "2F,3F,4N,5F", "2F,4N,5F,6F"),
    cstate("6F", "6F", "2F,4N,5F,6F"),
]
LOOPS_4 = [
    cstate("2F,3F,4N", "2F,3F,4N,5F", "2F,3F,4N"),
    cstate("5F", "2F,3F,4N,5F", "5F,6F"),
    cstate("6F", "6F", "5F,6F"),
]


def test_complementary_codiagnoser_shape(plant1):
    g = build_codiagnoser(plant1)
    assert len(g.states) == 6
    assert {e.render() for e in g.events} == {"(a,a,a)", "(b,b,eps)", "(c,eps,c)"}
    assert len(g.edges()) == 10
    assert set(LOOPS_1) <= set(g.states)


def test_blind_spot_codiagnoser_shape(plant4):
    g = build_codiagnoser(plant4)
    assert len(g.states) == 6
    assert {e.render() for e in g.events} == {"(a,a,a)", "(b,b,eps)", "(d,eps,d)"}
    assert set(LOOPS_4) <= set(g.states)


def test_single_site_with_global_mask_has_equal_coordinates(plant1):
    g = build_codiagnoser(plant1, [dataclasses.replace(plant1.global_mask(), site=1)])
    for s in g.states:
        assert s.local_estimates == (s.global_estimate,)


def test_codiagnoser_is_deterministic(plant4):
    a, b = build_codiagnoser(plant4), build_codiagnoser(plant4)
    assert a.states == b.states
    assert [(s, e, t) for s, e, t in a.edges()] == [(s, e, t) for s, e, t in b.edges()]


# -- witnesses -----------------------------------------------------------------

def test_reachability_witness_examples(plant1, plant4):
    g1 = build_codiagnoser(plant1)
    w = reachability_witness(g1, cstate("3F", "2F,3F,4N,5F", "3F"))
    assert w.global_trace == ("a", "c")
    assert w.local_traces == (("a",), ("a", "c"))
    assert reachability_witness(g1, g1.initial).global_trace == ()
    g4 = build_codiagnoser(plant4)
    w = reachability_witness(g4, cstate("6F", "6F", "5F,6F"))
    assert w.global_trace == ("a", "b")
    assert w.local_traces == (("a", "b"), ("a",))
    with pytest.raises(UnreachableState):
        reachability_witness(g4, cstate("0N", "6F", "0N"))


def test_witness_strings_drive_every_coordinate(plant1, plant4):
    for a in (plant1, plant4):
        g = build_codiagnoser(a)
        for s in g.states:
            w = reachability_witness(g, s)
            assert g.global_diagnoser.run(w.global_trace) == s.global_estimate
            for sd, lt, x in zip(g.local, w.local_traces, s.local_estimates):
                assert project(w.global_trace, sd.mask) == lt
                assert sd.logical.run(lt) == x


# -- uniform recurrent components ----------------------------------------------

def check_omega(g, u):
    """omega is a plant trace reaching the shared member while every site
    observes its way to its own coordinate of the state."""
    a = g.automaton
    assert trace_probability(a, a.initial, u.witness) > 0
    assert trace_member(a, u.witness) == u.shared
    for sd, x in zip(g.local, u.state.local_estimates):
        assert sd.logical.run(project(u.witness, sd.mask)) == x
        assert ComponentNode(x, u.shared) in sd.recurrence.recurrent


def test_uniform_component_in_certain_loop_state(plant1):
    g = build_codiagnoser(plant1)
    state = LOOPS_1[0]
    found = find_uniform_recurrent_F(g, state, "F")
    assert {u.shared for u in found} == {("3", frozenset({"F"}))}
    for u in found:
        check_omega(g, u)
    # the trace d f c a also satisfies the same conditions
    other_omega = ("d", "f", "c", "a")
    assert trace_member(plant1, other_omega) == ("3", frozenset({"F"}))
    for sd, x in zip(g.local, state.local_estimates):
        assert sd.logical.run(project(other_omega, sd.mask)) == x


def test_no_uniform_component_in_uncertain_loop_state(plant1):
    g = build_codiagnoser(plant1)
    assert find_uniform_recurrent_F(g, LOOPS_1[1], "F") == set()


def test_uniform_component_in_blind_spot(plant4):
    g = build_codiagnoser(plant4)
    found = find_uniform_recurrent_F(g, LOOPS_4[0], "F")
    assert {u.shared for u in found} == {("3", frozenset({"F"}))}
    for u in found:
        check_omega(g, u)


def test_certainty_of_loop_states(plant1, plant4):
    assert codiag_certainty(LOOPS_1[0], "F") is None            # mixed across sites
    assert codiag_certainty(LOOPS_1[1], "F") is Certainty.F_UNCERTAIN
    assert codiag_certainty(LOOPS_1[2], "F") is None
    assert codiag_certainty(LOOPS_4[0], "F") is Certainty.F_UNCERTAIN
    assert codiag_certainty(cstate("0N", "0N", "0N"), "F") is None


# -- cycles and verdicts -------------------------------------------------------

def test_cycle_inventories(plant1, plant4):
    for a, loops in ((plant1, LOOPS_1), (plant4, LOOPS_4)):
        cycles = enumerate_cycles(build_codiagnoser(a))
        assert len(cycles) == 3
        assert {tuple(c) for c in cycles} == {((s, AAA),) for s in loops}


def test_acyclic_chain_has_no_cycles():
    # a live plant always cycles, so this one ends in a dead state
    a = from_edges(
        [0, 1, 2], 0, {"a": ({1}, None), "b": ({1}, None)},
        [(0, "a", 1, 1.0), (1, "b", 2, 1.0)], sites=1,
    )
    g = build_codiagnoser(a)
    assert len(g.states) == 3
    assert enumerate_cycles(g) == []


def test_verdict_complementary(plant1):
    v = check_codiagnosability(plant1)
    assert v.codiagnosable
    assert v.witness_cycle is None
    assert v.per_site_centralized == (False, False)


def test_verdict_blind_spot(plant4):
    v = check_codiagnosability(plant4)
    assert not v.codiagnosable
    assert v.witness_cycle == ((LOOPS_4[0], AAA),)
    assert v.per_site_centralized == (False, False)


def test_witness_cycle_states_qualify(plant4):
    v = check_codiagnosability(plant4)
    for s, _ in v.witness_cycle:
        assert codiag_certainty(s, "F") is Certainty.F_UNCERTAIN
        assert s in v.uniform and v.uniform[s]


def test_single_global_site_matches_centralized(plant1, plant4):
    for a in (plant1, plant4):
        m = dataclasses.replace(a.global_mask(), site=1)
        v = check_codiagnosability(a, [m])
        sd = build_stochastic_diagnoser(a, GLOBAL)
        assert v.codiagnosable == is_diagnosable_centralized(sd, "F")


def test_invalid_plant_is_rejected(plant1):
    ts = tuple(
        t._replace(probability=0.4) if (t.source, t.event) == ("0", "d") else t
        for t in plant1.transitions
    )
    with pytest.raises(ValidationFailed) as info:
        check_codiagnosability(dataclasses.replace(plant1, transitions=ts))
    assert info.value.report.kinds() == {"A1"}


def test_ambiguous_failure_class_needs_a_choice():
    a = from_edges(
        [0, 1], 0, {"a": ({1}, None), "f": ((), "F"), "g": ((), "G")},
        [(0, "f", 1, 0.5), (0, "g", 1, 0.5), (1, "a", 1, 1.0)], sites=1,
    )
    with pytest.raises(ValueError):
        check_codiagnosability(a)
    assert not check_codiagnosability(a, failure_class="F").codiagnosable
    assert not check_codiagnosability(a, failure_class="G").codiagnosable


def test_logical_diagnoser_reused_in_product(plant1):
    g = build_codiagnoser(plant1)
    assert set(g.global_diagnoser.states) == set(
        build_logical_diagnoser(plant1, plant1.global_mask()).states
    )
