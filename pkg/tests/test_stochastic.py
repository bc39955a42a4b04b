import numpy as np
import pytest

from codiag.automaton import GLOBAL, from_edges
from codiag.observer import NORMAL, Certainty, classify, ordered
from codiag.stochastic import (
    ComponentNode,
    DivergentUnobservableMass,
    MarkovChain,
    build_stochastic_diagnoser,
    classify_recurrence,
    component_chain,
    is_diagnosable_centralized,
    recurrent_F_components,
    transient_escape_bound,
)

from oracles import est, matrix_entry_by_paths

F = frozenset({"F"})
TOL = 1e-9


def node(estimate, member):
    q, lab = member[:-1], member[-1]
    return ComponentNode(est(estimate), (q, F if lab == "F" else NORMAL))


# -- matrices ------------------------------------------------------------------

def test_complementary_site_one_matrices(plant1):
    sd = build_stochastic_diagnoser(plant1, 1)
    x0, big, six = est("0N"), est("2F,3F,4N,5F"), est("6F")
    np.testing.assert_allclose(sd.matrix(x0, "a"), [[0.35, 0.15, 0.2, 0.24]], atol=TOL)
    np.testing.assert_allclose(sd.matrix(x0, "b"), [[0.06]], atol=TOL)
    np.testing.assert_allclose(
        sd.matrix(big, "a"),
        [[0.7, 0.3, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 0.8]], atol=TOL,
    )
    np.testing.assert_allclose(sd.matrix(big, "b"), [[0], [0], [0], [0.2]], atol=TOL)
    np.testing.assert_allclose(sd.matrix(six, "a"), [[1.0]], atol=TOL)


def test_complementary_site_two_first_step(plant1):
    sd = build_stochastic_diagnoser(plant1, 2)
    np.testing.assert_allclose(
        sd.matrix(est("0N"), "a"), [[0.35, 0.2, 0.24, 0.06]], atol=TOL
    )


def test_blind_spot_matrices(plant4):
    s1 = build_stochastic_diagnoser(plant4, 1)
    np.testing.assert_allclose(
        s1.matrix(est("0N"), "a"), [[0.392, 0.168, 0.14, 0.24]], atol=TOL
    )
    s2 = build_stochastic_diagnoser(plant4, 2)
    np.testing.assert_allclose(s2.matrix(est("1N"), "a"), [[0.56, 0.24, 0.2]], atol=TOL)
    np.testing.assert_allclose(
        s2.matrix(est("2F,3F,4N"), "a"),
        [[0.7, 0.3, 0], [0, 1, 0], [0, 0, 1]], atol=TOL,
    )


def test_matrices_match_path_enumeration(plant1, plant4):
    for a in (plant1, plant4):
        for site in (GLOBAL, 1, 2):
            sd = build_stochastic_diagnoser(a, site)
            for (x, e), m in sd.matrices.items():
                y = sd.logical.step(x, e)
                for i, src in enumerate(ordered(x)):
                    for j, dst in enumerate(ordered(y)):
                        want = matrix_entry_by_paths(a, sd.mask, src, e, dst, 12)
                        assert m[i, j] == pytest.approx(want, abs=1e-6)


def test_rows_sum_to_one(plant1, plant4):
    for a in (plant1, plant4):
        for site in (GLOBAL, 1, 2):
            sd = build_stochastic_diagnoser(a, site)
            for x in sd.logical.states:
                np.testing.assert_allclose(sd.outgoing_mass(x), 1.0, atol=TOL)
            np.testing.assert_allclose(sd.chain.matrix.sum(axis=1), 1.0, atol=TOL)


def test_trapped_local_mass_is_an_error():
    # b is seen by site 2 only; at site 1 state 1 loops on it forever
    a = from_edges(
        [0, 1], 0, {"a": ({1, 2}, None), "b": ({2}, None), "f": ((), "F")},
        [(0, "f", 1, 1.0), (1, "b", 1, 1.0)], sites=2,
    )
    with pytest.raises(DivergentUnobservableMass):
        build_stochastic_diagnoser(a, 1)
    build_stochastic_diagnoser(a, 2)


# -- component chain and recurrence --------------------------------------------

def test_single_state_chain():
    a = from_edges([0], 0, {"a": ({1}, None)}, [(0, "a", 0, 1.0)], sites=1)
    chain = component_chain(build_stochastic_diagnoser(a, 1))
    assert len(chain.nodes) == 1
    assert chain.matrix.tolist() == [[1.0]]


def test_absorbing_tail():
    chain = MarkovChain(("x", "y"), np.array([[0.0, 1.0], [0.0, 1.0]]))
    rep = classify_recurrence(chain)
    assert rep.recurrent == {"y"} and rep.transient == {"x"}


def test_recurrent_components_of_complementary_plant(plant1):
    s1 = build_stochastic_diagnoser(plant1, 1)
    assert recurrent_F_components(s1, "F") == {
        node("6F", "6F"), node("2F,3F,4N,5F", "3F"),
    }
    s2 = build_stochastic_diagnoser(plant1, 2)
    assert recurrent_F_components(s2, "F") == {
        node("3F", "3F"), node("2F,4N,5F,6F", "6F"),
    }


def test_recurrent_components_of_blind_spot_plant(plant4):
    s2 = build_stochastic_diagnoser(plant4, 2)
    rec = s2.recurrence.recurrent
    assert node("5F,6F", "6F") in rec
    assert node("2F,3F,4N", "3F") in rec


def test_failure_free_plant_has_no_recurrent_failures():
    a = from_edges([0], 0, {"a": ({1}, None)}, [(0, "a", 0, 1.0)], sites=1)
    assert recurrent_F_components(build_stochastic_diagnoser(a, 1), "F") == frozenset()


def test_centralized_checks(plant1, plant4):
    assert not is_diagnosable_centralized(build_stochastic_diagnoser(plant1, 1), "F")
    assert not is_diagnosable_centralized(build_stochastic_diagnoser(plant1, 2), "F")
    assert is_diagnosable_centralized(build_stochastic_diagnoser(plant1, GLOBAL), "F")
    assert not is_diagnosable_centralized(build_stochastic_diagnoser(plant4, GLOBAL), "F")


def test_recurrent_failures_stay_failed(plant1, plant4):
    """Everything reachable from a recurrent F component in an uncertain
    estimate bears F and sits in an estimate that is not F-free."""
    for a in (plant1, plant4):
        for site in (GLOBAL, 1, 2):
            sd = build_stochastic_diagnoser(a, site)
            chain = sd.chain
            for start in recurrent_F_components(sd, "F"):
                if classify(start.estimate, "F") is not Certainty.F_UNCERTAIN:
                    continue
                seen, stack = {start}, [start]
                while stack:
                    n = stack.pop()
                    assert "F" in n.member[1]
                    assert classify(n.estimate, "F") is not Certainty.F_FREE
                    for m in chain.successors(n):
                        if m not in seen:
                            seen.add(m)
                            stack.append(m)


# -- transient escape ----------------------------------------------------------

def test_escape_bound_closed_forms(plant1):
    s1 = build_stochastic_diagnoser(plant1, 1)
    s2 = build_stochastic_diagnoser(plant1, 2)
    for n in range(13):
        assert transient_escape_bound(s1.chain, node("2F,3F,4N,5F", "5F"), n) == pytest.approx(0.8**n, abs=TOL)
        assert transient_escape_bound(s2.chain, node("2F,4N,5F,6F", "2F"), n) == pytest.approx(0.7**n, abs=TOL)


def test_escape_bound_zero_on_recurrent_and_monotone(plant1, plant4):
    for a in (plant1, plant4):
        for site in (1, 2):
            sd = build_stochastic_diagnoser(a, site)
            for n0 in sd.chain.nodes:
                values = [transient_escape_bound(sd.chain, n0, n) for n in range(15)]
                assert all(0 <= v <= 1 + TOL for v in values)
                assert all(b <= a_ + TOL for a_, b in zip(values, values[1:]))
                if n0 in sd.recurrence.recurrent:
                    assert values == [0.0] * 15
