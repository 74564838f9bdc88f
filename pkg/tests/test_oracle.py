import pytest

from tinv import glue as G
from tinv import oracle as O
from tinv.model import parse_model, resolve_model
from tinv.formula import parse_formula


def glue_families(m):
    k = G.separation_constants(m)
    return {"E": G.build_E([a.actions for a in m.interactions]), "E*": G.build_Estar(m),
            "S*": G.build_Sstar(m, k)}


@pytest.mark.parametrize("name", ["worker_controller_1", "worker_controller_2",
                                  "temp_controller_1", "temp_controller_2"])
def test_glue_is_inductive_on_explored_states(name):
    m = resolve_model(name)
    ex = O.explore(m, history=True)
    assert ex.graph.complete and len(ex) > 0
    for fam, f in glue_families(m).items():
        assert O.violations(ex, f, limit=1) == [], fam
        assert O.inductive_violations(ex, f, limit=1) == [], fam


def test_running_example_is_safe():
    m = resolve_model("worker_controller_1")
    assert O.oracle_check(m, "safe")
    assert O.oracle_check(m, "deadlock")


def test_false_property_is_refuted():
    m = resolve_model("worker_controller_1")
    # the worker does leave l1
    assert not O.oracle_holds_invariant(m, parse_formula("w1@l1"), history=False)
    assert not O.oracle_holds_invariant(m, parse_formula("ctrl.x <= 4"), history=False)


BAD = """
component P
  clock x
  location idle initial
  location crit
  edge idle -> crit on enter
  edge crit -> idle on leave reset x
end
system
  instance p1 P
  instance p2 P
  interaction e1 = p1.enter
  interaction e2 = p2.enter
  interaction l1 = p1.leave
  interaction l2 = p2.leave
  property mutex: not (p1@crit and p2@crit)
end
"""


def test_injected_bad_state_is_found():
    m = parse_model(BAD)
    assert not O.oracle_check(m, "mutex")
    ex = O.explore(m)
    found = O.violations(ex, m.property("mutex"))
    assert found and "p1@crit" in O.render(ex, found)


def test_deadlock_detection():
    stuck = parse_model(BAD.replace("  interaction l1 = p1.leave\n  interaction l2 = p2.leave\n", ""))
    ex = O.explore(stuck)
    assert O.deadlock_states(ex)
    assert not O.oracle_check(stuck, "deadlock")


def test_exploration_limit_is_reported():
    m = resolve_model("temp_controller_2")
    ex = O.explore(m, max_states=3)
    assert not ex.graph.complete
    with pytest.raises(RuntimeError):
        O.oracle_check(m, "deadlock", max_states=3)


def test_initial_history_valuations_satisfy_glue():
    m = resolve_model("worker_controller_2")
    ex = O.explore(m, history=True)
    assert ex.initial_zones
    assert O.violations(ex, O.assumed_glue(m), limit=1) == []


def test_non_inductive_predicate_is_caught():
    m = resolve_model("worker_controller_1")
    ex = O.explore(m, history=True)
    found = O.inductive_violations(ex, parse_formula("w1@l1"), limit=1)
    assert found and found[0].transition == "ab1"
