from collections import deque

import pytest
from hypothesis import given, settings, strategies as st

from tinv import formula as F
from tinv.formula import parse_formula
from tinv.history import extend
from tinv.model import Component, Edge, component_actions, parse_model
from tinv.regex import (Restricted, branch_words, location_regex, loc_words, parse_regex, regex_invariant,
                        restricted_formula, show, to_restricted)
from tinv.solver import equivalent, implies
from tinv.zonegraph import component_invariant, reach

TWO_LOOPS = """
component TwoLoops
  location l0 initial
  location l1
  edge l0 -> l0 on a
  edge l0 -> l1 on b
  edge l1 -> l1 on c
  edge l1 -> l0 on b
end
system
  instance u TwoLoops
end
"""
TWO_LOOPS_COMP = parse_model(TWO_LOOPS).component_of("u")
H = lambda a: f"u.h_{a}"


def last_occurrence_words(comp, loc, alphabet=None):
    """Exact set of last-occurrence words of runs ending in ``loc``.

    Breadth-first search over (location, word) pairs; appending an action
    moves it to the end of the word, hidden actions leave it unchanged.
    """
    start = (comp.initial, ())
    seen = {start}
    todo = deque([start])
    while todo:
        l, w = todo.popleft()
        for e in comp.edges:
            if e.source != l:
                continue
            if e.action == "tau" or (alphabet is not None and e.action not in alphabet):
                nw = w
            else:
                nw = tuple(x for x in w if x != e.action) + (e.action,)
            nxt = (e.target, nw)
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return {w for l, w in seen if l == loc}


def test_location_regex_of_example():
    r = location_regex(TWO_LOOPS_COMP, "l1")
    assert r is not None
    rr = to_restricted(r)
    assert set(rr.branches) == {(frozenset({"a"}), "b", "c"), (frozenset({"a", "c"}), "b")}


def test_restricted_words_of_example():
    rr = to_restricted(location_regex(TWO_LOOPS_COMP, "l1"))
    words = {"".join(w) for w in loc_words(rr)}
    assert words == {"abc", "bc", "acb", "cab", "cb", "ab", "b"}
    assert words == {"".join(w) for w in last_occurrence_words(TWO_LOOPS_COMP, "l1")}


def test_formula_matches_zone_graph_disjunction():
    g = reach(extend(TWO_LOOPS_COMP))
    terms = [(l, z) for l, z in g.states if l == "l1"]
    assert len(terms) == 7 and len(g.states) == 16
    names = [("h0" if c == "h0" else f"u.{c}") for c in g.clocks]
    ci = component_invariant(g, "u", names)
    ours = regex_invariant(TWO_LOOPS_COMP, "u")
    assert equivalent(ours, ci, {"u": ("l0", "l1")})
    rr = to_restricted(location_regex(TWO_LOOPS_COMP, "l1"))
    phi = restricted_formula(rr, ("a", "b", "c"), H)
    assert isinstance(phi, F.Or) and len(phi.args) == 2
    zone_part = F.disj(*[F.conj(*[a for a in F.atoms(F.conj(F.At("u", l), x)) if isinstance(a, F.Diff)])
                         for l, x in _at_l1(ci)])
    assert equivalent(phi, zone_part)


def _at_l1(ci):
    for d in ci.args:
        parts = d.args if isinstance(d, F.And) else (d,)
        if F.At("u", "l1") in parts:
            yield "l1", F.conj(*[p for p in parts if not isinstance(p, F.At)])


def test_printed_word_encoding():
    printed = parse_formula(
        "h0 >= u.h_a and u.h_a >= u.h_b and u.h_b >= u.h_c"
        " or u.h_a > h0 and h0 >= u.h_b and u.h_b >= u.h_c"
        " or h0 >= u.h_a and u.h_a >= u.h_c and u.h_c >= u.h_b"
        " or h0 >= u.h_c and u.h_c >= u.h_a and u.h_a >= u.h_b"
        " or u.h_a > h0 and h0 >= u.h_c and u.h_c >= u.h_b"
        " or u.h_c > h0 and h0 >= u.h_a and u.h_a >= u.h_b"
        " or h0 >= u.h_b and u.h_c > h0 and u.h_a > h0")
    rr = to_restricted(location_regex(TWO_LOOPS_COMP, "l1"))
    assert equivalent(restricted_formula(rr, ("a", "b", "c"), H), printed)
    assert equivalent(restricted_formula(rr, ("a", "b", "c"), H, enumerate_words=True), printed)


def test_parse_and_show():
    r = parse_regex("(a+b.c*.b)*.b.c*")
    assert show(r).replace(".", "") in ("(a+bc*b)*bc*",)
    assert to_restricted(parse_regex("(a+bc*b)*bc*")).branches


def test_rule_examples():
    assert str(to_restricted(parse_regex("a.a"))) == "a"
    assert set(to_restricted(parse_regex("(a+b)*.a")).branches) == {(frozenset({"b"}), "a")}
    assert branch_words((frozenset({"a", "b"}), "c")) == {("c",), ("a", "c"), ("b", "c"), ("a", "b", "c"),
                                                         ("b", "a", "c")}


def _id_variable(n, resettable=True):
    lines = ["component IdVariable"]
    lines += [f"  location v{i}" + (" initial" if i == 0 else "") for i in range(n + 1)]
    first = 0 if resettable else 1
    lines += [f"  edge v{k} -> v{i} on s{i}" for k in range(n + 1) for i in range(first, n + 1)]
    lines += [f"  edge v{i} -> v{i} on e{i}" for i in range(n + 1)]
    lines += ["end", "system", "  instance id IdVariable", "end"]
    return parse_model("\n".join(lines) + "\n").component_of("id")


def test_fischer_projection_is_exact_and_tighter_than_printed():
    comp = _id_variable(2)
    proj = {"e1", "e0", "s1", "s0"}
    rr = to_restricted(location_regex(comp, "v1", proj))
    assert loc_words(rr) == last_occurrence_words(comp, "v1", proj)
    printed = to_restricted(parse_regex("(e0+s0)*.e1.s1+(e0+s0)*.s1.e1+(e0+e1)*.s0.s1+(e1+s0)*.e0.s1+s1"))
    ours, theirs = loc_words(rr), loc_words(printed)
    assert ours < theirs
    # e1 needs the variable at v1, so no run ends with e1 e0 s1 unless s0 came in between
    assert theirs - ours == {("e1", "e0", "s1"), ("s0", "e1", "e0", "s1")}
    h = lambda a: f"id.h_{a}"
    alpha = sorted(proj)
    assert implies(restricted_formula(rr, alpha, h), restricted_formula(printed, alpha, h))


def test_hidden_actions_use_minimal_automaton():
    # tau steps and projected-away actions are hidden; the result must not depend on them
    comp = _id_variable(3)
    for loc in ("v1", "v2"):
        proj = {"e0", f"s{loc[1]}", "s3"}
        rr = to_restricted(location_regex(comp, loc, proj))
        assert loc_words(rr) == last_occurrence_words(comp, loc, proj)


def test_regex_invariant_requires_untimed_component():
    from tinv.model import resolve_model
    with pytest.raises(ValueError):
        regex_invariant(resolve_model("worker_controller_1").component_of("ctrl"), "ctrl")


ACTIONS = ("a", "b", "c", "tau")


@st.composite
def automata(draw):
    n = draw(st.integers(1, 4))
    locs = tuple(f"q{i}" for i in range(n))
    edges = draw(st.lists(st.tuples(st.sampled_from(locs), st.sampled_from(ACTIONS), st.sampled_from(locs)),
                          min_size=1, max_size=7, unique=True))
    comp = Component("A", locs, (), tuple(Edge(s, a, (), frozenset(), t) for s, a, t in edges), {}, "q0", ())
    comp = Component("A", locs, (), comp.edges, {}, "q0", (), component_actions(comp))
    loc = draw(st.sampled_from(locs))
    proj = draw(st.one_of(st.none(), st.sets(st.sampled_from(ACTIONS[:3]), min_size=1)))
    return comp, loc, proj


@settings(max_examples=300, deadline=None)
@given(automata())
def test_location_words_match_exhaustive_search(case):
    comp, loc, proj = case
    alphabet = set(component_actions(comp)) if proj is None else proj
    rr = to_restricted(location_regex(comp, loc, alphabet))
    assert loc_words(rr) == last_occurrence_words(comp, loc, alphabet)


@settings(max_examples=100, deadline=None)
@given(automata())
def test_branch_and_word_encodings_agree(case):
    comp, loc, proj = case
    alphabet = sorted(set(component_actions(comp)) if proj is None else proj)
    if not alphabet:
        return
    rr = to_restricted(location_regex(comp, loc, set(alphabet)))
    h = lambda a: f"h_{a}"
    assert equivalent(restricted_formula(rr, alphabet, h), restricted_formula(rr, alphabet, h, True))
