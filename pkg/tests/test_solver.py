import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tinv import formula as F
from tinv.formula import parse_formula
from tinv.solver import BudgetExceeded, check_sat, cubes, equivalent, implies, is_sat, project

from strategies import CLOCKS, DOMAINS, formulas

HALF = np.arange(0, 8.5, 0.5)


def grid_sat(f, clocks=CLOCKS, domains=DOMAINS, values=HALF):
    insts = list(domains)
    for locs in itertools.product(*[domains[i] for i in insts]):
        ld = dict(zip(insts, locs))
        for vals in itertools.product(values, repeat=len(clocks)):
            if F.evaluate(f, ld, dict(zip(clocks, vals))):
                return True
    return False


def witness_ok(f, res, domains=DOMAINS):
    val = {c: res.valuation.get(c, 0) for c in CLOCKS}
    free = [i for i in domains if i not in res.locations]
    for locs in itertools.product(*[domains[i] for i in free]):
        ld = dict(res.locations)
        ld.update(zip(free, locs))
        if F.evaluate(f, ld, val):
            return True
    return False


@pytest.mark.parametrize("text, status", [
    ("true and not true", "unsat"),
    ("x >= 4 and x < 4", "unsat"),
    ("x - y <= 1 and y - z <= 1 and z - x < -2", "unsat"),
    ("x - y <= 1 and y - z <= 1 and z - x <= -2", "sat"),
    ("p@l0 and p@l1", "unsat"),
    ("not p@l0 and not p@l1 and not p@l2", "unsat"),
    ("(p@l0 or x < 1) and (not p@l0 or x > 3) and x = 2", "unsat"),
    ("x = 2 and y = 2 and x - y > 0", "unsat"),
    ("x < 0", "unsat"),
    ("x - y < 0 and y - x < 0", "unsat"),
    ("(x <= 1 or y <= 1) and x - y = 3", "sat"),
])
def test_small_cases(text, status):
    r = check_sat(parse_formula(text), DOMAINS)
    assert r.status == status
    if r.sat:
        assert witness_ok(parse_formula(text), r)


@settings(max_examples=80, deadline=None)
@given(formulas(max_leaves=6))
def test_agrees_with_half_integer_grid(f):
    r = check_sat(f, DOMAINS)
    if grid_sat(f):
        assert r.sat
    if r.sat:
        assert witness_ok(f, r)
    else:
        assert r.unsat


@settings(max_examples=80, deadline=None)
@given(formulas(max_leaves=10))
def test_agrees_with_z3(f):
    z3 = pytest.importorskip("z3")
    r = check_sat(f, DOMAINS)
    assert r.status in ("sat", "unsat")
    s = z3.Solver()
    clk = {c: z3.Real(c) for c in CLOCKS}
    loc = {(i, l): z3.Bool(f"{i}@{l}") for i, ls in DOMAINS.items() for l in ls}
    for c in clk.values():
        s.add(c >= 0)
    for i, ls in DOMAINS.items():
        s.add(z3.PbEq([(loc[(i, l)], 1) for l in ls], 1))

    def enc(g):
        if isinstance(g, F.Const):
            return z3.BoolVal(g.value)
        if isinstance(g, F.At):
            return loc[(g.inst, g.loc)]
        if isinstance(g, F.Diff):
            d = clk[g.lhs] - (0 if g.rhs is None else clk[g.rhs])
            return {"<": d < g.ct, "<=": d <= g.ct, "=": d == g.ct, ">=": d >= g.ct, ">": d > g.ct}[g.op]
        if isinstance(g, F.And):
            return z3.And(*[enc(a) for a in g.args])
        if isinstance(g, F.Or):
            return z3.Or(*[enc(a) for a in g.args])
        if isinstance(g, F.Not):
            return z3.Not(enc(g.arg))
        return z3.Implies(enc(g.lhs), enc(g.rhs))

    s.add(enc(f))
    assert (s.check() == z3.sat) == r.sat


def test_budget_is_a_separate_verdict():
    f = F.conj(*[F.disj(F.Diff(c, None, "<", k), F.Diff(c, None, ">", k + 1))
                 for k in range(3) for c in CLOCKS], F.Diff("x", "y", "<", -20), F.Diff("y", "x", "<", -20))
    r = check_sat(f, DOMAINS, node_budget=3)
    assert r.status == "budget"
    with pytest.raises(BudgetExceeded):
        is_sat(f, DOMAINS, node_budget=3)
    assert check_sat(f, DOMAINS).unsat


def test_many_disjunctions_are_split():
    # a conjunction of location-guarded blocks would blow up a flat DNF
    parts = []
    for k in range(12):
        parts.append(F.disj(F.conj(F.At("p", "l0"), F.Diff(f"c{k}", None, ">=", k)),
                            F.conj(F.At("p", "l1"), F.Diff(f"c{k}", None, "<=", k)),
                            F.conj(F.At("p", "l2"), F.Diff(f"c{k}", None, "=", 0))))
    f = F.conj(F.disj(*parts), *[F.Diff(f"c{k}", None, "=", k + 1) for k in range(12)], F.At("p", "l1"))
    assert check_sat(f, DOMAINS).unsat
    g = F.conj(F.disj(*parts), F.At("p", "l0"))
    assert check_sat(g, DOMAINS).sat


def test_implication_and_equivalence():
    a = parse_formula("x <= 2")
    b = parse_formula("x < 3")
    assert implies(a, b) and not implies(b, a)
    assert equivalent(parse_formula("not (x > 2)"), a)
    assert equivalent(parse_formula("x = 1"), parse_formula("x <= 1 and x >= 1"))


def test_projection_examples():
    f = parse_formula("h = x and x <= 3")
    assert equivalent(project(f, {"h"}), parse_formula("x <= 3"))
    g = parse_formula("x - y <= 1 and p@l1")
    assert equivalent(project(g, set(), DOMAINS), g, DOMAINS)
    # x <= z <= y - 2 projects to x - y <= -2
    h = parse_formula("x - z <= 0 and z - y <= -2")
    assert equivalent(project(h, {"z"}), parse_formula("x - y <= -2"))


QUARTER = np.arange(0, 14.25, 0.25)


@settings(max_examples=40, deadline=None)
@given(formulas(locations=False, max_leaves=5))
def test_projection_matches_grid(f):
    p = project(f, {"z"})
    assert "z" not in F.clocks_of(p)
    for x, y in itertools.product(HALF[::2], HALF[::2]):
        expect = any(F.evaluate(f, {}, {"x": x, "y": y, "z": z}) for z in QUARTER)
        assert F.evaluate(p, {}, {"x": x, "y": y, "z": 0}) == expect, (x, y)


def test_cubes_cover_models():
    f = parse_formula("(p@l0 and x < 1) or (p@l1 and x > 2)")
    found, names = cubes(f, DOMAINS)
    locs = sorted(c[0].get("p") for c in found)
    assert locs == ["l0", "l1"]


@settings(max_examples=60, deadline=None)
@given(formulas(max_leaves=6), st.randoms(use_true_random=False))
def test_verdict_is_deterministic(f, _):
    a, b = check_sat(f, DOMAINS), check_sat(f, DOMAINS)
    assert a.status == b.status and a.model == b.model
