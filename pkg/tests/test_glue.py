import itertools

import pytest

from tinv import formula as F
from tinv import glue as G
from tinv.formula import parse_formula
from tinv.model import resolve_model
from tinv.solver import equivalent, implies, project

from helpers import system_of, vector_profiles

SHAPES = list(vector_profiles(3, 6))


def hg(m):
    return [G.interaction_clock(a.id) for a in m.interactions]


def test_shape_enumeration():
    assert len(SHAPES) == len({tuple(sorted(map(tuple, map(sorted, g)))) for g in SHAPES})
    assert all(1 <= len(g) <= 3 and len(set().union(*g)) <= 6 for g in SHAPES)
    assert any(len(g) == 3 and len(set().union(*g)) == 6 for g in SHAPES)


def test_E_splits_over_action_disjoint_parts():
    checked = 0
    for gam in SHAPES:
        for r in range(1, len(gam)):
            for left in itertools.combinations(range(len(gam)), r):
                g1 = [gam[k] for k in left]
                g2 = [gam[k] for k in range(len(gam)) if k not in left]
                if set().union(*g1) & set().union(*g2):
                    continue
                whole = G.build_E(gam, simplify=False)
                parts = F.conj(G.build_E(g1, simplify=False), G.build_E(g2, simplify=False))
                assert equivalent(whole, parts), gam
                checked += 1
    assert checked > 50


def test_simplified_E_is_equivalent():
    for gam in SHAPES:
        assert equivalent(G.build_E(gam), G.build_E(gam, simplify=False)), gam


def test_Estar_projects_to_E():
    for gam in SHAPES:
        m = system_of(gam)
        lhs = project(G.build_Estar(m), hg(m))
        assert equivalent(lhs, G.build_E([a.actions for a in m.interactions], simplify=False)), gam


@pytest.mark.parametrize("k", [1, 3])
def test_S_is_projection_of_Sstar(k):
    for gam in SHAPES:
        m = system_of(gam)
        ks = {a: k for a in G.conflicting_actions(m)}
        s_star = G.build_Sstar(m, ks)
        actions = [c for c in F.clocks_of(s_star) if not c.startswith("gamma.")]
        assert equivalent(project(s_star, actions), G.build_S(m, ks)), gam


def test_E_of_single_interaction_is_equalities():
    f = G.build_E([("a.x", "b.y", "c.z")])
    assert equivalent(f, parse_formula("a.h_x = b.h_y and b.h_y = c.h_z"))


def test_E_two_conflicting_interactions():
    # (a|b) and (a|c): the most recent one equates its actions
    f = G.build_E([("p.a", "q.b"), ("p.a", "r.c")], simplify=False)
    g = parse_formula("p.h_a = q.h_b and p.h_a <= r.h_c or p.h_a = r.h_c and p.h_a <= q.h_b")
    assert equivalent(f, g)


def test_separation_constants_of_worker_controller():
    m = resolve_model("worker_controller_2")
    assert G.separation_constants(m) == {"ctrl.a": 4, "ctrl.c": 4}
    assert G.separation_constants(m, "exact") == {"ctrl.a": 4, "ctrl.c": 4}


def test_separated_workers():
    m = resolve_model("worker_controller_2")
    k = G.separation_constants(m)
    glue = F.conj(G.build_Estar(m), G.build_S(m, k))
    keep = {"w1.h_b", "w2.h_b", "w1.h_d", "w2.h_d"}
    drop = F.clocks_of(glue) - keep
    expect = parse_formula("(w1.h_b - w2.h_b >= 4 or w2.h_b - w1.h_b >= 4) and "
                           "(w1.h_d - w2.h_d >= 4 or w2.h_d - w1.h_d >= 4)")
    assert equivalent(project(glue, drop), expect)


def test_ordered_separation_sizes():
    for n in (2, 5):
        m = resolve_model(f"temp_controller_{n}")
        k = G.separation_constants(m)
        s, sc = G.build_S(m, k), G.build_Sc(m, k)
        ordered = [a for a in F.atoms(sc) if isinstance(a, F.Diff)]
        pairs = [a for a in F.atoms(s) if isinstance(a, F.Diff)]
        designated = G.designated_actions(m)
        assert len(designated) == 1
        # one ordered atom per pair for the designated action, two per pair elsewhere
        npairs = n * (n - 1) // 2
        assert len(pairs) == 2 * npairs * len(G.conflicting_actions(m))
        assert len(ordered) == len(pairs) - npairs
        assert implies(sc, s)


def test_serial_symmetry_orders_every_controller_action():
    from tinv.model import bundled_model_path, parse_model
    text = bundled_model_path("worker_controller_2").read_text()
    plain = parse_model(text)
    serial = parse_model(text.replace("class w1,w2", "class w1,w2 serial a"))
    assert len(G.designated_actions(plain)) == 1
    assert serial.symmetry.serial == "a"
    assert len(G.designated_actions(serial)) == len(G.symmetric_order(serial)) == 2
    k = G.separation_constants(serial)
    assert implies(G.build_Sc(serial, k), G.build_Sc(plain, k))


def test_symmetry_detection():
    m = resolve_model("temp_controller_2")
    assert G.system_is_symmetric(m)
    perms = list(G.symmetry_permutations(resolve_model("temp_controller_5")))
    assert len(perms) == 10


def test_prec_for_train_gate():
    m = resolve_model("tgc_1")
    # one train: nothing conflicts, so no refinement is produced
    assert G.build_prec(m) == F.TRUE
    m3 = resolve_model("tgc_3")
    f = G.build_prec(m3)
    assert f != F.TRUE
    assert all(isinstance(p, F.Implies) for p in (f.args if isinstance(f, F.And) else (f,)))


def test_glue_size_limit():
    gam = [frozenset({f"c{i}.a", f"c{(i + 1) % 6}.a"}) for i in range(6)]
    with pytest.raises(G.GlueSizeError):
        G.build_E(gam, simplify=False, max_size=50)
