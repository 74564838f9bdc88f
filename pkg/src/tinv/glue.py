"""Glue constraints over history clocks.

* ``E``  relates action history clocks through the interaction model.
* ``E*`` does the same through one clock per interaction.
* ``S``/``S*`` add separation between interactions sharing an action.
* ``S^c`` orders the separations of a symmetric controller/class system.
* ``prec`` relates two occurrences of a conflicting action to an action
  that must happen in between.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Iterable, Mapping, Optional

from . import formula as F
from .formula import Diff
from .model import TAU, Component, SystemModel, action_history, component_actions
from .zonegraph import reach

MAX_GLUE_SIZE = 2_000_000


class GlueSizeError(RuntimeError):
    pass


def interaction_clock(iid: str) -> str:
    return f"gamma.h_{iid}"


def _h(action: str) -> str:
    return action_history(action)


def _actions(gamma) -> frozenset:
    return frozenset().union(*gamma) if gamma else frozenset()


def ominus(gamma: frozenset, alpha: frozenset) -> frozenset:
    """Interactions of gamma restricted to actions outside alpha."""
    return frozenset(b - alpha for b in gamma if not b <= alpha)


def action_groups(gamma) -> list:
    """Partition interactions into classes connected by shared actions."""
    gamma = list(gamma)
    parent = list(range(len(gamma)))

    def find(k):
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    owner = {}
    for k, a in enumerate(gamma):
        for act in a:
            if act in owner:
                parent[find(k)] = find(owner[act])
            else:
                owner[act] = k
    groups = {}
    for k, a in enumerate(gamma):
        groups.setdefault(find(k), []).append(a)
    return [frozenset(g) for g in groups.values()]


def _eq_chain(alpha) -> list:
    acts = sorted(alpha)
    return [F.eq(_h(x), _h(y)) for x, y in zip(acts, acts[1:])]


def _leq(alpha, others) -> list:
    rep = min(alpha)
    return [F.le(_h(rep), _h(o)) for o in sorted(others)]


def build_E(gamma: Iterable[Iterable[str]], simplify: bool = True, max_size: int = MAX_GLUE_SIZE) -> F.Formula:
    """The recursive ordering constraint on action history clocks.

    With ``simplify`` action-disjoint parts are handled separately and a
    single interaction collapses to equalities; without it the plain
    recursion is returned.
    """
    g = frozenset(frozenset(a) for a in gamma if a)
    memo = {}

    def go(gam):
        if gam in memo:
            return memo[gam]
        if not gam:
            out = F.TRUE
        elif simplify and len(gam) == 1:
            out = F.conj(*_eq_chain(next(iter(gam))))
        elif simplify and len(parts := action_groups(gam)) > 1:
            out = F.conj(*[go(p) for p in sorted(parts, key=_key)])
        else:
            opts = []
            for alpha in sorted(gam, key=sorted):
                rest = ominus(gam, alpha)
                opts.append(F.conj(*_eq_chain(alpha), *_leq(alpha, _actions(rest)), go(rest)))
            out = F.disj(*opts)
        memo[gam] = out
        if F.size(out) > max_size:
            raise GlueSizeError("glue formula exceeds the size limit")
        return out

    return go(g)


def _key(gam):
    return sorted(sorted(a) for a in gam)


def conflicting_actions(m: SystemModel) -> dict:
    """Action -> interactions (in declaration order) for actions in two or more interactions."""
    use = {}
    for a in m.interactions:
        for act in a.actions:
            use.setdefault(act, []).append(a)
    return {k: v for k, v in use.items() if len(v) > 1}


def build_Estar(m: SystemModel) -> F.Formula:
    use = {}
    for a in m.interactions:
        for act in a.actions:
            use.setdefault(act, []).append(a.id)
    parts = []
    for act, ids in use.items():
        h = _h(act)
        if len(ids) == 1:
            parts.append(F.eq(h, interaction_clock(ids[0])))
            continue
        parts.extend(F.le(h, interaction_clock(i)) for i in ids)
        parts.append(F.disj(*[F.eq(h, interaction_clock(i)) for i in ids]))
    return F.conj(*parts)


# separation constants -----------------------------------------------------

def _guard_lower(e) -> list:
    """(clock, c) lower bounds ``x >= c`` / ``x > c`` / ``x = c`` in an edge guard."""
    out = []
    for a in e.guard:
        if a.rhs is not None:
            continue
        if a.op in (">=", ">", "="):
            out.append((a.lhs, a.ct))
    return out


def separation_heuristic(comp: Component, action: str) -> int:
    """Minimum time forced between two consecutive ``action`` edges.

    Walks every simple path from the target of an ``action`` edge to the
    source of another one, accumulating lower bounds from guards relative
    to the last reset of the tested clock.
    """
    a_edges = [e for e in comp.edges if e.action == action]
    if not a_edges:
        return 0
    best = None
    for e0 in a_edges:
        last = {c: 0 for c in e0.resets}
        start = (e0.target, 0.0, last, (0,))
        stack = [(e0.target, [0], dict(last), {e0.target})]
        while stack:
            loc, f, last, seen = stack.pop()
            for e in comp.edges:
                if e.source != loc:
                    continue
                q = len(f)
                val = f[-1]
                for x, c in _guard_lower(e):
                    if x in last:
                        val = max(val, f[last[x]] + c)
                if e.action == action:
                    best = val if best is None else min(best, val)
                    continue
                if e.target in seen:
                    continue
                nl = dict(last)
                for r in e.resets:
                    nl[r] = q
                stack.append((e.target, f + [val], nl, seen | {e.target}))
    return 0 if best is None else max(best, 0)


def separation_exact(comp: Component, action: str) -> int:
    """Separation read off the zone graph of the component with an observer clock."""
    from .dbm import bound_value
    from .model import Edge, ORDINARY
    w = "__since"
    while w in comp.clocks:
        w += "_"
    locs = tuple((l, s) for l in comp.locations for s in (0, 1))
    edges = []
    for e in comp.edges:
        for s in (0, 1):
            if e.action == action:
                edges.append(Edge((e.source, s), e.action, e.guard, e.resets | {w}, (e.target, 1)))
            else:
                edges.append(Edge((e.source, s), e.action, e.guard, e.resets, (e.target, s)))
    tpc = {}
    for (l, s) in locs:
        if comp.tpc.get(l):
            tpc[(l, s)] = comp.tpc[l]
    from .zonegraph import ZoneSemantics, default_diffcap
    cap = default_diffcap(comp)
    ext = Component(comp.name + "+obs", locs, comp.clocks + (w,), tuple(edges), tpc, (comp.initial, 0),
                    comp.init_constraint + (Diff(w, None, "=", 0),), comp.actions,
                    dict(comp.clock_kinds, **{w: "history"}))
    g = reach(ext, diffcap=cap)
    sem = ZoneSemantics(ext, diffcap=cap)
    wi = sem.index[w]
    best = None
    for loc, z in g.states:
        if loc[1] != 1:
            continue
        for k, e in enumerate(ext.edges):
            if e.source != loc or e.action != action:
                continue
            zz = z.intersect(sem.guard(k))
            if zz.is_empty():
                continue
            low = -bound_value(zz.m[0, wi])
            best = low if best is None else min(best, low)
    return 0 if best is None else max(best, 0)


def separation_constants(m: SystemModel, mode: str = "heuristic") -> dict:
    """k for each conflicting (namespaced) action."""
    out = {}
    fn = separation_exact if mode == "exact" else separation_heuristic
    for act in conflicting_actions(m):
        inst, a = act.split(".", 1)
        out[act] = fn(m.component_of(inst), a)
    return out


def _pairs(ids):
    return list(itertools.combinations(ids, 2))


def build_S(m: SystemModel, k: Mapping[str, int]) -> F.Formula:
    parts = []
    for act, alphas in conflicting_actions(m).items():
        c = k.get(act, 0)
        if c <= 0:
            continue
        for a, b in _pairs([x.id for x in alphas]):
            ha, hb = interaction_clock(a), interaction_clock(b)
            parts.append(F.disj(F.ge(ha, hb, c), F.ge(hb, ha, c)))
    return F.conj(*parts)


def build_Sstar(m: SystemModel, k: Mapping[str, int]) -> F.Formula:
    parts = []
    for act, alphas in conflicting_actions(m).items():
        c = k.get(act, 0)
        h = _h(act)
        for a, b in _pairs([x.id for x in alphas]):
            ha, hb = interaction_clock(a), interaction_clock(b)
            if c <= 0:
                parts.extend([F.le(h, ha), F.le(h, hb)])
                continue
            parts.append(F.disj(F.conj(F.le(h, ha), F.le(ha, hb, -c)),
                                F.conj(F.le(h, hb), F.le(hb, ha, -c))))
    return F.conj(*parts)


def symmetric_order(m: SystemModel):
    """For each controller action, its interactions with class members in class order."""
    sym = m.symmetry
    if sym is None:
        raise ValueError("model declares no symmetry")
    conf = conflicting_actions(m)
    out = {}
    for act, alphas in conf.items():
        if act.split(".", 1)[0] != sym.controller:
            continue
        ordered = []
        for member in sym.members:
            hit = [a for a in alphas if any(x.split(".", 1)[0] == member for x in a.actions)]
            if len(hit) != 1:
                ordered = None
                break
            ordered.append(hit[0])
        if ordered:
            out[act] = ordered
    return out


def designated_actions(m: SystemModel) -> list:
    sym = m.symmetry
    ordered = symmetric_order(m)
    if not ordered:
        return []
    if sym.serial:
        return list(ordered)
    return [next(iter(ordered))]


def build_Sc(m: SystemModel, k: Mapping[str, int]) -> F.Formula:
    """Separation with the designated controller actions ordered by class index."""
    ordered = symmetric_order(m)
    chosen = set(designated_actions(m))
    parts = []
    for act, alphas in conflicting_actions(m).items():
        c = k.get(act, 0)
        if c <= 0:
            continue
        if act in chosen:
            seq = ordered[act]
            for i, j in itertools.combinations(range(len(seq)), 2):
                parts.append(F.ge(interaction_clock(seq[i].id), interaction_clock(seq[j].id), c))
            continue
        for a, b in _pairs([x.id for x in alphas]):
            ha, hb = interaction_clock(a), interaction_clock(b)
            parts.append(F.disj(F.ge(ha, hb, c), F.ge(hb, ha, c)))
    return F.conj(*parts)


def symmetry_permutations(m: SystemModel):
    """Transpositions of class members as instance renamings."""
    mem = m.symmetry.members
    for i, j in itertools.combinations(range(len(mem)), 2):
        yield {mem[i]: mem[j], mem[j]: mem[i]}


def _rename_action(act, perm):
    inst, a = act.split(".", 1)
    return f"{perm.get(inst, inst)}.{a}"


def system_is_symmetric(m: SystemModel) -> bool:
    sym = m.symmetry
    comps = {m.component_of(x).name for x in sym.members}
    if len(comps) != 1:
        return False
    gam = {frozenset(a.actions) for a in m.interactions}
    for perm in symmetry_permutations(m):
        if {frozenset(_rename_action(x, perm) for x in a) for a in gam} != gam:
            return False
    return True


def rename_formula_instances(f: F.Formula, perm: Mapping[str, str]) -> F.Formula:
    def clock(c):
        if "." not in c:
            return c
        inst, rest = c.split(".", 1)
        return f"{perm.get(inst, inst)}.{rest}"
    return F.rename(f, clock=clock, inst=lambda i: perm.get(i, i))


# precedence refinement ----------------------------------------------------

def prec_actions(comp: Component, action: str) -> set:
    """Actions that can immediately precede ``action`` (internal steps skipped)."""
    before = {e.source for e in comp.edges if e.action == action}
    # locations from which the action's source is reachable through tau edges only
    closure = set(before)
    changed = True
    while changed:
        changed = False
        for e in comp.edges:
            if e.action == TAU and e.target in closure and e.source not in closure:
                closure.add(e.source)
                changed = True
    return {e.action for e in comp.edges if e.action != TAU and e.target in closure}


def build_prec(m: SystemModel) -> F.Formula:
    parts = []
    for act, alphas in conflicting_actions(m).items():
        inst, a = act.split(".", 1)
        comp = m.component_of(inst)
        if not any(e.source == comp.initial and e.action == a for e in comp.edges):
            continue
        prec = sorted(prec_actions(comp, a))
        concl = F.disj(*[F.le(_h(f"{inst}.{p}"), "h0") for p in prec])
        for x, y in _pairs([al.id for al in alphas]):
            hyp = F.conj(F.le(interaction_clock(x), "h0"), F.le(interaction_clock(y), "h0"))
            parts.append(F.implies(hyp, concl))
    return F.conj(*parts)
