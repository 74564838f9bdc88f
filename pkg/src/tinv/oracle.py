"""Ground truth by exhaustive exploration of the composed system.

The product of all instances is explored with the same zone machinery as
single components. Properties and candidate invariants are then checked
on every reachable symbolic state with the formula engine. History
clocks start out "not yet happened"; their initial values are chosen to
satisfy the assumed glue constraints, which is how never-fired
interactions are read as infinitely far in the past.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import formula as F
from . import glue as G
from .formula import At
from .history import extend_system
from .model import TAU, SystemModel, compose
from .solver import check_sat, cubes
from .zonegraph import ZoneGraph, ZoneSemantics, default_diffcap, zone_atoms, zone_of

DEFAULT_ORACLE_STATES = 200_000


@dataclass
class Exploration:
    model: SystemModel  # the system actually explored (extended or not)
    graph: ZoneGraph
    instances: tuple
    initial_zones: list = field(default_factory=list)

    def state_formula(self, k: int) -> F.Formula:
        loc, z = self.graph.states[k]
        names = self.graph.names()
        ats = [At(i, l) for i, l in zip(self.instances, loc)]
        return F.conj(*ats, *zone_atoms(z, names))

    def __len__(self):
        return len(self.graph.states)


@dataclass
class Violation:
    state: int
    conjunct: str
    witness: Optional[str] = None
    transition: Optional[str] = None


def assumed_glue(m: SystemModel, separation: str = "heuristic") -> F.Formula:
    """Glue that a run of the extended system is assumed to start in."""
    k = G.separation_constants(m, separation)
    return F.conj(G.build_E([a.actions for a in m.interactions]), G.build_Estar(m),
                  G.build_S(m, k), G.build_Sstar(m, k))


def system_diffcap(m: SystemModel) -> int:
    """Diagonal cap for the product: constants summed once per component type.

    The product repeats every edge for each combination of idle partners,
    so its own constant sum grossly overstates what the clocks can see.
    """
    total = sum(default_diffcap(c) for c in m.components.values())
    k = G.separation_constants(m, "heuristic")
    return max([total, *k.values()]) if k else total


def _initial_zones(prod, sem: ZoneSemantics, extra: F.Formula, domains) -> list:
    base = F.conj(*prod.init_constraint, extra)
    found, names = cubes(base, domains)
    out = []
    for _, _, z in found:
        atoms = zone_atoms(z, names)
        zz = zone_of([a for a in atoms if isinstance(a, F.Diff)], sem.index, sem.dim)
        zz = zz.intersect(sem.tpc(prod.initial))
        if not zz.is_empty() and not any(zz == o for o in out):
            out.append(zz)
    return out


def explore(m: SystemModel, history: bool = False, glue: Optional[F.Formula] = None,
            extrapolate: bool = True, max_states: int = DEFAULT_ORACLE_STATES,
            max_depth: Optional[int] = None, diffcap: Optional[int] = None) -> Exploration:
    """Zone graph of the product; with ``history`` of the extended system.

    ``glue`` (history only) restricts the initial history valuation; by
    default the assumed glue of the model is used.
    """
    sysm = extend_system(m) if history else m
    prod = compose(sysm)
    sem = ZoneSemantics(prod, extrapolate, system_diffcap(m) if diffcap is None else diffcap)
    if history:
        g0 = assumed_glue(m) if glue is None else glue
        zones = _initial_zones(prod, sem, g0, None)
    else:
        zones = [zone_of(prod.init_constraint, sem.index, sem.dim).intersect(sem.tpc(prod.initial))]
    graph = ZoneGraph(prod, sem.clocks)
    by_loc = {}

    def add(loc, z):
        for k in by_loc.get(loc, ()):
            if graph.states[k][1].includes(z):
                return k, False
        k = len(graph.states)
        graph.states.append((loc, z))
        by_loc.setdefault(loc, []).append(k)
        return k, True

    work = []
    for z0 in zones:
        z0 = sem.norm(sem.time_succ(prod.initial, z0))
        if z0.is_empty():
            continue
        k, new = add(prod.initial, z0)
        if new:
            work.append((k, 0))
    head = 0
    while head < len(work):
        k, depth = work[head]
        head += 1
        if max_depth is not None and depth >= max_depth:
            graph.complete = False
            continue
        loc, z = graph.states[k]
        for e, target, nz in sem.successors(loc, z):
            j, new = add(target, nz)
            graph.transitions.append((k, e, j))
            if new:
                if len(graph.states) > max_states:
                    graph.complete = False
                    return Exploration(sysm, graph, sysm.instance_names(), zones)
                work.append((j, depth + 1))
    return Exploration(sysm, graph, sysm.instance_names(), zones)


# checks -----------------------------------------------------------------

def _conjuncts(f: F.Formula) -> list:
    if isinstance(f, F.And):
        return [x for a in f.args for x in _conjuncts(a)]
    return [f]


def _at_location(f: F.Formula, locs: dict) -> F.Formula:
    """``f`` with location atoms of the instances in ``locs`` evaluated."""
    def sub(a):
        if isinstance(a, At) and a.inst in locs:
            return F.TRUE if locs[a.inst] == a.loc else F.FALSE
        return None
    return F.substitute(f, sub)


def _failure(zone_f: F.Formula, c: F.Formula, doms):
    """None if ``zone_f`` entails ``c``, else a solver result showing why not."""
    for part in _conjuncts(c):
        if part == F.TRUE:
            continue
        r = check_sat(F.conj(zone_f, F.neg(part)), doms)
        if r.status != "unsat":
            return r
    return None


def violations(ex: Exploration, f: F.Formula, split: bool = True, limit: int = 20) -> list:
    """Reachable states (and conjuncts of ``f``) where ``f`` can fail."""
    parts = _conjuncts(f) if split else [f]
    doms = ex.model.location_domains()
    names = ex.graph.names()
    out = []
    for k, (loc, z) in enumerate(ex.graph.states):
        locs = dict(zip(ex.instances, loc))
        zf = F.conj(*zone_atoms(z, names))
        for c in parts:
            r = _failure(zf, _at_location(c, locs), doms)
            if r is not None:
                wit = F.conj(ex.state_formula(k), r.model) if r.sat else None
                out.append(Violation(k, F.to_text(c), F.to_text(wit) if r.sat else r.status))
                if len(out) >= limit:
                    return out
    return out


def inductive_violations(ex: Exploration, f: F.Formula, limit: int = 20) -> list:
    """Transitions along which ``f`` is not preserved.

    For every explored state and every outgoing edge, each cube of the
    state restricted to ``f`` is pushed through the edge and its time
    successor; the result must again satisfy ``f``.
    """
    prod = ex.graph.component
    sem = ZoneSemantics(prod, extrapolate=False)
    doms = ex.model.location_domains()
    names = ex.graph.names()
    out = []
    for k, (loc, z) in enumerate(ex.graph.states):
        found, cnames = cubes(F.conj(*zone_atoms(z, names), _at_location(f, dict(zip(ex.instances, loc)))), doms)
        for _, _, cz in found:
            zz = zone_of([a for a in zone_atoms(cz, cnames) if isinstance(a, F.Diff)], sem.index, sem.dim)
            zz = zz.intersect(z)
            if zz.is_empty():
                continue
            for e, target, nz in sem.successors(loc, zz):
                r = _failure(F.conj(*zone_atoms(nz, names)), _at_location(f, dict(zip(ex.instances, target))), doms)
                if r is not None:
                    act = prod.edges[e].action
                    out.append(Violation(k, F.to_text(f), F.to_text(r.model) if r.sat else r.status,
                                         act if act != TAU else "tau"))
                    if len(out) >= limit:
                        return out
    return out


def deadlock_states(ex: Exploration, limit: int = 20) -> list:
    """States with a valuation from which no transition can ever fire.

    Uses the product's own edges: a valuation can make progress if, after
    some delay allowed by the source invariant, an edge guard holds and
    the reset valuation meets the target invariant.
    """
    prod = ex.graph.component
    sem = ZoneSemantics(prod, extrapolate=False)
    names = ex.graph.names()
    by_source = {}
    for k, e in enumerate(prod.edges):
        by_source.setdefault(e.source, []).append(k)
    out = []
    for k, (loc, z) in enumerate(ex.graph.states):
        live = []
        for ei in by_source.get(loc, ()):
            e = prod.edges[ei]
            pre = sem.tpc(e.target).inverse_reset([sem.index[r] for r in e.resets])
            pre = pre.intersect(sem.guard(ei)).intersect(sem.tpc(loc))
            if not pre.is_empty():
                live.append(F.conj(*zone_atoms(pre.down().intersect(sem.tpc(loc)), names)))
        r = check_sat(F.conj(*zone_atoms(z, names), F.neg(F.disj(*live))))
        if r.status != "unsat":
            out.append(Violation(k, "deadlock-free", F.to_text(r.model) if r.sat else r.status))
            if len(out) >= limit:
                return out
    return out


def oracle_reach(m: SystemModel, history: bool = False, max_states: int = DEFAULT_ORACLE_STATES,
                 max_depth: Optional[int] = None) -> Exploration:
    return explore(m, history=history, max_states=max_states, max_depth=max_depth)


def oracle_check(m: SystemModel, prop: str, max_states: int = DEFAULT_ORACLE_STATES) -> bool:
    """True when the named property holds on every reachable state.

    Raises RuntimeError if the exploration hit its limit.
    """
    try:
        phi = m.property(prop)
    except KeyError:
        if prop != "deadlock":
            raise
        phi = F.DeadlockFree()
    history = any(c == "h0" or ".h_" in c for c in F.clocks_of(phi))
    ex = explore(m, history=history, max_states=max_states)
    if not ex.graph.complete:
        raise RuntimeError(f"oracle exploration exceeded {max_states} states")
    if isinstance(phi, F.DeadlockFree):
        return not deadlock_states(ex, limit=1)
    if any(isinstance(a, F.DeadlockFree) for a in F.atoms(phi)):
        raise ValueError("deadlock-freedom can only be checked on its own by the oracle")
    return not violations(ex, phi, split=False, limit=1)


def oracle_holds_invariant(m: SystemModel, f: F.Formula, history: bool = True,
                           max_states: int = DEFAULT_ORACLE_STATES) -> bool:
    ex = explore(m, history=history, max_states=max_states)
    if not ex.graph.complete:
        raise RuntimeError(f"oracle exploration exceeded {max_states} states")
    return not violations(ex, f, limit=1)


def render(ex: Exploration, found: Sequence[Violation]) -> str:
    lines = [f"explored {len(ex)} symbolic states, {len(ex.graph.transitions)} transitions"
             + ("" if ex.graph.complete else " (incomplete)")]
    for v in found:
        loc = ex.graph.states[v.state][0]
        where = ", ".join(f"{i}@{l}" for i, l in zip(ex.instances, loc))
        via = f" after {v.transition}" if v.transition else ""
        lines.append(f"violation at state {v.state} ({where}){via}: {v.conjunct}")
        if v.witness:
            lines.append(f"  witness: {v.witness}")
    return "\n".join(lines)
