"""Symbolic forward exploration of a single timed component."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import formula as F
from .dbm import DBM, INF, LE_ZERO, bound, bound_strict, bound_value
from .formula import At, Diff
from .model import Component, HISTORY, INTERACTION, ORDINARY, SHARED, max_constants

DEFAULT_MAX_STATES = 100_000


class StateLimitExceeded(RuntimeError):
    pass


def atom_bounds(a: Diff, index) -> list:
    """``(i, j, b)`` triples for a clock atom."""
    i = index[a.lhs]
    j = 0 if a.rhs is None else index[a.rhs]
    c = a.ct
    if a.op == "<=":
        return [(i, j, bound(c))]
    if a.op == "<":
        return [(i, j, bound(c, True))]
    if a.op == ">=":
        return [(j, i, bound(-c))]
    if a.op == ">":
        return [(j, i, bound(-c, True))]
    if a.op == "=":
        return [(i, j, bound(c)), (j, i, bound(-c))]
    raise ValueError(a.op)


def zone_of(atoms, index, dim) -> DBM:
    triples = [t for a in atoms for t in atom_bounds(a, index)]
    return DBM.from_constraints(dim, triples)


def zone_atoms(z: DBM, names: Sequence[str]) -> list:
    """Difference atoms describing a zone, merging opposite bounds into equalities."""
    if z.is_empty():
        return [F.FALSE]
    cons = {(i, j): b for i, j, b in z.constraints()}
    out = []
    done = set()
    for (i, j), b in cons.items():
        if (i, j) in done:
            continue
        done.add((i, j))
        back = cons.get((j, i))
        c = bound_value(b)
        strict = bound_strict(b)
        if back is not None and not strict and not bound_strict(back) and bound_value(back) == -c:
            done.add((j, i))
            if i == 0:
                out.append(Diff(names[j], None, "=", -c))
            elif j == 0:
                out.append(Diff(names[i], None, "=", c))
            else:
                out.append(Diff(names[i], names[j], "=", c))
            continue
        op = "<" if strict else "<="
        if i == 0:
            out.append(Diff(names[j], None, ">" if strict else ">=", -c))
        elif j == 0:
            out.append(Diff(names[i], None, op, c))
        else:
            out.append(Diff(names[i], names[j], op, c))
    return out


@dataclass
class ZoneGraph:
    component: Component
    clocks: tuple
    states: list = field(default_factory=list)  # (location, DBM)
    transitions: list = field(default_factory=list)  # (src, edge index, dst)
    complete: bool = True

    def names(self):
        return ("0",) + self.clocks

    def locations(self):
        return list(dict.fromkeys(l for l, _ in self.states))

    def dump(self) -> str:
        out = []
        for k, (l, z) in enumerate(self.states):
            out.append(f"state {k} at {l}")
            body = z.dump(self.names())
            for line in body.splitlines():
                out.append("  " + line)
        for s, e, d in self.transitions:
            out.append(f"{s} -{self.component.edges[e].action}-> {d}")
        return "\n".join(out)


def default_diffcap(comp: Component) -> int:
    """Sum of all constants appearing in the component (at least 1)."""
    total = 0
    atoms = list(comp.init_constraint)
    for e in comp.edges:
        atoms.extend(e.guard)
    for t in comp.tpc.values():
        atoms.extend(t)
    for a in atoms:
        total += abs(a.ct)
    return max(total, 1)


def clock_caps(comp: Component, diffcap: int) -> list:
    consts = max_constants(comp)
    caps = [0]
    for c in comp.clocks:
        kind = comp.kind(c)
        if kind in (HISTORY, SHARED, INTERACTION):
            caps.append(diffcap)
        else:
            caps.append(consts[c])
    return caps


class ZoneSemantics:
    """Successor computation for one component over its own clocks."""

    def __init__(self, comp: Component, extrapolate: bool = True, diffcap: Optional[int] = None):
        self.comp = comp
        self.clocks = tuple(comp.clocks)
        self.index = {c: k + 1 for k, c in enumerate(self.clocks)}
        self.dim = len(self.clocks) + 1
        self.extrapolate = extrapolate
        self.diffcap = default_diffcap(comp) if diffcap is None else diffcap
        self.caps = clock_caps(comp, self.diffcap)
        self._tpc = {}
        self._guard = {}

    def tpc(self, loc) -> DBM:
        z = self._tpc.get(loc)
        if z is None:
            z = zone_of(self.comp.tpc_of(loc), self.index, self.dim)
            self._tpc[loc] = z
        return z

    def guard(self, k) -> DBM:
        z = self._guard.get(k)
        if z is None:
            z = zone_of(self.comp.edges[k].guard, self.index, self.dim)
            self._guard[k] = z
        return z

    def time_succ(self, loc, z: DBM) -> DBM:
        return z.up().intersect(self.tpc(loc))

    def norm(self, z: DBM) -> DBM:
        if not self.extrapolate or z.is_empty():
            return z
        return z.extrapolate(self.caps, self.diffcap)

    def initial(self):
        z = zone_of(self.comp.init_constraint, self.index, self.dim)
        z = z.intersect(self.tpc(self.comp.initial))
        return self.comp.initial, self.norm(self.time_succ(self.comp.initial, z))

    def disc_succ(self, k, loc, z: DBM) -> DBM:
        e = self.comp.edges[k]
        if e.source != loc:
            return DBM.empty_zone(self.dim)
        z = z.intersect(self.guard(k))
        if z.is_empty():
            return z
        z = z.reset([self.index[r] for r in e.resets])
        return z.intersect(self.tpc(e.target))

    def successors(self, loc, z):
        for k, e in enumerate(self.comp.edges):
            if e.source != loc:
                continue
            nz = self.disc_succ(k, loc, z)
            if nz.is_empty():
                continue
            nz = self.norm(self.time_succ(e.target, nz))
            if not nz.is_empty():
                yield k, e.target, nz


def reach(comp: Component, extrapolate: bool = True, diffcap: Optional[int] = None,
          max_states: int = DEFAULT_MAX_STATES, max_depth: Optional[int] = None,
          initial_zone: Optional[DBM] = None, strict_limit: bool = True) -> ZoneGraph:
    """Breadth-first exploration with inclusion subsumption.

    Raises StateLimitExceeded when ``strict_limit`` and the limit is hit;
    otherwise returns a graph flagged incomplete.
    """
    sem = ZoneSemantics(comp, extrapolate, diffcap)
    g = ZoneGraph(comp, sem.clocks)
    l0, z0 = sem.initial()
    if initial_zone is not None:
        z0 = sem.norm(sem.time_succ(l0, initial_zone.intersect(sem.tpc(l0))))
    if z0.is_empty():
        return g
    by_loc = {}

    def add(loc, z):
        for k in by_loc.get(loc, ()):
            if g.states[k][1].includes(z):
                return k, False
        k = len(g.states)
        g.states.append((loc, z))
        by_loc.setdefault(loc, []).append(k)
        return k, True

    k0, _ = add(l0, z0)
    work = deque([(k0, 0)])
    while work:
        k, depth = work.popleft()
        if max_depth is not None and depth >= max_depth:
            g.complete = False
            continue
        loc, z = g.states[k]
        for e, target, nz in sem.successors(loc, z):
            j, new = add(target, nz)
            g.transitions.append((k, e, j))
            if new:
                if len(g.states) > max_states:
                    if strict_limit:
                        raise StateLimitExceeded(f"zone graph exceeds {max_states} states")
                    g.complete = False
                    return g
                work.append((j, depth + 1))
    return g


def component_invariant(g: ZoneGraph, inst: str, names: Optional[Sequence[str]] = None) -> F.Formula:
    """Disjunction over symbolic states of ``inst@l and zone``.

    ``names`` gives the global clock names in the graph's clock order.
    """
    names = ("0",) + tuple(names if names is not None else g.clocks)
    parts = []
    for loc, z in g.states:
        parts.append(F.conj(At(inst, loc), *zone_atoms(z, names)))
    return F.disj(*parts)
