"""Satisfiability of location/difference-constraint formulas.

The formula is put in negation normal form and split into top-level
conjuncts; each conjunct is expanded into a list of cubes (its options).
Search picks one consistent option per conjunct, maintaining a canonical
zone and a partial location assignment. Options are filtered by forward
checking, conjuncts with a single surviving option are propagated, and on
a dead end the search jumps back to the most recent choice that took part
in the conflict (reasons for difference bounds are recovered as tight
paths in the graph of asserted bounds).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from . import formula as F
from .dbm import DBM, INF, LE_ZERO, add, bound, bound_strict, bound_value
from .formula import And, At, Const, Diff, Not, Or

_INF = int(INF)
OTHER = "__other__"
DEFAULT_NODE_BUDGET = 2_000_000
DEFAULT_CUBE_CAP = 50_000
SPLIT_THRESHOLD = 256


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class SatResult:
    status: str  # "sat", "unsat", "budget"
    model: Optional[F.Formula] = None
    nodes: int = 0
    seconds: float = 0.0
    locations: dict = field(default_factory=dict)
    valuation: dict = field(default_factory=dict)

    @property
    def sat(self):
        return self.status == "sat"

    @property
    def unsat(self):
        return self.status == "unsat"


# clause construction ----------------------------------------------------

def _diff_bounds(a: Diff, index):
    i = index[a.lhs]
    j = 0 if a.rhs is None else index[a.rhs]
    c = a.ct
    return {
        "<=": [(i, j, bound(c))],
        "<": [(i, j, bound(c, True))],
        ">=": [(j, i, bound(-c))],
        ">": [(j, i, bound(-c, True))],
        "=": [(i, j, bound(c)), (j, i, bound(-c))],
    }[a.op]


def _dnf(f, cap):
    """Cubes of an NNF formula as lists of literals (At, Not(At), Diff)."""
    if isinstance(f, Const):
        return [[]] if f.value else []
    if isinstance(f, (At, Diff, Not)):
        return [[f]]
    if isinstance(f, Or):
        out = []
        for a in f.args:
            out.extend(_dnf(a, cap))
            if len(out) > cap:
                raise BudgetExceeded("disjunctive normal form too large")
        return out
    if isinstance(f, And):
        out = [[]]
        for a in f.args:
            sub = _dnf(a, cap)
            out = [x + y for x in out for y in sub]
            if len(out) > cap:
                raise BudgetExceeded("disjunctive normal form too large")
            if not out:
                return []
        return out
    raise TypeError(f)


def _dnf_count(f, cap):
    if isinstance(f, Const):
        return int(f.value)
    if isinstance(f, Or):
        return min(cap + 1, sum(_dnf_count(a, cap) for a in f.args))
    if isinstance(f, And):
        n = 1
        for a in f.args:
            n = min(cap + 1, n * _dnf_count(a, cap))
        return n
    return 1


def _guard(d):
    """The location literal a disjunct is conditioned on, if any."""
    if isinstance(d, At):
        return d
    if isinstance(d, And):
        return next((a for a in d.args if isinstance(a, At)), None)
    return None


def _split(f, threshold):
    """Break an NNF conjunct into conjuncts with smaller normal forms.

    A disjunction over distinct locations of one instance becomes one
    implication per location, which is equivalent because an instance
    is in exactly one location; a literal is then distributed over the
    conjunction it guards.
    """
    if isinstance(f, And):
        return [x for a in f.args for x in _split(a, threshold)]
    if not isinstance(f, Or) or _dnf_count(f, threshold) <= threshold:
        return [f]
    guards = [_guard(d) for d in f.args]
    if all(guards) and len({g.inst for g in guards}) == 1 and len({g.loc for g in guards}) == len(guards):
        out = [F.disj(*guards)]
        for g, d in zip(guards, f.args):
            rest = F.conj(*[a for a in d.args if a != g]) if isinstance(d, And) else F.TRUE
            parts = rest.args if isinstance(rest, And) else [rest]
            for p in parts:
                out.extend(_split(F.disj(Not(g), p), threshold))
        return out
    return [f]


class Problem:
    """Clauses over indexed clocks and instance location domains."""

    def __init__(self, f: F.Formula, domains: Optional[Mapping] = None, cube_cap: int = DEFAULT_CUBE_CAP,
                 extra_clocks=()):
        g = F.nnf(f)
        clocks = sorted(F.clocks_of(g) | set(extra_clocks))
        self.clocks = clocks
        self.index = {c: k + 1 for k, c in enumerate(clocks)}
        self.dim = len(clocks) + 1
        doms = {k: list(v) for k, v in (domains or {}).items()}
        for a in F.atoms(g):
            if isinstance(a, At):
                if a.inst not in doms:
                    doms[a.inst] = [OTHER]
                if a.loc not in doms[a.inst]:
                    if domains is not None and a.inst in domains:
                        raise ValueError(f"unknown location {a.inst}@{a.loc}")
                    doms[a.inst].append(a.loc)
        self.domains = {k: tuple(v) for k, v in doms.items()}
        conjuncts = _split(g, SPLIT_THRESHOLD)
        self.trivially_false = False
        self.clauses = []
        for c in conjuncts:
            if c == F.TRUE:
                continue
            if c == F.FALSE:
                self.trivially_false = True
                continue
            opts = []
            seen = set()
            for cube in _dnf(c, cube_cap):
                lit = self._compile(cube)
                if lit is None:
                    continue
                key = (frozenset(lit[0].items()), frozenset(lit[1]), frozenset(lit[2]))
                if key in seen:
                    continue
                seen.add(key)
                opts.append(lit)
            if not opts:
                self.trivially_false = True
            self.clauses.append(opts)

    def _compile(self, cube):
        pos = {}
        negs = set()
        diffs = {}
        for lit in cube:
            if isinstance(lit, At):
                if pos.get(lit.inst, lit.loc) != lit.loc:
                    return None
                pos[lit.inst] = lit.loc
            elif isinstance(lit, Not):
                negs.add((lit.arg.inst, lit.arg.loc))
            else:
                for i, j, b in _diff_bounds(lit, self.index):
                    if b < diffs.get((i, j), _INF):
                        diffs[(i, j)] = b
        for inst, loc in negs:
            if pos.get(inst) == loc:
                return None
        for (i, j), b in diffs.items():
            back = diffs.get((j, i))
            if back is not None and add(b, back) < LE_ZERO:
                return None
            if i == j and b < LE_ZERO:
                return None
        diffs = [(i, j, b) for (i, j), b in diffs.items() if i != j]
        return pos, frozenset(negs), tuple(diffs)


# search state -----------------------------------------------------------

class _State:
    __slots__ = ("m", "rows", "edges", "fixed", "excl")

    def __init__(self, m, edges, fixed, excl):
        self.m = m
        self.rows = None
        self.edges = edges  # (i, j) -> (bound, level)
        self.fixed = fixed  # inst -> (loc, reason frozenset)
        self.excl = excl  # inst -> {loc: reason frozenset}

    def lists(self):
        if self.rows is None:
            self.rows = self.m.tolist()
        return self.rows

    def copy(self):
        return _State(self.m, dict(self.edges), dict(self.fixed), {k: dict(v) for k, v in self.excl.items()})


class _Conflict(Exception):
    def __init__(self, reasons):
        self.reasons = reasons


def _vadd(a, b):
    s = a + b - ((a | b) & 1)
    return np.where((a >= INF) | (b >= INF), INF, s)


class Solver:
    def __init__(self, problem: Problem, node_budget: int = DEFAULT_NODE_BUDGET, deadline: Optional[float] = None):
        self.p = problem
        self.budget = node_budget
        self.deadline = deadline
        self.nodes = 0
        self.guarded = [any(o[1] for o in opts) for opts in problem.clauses]
        self.locating = [any(o[0] for o in opts) for opts in problem.clauses]

    # state helpers --------------------------------------------------------

    def _initial_state(self):
        m = np.array(DBM.universal(self.p.dim).m)
        m.setflags(write=True)
        return _State(m, {}, {}, {k: {} for k in self.p.domains})

    def _path_reason(self, st: _State, src: int, dst: int) -> frozenset:
        """Levels of asserted bounds on a shortest path src -> dst."""
        rows = st.lists()
        target = rows[src][dst]
        if src == dst:
            return frozenset()
        adj = {}
        for (u, v), (w, lvl) in st.edges.items():
            adj.setdefault(u, []).append((v, w, lvl))
        # implicit non-negativity: 0 - x <= 0
        for v in range(1, self.p.dim):
            if (0, v) not in st.edges:
                adj.setdefault(0, []).append((v, LE_ZERO, None))
        seen = set()
        stack = [(src, iter(adj.get(src, ())), [])]
        levels = []
        while stack:
            u, it, _ = stack[-1]
            if u == dst:
                return frozenset(l for l in levels if l is not None)
            advanced = False
            for v, w, lvl in it:
                if v in seen:
                    continue
                if add(w, rows[v][dst]) == rows[u][dst]:
                    seen.add(v)
                    levels.append(lvl)
                    stack.append((v, iter(adj.get(v, ())), None))
                    advanced = True
                    break
            if not advanced:
                stack.pop()
                if levels:
                    levels.pop()
        # fall back to every asserted level
        return frozenset(l for (_, l) in st.edges.values())

    def _assert_diff(self, st: _State, i, j, b, level):
        rows = st.lists()
        if add(b, rows[j][i]) < LE_ZERO:
            raise _Conflict(self._path_reason(st, j, i))
        if b >= rows[i][j]:
            return
        cur = st.edges.get((i, j))
        if cur is None or b < cur[0]:
            st.edges[(i, j)] = (b, level)
        m = st.m
        left = _vadd(m[:, i], np.int64(b))
        cand = _vadd(left[:, None], m[j, :][None, :])
        st.m = np.minimum(m, cand)
        st.rows = None

    def _loc_reason(self, st, inst, loc):
        """Reason why ``inst@loc`` is impossible in st."""
        f = st.fixed.get(inst)
        if f is not None and f[0] != loc:
            return f[1]
        r = st.excl[inst].get(loc)
        return r if r is not None else frozenset()

    def _fix(self, st, inst, loc, reason):
        f = st.fixed.get(inst)
        if f is not None:
            if f[0] != loc:
                raise _Conflict(f[1] | reason)
            return
        if loc in st.excl[inst]:
            raise _Conflict(st.excl[inst][loc] | reason)
        st.fixed[inst] = (loc, reason)

    def _exclude(self, st, inst, loc, reason):
        f = st.fixed.get(inst)
        if f is not None:
            if f[0] == loc:
                raise _Conflict(f[1] | reason)
            return
        if loc in st.excl[inst]:
            return
        st.excl[inst][loc] = reason
        remaining = [l for l in self.p.domains[inst] if l not in st.excl[inst]]
        if not remaining:
            raise _Conflict(frozenset().union(*st.excl[inst].values()))
        if len(remaining) == 1:
            st.fixed[inst] = (remaining[0], frozenset().union(*st.excl[inst].values()))

    def _apply(self, st: _State, opt, level):
        pos, negs, diffs = opt
        me = frozenset([level])
        for inst, loc in pos.items():
            self._fix(st, inst, loc, me)
        for inst, loc in negs:
            self._exclude(st, inst, loc, me)
        for i, j, b in diffs:
            self._assert_diff(st, i, j, b, level)

    # option status ------------------------------------------------------

    def _status(self, st: _State, opt):
        """0 inconsistent, 1 consistent, 2 entailed."""
        pos, negs, diffs = opt
        ent = True
        fixed = st.fixed
        excl = st.excl
        for inst, loc in pos.items():
            f = fixed.get(inst)
            if f is not None:
                if f[0] != loc:
                    return 0
            elif loc in excl[inst]:
                return 0
            else:
                ent = False
        for inst, loc in negs:
            f = fixed.get(inst)
            if f is not None:
                if f[0] == loc:
                    return 0
            elif loc not in excl[inst]:
                ent = False
        rows = st.lists()
        for i, j, b in diffs:
            back = rows[j][i]
            if back < _INF and b + back - ((b | back) & 1) < LE_ZERO:
                return 0
            if ent and rows[i][j] > b:
                ent = False
        return 2 if ent else 1

    def _option_reason(self, st, opt) -> frozenset:
        pos, negs, diffs = opt
        for inst, loc in pos.items():
            f = st.fixed.get(inst)
            if (f is not None and f[0] != loc) or loc in st.excl[inst]:
                return self._loc_reason(st, inst, loc)
        for inst, loc in negs:
            f = st.fixed.get(inst)
            if f is not None and f[0] == loc:
                return f[1]
        rows = st.lists()
        for i, j, b in diffs:
            if add(b, rows[j][i]) < LE_ZERO:
                return self._path_reason(st, j, i)
        return frozenset()

    # search -------------------------------------------------------------

    def _examine(self, st, open_ids):
        """Drop entailed clauses; find the most constrained remaining clause."""
        still = []
        best = None
        for cid in open_ids:
            opts = self.p.clauses[cid]
            good = []
            entailed = False
            for k, o in enumerate(opts):
                s = self._status(st, o)
                if s == 2:
                    entailed = True
                    break
                if s == 1:
                    good.append(k)
            if entailed:
                continue
            still.append(cid)
            if not good:
                return still, (cid, good)
            # location-guarded implications last, clauses fixing locations first
            n = len(good)
            key = (n > 1 and self.guarded[cid], n > 1 and not self.locating[cid], n)
            if best is None or key < best[0]:
                best = (key, cid, good)
        return still, best and best[1:]

    def solve(self, enumerate_all: bool = False, on_model=None) -> str:
        """Returns "sat", "unsat" or "budget"; ``on_model(state)`` is called per leaf."""
        if self.p.trivially_false:
            return "unsat"
        st = self._initial_state()
        for inst, dom in self.p.domains.items():
            if len(dom) == 1:
                st.fixed[inst] = (dom[0], frozenset())
        levels = []  # each: dict(cid, opts, idx, state, open, cs, elim)
        open_ids = list(range(len(self.p.clauses)))
        found = False
        while True:
            self.nodes += 1
            if self.nodes > self.budget or (self.deadline is not None and self.nodes % 256 == 0
                                            and time.perf_counter() > self.deadline):
                return "budget"
            open_ids, pick = self._examine(st, open_ids)
            conflict = None
            if pick is None:
                found = True
                self.model_state = st
                if on_model is not None:
                    on_model(st)
                if not enumerate_all:
                    return "sat"
                conflict = frozenset(range(len(levels)))
            else:
                cid, good = pick
                opts = self.p.clauses[cid]
                badset = [k for k in range(len(opts)) if k not in good]
                elim = frozenset()
                for k in badset:
                    elim |= self._option_reason(st, opts[k])
                if not good:
                    conflict = elim
                else:
                    lvl = len(levels)
                    levels.append({"cid": cid, "opts": good, "idx": 0, "state": st, "open": open_ids,
                                   "cs": frozenset(), "elim": elim})
                    res = self._enter(levels, lvl)
                    if res is None:
                        st = levels[lvl]["next"]
                        open_ids = [c for c in open_ids if c != cid]
                        continue
                    conflict = res
            # backjump
            while True:
                if enumerate_all:
                    conflict = frozenset(range(len(levels)))
                if not conflict:
                    return "sat" if found else "unsat"
                d = max(conflict)
                del levels[d + 1:]
                L = levels[d]
                L["cs"] = L["cs"] | (conflict - {d})
                L["idx"] += 1
                res = self._enter(levels, d)
                if res is None:
                    st = L["next"]
                    open_ids = [c for c in L["open"] if c != L["cid"]]
                    break
                conflict = res

    def _enter(self, levels, d):
        """Try options of level d from its current index. Returns None on
        success (state stored in ``next``) or the conflict set to propagate."""
        L = levels[d]
        opts = self.p.clauses[L["cid"]]
        while L["idx"] < len(L["opts"]):
            st = L["state"].copy()
            try:
                self._apply(st, opts[L["opts"][L["idx"]]], d)
                L["next"] = st
                return None
            except _Conflict as c:
                L["cs"] = L["cs"] | (c.reasons - {d})
                L["idx"] += 1
        out = L["cs"] | L["elim"]
        levels.pop()
        return out

    # models -------------------------------------------------------------

    def model_of(self, st: _State):
        locs = {}
        for inst, dom in self.p.domains.items():
            f = st.fixed.get(inst)
            if f is not None:
                locs[inst] = f[0]
            else:
                locs[inst] = next(l for l in dom if l not in st.excl[inst])
        z = DBM.from_matrix(st.m)
        val = pick_point(z)
        names = ["0"] + self.p.clocks
        return locs, val, z, names


def pick_point(z: DBM) -> dict:
    """An exact rational point of a non-empty zone, as {clock index: Fraction}."""
    from fractions import Fraction
    n = z.dim
    B = [[None if int(b) >= _INF else (Fraction(bound_value(b)), bound_strict(b)) for b in row] for row in z.m]

    def plus(a, b):
        if a is None or b is None:
            return None
        return (a[0] + b[0], a[1] or b[1])

    def less(a, b):
        if a is None:
            return False
        if b is None:
            return True
        return a[0] < b[0] or (a[0] == b[0] and a[1] and not b[1])

    def tighten(i, j, b):
        for p in range(n):
            for q in range(n):
                c = plus(plus(B[p][i], b), B[j][q])
                if less(c, B[p][q]):
                    B[p][q] = c

    vals = {}
    for k in range(1, n):
        lo_v, lo_s = -B[0][k][0], B[0][k][1]
        hi = B[k][0]
        if not lo_s:
            v = lo_v
        elif hi is None:
            v = lo_v + 1
        else:
            v = (lo_v + hi[0]) / 2
        vals[k] = v
        tighten(k, 0, (v, False))
        tighten(0, k, (-v, False))
    return vals


def check_sat(f: F.Formula, domains: Optional[Mapping] = None, node_budget: int = DEFAULT_NODE_BUDGET,
              timeout: Optional[float] = None) -> SatResult:
    t0 = time.perf_counter()
    try:
        p = Problem(f, domains)
    except BudgetExceeded:
        return SatResult("budget", seconds=time.perf_counter() - t0)
    s = Solver(p, node_budget, None if timeout is None else t0 + timeout)
    status = s.solve()
    res = SatResult(status, nodes=s.nodes, seconds=time.perf_counter() - t0)
    if status == "sat":
        locs, val, z, names = s.model_of(s.model_state)
        res.locations = {k: v for k, v in locs.items() if v != OTHER}
        res.valuation = {names[k]: v for k, v in val.items()}
        from .zonegraph import zone_atoms
        parts = [At(i, l) for i, l in res.locations.items()]
        res.model = F.conj(*parts, *zone_atoms(z, names))
    return res


def is_sat(f, domains=None, **kw) -> bool:
    r = check_sat(f, domains, **kw)
    if r.status == "budget":
        raise BudgetExceeded("solver budget exhausted")
    return r.sat


def implies(a, b, domains=None, **kw) -> bool:
    return not is_sat(F.conj(a, F.neg(b)), domains, **kw)


def equivalent(a, b, domains=None, **kw) -> bool:
    return implies(a, b, domains, **kw) and implies(b, a, domains, **kw)


def cubes(f: F.Formula, domains: Optional[Mapping] = None, node_budget: int = DEFAULT_NODE_BUDGET):
    """Satisfiable cubes covering the models of f, as (locations, DBM, clock names)."""
    p = Problem(f, domains)
    s = Solver(p, node_budget)
    out = []

    def keep(st):
        fixed = {k: v[0] for k, v in st.fixed.items()}
        excl = {k: frozenset(v) for k, v in st.excl.items() if v}
        out.append((fixed, excl, DBM.from_matrix(st.m)))

    if s.solve(enumerate_all=True, on_model=keep) == "budget":
        raise BudgetExceeded("solver budget exhausted")
    return out, ["0"] + p.clocks


def project(f: F.Formula, drop, domains: Optional[Mapping] = None) -> F.Formula:
    """Existentially quantify the clocks in ``drop``."""
    from .zonegraph import zone_atoms
    drop = set(drop)
    found, names = cubes(f, domains)
    keep_idx = [k for k, n in enumerate(names) if n not in drop]
    kept = [names[k] for k in keep_idx]
    parts = []
    for fixed, excl, z in found:
        zz = z.project_out([k for k, n in enumerate(names) if n in drop])
        lits = [At(i, l) for i, l in fixed.items() if l != OTHER]
        lits += [Not(At(i, l)) for i, ls in excl.items() if i not in fixed for l in ls if l != OTHER]
        parts.append(F.conj(*lits, *zone_atoms(zz, kept)))
    return F.disj(*parts)
