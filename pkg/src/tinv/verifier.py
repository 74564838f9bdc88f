"""Compositional invariant checking.

A property phi holds if the conjunction of the component invariants, the
interaction invariant and the chosen glue constraints contradicts not-phi.
Component invariants are computed on history-extended components whenever
glue over history clocks is requested.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import formula as F
from . import glue as G
from .dbm import DBM
from .formula import At
from .history import extend
from .model import TAU, ModelError, SystemModel, global_clock
from .regex import regex_invariant
from .smtlib import find_solver, run_solver, to_smtlib
from .solver import DEFAULT_NODE_BUDGET, check_sat
from .traps import interaction_invariant, minimal_traps
from .zonegraph import StateLimitExceeded, component_invariant, reach, zone_atoms, zone_of

PROVED = "PROVED"
UNKNOWN = "UNKNOWN"
BUDGET = "BUDGET"
ERROR = "ERROR"

EXIT_CODES = {PROVED: 0, UNKNOWN: 1, BUDGET: 2, ERROR: 3}

GLUE_FAMILIES = ("e", "estar", "sep", "sepc", "prec")
DEFAULT_GLUE = ("estar", "sep")


@dataclass
class Options:
    glue: Sequence[str] = DEFAULT_GLUE
    interaction_invariant: bool = True
    heuristics: Sequence[str] = ()
    symmetry: bool = False
    separation: str = "heuristic"
    diffcap: Optional[int] = None
    max_states: int = 100_000
    node_budget: int = DEFAULT_NODE_BUDGET
    timeout: Optional[float] = None
    allow_history_props: bool = False
    enumerate_words: bool = False
    solver: str = "internal"  # or "smtlib" / the name of a solver binary
    smt_out: Optional[str] = None


@dataclass
class VerificationReport:
    property: str
    verdict: str
    counterexample: Optional[str] = None
    timings: dict = field(default_factory=dict)
    sizes: dict = field(default_factory=dict)
    glue: list = field(default_factory=list)
    message: str = ""
    solver_nodes: int = 0

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]

    def render(self) -> str:
        lines = [f"property {self.property}: {self.verdict}"]
        if self.message:
            lines.append(f"  note: {self.message}")
        if self.glue:
            lines.append("  glue: " + ", ".join(self.glue))
        for k, v in self.sizes.items():
            lines.append(f"  size {k}: {v}")
        for k, v in self.timings.items():
            lines.append(f"  time {k}: {v:.3f}s")
        if self.counterexample:
            lines.append("  potential counterexample: " + self.counterexample)
        return "\n".join(lines)


# enabledness --------------------------------------------------------------

def _edge_choices(m: SystemModel, alpha):
    out = []
    for act in alpha.actions:
        inst, a = act.split(".", 1)
        comp = m.component_of(inst)
        out.append([(inst, e) for e in comp.edges if e.action == a])
    return out


def _enabled_tuple(m: SystemModel, parts) -> F.Formula:
    """Participants at their sources and able to fire after some delay."""
    clocks = []
    for inst, _ in parts:
        comp = m.component_of(inst)
        clocks.extend(global_clock(inst, c, comp.kind(c)) for c in comp.clocks)
    clocks = list(dict.fromkeys(clocks))
    index = {c: k + 1 for k, c in enumerate(clocks)}
    dim = len(clocks) + 1

    def glob(inst, atoms):
        comp = m.component_of(inst)
        ren = lambda c: global_clock(inst, c, comp.kind(c))
        return [F.Diff(ren(a.lhs), None if a.rhs is None else ren(a.rhs), a.op, a.ct) for a in atoms]

    guard, src_tpc, dst_tpc, resets = [], [], [], []
    for inst, e in parts:
        comp = m.component_of(inst)
        guard += glob(inst, e.guard)
        src_tpc += glob(inst, comp.tpc_of(e.source))
        dst_tpc += glob(inst, comp.tpc_of(e.target))
        resets += [index[global_clock(inst, r, comp.kind(r))] for r in e.resets]
    z = zone_of(dst_tpc, index, dim).inverse_reset(resets)
    z = z.intersect(zone_of(guard, index, dim)).intersect(zone_of(src_tpc, index, dim))
    if z.is_empty():
        return F.FALSE
    z = z.down()
    return F.conj(*[At(i, e.source) for i, e in parts], *zone_atoms(z, ["0"] + clocks))


def enabled_predicate(m: SystemModel, alpha) -> F.Formula:
    return F.disj(*[_enabled_tuple(m, combo) for combo in itertools.product(*_edge_choices(m, alpha))])


def internal_enabled(m: SystemModel) -> list:
    out = []
    for inst in m.instance_names():
        for e in m.component_of(inst).edges:
            if e.action == TAU:
                out.append(_enabled_tuple(m, [(inst, e)]))
    return out


def deadlock_free_formula(m: SystemModel) -> F.Formula:
    parts = [enabled_predicate(m, a) for a in m.interactions]
    parts += internal_enabled(m)
    return F.disj(*parts)


def expand_property(m: SystemModel, f: F.Formula) -> F.Formula:
    if not any(isinstance(a, F.DeadlockFree) for a in F.atoms(f)):
        return f
    df = deadlock_free_formula(m)
    return F.substitute(f, lambda a: df if isinstance(a, F.DeadlockFree) else None)


def _mentions_history(f: F.Formula, m: SystemModel) -> bool:
    for c in F.clocks_of(f):
        if c == "h0" or c.startswith("gamma."):
            return True
        inst, name = c.split(".", 1)
        if name not in m.component_of(inst).clocks:
            return True
    return False


# invariants ---------------------------------------------------------------

class InvariantCache:
    """Component invariants computed once per component (and history flag)."""

    def __init__(self, opts: Options):
        self.opts = opts
        self.graphs = {}

    def graph(self, comp, history: bool):
        key = (comp.name, history)
        if key not in self.graphs:
            c = extend(comp) if history else comp
            self.graphs[key] = reach(c, diffcap=self.opts.diffcap, max_states=self.opts.max_states)
        return self.graphs[key]

    def component(self, m: SystemModel, inst: str, history: bool) -> F.Formula:
        comp = m.component_of(inst)
        if history and "regex" in self.opts.heuristics and not comp.clocks:
            return regex_invariant(comp, inst, self.opts.enumerate_words)
        g = self.graph(comp, history)
        ext = g.component
        names = [global_clock(inst, c, ext.kind(c)) for c in g.clocks]
        return component_invariant(g, inst, names)


def glue_formula(m: SystemModel, families, opts: Options, notes: list) -> F.Formula:
    fams = set(families)
    parts = []
    if "e" in fams:
        parts.append(G.build_E([a.actions for a in m.interactions]))
    if fams & {"estar", "sep", "sepc", "prec"}:
        parts.append(G.build_Estar(m))
    k = None
    if fams & {"sep", "sepc"}:
        k = G.separation_constants(m, opts.separation)
        notes.append("separation " + ", ".join(f"{a}={v}" for a, v in sorted(k.items())) if k else "no conflicts")
    if "sepc" in fams:
        parts.append(G.build_Sc(m, k))
    elif "sep" in fams:
        parts.append(G.build_S(m, k))
    if "prec" in fams:
        parts.append(G.build_prec(m))
    return F.conj(*parts)


def _check_symmetry(m: SystemModel, prop: F.Formula) -> Optional[str]:
    if m.symmetry is None:
        return "model declares no symmetry"
    if not G.system_is_symmetric(m):
        return "system is not symmetric under the declared class"
    base = F.canonical(prop)
    for perm in G.symmetry_permutations(m):
        other = F.canonical(G.rename_formula_instances(prop, perm))
        if other == base:
            continue
        from .solver import equivalent
        try:
            if equivalent(prop, other, m.location_domains(), node_budget=200_000):
                continue
        except Exception:
            pass
        return "property is not invariant under the symmetry"
    return None


def global_invariant(m: SystemModel, opts: Options, cache: Optional[InvariantCache] = None,
                     report: Optional[VerificationReport] = None) -> F.Formula:
    cache = cache or InvariantCache(opts)
    fams = [g for g in opts.glue if g != "none"]
    if "prec" in opts.heuristics and "prec" not in fams:
        fams.append("prec")
    history = bool(fams) or "regex" in opts.heuristics
    parts = []
    t0 = time.perf_counter()
    cis = []
    for inst in m.instance_names():
        ci = cache.component(m, inst, history)
        cis.append(ci)
    if report is not None:
        report.timings["component invariants"] = time.perf_counter() - t0
        report.sizes["component invariants"] = sum(F.size(c) for c in cis)
    parts.extend(cis)
    if opts.interaction_invariant:
        t0 = time.perf_counter()
        ii = interaction_invariant(m)
        parts.append(ii)
        if report is not None:
            report.timings["interaction invariant"] = time.perf_counter() - t0
            report.sizes["interaction invariant"] = F.size(ii)
    if fams:
        t0 = time.perf_counter()
        notes = []
        gl = glue_formula(m, fams, opts, notes)
        parts.append(gl)
        if report is not None:
            report.timings["glue"] = time.perf_counter() - t0
            report.sizes["glue"] = F.size(gl)
            report.glue = sorted(fams, key=GLUE_FAMILIES.index)
            if notes:
                report.message = "; ".join(notes)
    return F.conj(*parts)


def check(m: SystemModel, prop: Optional[str] = None, opts: Optional[Options] = None,
          formula: Optional[F.Formula] = None) -> VerificationReport:
    opts = opts or Options()
    name = prop or ("<formula>" if formula is not None else "")
    rep = VerificationReport(name, ERROR)
    start = time.perf_counter()
    try:
        if formula is None:
            if prop is None:
                if not m.properties:
                    raise ModelError("model has no properties")
                name, formula = m.properties[0]
                rep.property = name
            else:
                try:
                    formula = m.property(prop)
                except KeyError:
                    if prop == "deadlock":
                        formula = F.DeadlockFree()
                    else:
                        raise ModelError(f"unknown property {prop!r}") from None
        if _mentions_history(formula, m) and not opts.allow_history_props:
            raise ModelError("property mentions history clocks; pass --allow-history-props to permit this")
        glue = list(opts.glue)
        if opts.symmetry:
            why = _check_symmetry(m, formula)
            if why:
                raise ModelError(f"symmetry reduction refused: {why}")
            glue = ["sepc" if g == "sep" else g for g in glue]
            if "sepc" not in glue:
                glue.append("sepc")
            opts = Options(**{**opts.__dict__, "glue": glue})
        phi = expand_property(m, formula)
        gi = global_invariant(m, opts, report=rep)
        query = F.conj(gi, F.neg(phi))
        t0 = time.perf_counter()
        remaining = None if opts.timeout is None else max(0.1, opts.timeout - (t0 - start))
        if opts.smt_out or opts.solver != "internal":
            script = to_smtlib(query, m.location_domains(), comment=f"{m.name}: {rep.property}")
            if opts.smt_out:
                with open(opts.smt_out, "w") as fh:
                    fh.write(script)
        if opts.solver != "internal":
            cmd = find_solver(None if opts.solver == "smtlib" else opts.solver)
            if cmd is None:
                raise ModelError(f"no external SMT solver found ({opts.solver})")
            status = run_solver(script, cmd, remaining)
            rep.timings["solver"] = time.perf_counter() - t0
            rep.verdict = {"unsat": PROVED, "sat": UNKNOWN}.get(status, BUDGET)
            if status == "sat":
                rep.counterexample = "(model not reported by external solver)"
            rep.timings["total"] = time.perf_counter() - start
            return rep
        res = check_sat(query, m.location_domains(), node_budget=opts.node_budget, timeout=remaining)
        rep.timings["solver"] = time.perf_counter() - t0
        rep.solver_nodes = res.nodes
        if res.status == "unsat":
            rep.verdict = PROVED
        elif res.status == "sat":
            rep.verdict = UNKNOWN
            rep.counterexample = F.to_text(res.model)
        else:
            rep.verdict = BUDGET
            rep.message = (rep.message + "; " if rep.message else "") + "solver budget exhausted"
    except StateLimitExceeded as e:
        rep.verdict = BUDGET
        rep.message = str(e)
    except (G.GlueSizeError,) as e:
        rep.verdict = BUDGET
        rep.message = str(e)
    except (ModelError, ValueError) as e:
        rep.verdict = ERROR
        rep.message = str(e)
    rep.timings["total"] = time.perf_counter() - start
    return rep
