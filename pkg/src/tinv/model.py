"""Timed components, systems and the textual model format."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

from . import formula as F
from .formula import Diff, Formula

TAU = "tau"

ORDINARY = "ordinary"
HISTORY = "history"
SHARED = "h0"
INTERACTION = "interaction"


class ModelError(ValueError):
    def __init__(self, msg, line=None, col=None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {col}" if col is not None else "") + ": "
        super().__init__(where + msg)
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Edge:
    source: object
    action: str
    guard: tuple
    resets: frozenset
    target: object


@dataclass(frozen=True)
class Component:
    name: str
    locations: tuple
    clocks: tuple
    edges: tuple
    tpc: Mapping
    initial: object
    init_constraint: tuple
    actions: tuple = ()
    clock_kinds: Mapping = field(default_factory=dict)
    projections: Mapping = field(default_factory=dict)

    def __hash__(self):
        return hash((self.name, self.locations, self.clocks, self.edges, self.initial, self.init_constraint))

    def kind(self, clock: str) -> str:
        return self.clock_kinds.get(clock, ORDINARY)

    def tpc_of(self, loc) -> tuple:
        return tuple(self.tpc.get(loc, ()))

    def out_edges(self, loc):
        return [e for e in self.edges if e.source == loc]


@dataclass(frozen=True)
class Interaction:
    id: str
    actions: tuple  # namespaced "inst.act"

    def instances(self):
        return [a.split(".", 1)[0] for a in self.actions]

    def action_set(self) -> frozenset:
        return frozenset(self.actions)


@dataclass(frozen=True)
class Symmetry:
    controller: str
    members: tuple
    serial: Optional[str] = None


@dataclass(frozen=True)
class SystemModel:
    components: Mapping
    instances: tuple  # of (instance name, component name)
    interactions: tuple
    properties: tuple = ()  # of (name, Formula)
    symmetry: Optional[Symmetry] = None
    name: str = "system"

    def __hash__(self):
        return hash((self.instances, self.interactions, self.properties))

    def component_of(self, inst: str) -> Component:
        for n, c in self.instances:
            if n == inst:
                return self.components[c]
        raise KeyError(inst)

    def instance_names(self):
        return [n for n, _ in self.instances]

    def property(self, name: str) -> Formula:
        for n, f in self.properties:
            if n == name:
                return f
        raise KeyError(name)

    def location_domains(self) -> dict:
        return {n: tuple(self.components[c].locations) for n, c in self.instances}

    def interaction(self, iid: str) -> Interaction:
        for a in self.interactions:
            if a.id == iid:
                return a
        raise KeyError(iid)


def global_clock(inst: str, clock: str, kind: str = ORDINARY) -> str:
    return "h0" if kind == SHARED else f"{inst}.{clock}"


def history_clock_name(action: str) -> str:
    """Local name of the history clock for a (local) action."""
    return f"h_{action}"


def action_history(gaction: str) -> str:
    """Global history clock of a namespaced action ``inst.a``."""
    inst, act = gaction.split(".", 1)
    return f"{inst}.h_{act}"


def component_actions(comp: Component) -> tuple:
    if comp.actions:
        return comp.actions
    return tuple(dict.fromkeys(e.action for e in comp.edges if e.action != TAU))


def max_constants(comp: Component) -> dict:
    """Largest constant each clock is compared with in guards, invariants and init."""
    out = {c: None for c in comp.clocks}
    atoms = list(comp.init_constraint)
    for e in comp.edges:
        atoms.extend(e.guard)
    for t in comp.tpc.values():
        atoms.extend(t)
    for a in atoms:
        for c in (a.lhs, a.rhs):
            if c is None or c not in out:
                continue
            v = abs(a.ct)
            out[c] = v if out[c] is None else max(out[c], v)
    return out


# parsing ----------------------------------------------------------------

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")


def _ident(tok, line, col=None, what="name"):
    if not _IDENT.match(tok):
        raise ModelError(f"invalid {what} {tok!r}", line, col)
    return tok


class _Lines:
    def __init__(self, text):
        self.items = []
        for no, raw in enumerate(text.splitlines(), 1):
            s = raw.split("#", 1)[0].strip()
            if s:
                self.items.append((no, s))
        self.i = 0

    def next(self):
        if self.i >= len(self.items):
            return None, None
        v = self.items[self.i]
        self.i += 1
        return v


def _clock_checker(clocks, line):
    def check(name, col):
        if name not in clocks:
            raise ModelError(f"unknown clock {name!r}", line, col)
    return check


def _conj(text, clocks, line):
    try:
        return tuple(F.parse_conjunction(text, _clock_checker(clocks, line)))
    except F.FormulaSyntaxError as e:
        raise ModelError(str(e), line) from None


def _parse_component(name, lines, first_line):
    clocks = []
    locs = []
    tpc = {}
    initial = None
    init = None
    edges = []
    projections = {}
    while True:
        no, s = lines.next()
        if s is None:
            raise ModelError(f"component {name} is missing 'end'", first_line)
        words = s.split()
        kw = words[0]
        if kw == "end":
            break
        if kw == "clock":
            for c in " ".join(words[1:]).split(","):
                c = _ident(c.strip(), no, what="clock name")
                if c in clocks:
                    raise ModelError(f"duplicate clock {c!r}", no)
                clocks.append(c)
        elif kw == "location":
            m = re.match(r"location\s+(\w+)(\s+initial)?(?:\s+tpc\s+(.*))?$", s)
            if not m:
                raise ModelError("malformed location declaration", no)
            loc = m.group(1)
            if loc in locs:
                raise ModelError(f"duplicate location {loc!r}", no)
            locs.append(loc)
            if m.group(2):
                if initial is not None and initial != loc:
                    raise ModelError("more than one initial location", no)
                initial = loc
            if m.group(3):
                atoms = _conj(m.group(3), clocks, no)
                for a in atoms:
                    if a.rhs is not None or a.op != "<=":
                        raise ModelError("time progress conditions must be upper bounds x <= ct", no)
                tpc[loc] = atoms
        elif kw == "edge":
            m = re.match(r"edge\s+(\w+)\s*->\s*(\w+)\s+on\s+(\w+)(.*)$", s)
            if not m:
                raise ModelError("malformed edge declaration", no)
            src, dst, act, rest = m.groups()
            for l in (src, dst):
                if l not in locs:
                    raise ModelError(f"unknown location {l!r}", no)
            guard = ()
            resets = frozenset()
            rest = rest.strip()
            gm = re.match(r"(?:guard\s+(.*?))?\s*(?:reset\s+(.*))?$", rest)
            if not gm:
                raise ModelError("malformed edge declaration", no)
            if gm.group(1):
                guard = _conj(gm.group(1), clocks, no)
            if gm.group(2):
                rs = [r.strip() for r in gm.group(2).split(",")]
                for r in rs:
                    if r not in clocks:
                        raise ModelError(f"unknown clock {r!r}", no)
                resets = frozenset(rs)
            edges.append(Edge(src, act, guard, resets, dst))
        elif kw == "init":
            m = re.match(r"init\s+(\w+)\s+provided\s+(.*)$", s)
            if not m:
                raise ModelError("malformed init declaration", no)
            if m.group(1) not in locs:
                raise ModelError(f"unknown location {m.group(1)!r}", no)
            if initial is not None and initial != m.group(1):
                raise ModelError("init location differs from the initial location", no)
            initial = m.group(1)
            init = _conj(m.group(2), clocks, no)
        elif kw == "project":
            m = re.match(r"project\s+(\w+)\s+onto\s+(.*)$", s)
            if not m or m.group(1) not in locs:
                raise ModelError("malformed projection annotation", no)
            acts = tuple(a.strip() for a in m.group(2).split(","))
            projections.setdefault(m.group(1), []).append(acts)
        else:
            raise ModelError(f"unexpected {kw!r} in component", no, 1)
    if not locs:
        raise ModelError(f"component {name} has no locations", first_line)
    if initial is None:
        raise ModelError(f"component {name} has no initial location", first_line)
    if init is None:
        init = tuple(Diff(c, None, "=", 0) for c in clocks)
    comp = Component(name, tuple(locs), tuple(clocks), tuple(edges), tpc, initial, init,
                     projections={k: tuple(v) for k, v in projections.items()})
    acts = component_actions(comp)
    for loc, projs in comp.projections.items():
        for p in projs:
            for a in p:
                if a not in acts:
                    raise ModelError(f"unknown action {a!r} in projection", first_line)
    return Component(comp.name, comp.locations, comp.clocks, comp.edges, comp.tpc, comp.initial,
                     comp.init_constraint, acts, {}, comp.projections)


def parse_model(text: str, name: str = "system", allow_history: bool = True) -> SystemModel:
    lines = _Lines(text)
    comps = {}
    instances = []
    interactions = []
    raw_props = []
    symmetry = None
    seen_system = False
    while True:
        no, s = lines.next()
        if s is None:
            break
        words = s.split()
        if words[0] == "component":
            if len(words) != 2:
                raise ModelError("expected 'component <Name>'", no)
            cname = _ident(words[1], no)
            if cname in comps:
                raise ModelError(f"duplicate component {cname!r}", no)
            comps[cname] = _parse_component(cname, lines, no)
        elif words[0] == "system":
            seen_system = True
            while True:
                no, s = lines.next()
                if s is None:
                    raise ModelError("system block is missing 'end'")
                words = s.split()
                if words[0] == "end":
                    break
                if words[0] == "instance":
                    if len(words) != 3:
                        raise ModelError("expected 'instance <name> <Component>'", no)
                    iname = _ident(words[1], no)
                    if iname in ("gamma", "h0"):
                        raise ModelError(f"instance name {iname!r} is reserved", no)
                    if words[2] not in comps:
                        raise ModelError(f"unknown component {words[2]!r}", no)
                    if iname in dict(instances):
                        raise ModelError(f"duplicate instance {iname!r}", no)
                    instances.append((iname, words[2]))
                elif words[0] == "interaction":
                    m = re.match(r"interaction\s+(\w+)\s*=\s*(.*)$", s)
                    if not m:
                        raise ModelError("malformed interaction", no)
                    parts = tuple(p.strip() for p in m.group(2).split("|"))
                    insts = dict(instances)
                    used = set()
                    for p in parts:
                        if "." not in p:
                            raise ModelError(f"action {p!r} must be written inst.action", no)
                        i, a = p.split(".", 1)
                        if i not in insts:
                            raise ModelError(f"unknown instance {i!r}", no)
                        if a == TAU or a not in comps[insts[i]].actions:
                            raise ModelError(f"unknown action {p!r}", no)
                        if i in used:
                            raise ModelError(f"instance {i!r} appears twice in interaction {m.group(1)}", no)
                        used.add(i)
                    if any(x.id == m.group(1) for x in interactions):
                        raise ModelError(f"duplicate interaction {m.group(1)!r}", no)
                    interactions.append(Interaction(m.group(1), parts))
                elif words[0] == "symmetry":
                    m = re.match(r"symmetry\s+controller\s+(\w+)\s+class\s+([\w,\s]+?)(?:\s+serial\s+(\w+))?$", s)
                    if not m:
                        raise ModelError("malformed symmetry declaration", no)
                    members = tuple(x.strip() for x in m.group(2).split(","))
                    for i in (m.group(1),) + members:
                        if i not in dict(instances):
                            raise ModelError(f"unknown instance {i!r}", no)
                    symmetry = Symmetry(m.group(1), members, m.group(3))
                elif words[0] == "property":
                    m = re.match(r"property\s+(\w+)\s*:\s*(.*)$", s)
                    if not m:
                        raise ModelError("malformed property", no)
                    raw_props.append((no, m.group(1), m.group(2)))
                else:
                    raise ModelError(f"unexpected {words[0]!r} in system", no, 1)
        else:
            raise ModelError(f"unexpected {words[0]!r}", no, 1)
    if not seen_system:
        raise ModelError("missing system block")
    insts = dict(instances)
    props = []
    for no, pname, text in raw_props:
        props.append((pname, _parse_property(text, insts, comps, no, allow_history)))
    return SystemModel(comps, tuple(instances), tuple(interactions), tuple(props), symmetry, name)


def _parse_property(text, insts, comps, no, allow_history):
    def check_loc(inst, loc, col):
        if inst not in insts:
            raise ModelError(f"unknown instance {inst!r}", no, col)
        if loc not in comps[insts[inst]].locations:
            raise ModelError(f"unknown location {loc!r}", no, col)

    def check_clock(name, col):
        if name == "h0":
            if not allow_history:
                raise ModelError("history clocks are not allowed in properties", no, col)
            return
        if "." not in name:
            raise ModelError(f"unknown clock {name!r}", no, col)
        inst, c = name.split(".", 1)
        if inst == "gamma":
            if not allow_history:
                raise ModelError("history clocks are not allowed in properties", no, col)
            return
        if inst not in insts:
            raise ModelError(f"unknown instance {inst!r}", no, col)
        comp = comps[insts[inst]]
        if c in comp.clocks:
            return
        if c.startswith("h_") and c[2:] in comp.actions:
            if not allow_history:
                raise ModelError("history clocks are not allowed in properties", no, col)
            return
        raise ModelError(f"unknown clock {name!r}", no, col)

    try:
        return F.parse_formula(text, check_clock, check_loc)
    except F.FormulaSyntaxError as e:
        raise ModelError(str(e), no) from None


def load_model(path) -> SystemModel:
    p = Path(path)
    return parse_model(p.read_text(), name=p.stem)


def bundled_model_path(name: str) -> Path:
    base = Path(__file__).parent / "models"
    p = base / name
    if not p.suffix:
        p = p.with_suffix(".tinv")
    return p


def resolve_model(path) -> SystemModel:
    p = Path(path)
    if not p.exists():
        q = bundled_model_path(str(path))
        if q.exists():
            p = q
    return load_model(p)


# printing ---------------------------------------------------------------

def print_component(comp: Component) -> str:
    out = [f"component {comp.name}"]
    if comp.clocks:
        out.append("  clock " + ", ".join(comp.clocks))
    for loc in comp.locations:
        s = f"  location {loc}"
        if loc == comp.initial:
            s += " initial"
        if comp.tpc.get(loc):
            s += " tpc " + F.conj_text(comp.tpc[loc])
        out.append(s)
    for e in comp.edges:
        s = f"  edge {e.source} -> {e.target} on {e.action}"
        if e.guard:
            s += " guard " + F.conj_text(e.guard)
        if e.resets:
            s += " reset " + ",".join(sorted(e.resets))
        out.append(s)
    out.append(f"  init {comp.initial} provided " + F.conj_text(comp.init_constraint))
    for loc, projs in comp.projections.items():
        for p in projs:
            out.append(f"  project {loc} onto " + ",".join(p))
    out.append("end")
    return "\n".join(out)


def print_model(m: SystemModel) -> str:
    out = [print_component(c) for c in m.components.values()]
    out.append("system")
    for n, c in m.instances:
        out.append(f"  instance {n} {c}")
    for a in m.interactions:
        out.append(f"  interaction {a.id} = " + " | ".join(a.actions))
    if m.symmetry:
        s = f"  symmetry controller {m.symmetry.controller} class " + ",".join(m.symmetry.members)
        if m.symmetry.serial:
            s += f" serial {m.symmetry.serial}"
        out.append(s)
    for n, f in m.properties:
        out.append(f"  property {n}: {F.to_text(f)}")
    out.append("end")
    return "\n".join(out) + "\n"


# product ----------------------------------------------------------------

def instance_component(m: SystemModel, inst: str) -> Component:
    """The component of ``inst`` with globally named clocks."""
    comp = m.component_of(inst)
    return rename_clocks(comp, lambda c: global_clock(inst, c, comp.kind(c)))


def rename_clocks(comp: Component, fn) -> Component:
    def ren(atoms):
        return tuple(Diff(fn(a.lhs), None if a.rhs is None else fn(a.rhs), a.op, a.ct) for a in atoms)

    edges = tuple(Edge(e.source, e.action, ren(e.guard), frozenset(fn(r) for r in e.resets), e.target)
                  for e in comp.edges)
    return Component(comp.name, comp.locations, tuple(dict.fromkeys(fn(c) for c in comp.clocks)), edges,
                     {k: ren(v) for k, v in comp.tpc.items()}, comp.initial, ren(comp.init_constraint),
                     comp.actions, {fn(c): k for c, k in comp.clock_kinds.items()}, comp.projections)


def compose(m: SystemModel) -> Component:
    """Flat product of all instances; locations are tuples in instance order.

    Each interaction yields one edge per choice of participating edges and
    per location of the idle instances; internal edges move one instance.
    """
    names = m.instance_names()
    comps = [instance_component(m, n) for n in names]
    index = {n: k for k, n in enumerate(names)}
    clocks = tuple(dict.fromkeys(c for comp in comps for c in comp.clocks))
    kinds = {}
    for comp in comps:
        kinds.update(comp.clock_kinds)
    locs = list(itertools.product(*[c.locations for c in comps]))
    tpc = {}
    for l in locs:
        atoms = tuple(a for k, comp in enumerate(comps) for a in comp.tpc_of(l[k]))
        if atoms:
            tpc[l] = atoms
    edges = []
    for alpha in m.interactions:
        parts = [(index[a.split(".", 1)[0]], a.split(".", 1)[1]) for a in alpha.actions]
        choices = [[e for e in comps[k].edges if e.action == act] for k, act in parts]
        idle = [k for k in range(len(comps)) if k not in {p for p, _ in parts}]
        for combo in itertools.product(*choices):
            for rest in itertools.product(*[comps[k].locations for k in idle]):
                src = [None] * len(comps)
                dst = [None] * len(comps)
                for (k, _), e in zip(parts, combo):
                    src[k], dst[k] = e.source, e.target
                for k, l in zip(idle, rest):
                    src[k] = dst[k] = l
                guard = tuple(a for e in combo for a in e.guard)
                resets = frozenset(r for e in combo for r in e.resets)
                edges.append(Edge(tuple(src), alpha.id, guard, resets, tuple(dst)))
    for k, comp in enumerate(comps):
        for e in comp.edges:
            if e.action != TAU:
                continue
            others = [comps[j].locations if j != k else [None] for j in range(len(comps))]
            for rest in itertools.product(*others):
                src = list(rest)
                dst = list(rest)
                src[k], dst[k] = e.source, e.target
                edges.append(Edge(tuple(src), TAU, e.guard, e.resets, tuple(dst)))
    init = tuple(a for comp in comps for a in comp.init_constraint)
    return Component("product", tuple(locs), clocks, tuple(edges), tpc,
                     tuple(c.initial for c in comps), init,
                     tuple(a.id for a in m.interactions), kinds)
