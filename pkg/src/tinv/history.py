"""History-clock extension of components and systems.

Every action ``a`` of a component gets a clock ``h_a`` reset whenever ``a``
fires, and a shared clock ``h0`` is never reset. Initially ``h0 = 0`` and
all action clocks are strictly positive, so ``h_a > h0`` reads "a has not
happened yet" and ``h_a <= h0`` reads "a happened ``h_a`` time units ago".
"""

from __future__ import annotations

from .formula import Diff
from .model import (HISTORY, INTERACTION, SHARED, TAU, Component, Edge, Interaction, SystemModel,
                    component_actions, history_clock_name)

INTERACTION_INSTANCE = "gamma"


def extend(comp: Component) -> Component:
    actions = component_actions(comp)
    hist = tuple(history_clock_name(a) for a in actions)
    if "h0" in comp.clocks or any(h in comp.clocks for h in hist):
        raise ValueError(f"component {comp.name} already uses history clock names")
    edges = tuple(e if e.action == TAU else
                  Edge(e.source, e.action, e.guard, e.resets | {history_clock_name(e.action)}, e.target)
                  for e in comp.edges)
    init = tuple(comp.init_constraint) + (Diff("h0", None, "=", 0),) + tuple(Diff(h, None, ">", 0) for h in hist)
    kinds = dict(comp.clock_kinds)
    kinds["h0"] = SHARED
    kinds.update({h: HISTORY for h in hist})
    return Component(comp.name + "^h", comp.locations, comp.clocks + ("h0",) + hist, edges, comp.tpc,
                     comp.initial, init, actions, kinds, comp.projections)


def interaction_clock(iid: str) -> str:
    return f"h_{iid}"


def interaction_component(interactions) -> Component:
    """One location with a self-loop per interaction resetting its clock."""
    ids = [a.id for a in interactions]
    hist = tuple(interaction_clock(i) for i in ids)
    edges = tuple(Edge("l*", i, (), frozenset({interaction_clock(i)}), "l*") for i in ids)
    init = (Diff("h0", None, "=", 0),) + tuple(Diff(h, None, ">", 0) for h in hist)
    kinds = {"h0": SHARED}
    kinds.update({h: INTERACTION for h in hist})
    return Component("Interactions", ("l*",), ("h0",) + hist, edges, {}, "l*", init, tuple(ids), kinds)


def extend_system(m: SystemModel) -> SystemModel:
    """Extended components plus the interaction observer glued by (a_alpha | alpha)."""
    comps = {name: extend(c) for name, c in m.components.items()}
    star = interaction_component(m.interactions)
    comps[star.name] = star
    instances = tuple(m.instances) + ((INTERACTION_INSTANCE, star.name),)
    gamma = tuple(Interaction(a.id, tuple(a.actions) + (f"{INTERACTION_INSTANCE}.{a.id}",))
                  for a in m.interactions)
    return SystemModel(comps, instances, gamma, m.properties, m.symmetry, m.name + "^h")
