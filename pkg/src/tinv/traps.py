"""Interaction invariants from initially marked traps.

The system's control structure is read as a 1-safe Petri net whose places
are component locations and whose transitions are the tuples of edges an
interaction (or an internal step) can fire. A trap is a set of places such
that every transition taking a token from it also puts one back; once
marked it stays marked, so the disjunction of its places is invariant.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import formula as F
from .formula import At
from .model import TAU, SystemModel

DEFAULT_MAX_TRAPS = 10_000


class TrapLimitExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class Net:
    places: tuple  # (inst, loc)
    transitions: tuple  # (pre frozenset, post frozenset, label)
    initial: frozenset


def build_net(m: SystemModel) -> Net:
    places = [(i, l) for i in m.instance_names() for l in m.component_of(i).locations]
    trans = []
    seen = set()
    for a in m.interactions:
        choices = []
        for act in a.actions:
            inst, act_name = act.split(".", 1)
            comp = m.component_of(inst)
            choices.append([(inst, e) for e in comp.edges if e.action == act_name])
        for combo in itertools.product(*choices):
            pre = frozenset((i, e.source) for i, e in combo)
            post = frozenset((i, e.target) for i, e in combo)
            key = (pre, post)
            if key not in seen:
                seen.add(key)
                trans.append((pre, post, a.id))
    for inst in m.instance_names():
        for e in m.component_of(inst).edges:
            if e.action == TAU:
                key = (frozenset([(inst, e.source)]), frozenset([(inst, e.target)]))
                if key not in seen:
                    seen.add(key)
                    trans.append((key[0], key[1], f"{inst}.tau"))
    init = frozenset((i, m.component_of(i).initial) for i in m.instance_names())
    return Net(tuple(places), tuple(trans), init)


def is_trap(net: Net, P) -> bool:
    P = set(P)
    return all(not (pre & P) or (post & P) for pre, post, _ in net.transitions)


def _violated(net, P):
    for pre, post, _ in net.transitions:
        if pre & P and not (post & P):
            return post
    return None


def _tautological(P, domains):
    return any(all((i, l) in P for l in locs) for i, locs in domains.items())


def minimal_traps(m: SystemModel, max_traps: int = DEFAULT_MAX_TRAPS, skip_tautologies: bool = True) -> list:
    """Minimal initially marked traps, as sorted tuples of places.

    Each trap is grown from one initially marked place by repeatedly
    adding a place of the post-set of some violated transition; sets
    already covering a found trap are cut off.
    """
    net = build_net(m)
    domains = {i: m.component_of(i).locations for i in m.instance_names()}
    order = {p: k for k, p in enumerate(net.places)}
    found = []
    seen = set()

    def covers_found(P):
        return any(t <= P for t in found)

    for seed in sorted(net.initial, key=order.get):
        stack = [frozenset([seed])]
        while stack:
            P = stack.pop()
            if P in seen:
                continue
            seen.add(P)
            if covers_found(P):
                continue
            if skip_tautologies and _tautological(P, domains):
                continue
            post = _violated(net, P)
            if post is None:
                found = [t for t in found if not P <= t]
                found.append(P)
                if len(found) > max_traps:
                    raise TrapLimitExceeded(f"more than {max_traps} traps")
                continue
            for p in sorted(post, key=order.get, reverse=True):
                stack.append(P | {p})
    minimal = [t for t in found if not any(u < t for u in found)]
    return sorted((tuple(sorted(t, key=order.get)) for t in minimal), key=lambda t: [order[p] for p in t])


def interaction_invariant(m: SystemModel, traps=None) -> F.Formula:
    if traps is None:
        traps = minimal_traps(m)
    return F.conj(*[F.disj(*[At(i, l) for i, l in t]) for t in traps])


def dump_traps(traps) -> str:
    return "\n".join("{" + ", ".join(f"{i}@{l}" for i, l in t) + "}" for t in traps)
