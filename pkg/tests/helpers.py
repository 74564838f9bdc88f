"""Shared builders for the test suite."""

import itertools

from tinv.model import Component, Edge, Interaction, SystemModel


def vector_profiles(max_interactions=3, max_actions=6):
    """Interaction sets up to renaming of actions.

    Every action is described by the set of interactions it belongs to;
    a profile picks how many actions carry each membership pattern.
    Yields lists of interactions, each a frozenset of action names.
    """
    seen = set()
    for m in range(1, max_interactions + 1):
        patterns = [p for p in itertools.product((0, 1), repeat=m) if any(p)]
        for n in range(1, max_actions + 1):
            for combo in itertools.combinations_with_replacement(range(len(patterns)), n):
                inters = [set() for _ in range(m)]
                for a, pk in enumerate(combo):
                    for i, bit in enumerate(patterns[pk]):
                        if bit:
                            inters[i].add(f"c{a}.a")
                gam = [frozenset(s) for s in inters]
                if any(not s for s in gam) or len(set(gam)) < m:
                    continue
                key = _shape(gam)
                if key in seen:
                    continue
                seen.add(key)
                yield gam


def _shape(gam):
    # invariant under reordering interactions and renaming actions
    acts = sorted(set().union(*gam))
    best = None
    for perm in itertools.permutations(range(len(gam))):
        cols = sorted(tuple(int(a in gam[i]) for i in perm) for a in acts)
        key = tuple(cols)
        if best is None or key < best:
            best = key
    return best


def system_of(gam, name="synthetic"):
    """One single-location component per action; interactions ``i0, i1, ...``."""
    acts = sorted(set().union(*gam))
    comps, insts = {}, []
    for act in acts:
        inst = act.split(".", 1)[0]
        cname = "C_" + inst
        comps[cname] = Component(cname, ("l",), (), (Edge("l", "a", (), frozenset(), "l"),), {}, "l", ())
        insts.append((inst, cname))
    inters = tuple(Interaction(f"i{k}", tuple(sorted(a))) for k, a in enumerate(gam))
    return SystemModel(comps, tuple(insts), inters, (), None, name)
