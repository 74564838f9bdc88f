"""Location languages of untimed components and their history-clock encoding.

For a location ``l`` the words reaching ``l`` are computed by state
elimination. Only the order of last occurrences of actions matters for
history clocks, so the expression is rewritten into a *restricted* form:
a sum of branches, each a sequence of single actions and stars of action
sets, in which every action appears at most once. A restricted branch maps
directly to ordering constraints between history clocks.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Optional

from . import formula as F
from .model import TAU, Component, component_actions

MAX_STEPS = 20_000
MAX_WORDS = 50_000


class RegexLimitExceeded(RuntimeError):
    pass


# expressions ------------------------------------------------------------

class Regex:
    __slots__ = ()

    def __str__(self):
        return show(self)


@dataclass(frozen=True)
class Eps(Regex):
    pass


@dataclass(frozen=True)
class Sym(Regex):
    name: str


@dataclass(frozen=True)
class Cat(Regex):
    items: tuple


@dataclass(frozen=True)
class Alt(Regex):
    items: tuple


@dataclass(frozen=True)
class Star(Regex):
    body: Regex


EPS = Eps()


def cat(*rs) -> Optional[Regex]:
    out = []
    for r in rs:
        if r is None:
            return None
        if isinstance(r, Eps):
            continue
        if isinstance(r, Cat):
            out.extend(r.items)
        else:
            out.append(r)
    if not out:
        return EPS
    return out[0] if len(out) == 1 else Cat(tuple(out))


def alt(*rs) -> Optional[Regex]:
    out = []
    for r in rs:
        if r is None:
            continue
        if isinstance(r, Alt):
            out.extend(r.items)
        else:
            out.append(r)
    out = list(dict.fromkeys(out))
    if not out:
        return None
    return out[0] if len(out) == 1 else Alt(tuple(out))


def star(r) -> Regex:
    if r is None or isinstance(r, Eps):
        return EPS
    if isinstance(r, Star):
        return r
    if isinstance(r, Alt) and EPS in r.items:
        rest = alt(*[x for x in r.items if x != EPS])
        return star(rest)
    return Star(r)


def show(r) -> str:
    if r is None:
        return "0"
    long = any(len(s) > 1 for s in symbols(r))
    return _show(r, 0, "." if long else "")


def _show(r, ctx, sep):
    if isinstance(r, Eps):
        return "e"
    if isinstance(r, Sym):
        return r.name
    if isinstance(r, Star):
        return _show(r.body, 3, sep) + "*"
    if isinstance(r, Cat):
        s = sep.join(_show(x, 2, sep) for x in r.items)
        return f"({s})" if ctx > 2 else s
    s = "+".join(_show(x, 1, sep) for x in r.items)
    return f"({s})" if ctx > 1 else s


def symbols(r) -> set:
    if isinstance(r, Sym):
        return {r.name}
    if isinstance(r, (Cat, Alt)):
        return set().union(*[symbols(x) for x in r.items])
    if isinstance(r, Star):
        return symbols(r.body)
    return set()


def parse_regex(text: str) -> Optional[Regex]:
    """Parse ``+``, ``*``, parentheses and juxtaposition; ``.`` separates
    multi-letter symbols, otherwise every letter is a symbol; ``e`` is epsilon."""
    text = text.replace(" ", "")
    dotted = "." in text
    pos = 0

    def peek():
        return text[pos] if pos < len(text) else None

    def expr():
        nonlocal pos
        parts = [term()]
        while peek() == "+":
            pos += 1
            parts.append(term())
        return alt(*parts)

    def term():
        nonlocal pos
        parts = []
        while peek() is not None and peek() not in "+)":
            if peek() == ".":
                pos += 1
                continue
            parts.append(factor())
        return cat(*parts) if parts else EPS

    def factor():
        nonlocal pos
        c = peek()
        if c == "(":
            pos += 1
            r = expr()
            if peek() != ")":
                raise ValueError("unbalanced parenthesis")
            pos += 1
        elif dotted:
            start = pos
            while peek() is not None and (peek().isalnum() or peek() == "_"):
                pos += 1
            name = text[start:pos]
            if not name:
                raise ValueError(f"unexpected {c!r}")
            r = EPS if name == "e" else Sym(name)
        else:
            pos += 1
            r = EPS if c == "e" else Sym(c)
        while peek() == "*":
            pos += 1
            r = star(r)
        return r

    r = expr()
    if pos != len(text):
        raise ValueError(f"unexpected {text[pos]!r}")
    return r


# state elimination ------------------------------------------------------

def location_regex(comp: Component, loc, alphabet=None) -> Optional[Regex]:
    """Expression for the words leading from the initial location to ``loc``.

    Internal steps and actions outside ``alphabet`` read as epsilon. Such
    steps are first removed by determinizing and minimizing, which keeps
    the eliminated automaton small when a projection hides most actions.
    Returns None when ``loc`` is unreachable.
    """
    edges = []
    for e in comp.edges:
        hidden = e.action == TAU or (alphabet is not None and e.action not in alphabet)
        edges.append((e.source, None if hidden else e.action, e.target))
    states, init, finals = list(comp.locations), comp.initial, {loc}
    if any(a is None for _, a, _ in edges):
        states, edges, init, finals = _minimal_dfa(edges, init, loc)
    return _eliminate(states, edges, init, finals)


def _minimal_dfa(edges, init, loc):
    """Subset construction over the visible actions, then Moore refinement."""
    eps, vis = {}, {}
    for p, a, q in edges:
        if a is None:
            eps.setdefault(p, set()).add(q)
        else:
            vis.setdefault(p, []).append((a, q))

    def closure(qs):
        out, stack = set(qs), list(qs)
        while stack:
            for t in eps.get(stack.pop(), ()):
                if t not in out:
                    out.add(t)
                    stack.append(t)
        return frozenset(out)

    start = closure([init])
    order, delta, stack = [start], {}, [start]
    while stack:
        X = stack.pop()
        moves = {}
        for q in X:
            for a, t in vis.get(q, ()):
                moves.setdefault(a, set()).add(t)
        for a in sorted(moves):
            Y = closure(moves[a])
            delta[(X, a)] = Y
            if Y not in delta and Y not in order:
                order.append(Y)
                stack.append(Y)
    acts = sorted({a for (_, a) in delta})
    block = {X: int(loc in X) for X in order}
    while True:
        sig = {X: (block[X],) + tuple(block.get(delta.get((X, a)), -1) for a in acts) for X in order}
        ids = {}
        new = {X: ids.setdefault(sig[X], len(ids)) for X in order}
        if len(ids) == len(set(block.values())):
            break
        block = new
    name = lambda X: ("q", block[X])
    states = list(dict.fromkeys(name(X) for X in order))
    out = list(dict.fromkeys((name(X), a, name(Y)) for (X, a), Y in delta.items()))
    finals = {name(X) for X in order if loc in X}
    return states, out, name(start), finals


def _eliminate(states, edges, init, finals) -> Optional[Regex]:
    succ = {}
    for p, _, q in edges:
        succ.setdefault(p, set()).add(q)
    fwd = {init}
    stack = [init]
    while stack:
        for t in succ.get(stack.pop(), ()):
            if t not in fwd:
                fwd.add(t)
                stack.append(t)
    if not fwd & set(finals):
        return None
    back = set(finals)
    stack = list(finals)
    while stack:
        q = stack.pop()
        for p, _, t in edges:
            if t == q and p not in back:
                back.add(p)
                stack.append(p)
    live = [l for l in states if l in fwd and l in back]
    S, T = ("__start",), ("__final",)
    R = {}
    for p, a, q in edges:
        if p not in live or q not in live:
            continue
        lab = EPS if a is None else Sym(a)
        R[(p, q)] = alt(R.get((p, q)), lab)
    R[(S, init)] = EPS
    for f in finals:
        if f in live:
            R[(f, T)] = alt(R.get((f, T)), EPS)
    remaining = list(live)
    while remaining:
        def degree(q):
            i = sum(1 for (p, t) in R if t == q and p != q)
            o = sum(1 for (p, t) in R if p == q and t != q)
            return i * o
        q = min(remaining, key=lambda x: (degree(x), remaining.index(x)))
        remaining.remove(q)
        loop = star(R.get((q, q)))
        ins = [(p, r) for (p, t), r in R.items() if t == q and p != q]
        outs = [(t, r) for (p, t), r in R.items() if p == q and t != q]
        for p, rin in ins:
            for t, rout in outs:
                R[(p, t)] = alt(R.get((p, t)), cat(rin, loop, rout))
        R = {k: v for k, v in R.items() if q not in k}
    return R.get((S, T))


# restricted form --------------------------------------------------------
# A branch is a tuple of items: ("s", a) a single action, ("S", frozenset)
# a star of actions, ("G", branches) a general star over a sum of branches.

def _branches(r) -> list:
    if r is None:
        return []
    if isinstance(r, Eps):
        return [()]
    if isinstance(r, Sym):
        return [(("s", r.name),)]
    if isinstance(r, Alt):
        out = []
        for x in r.items:
            out.extend(_branches(x))
        return list(dict.fromkeys(out))
    if isinstance(r, Cat):
        out = [()]
        for x in r.items:
            sub = _branches(x)
            out = [a + b for a in out for b in sub]
        return list(dict.fromkeys(out))
    if isinstance(r, Star):
        it = _star_item(_branches(r.body))
        return [()] if it is None else [(it,)]
    raise TypeError(r)


def _star_item(branches):
    flat = []
    work = list(branches)
    while work:
        b = _simplify(work.pop(0))
        if not b:
            continue
        if all(it[0] in "SG" for it in b):
            # (X* Y*)* = (X + Y)*: a branch of stars contributes its bodies
            for it in b:
                if it[0] == "S":
                    flat.extend((("s", a),) for a in sorted(it[1]))
                else:
                    work.extend(it[1])
        else:
            flat.append(b)
    flat = _strip_covered(list(dict.fromkeys(flat)))
    if not flat:
        return None
    if all(len(b) == 1 and b[0][0] in "sS" for b in flat):
        syms = set()
        for b in flat:
            syms |= {b[0][1]} if b[0][0] == "s" else set(b[0][1])
        return ("S", frozenset(syms))
    return ("G", tuple(flat))


def _strip_covered(flat):
    """Drop leading and trailing stars over symbols the star offers as single steps.

    With ``a`` a branch of the enclosing star, ``a* X`` and ``X a*`` can be
    produced as a sequence of iterations, so (a + c a*)* is (a + c)*.
    """
    singles = {b[0][1] for b in flat if len(b) == 1 and b[0][0] == "s"}
    if not singles:
        return flat
    out = []
    for b in flat:
        items = list(b)
        while len(items) > 1 and items[0][0] == "S" and items[0][1] <= singles:
            items.pop(0)
        while len(items) > 1 and items[-1][0] == "S" and items[-1][1] <= singles:
            items.pop()
        out.append(tuple(items))
    return list(dict.fromkeys(out))


def _item_symbols(it) -> set:
    if it[0] == "s":
        return {it[1]}
    if it[0] == "S":
        return set(it[1])
    return set().union(*[_item_symbols(x) for b in it[1] for x in b])


@functools.lru_cache(maxsize=1 << 16)
def _erase(it, a):
    if it[0] == "s":
        return None if it[1] == a else it
    if it[0] == "S":
        rest = it[1] - {a}
        return ("S", rest) if rest else None
    return _star_item([_erase_branch(b, a) for b in it[1]])


def _erase_branch(b, a):
    return tuple(x for x in (_erase(it, a) for it in b) if x is not None)


def _star_covers(big, small) -> bool:
    """Is the language of star ``small`` inside that of star ``big``?"""
    if small == big:
        return True
    if small[0] == "S":
        if big[0] == "S":
            return small[1] <= big[1]
        singles = set()
        for b in big[1]:
            if len(b) == 1 and b[0][0] in "sS":
                singles |= _item_symbols(b[0])
        return small[1] <= singles
    return False


def _simplify(b) -> tuple:
    items = [x for x in b if x is not None]
    changed = True
    while changed:
        changed = False
        for k in range(len(items) - 1):
            x, y = items[k], items[k + 1]
            if x[0] in "SG" and y[0] in "SG":
                if _star_covers(y, x):
                    del items[k]
                    changed = True
                    break
                if _star_covers(x, y):
                    del items[k + 1]
                    changed = True
                    break
    return tuple(items)


def _is_restricted(b) -> bool:
    seen = set()
    for it in b:
        if it[0] == "G":
            return False
        syms = _item_symbols(it)
        if seen & syms:
            return False
        seen |= syms
    return True


def _rule1(b) -> tuple:
    """Erase an action from everything left of a later single occurrence."""
    items = list(b)
    i = len(items) - 1
    while i >= 0:
        it = items[i]
        if it[0] == "s":
            left = [x for x in (_erase(y, it[1]) for y in items[:i]) if x is not None]
            items = left + items[i:]
            i = len(left) - 1
        else:
            i -= 1
    return _simplify(items)


def _unfold(b) -> list:
    """Rewrite the rightmost offending star X* as X*X + e."""
    counts = {}
    for it in b:
        for s in _item_symbols(it):
            counts[s] = counts.get(s, 0) + 1
    pos = None
    for k in range(len(b) - 1, -1, -1):
        it = b[k]
        if it[0] == "G" or (it[0] == "S" and any(counts[s] > 1 for s in it[1])):
            pos = k
            break
    if pos is None:
        raise AssertionError("branch has no star to unfold")
    it = b[pos]
    prefix, suffix = b[:pos], b[pos + 1:]
    body = [(("s", a),) for a in sorted(it[1])] if it[0] == "S" else list(it[1])
    out = [prefix + (it,) + tuple(x) + suffix for x in body]
    out.append(prefix + suffix)
    return out


@dataclass(frozen=True)
class Restricted:
    """A sum of restricted branches; each branch is a tuple of
    ``str`` (single action) or ``frozenset`` (star of actions)."""
    branches: tuple

    def __str__(self):
        if not self.branches:
            return "0"
        long = any(len(s) > 1 for b in self.branches for s in _branch_symbols(b))
        sep = "." if long else ""
        parts = []
        for b in self.branches:
            if not b:
                parts.append("e")
                continue
            items = []
            for it in b:
                if isinstance(it, str):
                    items.append(it)
                else:
                    syms = sorted(it)
                    items.append((syms[0] if len(syms) == 1 else "(" + "+".join(syms) + ")") + "*")
            parts.append(sep.join(items))
        return "+".join(parts)

    def to_regex(self) -> Optional[Regex]:
        opts = []
        for b in self.branches:
            items = []
            for it in b:
                if isinstance(it, str):
                    items.append(Sym(it))
                else:
                    items.append(star(alt(*[Sym(s) for s in sorted(it)])))
            opts.append(cat(*items))
        return alt(*opts)


def _branch_symbols(b) -> set:
    out = set()
    for it in b:
        out |= {it} if isinstance(it, str) else set(it)
    return out


def _export(b) -> tuple:
    return tuple(it[1] for it in b)


def branch_words(b, limit: int = MAX_WORDS) -> set:
    """Distinct-letter words of a restricted branch."""
    if word_count(b) > limit:
        raise RegexLimitExceeded("too many words")
    parts = []
    for it in b:
        if isinstance(it, str):
            parts.append([(it,)])
        else:
            s = sorted(it)
            opts = []
            for k in range(len(s) + 1):
                opts.extend(itertools.permutations(s, k))
            parts.append(opts)
    return {tuple(x for p in combo for x in p) for combo in itertools.product(*parts)}


def word_count(b) -> int:
    n = 1
    for it in b:
        if not isinstance(it, str):
            k = len(it)
            n *= sum(math.perm(k, j) for j in range(k + 1))
    return n


def to_restricted(r: Optional[Regex], max_steps: int = MAX_STEPS) -> Restricted:
    if r is None:
        return Restricted(())
    work = list(_branches(r))
    seen = set()
    done = []
    steps = 0
    while work:
        b = _rule1(_simplify(work.pop(0)))
        if b in seen:
            continue
        seen.add(b)
        steps += 1
        if steps > max_steps:
            raise RegexLimitExceeded("restricted form did not converge")
        if _is_restricted(b):
            if b not in done:
                done.append(b)
            continue
        work.extend(_unfold(b))
    branches = [_export(b) for b in done]
    return Restricted(tuple(_drop_subsumed(branches)))


def _drop_subsumed(branches) -> list:
    words = []
    for b in branches:
        try:
            words.append(branch_words(b))
        except RegexLimitExceeded:
            words.append(None)
    keep = []
    for k, b in enumerate(branches):
        wk = words[k]
        if wk is None:
            keep.append(b)
            continue
        dominated = False
        for j, other in enumerate(branches):
            if j == k or words[j] is None:
                continue
            if wk < words[j] or (wk == words[j] and j < k):
                dominated = True
                break
        if not dominated:
            keep.append(b)
    return keep


def loc_words(r: Restricted) -> set:
    out = set()
    for b in r.branches:
        out |= branch_words(b)
    return out


# history-clock encoding -------------------------------------------------

def _branch_formula(b, alphabet, h) -> F.Formula:
    parts = []
    syms = _branch_symbols(b)
    for x in sorted(set(alphabet) - syms):
        parts.append(F.gt(h(x), "h0"))
    mand = [k for k, it in enumerate(b) if isinstance(it, str)]
    for k in mand:
        parts.append(F.le(h(b[k]), "h0"))
    for k1, k2 in zip(mand, mand[1:]):
        parts.append(F.ge(h(b[k1]), h(b[k2])))
    for k, it in enumerate(b):
        if isinstance(it, str):
            continue
        prev = next((b[j] for j in range(k - 1, -1, -1) if isinstance(b[j], str)), None)
        nxt = next((b[j] for j in range(k + 1, len(b)) if isinstance(b[j], str)), None)
        for x in sorted(it):
            if prev is None and nxt is None:
                continue
            if prev is None:
                parts.append(F.ge(h(x), h(nxt)))
            elif nxt is None:
                parts.append(F.disj(F.gt(h(x), "h0"), F.le(h(x), h(prev))))
            else:
                parts.append(F.disj(F.gt(h(x), "h0"), F.conj(F.le(h(x), h(prev)), F.ge(h(x), h(nxt)))))
        # later stars in the same gap come after this one
        for j in range(k + 1, len(b)):
            other = b[j]
            if isinstance(other, str):
                break
            for x in sorted(it):
                for y in sorted(other):
                    parts.append(F.disj(F.gt(h(x), "h0"), F.gt(h(y), "h0"), F.ge(h(x), h(y))))
    return F.conj(*parts)


def word_formula(w, alphabet, h) -> F.Formula:
    parts = [F.gt(h(x), "h0") for x in sorted(set(alphabet) - set(w))]
    if w:
        parts.append(F.le(h(w[0]), "h0"))
    for a, b in zip(w, w[1:]):
        parts.append(F.ge(h(a), h(b)))
    return F.conj(*parts)


def restricted_formula(r: Restricted, alphabet, h, enumerate_words: bool = False) -> F.Formula:
    """History-clock constraint of a restricted expression.

    ``h`` maps an action to its history clock name. With
    ``enumerate_words`` every distinct word gets its own disjunct.
    """
    if enumerate_words:
        return F.disj(*[word_formula(w, alphabet, h) for w in sorted(loc_words(r), key=lambda w: (len(w), w))])
    return F.disj(*[_branch_formula(b, alphabet, h) for b in r.branches])


def regex_invariant(comp: Component, inst: str, enumerate_words: bool = False, with_regex: bool = False):
    """Per-location history-clock invariant of an untimed component.

    Projection annotations on a location each contribute a conjunct;
    unannotated locations use the full action alphabet.
    """
    if comp.clocks:
        raise ValueError(f"component {comp.name} has clocks; the location language heuristic needs an untimed component")
    acts = component_actions(comp)
    h = lambda a: f"{inst}.h_{a}"
    parts = []
    exprs = {}
    for loc in comp.locations:
        projs = comp.projections.get(loc) or (tuple(acts),)
        conj = []
        for p in projs:
            r = location_regex(comp, loc, set(p))
            if r is None:
                conj = None
                break
            rr = to_restricted(r)
            exprs[(loc, p)] = (r, rr)
            conj.append(restricted_formula(rr, p, h, enumerate_words))
        if conj is None:
            continue
        parts.append(F.conj(F.At(inst, loc), *conj))
    f = F.disj(*parts)
    return (f, exprs) if with_regex else f
