"""Boolean combinations of location atoms and difference constraints.

Clock names are global strings: ``inst.x`` for component clocks,
``inst.h_a`` for the history clock of action ``inst.a``, ``gamma.h_<id>``
for interaction history clocks and ``h0`` for the shared history clock.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional

OPS = ("<", "<=", "=", ">=", ">")


class Formula:
    __slots__ = ()

    def __and__(self, other):
        return conj(self, other)

    def __or__(self, other):
        return disj(self, other)

    def __invert__(self):
        return neg(self)

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Const(Formula):
    value: bool


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class At(Formula):
    inst: str
    loc: str


@dataclass(frozen=True)
class Diff(Formula):
    """``lhs - rhs op ct``; ``rhs`` None means plain ``lhs op ct``."""
    lhs: str
    rhs: Optional[str]
    op: str
    ct: int


@dataclass(frozen=True)
class And(Formula):
    args: tuple


@dataclass(frozen=True)
class Or(Formula):
    args: tuple


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class Implies(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class DeadlockFree(Formula):
    """Placeholder expanded against a concrete system by the verifier."""


# constructors -----------------------------------------------------------

def conj(*fs) -> Formula:
    out = []
    for f in _flat(fs):
        if isinstance(f, And):
            out.extend(f.args)
        elif f == TRUE:
            continue
        elif f == FALSE:
            return FALSE
        else:
            out.append(f)
    out = list(dict.fromkeys(out))
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return And(tuple(out))


def disj(*fs) -> Formula:
    out = []
    for f in _flat(fs):
        if isinstance(f, Or):
            out.extend(f.args)
        elif f == FALSE:
            continue
        elif f == TRUE:
            return TRUE
        else:
            out.append(f)
    out = list(dict.fromkeys(out))
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return Or(tuple(out))


def neg(f: Formula) -> Formula:
    if f == TRUE:
        return FALSE
    if f == FALSE:
        return TRUE
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def implies(a: Formula, b: Formula) -> Formula:
    if a == TRUE:
        return b
    if a == FALSE or b == TRUE:
        return TRUE
    return Implies(a, b)


def _flat(fs):
    for f in fs:
        if isinstance(f, (list, tuple)):
            yield from _flat(f)
        elif hasattr(f, "__next__"):
            yield from _flat(list(f))
        else:
            yield f


def le(x: str, y: Optional[str], c: int = 0) -> Diff:
    return Diff(x, y, "<=", c)


def ge(x: str, y: Optional[str], c: int = 0) -> Diff:
    return Diff(x, y, ">=", c)


def eq(x: str, y: Optional[str], c: int = 0) -> Diff:
    return Diff(x, y, "=", c)


def lt(x: str, y: Optional[str], c: int = 0) -> Diff:
    return Diff(x, y, "<", c)


def gt(x: str, y: Optional[str], c: int = 0) -> Diff:
    return Diff(x, y, ">", c)


# traversal --------------------------------------------------------------

def clocks_of(f: Formula) -> set:
    out = set()
    for a in atoms(f):
        if isinstance(a, Diff):
            out.add(a.lhs)
            if a.rhs is not None:
                out.add(a.rhs)
    return out


def atoms(f: Formula):
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, (And, Or)):
            stack.extend(g.args)
        elif isinstance(g, Not):
            stack.append(g.arg)
        elif isinstance(g, Implies):
            stack.append(g.lhs)
            stack.append(g.rhs)
        elif isinstance(g, (At, Diff, DeadlockFree)):
            yield g


def size(f: Formula) -> int:
    if isinstance(f, (And, Or)):
        return 1 + sum(size(a) for a in f.args)
    if isinstance(f, Not):
        return 1 + size(f.arg)
    if isinstance(f, Implies):
        return 1 + size(f.lhs) + size(f.rhs)
    return 1


def rename(f: Formula, clock: Callable[[str], str] = None, inst: Callable[[str], str] = None) -> Formula:
    clock = clock or (lambda c: c)
    inst = inst or (lambda i: i)

    def go(g):
        if isinstance(g, At):
            return At(inst(g.inst), g.loc)
        if isinstance(g, Diff):
            return Diff(clock(g.lhs), None if g.rhs is None else clock(g.rhs), g.op, g.ct)
        if isinstance(g, And):
            return And(tuple(go(a) for a in g.args))
        if isinstance(g, Or):
            return Or(tuple(go(a) for a in g.args))
        if isinstance(g, Not):
            return Not(go(g.arg))
        if isinstance(g, Implies):
            return Implies(go(g.lhs), go(g.rhs))
        return g

    return go(f)


def substitute(f: Formula, fn: Callable[[Formula], Optional[Formula]]) -> Formula:
    """Replace atoms for which ``fn`` returns a formula."""
    def go(g):
        if isinstance(g, (At, Diff, DeadlockFree)):
            r = fn(g)
            return g if r is None else r
        if isinstance(g, And):
            return conj(*[go(a) for a in g.args])
        if isinstance(g, Or):
            return disj(*[go(a) for a in g.args])
        if isinstance(g, Not):
            return neg(go(g.arg))
        if isinstance(g, Implies):
            return implies(go(g.lhs), go(g.rhs))
        return g

    return go(f)


def canonical(f: Formula) -> Formula:
    """Structural normal form: flattened, with commutative arguments sorted."""
    if isinstance(f, (And, Or)):
        args = sorted({canonical(a) for a in f.args}, key=to_text)
        return (conj if isinstance(f, And) else disj)(*args)
    if isinstance(f, Not):
        return neg(canonical(f.arg))
    if isinstance(f, Implies):
        return Implies(canonical(f.lhs), canonical(f.rhs))
    return f


def nnf(f: Formula, positive: bool = True) -> Formula:
    """Negation normal form; negated clock atoms are flipped, negated
    location atoms stay as ``Not(At)``."""
    if isinstance(f, Const):
        return f if positive else neg(f)
    if isinstance(f, At):
        return f if positive else Not(f)
    if isinstance(f, Diff):
        return f if positive else negate_diff(f)
    if isinstance(f, Not):
        return nnf(f.arg, not positive)
    if isinstance(f, Implies):
        if positive:
            return disj(nnf(f.lhs, False), nnf(f.rhs, True))
        return conj(nnf(f.lhs, True), nnf(f.rhs, False))
    if isinstance(f, And):
        parts = [nnf(a, positive) for a in f.args]
        return conj(*parts) if positive else disj(*parts)
    if isinstance(f, Or):
        parts = [nnf(a, positive) for a in f.args]
        return disj(*parts) if positive else conj(*parts)
    if isinstance(f, DeadlockFree):
        raise ValueError("deadlockfree must be expanded before normalisation")
    raise TypeError(f)


def negate_diff(d: Diff) -> Formula:
    flip = {"<": ">=", "<=": ">", ">": "<=", ">=": "<"}
    if d.op == "=":
        return disj(Diff(d.lhs, d.rhs, "<", d.ct), Diff(d.lhs, d.rhs, ">", d.ct))
    return Diff(d.lhs, d.rhs, flip[d.op], d.ct)


# evaluation -------------------------------------------------------------

def evaluate(f: Formula, locs: Mapping[str, str], val: Mapping[str, float]) -> bool:
    if isinstance(f, Const):
        return f.value
    if isinstance(f, At):
        return locs.get(f.inst) == f.loc
    if isinstance(f, Diff):
        d = val[f.lhs] - (0 if f.rhs is None else val[f.rhs])
        return {"<": d < f.ct, "<=": d <= f.ct, "=": d == f.ct, ">=": d >= f.ct, ">": d > f.ct}[f.op]
    if isinstance(f, And):
        return all(evaluate(a, locs, val) for a in f.args)
    if isinstance(f, Or):
        return any(evaluate(a, locs, val) for a in f.args)
    if isinstance(f, Not):
        return not evaluate(f.arg, locs, val)
    if isinstance(f, Implies):
        return (not evaluate(f.lhs, locs, val)) or evaluate(f.rhs, locs, val)
    raise TypeError(f)


# printing ---------------------------------------------------------------

_PREC = {Implies: 1, Or: 2, And: 3, Not: 4}


def to_text(f: Formula) -> str:
    return _show(f, 0)


def _show(f, ctx):
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, At):
        return f"{f.inst}@{f.loc}"
    if isinstance(f, Diff):
        lhs = f.lhs if f.rhs is None else f"{f.lhs} - {f.rhs}"
        return f"{lhs} {f.op} {f.ct}"
    if isinstance(f, DeadlockFree):
        return "deadlockfree"
    p = _PREC[type(f)]
    if isinstance(f, Not):
        s = "not " + _show(f.arg, p + 1)
    elif isinstance(f, Implies):
        s = f"{_show(f.lhs, p + 1)} implies {_show(f.rhs, p)}"
    else:
        word = " and " if isinstance(f, And) else " or "
        s = word.join(_show(a, p + 1) for a in f.args)
    return f"({s})" if p < ctx else s


# parsing ----------------------------------------------------------------

class FormulaSyntaxError(ValueError):
    def __init__(self, msg, col=None):
        super().__init__(msg if col is None else f"{msg} at column {col}")
        self.col = col


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)?)"
                    r"|(?P<op><=|>=|<|>|=|@|\(|\)|-|\+))")
_FLIP = {"<": ">", "<=": ">=", "=": "=", ">=": "<=", ">": "<"}
_KEYWORDS = {"and", "or", "not", "implies", "true", "false", "deadlockfree"}


def tokenize(text: str):
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = len(text) - len(text[pos:].lstrip())
            raise FormulaSyntaxError(f"unexpected character {text[bad]!r}", bad + 1)
        kind = m.lastgroup
        val = m.group(kind)
        out.append((kind, val, m.start(kind) + 1))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, tokens, check_clock, check_loc):
        self.toks = tokens
        self.i = 0
        self.check_clock = check_clock
        self.check_loc = check_loc

    def peek(self, k=0):
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else (None, None, None)

    def take(self, val=None):
        tok = self.peek()
        if tok[0] is None:
            raise FormulaSyntaxError(f"unexpected end of formula, expected {val or 'a term'}")
        if val is not None and tok[1] != val:
            raise FormulaSyntaxError(f"expected {val!r} but found {tok[1]!r}", tok[2])
        self.i += 1
        return tok

    def parse(self):
        f = self.implication()
        if self.peek()[0] is not None:
            raise FormulaSyntaxError(f"unexpected {self.peek()[1]!r}", self.peek()[2])
        return f

    def implication(self):
        lhs = self.disjunction()
        if self.peek()[1] == "implies":
            self.take()
            return Implies(lhs, self.implication())
        return lhs

    def disjunction(self):
        args = [self.conjunction()]
        while self.peek()[1] == "or":
            self.take()
            args.append(self.conjunction())
        return args[0] if len(args) == 1 else Or(tuple(args))

    def conjunction(self):
        args = [self.unary()]
        while self.peek()[1] == "and":
            self.take()
            args.append(self.unary())
        return args[0] if len(args) == 1 else And(tuple(args))

    def unary(self):
        kind, val, col = self.peek()
        if val == "not":
            self.take()
            return Not(self.unary())
        if val == "(":
            self.take()
            f = self.implication()
            self.take(")")
            return f
        if val == "true":
            self.take()
            return TRUE
        if val == "false":
            self.take()
            return FALSE
        if val == "deadlockfree":
            self.take()
            return DeadlockFree()
        if kind == "name" and val not in _KEYWORDS and self.peek(1)[1] == "@":
            self.take()
            self.take("@")
            k2, loc, c2 = self.take()
            if k2 != "name":
                raise FormulaSyntaxError("expected a location name", c2)
            if "." in val or "." in loc:
                raise FormulaSyntaxError("malformed location atom", col)
            if self.check_loc:
                self.check_loc(val, loc, col)
            return At(val, loc)
        if (kind == "name" and val not in _KEYWORDS) or kind == "num" or val == "-":
            atoms_ = self.clock_atom()
            return atoms_[0] if len(atoms_) == 1 else And(tuple(atoms_))
        raise FormulaSyntaxError(f"unexpected {val!r}" if val else "unexpected end of formula", col)

    def side(self):
        """``[-] term ((+|-) term)*`` as (clock coefficients, constant)."""
        coef, const = {}, 0
        sign = 1
        if self.peek()[1] == "-":
            self.take()
            sign = -1
        while True:
            kind, val, col = self.take()
            if kind == "num":
                if "." in val:
                    raise FormulaSyntaxError(f"rational constant {val} not supported, use integers", col)
                const += sign * int(val)
            elif kind == "name" and val not in _KEYWORDS:
                if self.check_clock:
                    self.check_clock(val, col)
                coef[val] = coef.get(val, 0) + sign
            else:
                raise FormulaSyntaxError(f"expected a clock or an integer but found {val!r}", col)
            nxt = self.peek()[1]
            if nxt not in ("+", "-"):
                return coef, const
            self.take()
            sign = 1 if nxt == "+" else -1

    def clock_atom(self) -> list:
        """A comparison chain ``side op side (op side)*`` between clock differences.

        Each link must reduce to ``x op c``, ``x - y op c`` or a constant
        comparison.
        """
        col = self.peek()[2]
        left = self.side()
        out = []
        while True:
            k, op, c = self.peek()
            if op not in OPS:
                if not out:
                    raise FormulaSyntaxError(f"expected a comparison operator but found {op!r}" if op
                                             else "expected a comparison operator", c)
                return out
            self.take()
            right = self.side()
            out.append(_linear(left, op, right, col))
            left = right


def _linear(left, op, right, col) -> Formula:
    coef = dict(left[0])
    for x, v in right[0].items():
        coef[x] = coef.get(x, 0) - v
    coef = {x: v for x, v in coef.items() if v}
    k = right[1] - left[1]  # sum(coef * x) op k
    pos = [x for x, v in coef.items() if v == 1]
    neg = [x for x, v in coef.items() if v == -1]
    if len(pos) + len(neg) != len(coef) or len(pos) > 1 or len(neg) > 1:
        raise FormulaSyntaxError("only differences of two clocks can be compared", col)
    if pos and neg:
        return Diff(pos[0], neg[0], op, k)
    if pos:
        return Diff(pos[0], None, op, k)
    if neg:
        return Diff(neg[0], None, _FLIP[op], -k)
    return TRUE if {"<": 0 < k, "<=": 0 <= k, "=": k == 0, ">=": 0 >= k, ">": 0 > k}[op] else FALSE


def parse_formula(text: str, check_clock=None, check_loc=None) -> Formula:
    return _Parser(tokenize(text), check_clock, check_loc).parse()


def parse_conjunction(text: str, check_clock=None) -> list:
    """``true`` or ``atom (and atom)*`` over clock atoms only."""
    toks = tokenize(text)
    if len(toks) == 1 and toks[0][1] == "true":
        return []
    p = _Parser(toks, check_clock, None)
    out = p.clock_atom()
    while p.peek()[1] == "and":
        p.take()
        out.extend(p.clock_atom())
    if p.peek()[0] is not None:
        raise FormulaSyntaxError(f"unexpected {p.peek()[1]!r} in constraint", p.peek()[2])
    return out


def conj_text(atoms_: Iterable[Diff]) -> str:
    atoms_ = list(atoms_)
    if not atoms_:
        return "true"
    return " and ".join(to_text(a) for a in atoms_)
