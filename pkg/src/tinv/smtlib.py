"""SMT-LIB2 export of checking problems (QF_LRA) and an external solver runner.

Clocks become non-negative reals. Every (instance, location) pair gets a
boolean, and each instance is constrained to be in exactly one location.
"""

from __future__ import annotations

import shutil
import subprocess
from typing import Mapping, Optional

from . import formula as F
from .formula import At, Const, DeadlockFree, Diff, Implies, Not

KNOWN_SOLVERS = ("z3", "cvc5", "yices-smt2")


def _sym(name: str) -> str:
    return "|" + name.replace("|", "_").replace("\\", "_") + "|"


def _num(c: int) -> str:
    return f"{c}.0" if c >= 0 else f"(- {-c}.0)"


def at_symbol(inst: str, loc: str) -> str:
    return _sym(f"{inst}@{loc}")


class _Printer:
    def __init__(self, domains: Mapping[str, tuple]):
        self.domains = {k: list(v) for k, v in domains.items()}

    def at(self, inst, loc):
        dom = self.domains.setdefault(inst, [])
        if loc not in dom:
            dom.append(loc)
        return at_symbol(inst, loc)

    def term(self, f: F.Formula) -> str:
        if isinstance(f, Const):
            return "true" if f.value else "false"
        if isinstance(f, At):
            return self.at(f.inst, f.loc)
        if isinstance(f, Diff):
            lhs = _sym(f.lhs) if f.rhs is None else f"(- {_sym(f.lhs)} {_sym(f.rhs)})"
            return f"({f.op} {lhs} {_num(f.ct)})"
        if isinstance(f, Not):
            return f"(not {self.term(f.arg)})"
        if isinstance(f, Implies):
            return f"(=> {self.term(f.lhs)} {self.term(f.rhs)})"
        if isinstance(f, F.And):
            return "(and " + " ".join(self.term(a) for a in f.args) + ")"
        if isinstance(f, F.Or):
            return "(or " + " ".join(self.term(a) for a in f.args) + ")"
        if isinstance(f, DeadlockFree):
            raise ValueError("expand deadlock-freedom before export")
        raise TypeError(f)


def _exactly_one(syms) -> list:
    if len(syms) == 1:
        return [f"(assert {syms[0]})"]
    out = ["(assert (or " + " ".join(syms) + "))"]
    for i in range(len(syms)):
        for j in range(i + 1, len(syms)):
            out.append(f"(assert (not (and {syms[i]} {syms[j]})))")
    return out


def to_smtlib(f: F.Formula, domains: Optional[Mapping] = None, comment: str = "") -> str:
    """A self-contained QF_LRA script asserting ``f`` and asking for satisfiability.

    ``domains`` maps instances to their locations; without it only the
    locations mentioned in ``f`` are known and an instance may also be
    somewhere else.
    """
    p = _Printer(domains or {})
    closed = set(p.domains)
    body = p.term(f)
    lines = []
    if comment:
        lines.extend("; " + c for c in comment.splitlines())
    lines.append("(set-logic QF_LRA)")
    for c in sorted(F.clocks_of(f)):
        lines.append(f"(declare-fun {_sym(c)} () Real)")
        lines.append(f"(assert (>= {_sym(c)} 0.0))")
    for inst in sorted(p.domains):
        syms = [at_symbol(inst, l) for l in p.domains[inst]]
        for s in syms:
            lines.append(f"(declare-fun {s} () Bool)")
        if inst in closed:
            lines.extend(_exactly_one(syms))
        else:
            lines.extend(_exactly_one(syms)[1:])
    lines.append(f"(assert {body})")
    lines.append("(check-sat)")
    lines.append("(exit)")
    return "\n".join(lines) + "\n"


def find_solver(preferred: Optional[str] = None) -> Optional[list]:
    """Command line for an installed SMT solver reading a script on stdin."""
    names = [preferred] if preferred else list(KNOWN_SOLVERS)
    for n in names:
        path = shutil.which(n)
        if path is None:
            continue
        base = n.rsplit("/", 1)[-1]
        if base.startswith("z3"):
            return [path, "-smt2", "-in"]
        if base.startswith("cvc5"):
            return [path, "--lang=smt2"]
        return [path]
    return None


def run_solver(script: str, command: Optional[list] = None, timeout: Optional[float] = None) -> str:
    """Returns "sat", "unsat" or "unknown"; raises FileNotFoundError without a solver."""
    cmd = command or find_solver()
    if cmd is None:
        raise FileNotFoundError("no SMT solver found on PATH")
    try:
        out = subprocess.run(cmd, input=script, capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        return "unknown"
    for line in out.stdout.splitlines():
        line = line.strip()
        if line in ("sat", "unsat", "unknown"):
            return line
    return "unknown"
