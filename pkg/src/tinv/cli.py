"""Command line front end: ``tinv check|invariants|reach|oracle|deadlock|models``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import formula as F
from . import oracle as O
from .history import extend
from .model import ModelError, global_clock, resolve_model
from .regex import show
from .traps import dump_traps, minimal_traps
from .verifier import (DEFAULT_GLUE, ERROR, EXIT_CODES, GLUE_FAMILIES, InvariantCache, Options, check,
                       glue_formula, global_invariant)
from .zonegraph import StateLimitExceeded, component_invariant, reach


def _list(text):
    return [t.strip() for t in text.split(",") if t.strip()] if text else []


def _glue(text):
    fams = _list(text)
    for g in fams:
        if g != "none" and g not in GLUE_FAMILIES:
            raise argparse.ArgumentTypeError(f"unknown glue family {g!r} (choose from {', '.join(GLUE_FAMILIES)}, none)")
    return fams


def _heuristics(text):
    hs = _list(text)
    for h in hs:
        if h not in ("regex", "prec"):
            raise argparse.ArgumentTypeError(f"unknown heuristic {h!r} (regex, prec)")
    return hs


def _options(args) -> Options:
    return Options(
        glue=args.glue if args.glue is not None else DEFAULT_GLUE,
        interaction_invariant=not args.no_ii,
        heuristics=tuple(args.heuristic or ()),
        symmetry=args.symmetry,
        separation=args.separation,
        diffcap=args.diffcap,
        max_states=args.max_states,
        node_budget=args.budget,
        timeout=args.timeout,
        allow_history_props=args.allow_history_props,
        enumerate_words=args.enumerate_words,
        solver=getattr(args, "solver", "internal"),
        smt_out=getattr(args, "smt_out", None),
    )


def _common(p):
    p.add_argument("model", help="path to a .tinv file or the name of a bundled model")
    p.add_argument("--glue", type=_glue, default=None,
                   help="comma separated glue families: e, estar, sep, sepc, prec or none (default estar,sep)")
    p.add_argument("--heuristic", type=_heuristics, default=None, help="regex and/or prec")
    p.add_argument("--symmetry", action="store_true", help="use the ordered separation constraints of a symmetric system")
    p.add_argument("--separation", choices=("heuristic", "exact"), default="heuristic")
    p.add_argument("--no-ii", action="store_true", help="leave out the interaction invariant")
    p.add_argument("--diffcap", type=int, default=None, help="cap on clock differences during reachability")
    p.add_argument("--max-states", type=int, default=100_000)
    p.add_argument("--budget", type=int, default=Options.node_budget, help="solver node budget")
    p.add_argument("--timeout", type=float, default=None, help="seconds")
    p.add_argument("--allow-history-props", action="store_true")
    p.add_argument("--enumerate-words", action="store_true",
                   help="encode the location language word by word instead of per branch")


def _check_args(p):
    p.add_argument("--solver", default="internal",
                   help="internal, smtlib (first solver found on PATH) or a solver executable")
    p.add_argument("--smt-out", default=None, help="also write the query as an SMT-LIB2 file")
    p.add_argument("--quiet", action="store_true", help="print only the verdict line")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tinv", description="Compositional invariant checking for timed component systems")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("check", help="check a property")
    _common(p)
    _check_args(p)
    p.add_argument("--prop", default=None, help="property name (default: the first one, all with --all)")
    p.add_argument("--all", action="store_true", help="check every property of the model")

    p = sub.add_parser("deadlock", help="check deadlock-freedom")
    _common(p)
    _check_args(p)

    p = sub.add_parser("invariants", help="print component, interaction and glue invariants")
    _common(p)
    p.add_argument("--dump-regex", action="store_true", help="show location regexes and their restricted forms")
    p.add_argument("--dump-traps", action="store_true", help="list the minimal traps")
    p.add_argument("--global", dest="show_global", action="store_true", help="print the whole conjunction")

    p = sub.add_parser("reach", help="zone graph of one component")
    p.add_argument("model")
    p.add_argument("--component", required=True, help="instance or component name")
    p.add_argument("--history", action="store_true", help="extend with history clocks first")
    p.add_argument("--diffcap", type=int, default=None)
    p.add_argument("--max-states", type=int, default=100_000)
    p.add_argument("--dump", action="store_true", help="print every symbolic state")

    p = sub.add_parser("oracle", help="exhaustive exploration of the composed system")
    p.add_argument("model")
    p.add_argument("--prop", default=None, help="property to check (default: all)")
    p.add_argument("--invariants", action="store_true",
                   help="check the generated global invariant instead (history-extended product)")
    p.add_argument("--glue", type=_glue, default=None)
    p.add_argument("--heuristic", type=_heuristics, default=None)
    p.add_argument("--max-states", type=int, default=O.DEFAULT_ORACLE_STATES)
    p.add_argument("--limit", type=int, default=5, help="violations to report")

    sub.add_parser("models", help="list bundled models")
    return ap


def _cmd_check(args, props) -> int:
    m = resolve_model(args.model)
    opts = _options(args)
    worst = 0
    for prop in props(m):
        rep = check(m, prop, opts)
        print(f"property {rep.property}: {rep.verdict}" if args.quiet else rep.render())
        worst = max(worst, rep.exit_code)
    return worst


def _props_of(args):
    def pick(m):
        if args.all:
            return [n for n, _ in m.properties] or ["deadlock"]
        return [args.prop]
    return pick


def _cmd_invariants(args) -> int:
    m = resolve_model(args.model)
    opts = _options(args)
    fams = [g for g in opts.glue if g != "none"]
    history = bool(fams) or "regex" in opts.heuristics
    cache = InvariantCache(opts)
    for inst in m.instance_names():
        f = cache.component(m, inst, history)
        print(f"CI({inst}{'^h' if history else ''}):")
        print("  " + F.to_text(f))
    traps = minimal_traps(m)
    print("II:")
    print("  " + F.to_text(F.conj(*[F.disj(*[F.At(i, l) for i, l in t]) for t in traps])))
    if args.dump_traps:
        print("traps:")
        for line in dump_traps(traps).splitlines():
            print("  " + line)
    if "prec" in opts.heuristics and "prec" not in fams:
        fams.append("prec")
    if fams:
        notes = []
        g = glue_formula(m, fams, opts, notes)
        print(f"glue ({', '.join(fams)}):")
        for n in notes:
            print("  # " + n)
        print("  " + F.to_text(g))
    if args.dump_regex:
        from .regex import regex_invariant
        for inst in m.instance_names():
            comp = m.component_of(inst)
            if comp.clocks:
                continue
            _, exprs = regex_invariant(comp, inst, with_regex=True)
            for (loc, proj), (r, rr) in exprs.items():
                print(f"regex {inst}@{loc} over {{{', '.join(proj)}}}: {show(r)}")
                print(f"  restricted: {rr}")
    if args.show_global:
        print("GI:")
        print("  " + F.to_text(global_invariant(m, opts, cache)))
    return 0


def _cmd_reach(args) -> int:
    m = resolve_model(args.model)
    if args.component in m.components:
        comp, inst = m.components[args.component], args.component
    else:
        comp, inst = m.component_of(args.component), args.component
    if args.history:
        comp = extend(comp)
    g = reach(comp, diffcap=args.diffcap, max_states=args.max_states)
    print(f"{comp.name}: {len(g.states)} symbolic states, {len(g.transitions)} transitions, "
          f"{len(g.locations())} locations reached")
    if args.dump:
        print(g.dump())
    else:
        names = [global_clock(inst, c, comp.kind(c)) for c in g.clocks]
        print(F.to_text(component_invariant(g, inst, names)))
    return 0


def _cmd_oracle(args) -> int:
    m = resolve_model(args.model)
    if args.invariants:
        opts = Options(glue=args.glue if args.glue is not None else DEFAULT_GLUE,
                       heuristics=tuple(args.heuristic or ()))
        ex = O.explore(m, history=True, max_states=args.max_states)
        found = O.violations(ex, global_invariant(m, opts), limit=args.limit)
        print(O.render(ex, found))
        if not ex.graph.complete:
            return EXIT_CODES["BUDGET"]
        return 1 if found else 0
    names = [args.prop] if args.prop else [n for n, _ in m.properties] or ["deadlock"]
    worst = 0
    for name in names:
        try:
            ok = O.oracle_check(m, name, max_states=args.max_states)
        except RuntimeError as e:
            print(f"property {name}: INCOMPLETE ({e})")
            worst = max(worst, EXIT_CODES["BUDGET"])
            continue
        print(f"property {name}: {'HOLDS' if ok else 'VIOLATED'}")
        worst = max(worst, 0 if ok else 1)
    return worst


def _cmd_models() -> int:
    base = Path(__file__).parent / "models"
    for p in sorted(base.glob("*.tinv")):
        m = resolve_model(p)
        props = ", ".join(n for n, _ in m.properties)
        print(f"{p.stem:24s} {len(m.instances):3d} instances  properties: {props}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "check":
            return _cmd_check(args, _props_of(args))
        if args.cmd == "deadlock":
            return _cmd_check(args, lambda m: ["deadlock"])
        if args.cmd == "invariants":
            return _cmd_invariants(args)
        if args.cmd == "reach":
            return _cmd_reach(args)
        if args.cmd == "oracle":
            return _cmd_oracle(args)
        if args.cmd == "models":
            return _cmd_models()
    except (ModelError, F.FormulaSyntaxError, FileNotFoundError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CODES[ERROR]
    except StateLimitExceeded as e:
        print(f"budget: {e}", file=sys.stderr)
        return EXIT_CODES["BUDGET"]
    return EXIT_CODES[ERROR]


if __name__ == "__main__":
    sys.exit(main())
