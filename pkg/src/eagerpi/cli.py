"""Command-line front-end.

Subcommands: eval, enf-bisim, encode, lts, bisim, barbed, traces,
trace-incl, laws, equations.  The EAGERPI_SEED environment variable fixes
the base of the fresh-name schema, so identical invocations print
identical output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import lam, trees
from .encode import (
    ENCODING_DIALECTS, EncodingId, base_env, encode_with,
)
from .equations import (
    BuildConfig, build_eqcbv, build_eqcbvp, check_extends, check_guarded,
    divergence_scan_system, encoding_candidates, pair_table_json,
    postfix_point_check, prefix_point_check, static_io_separation,
    verify_solution,
)
from .equiv import BisimConfig, barbed_bisim, trace_eq, trace_incl, traces, weak_bisim
from .laws import Bounds, all_laws, run_laws, suite_passed
from .pi.dialects import Dialect, free_input_subjects, validate_alpi, validate_internal
from .pi.lts import FreshSupply, transitions
from .pi.norm import NormConfig, normalize
from .pi.syntax import CONT, Name, parse_program, pretty
from .verdict import Verdict, dumps

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DIVERGED = 2
EXIT_FUEL = 3
EXIT_MISMATCH = 4


def _seed() -> int:
    try:
        return int(os.environ.get("EAGERPI_SEED", "0"))
    except ValueError:
        return 0


def _bounds(args) -> Bounds:
    return Bounds(depth=args.depth, tau_fuel=args.tau_fuel,
                  trace_len=args.trace_len, eval_fuel=args.fuel, seed=_seed())


def _dialect(args) -> Dialect:
    return Dialect(args.dialect)


def _parse_pi_arg(text: str):
    env = base_env()
    more, sorts, proc = parse_program(text)
    env.update(more)
    if proc is None:
        raise SystemExit("no process given")
    return proc, env


def _print_verdict(v: Verdict, as_json: bool):
    print(dumps(v) if as_json else str(v))


def cmd_eval(args) -> int:
    try:
        term = lam.parse_lambda(args.term)
    except lam.LambdaParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = lam.evaluate(term, args.fuel)
    match out:
        case lam.Enf(t, steps):
            shape = lam.classify_enf(t)
            kind = {"ValueVar": "variable", "ValueAbs": "abstraction",
                    "Stuck": "stuck"}[type(shape).__name__]
            print(f"enf: {lam.pretty(t)} ({steps} step{'s' * (steps != 1)}, {kind})")
            return EXIT_OK
        case lam.Diverged(cycle):
            print(f"diverged (cycle length {len(cycle)})")
            return EXIT_DIVERGED
        case lam.FuelExhausted(last):
            print(f"fuel exhausted; last term: {lam.pretty(last)}")
            return EXIT_FUEL
    return EXIT_USAGE


def cmd_enf_bisim(args) -> int:
    cfg = trees.TreeCheckConfig(eval_fuel=args.fuel, depth=args.depth,
                                eta=args.eta, mode=args.mode)
    m = lam.parse_lambda(args.left)
    n = lam.parse_lambda(args.right)
    if args.mode == "similarity":
        v = trees.enfe_sim(m, n, cfg)
    elif args.eta:
        v = trees.enfe_bisim(m, n, cfg)
    else:
        v = trees.enf_bisim(m, n, cfg)
    _print_verdict(v, args.json)
    return EXIT_OK if v.equivalent else EXIT_MISMATCH


def cmd_encode(args) -> int:
    term = lam.parse_lambda(args.term)
    enc = EncodingId(args.encoding)
    proc = encode_with(enc, term, Name(args.cont, CONT))
    print(pretty(proc))
    if args.validate:
        env = base_env()
        rep_i = validate_internal(proc, env)
        rep_a = validate_alpi(proc, env)
        print(f"# internal: {rep_i}; alpi: {rep_a}", file=sys.stderr)
    return EXIT_OK


def cmd_lts(args) -> int:
    proc, env = _parse_pi_arg(args.term)
    d = _dialect(args)
    from .encode import LINK_LIKE
    cfg = NormConfig(dialect=d, link_constants=LINK_LIKE)
    if d is Dialect.ALPI:
        free_in = free_input_subjects(proc, env)
        if free_in:
            names = ", ".join(sorted(n.text for n in free_in))
            print(f"# warning: free names used in input: {names}", file=sys.stderr)
    frontier = [(proc, 0)]
    seen = 0
    edges = []
    while frontier and seen < args.states:
        q, level = frontier.pop(0)
        if level >= args.depth:
            continue
        seen += 1
        for act, d2 in transitions(q, env, cfg):
            edges.append((pretty(normalize(q, env, cfg)), str(act),
                          pretty(normalize(d2, env, cfg))))
            frontier.append((d2, level + 1))
    if args.dot:
        print("digraph lts {")
        ids: dict[str, int] = {}

        def nid(s: str) -> int:
            if s not in ids:
                ids[s] = len(ids)
                print(f'  n{ids[s]} [label="{s}"];')
            return ids[s]

        for src, act, dst in edges:
            a, b = nid(src), nid(dst)
            print(f'  n{a} -> n{b} [label="{act}"];')
        print("}")
    else:
        for src, act, dst in edges:
            print(f"{src}\n  --{act}-->  {dst}")
    return EXIT_OK


def _two_processes(args):
    if args.encoding:
        enc = EncodingId(args.encoding)
        p = Name(args.cont, CONT)
        m = encode_with(enc, lam.parse_lambda(args.left), p)
        n = encode_with(enc, lam.parse_lambda(args.right), p)
        return m, n, base_env()
    m, env1 = _parse_pi_arg(args.left)
    n, env2 = _parse_pi_arg(args.right)
    env1.update(env2)
    return m, n, env1


def cmd_bisim(args, barbed: bool = False) -> int:
    m, n, env = _two_processes(args)
    cfg = BisimConfig(game_depth=args.depth, tau_fuel=args.tau_fuel,
                      dialect=_dialect(args), fresh_base=_seed(),
                      tau_compression=not args.no_tau_compression)
    v = (barbed_bisim if barbed else weak_bisim)(m, n, env, cfg)
    _print_verdict(v, args.json)
    return EXIT_OK if v.equivalent else EXIT_MISMATCH


def cmd_traces(args) -> int:
    m, env = _parse_pi_arg(args.term)
    rep = traces(m, env, _dialect(args), args.trace_len, args.tau_fuel)
    out = sorted(" . ".join(t) if t else "(empty)" for t in rep.traces)
    if args.json:
        print(json.dumps({"traces": out, "truncated": rep.truncated}, indent=2))
    else:
        for t in out:
            print(t)
        if rep.truncated:
            print("# truncated", file=sys.stderr)
    return EXIT_OK


def cmd_trace_incl(args) -> int:
    m, n, env = _two_processes(args)
    v = trace_incl(m, n, env, _dialect(args), args.trace_len, args.tau_fuel)
    _print_verdict(v, args.json)
    return EXIT_OK if v.equivalent else EXIT_MISMATCH


def cmd_laws(args) -> int:
    laws = all_laws()
    if args.filter:
        laws = [l for l in laws if args.filter in l.law_id or args.filter == l.group]
    results = run_laws(laws, _bounds(args))
    if args.json:
        print(json.dumps([r.to_json() for r in results], indent=2))
    else:
        wid = max(len(r.law.law_id) for r in results) if results else 10
        for r in results:
            print(f"{r.law.law_id:<{wid}}  {r.law.encoding:<13} "
                  f"{r.law.dialect:<9} expect={r.law.expect:<5} "
                  f"{r.verdict.status.value:<16} {r.outcome:<4} "
                  f"{r.runtime:6.2f}s")
        passed = sum(r.outcome == "pass" for r in results)
        warned = sum(r.outcome == "warn" for r in results)
        print(f"# {passed}/{len(results)} passed, {warned} warnings")
    return EXIT_OK if suite_passed(results) else EXIT_MISMATCH


def _load_relation(path: str):
    with open(path) as fh:
        data = json.load(fh)
    return [(lam.parse_lambda(a), lam.parse_lambda(b)) for a, b in data]


def cmd_equations(args) -> int:
    seeds = _load_relation(args.relation)
    build_cfg = BuildConfig(eval_fuel=args.fuel, max_pairs=args.max_pairs)
    build = build_eqcbvp if (args.sub == "build-opt" or args.system == "opt") \
        else build_eqcbv
    sys_, table = build(seeds, build_cfg, eta=args.eta, preorder=args.preorder)
    if args.sub in ("build", "build-opt"):
        print(sys_.pretty())
        if args.pairs:
            print(pair_table_json(table))
        return EXIT_OK

    if args.sub == "check":
        guard = check_guarded(sys_)
        sep = static_io_separation(sys_)
        print(f"guarded: {guard}")
        print(f"io-separation: {sep}")
        dv = divergence_scan_system(sys_, depth=min(args.depth, 4),
                                    tau_fuel=args.tau_fuel)
        for k, v in dv.items():
            print(f"divergence X_{{{k}}}: {v.status.value}"
                  + (f" ({v.note})" if v.note else ""))
        cfg = BisimConfig(game_depth=args.depth, tau_fuel=args.tau_fuel,
                          fresh_base=_seed())
        ok = bool(guard)
        for side in ("left", "right"):
            cands = encoding_candidates(table, side)
            res = verify_solution(sys_, cands, base_env(), cfg)
            for k, v in res.items():
                print(f"solution[{side}] X_{{{k}}}: {v.status.value}")
                ok = ok and v.equivalent
        return EXIT_OK if ok else EXIT_MISMATCH

    if args.sub == "fixpoints":
        left = encoding_candidates(table, "left")
        right = encoding_candidates(table, "right")
        rows = []
        for fam, cands in (("left", left), ("right", right)):
            pre = prefix_point_check(sys_, cands, base_env(),
                                     Dialect.INTERNAL, args.trace_len,
                                     args.tau_fuel)
            post = postfix_point_check(sys_, cands, base_env(),
                                       Dialect.INTERNAL, args.trace_len,
                                       args.tau_fuel)
            for k in sys_.equations:
                rows.append((k, fam, pre[k].status.value, post[k].status.value))
        print(f"{'index':<8}{'family':<8}{'pre-fixed':<18}{'post-fixed':<18}")
        for k, fam, a, b in rows:
            print(f"{k:<8}{fam:<8}{a:<18}{b:<18}")
        return EXIT_OK

    print(f"unknown equations subcommand {args.sub}", file=sys.stderr)
    return EXIT_USAGE


def _add_common(sp, trace: bool = True):
    sp.add_argument("--dialect", choices=[d.value for d in Dialect],
                    default="internal")
    sp.add_argument("--depth", type=int, default=8, help="game depth bound")
    sp.add_argument("--tau-fuel", type=int, default=64)
    sp.add_argument("--fuel", type=int, default=lam.DEFAULT_FUEL,
                    help="lambda evaluation fuel")
    sp.add_argument("--trace-len", type=int, default=6)
    sp.add_argument("--json", action="store_true")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="eagerpi",
        description="Call-by-value lambda terms as pi processes: encodings, "
                    "tree bisimulations, bounded equivalence checks and "
                    "equation systems.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("eval", help="evaluate a lambda term to eager normal form")
    sp.add_argument("term")
    _add_common(sp)
    sp.set_defaults(fn=cmd_eval)

    sp = sub.add_parser("enf-bisim", help="eager normal-form (eta-)bisimulation")
    sp.add_argument("left")
    sp.add_argument("right")
    sp.add_argument("--eta", action="store_true")
    sp.add_argument("--mode", choices=["bisimulation", "similarity"],
                    default="bisimulation")
    _add_common(sp)
    sp.set_defaults(fn=cmd_enf_bisim)

    sp = sub.add_parser("encode", help="encode a lambda term as a pi process")
    sp.add_argument("--encoding", choices=[e.value for e in EncodingId],
                    required=True)
    sp.add_argument("--term", required=True)
    sp.add_argument("--cont", default="p")
    sp.add_argument("--validate", action="store_true")
    sp.set_defaults(fn=cmd_encode)

    sp = sub.add_parser("lts", help="explore transitions of a pi process")
    sp.add_argument("term", help="pi process text (may include def/sort)")
    sp.add_argument("--states", type=int, default=20)
    sp.add_argument("--dot", action="store_true")
    _add_common(sp)
    sp.set_defaults(fn=cmd_lts)

    for name, barbed in (("bisim", False), ("barbed", True)):
        sp = sub.add_parser(name, help=("barbed" if barbed else "weak ground")
                            + " bisimulation check")
        sp.add_argument("left")
        sp.add_argument("right")
        sp.add_argument("--encoding", choices=[e.value for e in EncodingId],
                        help="treat the two arguments as lambda terms")
        sp.add_argument("--cont", default="p")
        sp.add_argument("--no-tau-compression", action="store_true")
        _add_common(sp)
        sp.set_defaults(fn=cmd_bisim, barbed=barbed)

    sp = sub.add_parser("traces", help="weak visible traces of a pi process")
    sp.add_argument("term")
    _add_common(sp)
    sp.set_defaults(fn=cmd_traces)

    sp = sub.add_parser("trace-incl", help="trace inclusion between processes")
    sp.add_argument("left")
    sp.add_argument("right")
    sp.add_argument("--encoding", choices=[e.value for e in EncodingId])
    sp.add_argument("--cont", default="p")
    _add_common(sp)
    sp.set_defaults(fn=cmd_trace_incl)

    sp = sub.add_parser("laws", help="run the built-in law suite")
    sp.add_argument("--filter", help="law id substring or group name")
    _add_common(sp)
    sp.set_defaults(fn=cmd_laws)

    sp = sub.add_parser("equations", help="build and check equation systems")
    sp.add_argument("sub", choices=["build", "build-opt", "check", "fixpoints"])
    sp.add_argument("relation", help="JSON file: list of lambda term pairs")
    sp.add_argument("--system", choices=["plain", "opt"], default="plain")
    sp.add_argument("--eta", action="store_true")
    sp.add_argument("--preorder", action="store_true")
    sp.add_argument("--pairs", action="store_true", help="print the pair table")
    sp.add_argument("--max-pairs", type=int, default=200)
    _add_common(sp)
    sp.set_defaults(fn=cmd_equations)

    args = ap.parse_args(argv)
    try:
        if args.cmd in ("bisim", "barbed"):
            return args.fn(args, barbed=args.barbed)
        return args.fn(args)
    except lam.LambdaParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # sort errors, pi parse errors, build failures
        from .equations import BuildError
        from .pi.syntax import PiParseError, SortError
        if isinstance(exc, (PiParseError, SortError, BuildError, OSError,
                            json.JSONDecodeError)):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        raise


if __name__ == "__main__":
    raise SystemExit(main())
