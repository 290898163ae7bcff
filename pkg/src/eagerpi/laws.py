"""The built-in law suite: every behavioural (in)equality the toolkit is
expected to reproduce, with hard-coded expectations.

Each law runs one bounded check and states whether the property is
expected to hold or fail at the given bounds.  A verdict contradicting the
expectation marks the suite failed; UNKNOWN verdicts degrade to warnings
(resource bounds, not refutations).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import lam, trees
from .encode import (
    EncodingId, base_env, encode_internal, encode_milner,
    encode_milner_prime, encode_with,
)
from .equations import (
    build_eqcbv, build_eqcbvp, check_extends, check_guarded,
    divergence_scan_system, encoding_candidates, postfix_point_check,
    prefix_point_check, static_io_separation, verify_solution,
)
from .equiv import BisimConfig, trace_eq, trace_incl, weak_bisim
from .pi.dialects import Dialect
from .pi.syntax import CONT, Name
from .verdict import Status, Verdict

P = Name("p", CONT)

ENCODERS = {
    EncodingId.MILNER_V: (encode_milner, Dialect.ALPI),
    EncodingId.MILNER_V_PRIME: (encode_milner_prime, Dialect.FULL),
    EncodingId.INTERNAL: (encode_internal, Dialect.INTERNAL),
}

# Twenty one-step eager redexes; each law instance relates a redex with
# its contractum.
REDEX_CORPUS = [
    "(\\x.x)(\\y.y)",
    "(\\x.x x)(\\y.y)",
    "(\\x.y)(\\z.z)",
    "(\\x.x)y",
    "(\\x.y x)(\\z.z)",
    "(\\x.x y)(\\z.z)",
    "(\\x.\\z.x)(\\y.y)",
    "(\\x.x)(\\y.y y)",
    "(\\x.x x)(\\y.x')",
    "(\\z.z z)(\\y.y)",
    "((\\x.x)(\\y.y)) z",
    "x ((\\y.y)(\\z.z))",
    "(\\x.\\y.x y)(\\z.z)",
    "(\\x.x (x y))(\\z.z)",
    "(\\f.f y)(\\x.x)",
    "(\\x.y)(\\y.y)",
    "(\\w.w)(\\x.\\y.y)",
    "(\\x.x)(\\x.x)",
    "(\\u.u u)(\\v.v v)",
    "(\\x.\\y.y x)(\\z.z)",
]

#: lambda pairs whose tree verdict and pi verdict must agree (soundness /
#: completeness at desk scale); mixes equivalent and inequivalent pairs
CROSS_CHECK_CORPUS = [
    ("x", "x"),
    ("x", "y"),
    ("\\x.x", "\\y.y"),
    ("\\x.x", "\\x.y"),
    ("(\\x.x)(\\y.y)", "\\y.y"),
    ("(\\x.x x)(\\y.y)", "\\z.z"),
    ("x y", "x y"),
    ("x y", "y x"),
    ("x y", "x (\\z.z)"),
    ("(\\z.z)(x y)", "x y"),
    ("(\\z.z z)(x y)", "x y"),
    ("\\y.x y", "x"),
    ("\\y.x y", "\\z.x z"),
    ("\\y.x y", "y"),
    ("x", "\\y.x(\\z.y z)"),
    ("\\y.(\\x.x') y", "\\x.x'"),
    ("x (\\z.z)", "x (\\w.w)"),
    ("x (\\z.z)", "x (\\z.z z)"),
    ("x x'", "x y"),
    ("(\\f.f y)(\\x.x)", "(\\z.z) y"),
    ("(\\x.x)(\\y.y)", "(\\u.u)(\\v.v)"),
    ("\\x.\\y.x", "\\x.\\y.y"),
    ("(\\x.\\y.x y)(\\z.z)", "\\y.y"),
    ("x ((\\y.y)(\\z.z))", "x (\\z.z)"),
    ("\\y.x y", "\\y.y x"),
    ("(\\x.x x)(\\x.x x)", "(\\u.u u)(\\v.v v)"),
    ("(\\x.x x)(\\x.x x)", "(\\x.x x x)(\\x.x x x)"),
    ("x", "\\y.y"),
    ("\\x.x y", "\\x.x y'"),
    ("(\\w.w)(\\x.\\y.y)", "\\x.\\y.y"),
]

#: convergent closed-or-open terms used for the "empty trace below
#: everything" preorder law
OMEGA_BELOW_CORPUS = [
    "\\x.x", "x", "x y", "\\x.\\y.x", "(\\x.x)(\\y.y)", "\\y.x y",
    "x (\\z.z)", "\\x.x x", "(\\x.y)(\\z.z)", "\\f.f (\\x.x)",
]

#: (context with hole variable h, value) samples for the decomposition law
#: [[ (\z.E[z]) (x V) ]] ~ [[ E[x V] ]]
DECOMPOSITION_SAMPLES = [
    ("h", "y"),
    ("h", "\\z.z"),
    ("h y'", "y"),
    ("h y'", "\\z.z"),
    ("(\\u.u) h", "y"),
    ("(\\u.u u) h", "\\z.z"),
    ("h (\\w.w)", "y"),
    ("x' h", "y"),
    ("x' h", "\\z.z z"),
    ("(\\u.\\v.u) h", "y"),
]

SIMILARITY_CORPUS = [
    ("(\\x.x x)(\\x.x x)", "\\x.x"),
    ("(\\x.x x)(\\x.x x)", "x y"),
    ("x", "x"),
    ("\\y.x y", "x"),
    ("(\\z.z)(x y)", "x y"),
]


@dataclass
class Bounds:
    depth: int = 8
    tau_fuel: int = 64
    trace_len: int = 6
    eval_fuel: int = lam.DEFAULT_FUEL
    seed: int = 0

    def bisim(self, dialect: Dialect) -> BisimConfig:
        return BisimConfig(game_depth=self.depth, tau_fuel=self.tau_fuel,
                           dialect=dialect, fresh_base=self.seed)

    def tree(self, eta: bool = False, mode: str = "bisimulation") -> trees.TreeCheckConfig:
        return trees.TreeCheckConfig(eval_fuel=self.eval_fuel,
                                     depth=max(self.depth, 32),
                                     eta=eta, mode=mode)


@dataclass
class Law:
    law_id: str
    group: str
    description: str
    expect: str  # "holds" | "fails"
    run: Callable[[Bounds], Verdict]
    encoding: str = "-"
    dialect: str = "-"


@dataclass
class LawResult:
    law: Law
    verdict: Verdict
    runtime: float

    @property
    def outcome(self) -> str:
        if self.verdict.unknown:
            return "warn"
        got = "holds" if self.verdict.equivalent else "fails"
        return "pass" if got == self.law.expect else "fail"

    def to_json(self):
        return {
            "law": self.law.law_id,
            "group": self.law.group,
            "encoding": self.law.encoding,
            "dialect": self.law.dialect,
            "expected": self.law.expect,
            "verdict": self.verdict.to_json(),
            "outcome": self.outcome,
            "runtime_s": round(self.runtime, 3),
        }


def _pair_law(law_id, group, desc, left_text, right_text, enc: EncodingId,
              expect, dialect: Optional[Dialect] = None) -> Law:
    encode, default_dialect = ENCODERS[enc]
    d = dialect or default_dialect

    def run(bounds: Bounds) -> Verdict:
        m, n = lam.parse_lambda(left_text), lam.parse_lambda(right_text)
        return weak_bisim(encode(m, P), encode(n, P), base_env(), bounds.bisim(d))

    return Law(law_id, group, desc, expect, run, enc.value, d.value)


def _tree_law(law_id, group, desc, left, right, expect, eta=False,
              mode="bisimulation") -> Law:
    def run(bounds: Bounds) -> Verdict:
        checker = {(False, "bisimulation"): trees.enf_bisim,
                   (True, "bisimulation"): trees.enfe_bisim,
                   (True, "similarity"): trees.enfe_sim}[(eta, mode)]
        return checker(lam.parse_lambda(left), lam.parse_lambda(right),
                       bounds.tree(eta=eta, mode=mode))

    return Law(law_id, group, desc, expect, run, "-", "tree")


def beta_laws() -> list[Law]:
    out = []
    for enc in (EncodingId.INTERNAL, EncodingId.MILNER_V, EncodingId.MILNER_V_PRIME):
        for i, text in enumerate(REDEX_CORPUS):
            redex = lam.parse_lambda(text)
            contractum = lam.step(redex)
            assert contractum is not None, text

            def run(bounds: Bounds, enc=enc, redex=redex, contractum=contractum):
                encode, dialect = ENCODERS[enc]
                return weak_bisim(encode(redex, P), encode(contractum, P),
                                  base_env(), bounds.bisim(dialect))

            out.append(Law(f"beta-{enc.value}-{i:02d}", "beta",
                           f"reduction validity on {text}", "holds", run,
                           enc.value, ENCODERS[enc][1].value))
    return out


def nonlaw_laws() -> list[Law]:
    out = []
    left, right = "(\\z.z)(x y)", "x y"
    for enc in (EncodingId.MILNER_V, EncodingId.MILNER_V_PRIME):
        out.append(_pair_law(
            f"nonlaw-{enc.value}", "nonlaw",
            "identity wrapping of a stuck application is observable in full pi",
            left, right, enc, "fails", dialect=Dialect.FULL))

    def run_tr(bounds: Bounds, enc=EncodingId.MILNER_V_PRIME):
        encode, _ = ENCODERS[enc]
        m, n = lam.parse_lambda(left), lam.parse_lambda(right)
        return trace_eq(encode(m, P), encode(n, P), base_env(), Dialect.FULL,
                        bounds.trace_len, bounds.tau_fuel)

    out.append(Law("nonlaw-milner-prime-traces", "nonlaw",
                   "the distinction survives at trace equivalence",
                   "fails", run_tr, EncodingId.MILNER_V_PRIME.value, "full"))
    # rectifications
    out.append(_pair_law("rectified-internal", "nonlaw",
                         "the law holds for the Internal-pi encoding",
                         left, right, EncodingId.INTERNAL, "holds"))
    out.append(_pair_law("rectified-alpi", "nonlaw",
                         "the law holds for V under the ALpi link semantics",
                         left, right, EncodingId.MILNER_V, "holds",
                         dialect=Dialect.ALPI))
    return out


def eta_laws() -> list[Law]:
    return [
        _pair_law("eta-internal", "eta", "\\y.x y against x, Internal pi",
                  "\\y.x y", "x", EncodingId.INTERNAL, "holds"),
        _pair_law("eta-milner-prime", "eta",
                  "\\y.x y against x fails for V' in full pi",
                  "\\y.x y", "x", EncodingId.MILNER_V_PRIME, "fails",
                  dialect=Dialect.FULL),
        _pair_law("eta-alpi", "eta", "\\y.x y against x, V under ALpi",
                  "\\y.x y", "x", EncodingId.MILNER_V, "holds",
                  dialect=Dialect.ALPI),
        _pair_law("eta-value-internal", "eta",
                  "[[x]] against [[\\z.x z]] (value eta law)",
                  "x", "\\z.x z", EncodingId.INTERNAL, "holds"),
    ]


def tree_laws() -> list[Law]:
    out = [
        _tree_law("tree-omega-vs-stuck-y", "trees",
                  "Omega against (\\y.Omega)(x y)",
                  "(\\x.x x)(\\x.x x)", "(\\y.(\\x.x x)(\\x.x x))(x y)", "fails"),
        _tree_law("tree-omega-vs-stuck-I", "trees",
                  "Omega against (\\y.Omega)(x (\\z.z))",
                  "(\\x.x x)(\\x.x x)",
                  "(\\y.(\\x.x x)(\\x.x x))(x (\\z.z))", "fails"),
        _tree_law("tree-wrap-y", "trees", "x y against (\\y'.x y)(x y)",
                  "x y", "(\\y'.x y)(x y)", "fails"),
        _tree_law("tree-wrap-I", "trees",
                  "x (\\z.z) against (\\y.x (\\z.z))(x (\\z.z))",
                  "x (\\z.z)", "(\\y.x (\\z.z))(x (\\z.z))", "fails"),
        _tree_law("tree-eta-plain", "trees", "\\y.x y against x without eta",
                  "\\y.x y", "x", "fails"),
        _tree_law("tree-eta", "trees", "\\y.x y against x with eta",
                  "\\y.x y", "x", "holds", eta=True),
        _tree_law("tree-abs-eta", "trees",
                  "\\y.(\\x.M) y against \\x.M (plain clauses suffice)",
                  "\\y.(\\x.x') y", "\\x.x'", "holds"),
    ]

    def run_yfx(bounds: Bounds) -> Verdict:
        f = lam.parse_lambda("\\z.\\x.\\y.x (z y)")
        yfx = lam.App(lam.App(lam.Z_FIXPOINT, f), lam.Var("x"))
        v = trees.enfe_bisim(lam.Var("x"), yfx, bounds.tree(eta=True))
        if v.equivalent and v.states_visited >= bounds.tree().depth:
            v.note = "closed by exhausting depth, not by cycling"
        return v

    out.append(Law("tree-eta-fixpoint", "trees",
                   "x against Y f x closes by cycle detection", "holds",
                   run_yfx, "-", "tree"))
    return out


def preorder_laws() -> list[Law]:
    out = []
    for i, text in enumerate(OMEGA_BELOW_CORPUS):
        def run(bounds: Bounds, text=text):
            m = lam.parse_lambda(text)
            return trace_incl(encode_internal(lam.OMEGA, P),
                              encode_internal(m, P), base_env(),
                              Dialect.INTERNAL, bounds.trace_len, bounds.tau_fuel)

        out.append(Law(f"omega-below-{i:02d}", "preorder",
                       f"[[Omega]] below [[{text}]] in trace inclusion",
                       "holds", run, "internal", "internal"))

    out.append(_tree_law("sim-omega-below-identity", "preorder",
                         "Omega below \\x.x in the similarity preorder",
                         "(\\x.x x)(\\x.x x)", "\\x.x", "holds",
                         eta=True, mode="similarity"))
    out.append(_tree_law("sim-identity-above-omega", "preorder",
                         "\\x.x not below Omega",
                         "\\x.x", "(\\x.x x)(\\x.x x)", "fails",
                         eta=True, mode="similarity"))
    return out


def decomposition_laws() -> list[Law]:
    """[[ (\\z.E[z]) (x V) ]] against [[ E[x V] ]] over sample contexts."""
    out = []
    for i, (ctx_text, val_text) in enumerate(DECOMPOSITION_SAMPLES):
        def run(bounds: Bounds, ctx_text=ctx_text, val_text=val_text):
            hole = lam.parse_lambda(ctx_text)
            v = lam.parse_lambda(val_text)
            stuck = lam.App(lam.Var("x"), v)
            plugged = lam.subst_value(hole, "h", stuck) if lam.is_value(stuck) \
                else _plug_app(hole, stuck)
            wrapped = lam.App(lam.Abs("h", hole), stuck)
            return weak_bisim(encode_internal(wrapped, P),
                              encode_internal(plugged, P), base_env(),
                              bounds.bisim(Dialect.INTERNAL))

        out.append(Law(f"decompose-{i:02d}", "decompose",
                       f"context {ctx_text}, value {val_text}", "holds",
                       run, "internal", "internal"))
    return out


def _plug_app(t: lam.Term, arg: lam.Term) -> lam.Term:
    """Replace the variable h by a (non-value) term; h occurs exactly once
    in the sample contexts and never under a binder that captures it."""
    match t:
        case lam.Var("h"):
            return arg
        case lam.Var(_):
            return t
        case lam.Abs(x, b):
            return lam.Abs(x, _plug_app(b, arg))
        case lam.App(f, a):
            return lam.App(_plug_app(f, arg), _plug_app(a, arg))
    raise TypeError(t)


def agreement_laws() -> list[Law]:
    """Tree verdict and pi verdict agree on the cross-check corpus."""
    out = []
    for i, (lt, rt) in enumerate(CROSS_CHECK_CORPUS):
        def run(bounds: Bounds, lt=lt, rt=rt):
            m, n = lam.parse_lambda(lt), lam.parse_lambda(rt)
            tv = trees.enfe_bisim(m, n, bounds.tree(eta=True))
            pv = weak_bisim(encode_internal(m, P), encode_internal(n, P),
                            base_env(), bounds.bisim(Dialect.INTERNAL))
            if tv.unknown or pv.unknown:
                return Verdict(Status.UNKNOWN, reason="fuel",
                               note=f"tree={tv.status.value} pi={pv.status.value}")
            agree = tv.status is pv.status
            return Verdict(Status.EQUIVALENT_UP_TO if agree else Status.INEQUIVALENT,
                           depth=bounds.depth,
                           note=f"tree={tv.status.value} pi={pv.status.value}")

        out.append(Law(f"agree-{i:02d}", "agreement",
                       f"tree and pi verdicts agree on ({lt}, {rt})",
                       "holds", run, "internal", "internal"))
    return out


def equation_laws() -> list[Law]:
    out = []

    def run_worked(bounds: Bounds) -> Verdict:
        i_term = lam.parse_lambda("\\x.x")
        m_term = lam.parse_lambda("\\x.(\\z y. z) x x'")
        sys, table = build_eqcbv([(i_term, m_term)])
        want = [
            "X_{0} = (x',p) p!(^y). !y(x,q). X_{1}<x,x',q>",
            "X_{1} = (x,x',p) p!(^y). fwd_v<y,x>",
        ]
        if sys.pretty().splitlines() != want:
            return Verdict(Status.INEQUIVALENT,
                           evidence=["printed equations differ"] + sys.pretty().splitlines())
        sysp, _ = build_eqcbvp([(i_term, m_term)])
        if not check_guarded(sysp) or not static_io_separation(sysp):
            return Verdict(Status.INEQUIVALENT, evidence=["guard/io-separation failed"])
        dv = divergence_scan_system(sysp)
        if not all(v.equivalent for v in dv.values()):
            return Verdict(Status.INEQUIVALENT, evidence=["divergence scan failed"])
        cfg = bounds.bisim(Dialect.INTERNAL)
        for side in ("left", "right"):
            res = verify_solution(sys, encoding_candidates(table, side),
                                  base_env(), cfg)
            if not all(v.equivalent for v in res.values()):
                return Verdict(Status.INEQUIVALENT,
                               evidence=[f"{side} encodings rejected"])
        return Verdict(Status.EQUIVALENT_UP_TO, depth=bounds.depth)

    out.append(Law("equations-worked-example", "equations",
                   "the worked-example pipeline reproduces the printed "
                   "system and accepts both encoding families", "holds",
                   run_worked, "internal", "internal"))

    def run_extends(bounds: Bounds) -> Verdict:
        seeds = [(lam.parse_lambda("\\x.x"), lam.parse_lambda("\\x.(\\z y. z) x x'"))]
        sys, _ = build_eqcbv(seeds)
        sysp, _ = build_eqcbvp(seeds)
        extra = {i for i in sysp.equations if i.startswith("V")}
        res = check_extends(sysp, sys, extra, base_env(), bounds.bisim(Dialect.INTERNAL))
        ok = all(v.equivalent for v in res.values())
        return Verdict(Status.EQUIVALENT_UP_TO if ok else Status.INEQUIVALENT,
                       depth=bounds.depth)

    out.append(Law("equations-extends", "equations",
                   "the optimised system extends the plain one on shared "
                   "indices", "holds", run_extends, "internal", "internal"))

    def run_fixpoints(bounds: Bounds) -> Verdict:
        seeds = [(lam.parse_lambda(a), lam.parse_lambda(b))
                 for a, b in SIMILARITY_CORPUS]
        sys, table = build_eqcbv(seeds, eta=True, preorder=True)
        left = encoding_candidates(table, "left")
        right = encoding_candidates(table, "right")
        post_left = postfix_point_check(sys, left, base_env(),
                                        Dialect.INTERNAL, bounds.trace_len,
                                        bounds.tau_fuel)
        pre_right = prefix_point_check(sys, right, base_env(),
                                       Dialect.INTERNAL, bounds.trace_len,
                                       bounds.tau_fuel)
        bad = [k for k, v in post_left.items() if not v.equivalent]
        bad += [k for k, v in pre_right.items() if not v.equivalent]
        if bad:
            return Verdict(Status.INEQUIVALENT,
                           evidence=[f"fixed-point check failed at {k}" for k in bad])
        # the conclusion of the unique-solution preorder theorem
        for (lt, rt) in SIMILARITY_CORPUS:
            v = trace_incl(encode_internal(lam.parse_lambda(lt), P),
                           encode_internal(lam.parse_lambda(rt), P),
                           base_env(), Dialect.INTERNAL, bounds.trace_len,
                           bounds.tau_fuel)
            if not v.equivalent:
                return Verdict(Status.INEQUIVALENT,
                               evidence=[f"trace inclusion failed on ({lt},{rt})"])
        return Verdict(Status.EQUIVALENT_UP_TO, depth=bounds.depth)

    out.append(Law("equations-fixpoints", "equations",
                   "left encodings are post-fixed and right encodings "
                   "pre-fixed points of the similarity system", "holds",
                   run_fixpoints, "internal", "internal"))
    return out


def all_laws() -> list[Law]:
    return (beta_laws() + nonlaw_laws() + eta_laws() + tree_laws()
            + preorder_laws() + decomposition_laws() + agreement_laws()
            + equation_laws())


def run_laws(laws: list[Law], bounds: Optional[Bounds] = None) -> list[LawResult]:
    bounds = bounds or Bounds()
    results = []
    for law in laws:
        t0 = time.time()
        verdict = law.run(bounds)
        results.append(LawResult(law, verdict, time.time() - t0))
    return results


def suite_passed(results: list[LawResult]) -> bool:
    return all(r.outcome != "fail" for r in results)
