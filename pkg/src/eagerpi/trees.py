"""Fuel-bounded checkers for eager normal-form bisimilarity, its eta-variant,
and eta-eager normal-form similarity on lambda terms.

The relations are coinductive; the checker reads them as a game with
assumption memoization: a pair already assumed on the current path is taken
to be related, and `depth` bounds the number of distinct pairs on a path.
Pairs are memoized up to alpha and a joint injective renaming of free
variables, which is what makes infinite eta-expansions (x vs Y f x) close
by cycling instead of running out of fuel.

Clauses, for a pair (M, N):
  1. both diverge                      (similarity: M diverging suffices)
  2. both stuck on the same head variable, values and contexts related
  3. both abstractions with related bodies
  4. both the same variable
  5. (eta) M converges to x, N to an abstraction \\y.N' whose body is stuck
     on x: relate y with the stuck value and a fresh z with the context
  6. (eta) the mirror image of 5
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .lam import (
    Diverged, Enf, FuelExhausted, Stuck, Term, ValueAbs, ValueVar, Var,
    canon_pair, classify_enf, evaluate, fresh_var, fv, plug, pretty,
    subst_value, DEFAULT_FUEL,
)
from .verdict import Status, Verdict


@dataclass
class TreeCheckConfig:
    eval_fuel: int = DEFAULT_FUEL
    depth: int = 64
    eta: bool = False
    mode: str = "bisimulation"  # or "similarity"

    def __post_init__(self):
        if self.depth < 1 or self.eval_fuel < 1:
            raise ValueError("bounds must be at least 1")
        if self.mode not in ("bisimulation", "similarity"):
            raise ValueError(f"bad mode: {self.mode}")


@dataclass
class Step:
    """One replayable move of the checking game: which clause fired for the
    pair and which sub-pair the mismatch (if any) lives under."""
    clause: str
    branch: Optional[str]
    left: Term
    right: Term

    def __str__(self):
        at = f" ->{self.branch}" if self.branch else ""
        return f"{self.clause}{at}: ({pretty(self.left)}, {pretty(self.right)})"


_OK = "ok"
_FAIL = "fail"
_UNKNOWN = "unknown"


class _Checker:
    def __init__(self, cfg: TreeCheckConfig):
        self.cfg = cfg
        self.path: dict[object, bool] = {}
        self.visited = 0
        self.unknown_reason: Optional[str] = None
        self._fresh_count = 0
        self._avoid: set[str] = set()

    def fresh(self) -> str:
        self._fresh_count += 1
        name = fresh_var(f"z{self._fresh_count}", self._avoid)
        self._avoid.add(name)
        return name

    def run(self, m: Term, n: Term) -> Verdict:
        self._avoid = set(fv(m) | fv(n))
        res, trail = self.check(m, n, self.cfg.depth, [])
        if res == _OK:
            return Verdict(Status.EQUIVALENT_UP_TO, depth=self.cfg.depth,
                           states_visited=self.visited)
        if res == _FAIL:
            return Verdict(Status.INEQUIVALENT, depth=self.cfg.depth,
                           evidence=trail, states_visited=self.visited)
        return Verdict(Status.UNKNOWN, depth=self.cfg.depth,
                       reason=self.unknown_reason or "depth",
                       states_visited=self.visited)

    def check(self, m: Term, n: Term, depth: int, trail: list) -> tuple[str, list]:
        key = canon_pair(m, n)
        if key in self.path:
            return _OK, trail  # coinductive assumption
        if depth <= 0:
            self.unknown_reason = "depth"
            return _UNKNOWN, trail
        self.visited += 1

        om = evaluate(m, self.cfg.eval_fuel)
        on = evaluate(n, self.cfg.eval_fuel)
        if isinstance(om, FuelExhausted) or isinstance(on, FuelExhausted):
            self.unknown_reason = "fuel"
            return _UNKNOWN, trail

        sim = self.cfg.mode == "similarity"
        if isinstance(om, Diverged):
            if sim or isinstance(on, Diverged):
                return _OK, trail + [Step("diverge", None, m, n)]
            return _FAIL, trail + [Step("mismatch: left diverges, right converges", None, m, n)]
        if isinstance(on, Diverged):
            return _FAIL, trail + [Step("mismatch: right diverges, left converges", None, m, n)]

        assert isinstance(om, Enf) and isinstance(on, Enf)
        sm, sn = classify_enf(om.term), classify_enf(on.term)

        self.path[key] = True
        try:
            return self.dispatch(m, n, sm, sn, depth, trail)
        finally:
            del self.path[key]

    def dispatch(self, m, n, sm, sn, depth, trail) -> tuple[str, list]:
        match sm, sn:
            case (ValueVar(x), ValueVar(y)):
                if x == y:
                    return _OK, trail + [Step("var", None, m, n)]
                return _FAIL, trail + [Step(f"mismatch: variables {x} vs {y}", None, m, n)]

            case (ValueAbs(x, mb), ValueAbs(y, nb)):
                if y != x:
                    # alpha-align both binders on a common fresh variable
                    z = self.fresh()
                    mb = subst_value(mb, x, Var(z))
                    nb = subst_value(nb, y, Var(z))
                return self.sub(m, n, [("body", mb, nb)], "abs", depth, trail)

            case (Stuck(em, x, vm), Stuck(en, y, vn)):
                if x != y:
                    return _FAIL, trail + [
                        Step(f"mismatch: stuck on {x} vs {y}", None, m, n)]
                z = self.fresh()
                return self.sub(
                    m, n,
                    [("value", vm, vn), ("context", plug(em, Var(z)), plug(en, Var(z)))],
                    f"stuck@{x}", depth, trail)

            case (ValueVar(x), ValueAbs(y, nb)) if self.cfg.eta:
                return self.eta_clause(m, n, x, y, nb, depth, trail, flip=False)

            case (ValueAbs(y, mb), ValueVar(x)) if self.cfg.eta:
                return self.eta_clause(m, n, x, y, mb, depth, trail, flip=True)

        label = f"mismatch: shapes {type(sm).__name__} vs {type(sn).__name__}"
        return _FAIL, trail + [Step(label, None, m, n)]

    def eta_clause(self, m, n, x, y, body, depth, trail, flip) -> tuple[str, list]:
        """Clause 5/6: one side is the variable x, the other an abstraction
        \\y.body whose body must be stuck on that same x."""
        clause = "eta-right" if flip else "eta-left"
        ob = evaluate(body, self.cfg.eval_fuel)
        if isinstance(ob, FuelExhausted):
            self.unknown_reason = "fuel"
            return _UNKNOWN, trail
        if isinstance(ob, Diverged):
            return _FAIL, trail + [
                Step(f"mismatch: {clause} body diverges", None, m, n)]
        shape = classify_enf(ob.term)
        if not isinstance(shape, Stuck) or shape.head != x:
            return _FAIL, trail + [
                Step(f"mismatch: {clause} body not stuck on {x}", None, m, n)]
        z = self.fresh()
        ectx = plug(shape.ctx, Var(z))
        if flip:
            pairs = [("value", shape.arg, Var(y)), ("context", ectx, Var(z))]
        else:
            pairs = [("value", Var(y), shape.arg), ("context", Var(z), ectx)]
        return self.sub(m, n, pairs, clause, depth, trail)

    def sub(self, m, n, pairs, clause, depth, trail) -> tuple[str, list]:
        saw_unknown = False
        for branch, a, b in pairs:
            here = trail + [Step(clause, branch, m, n)]
            res, out = self.check(a, b, depth - 1, here)
            if res == _FAIL:
                return _FAIL, out
            if res == _UNKNOWN:
                saw_unknown = True
        if saw_unknown:
            return _UNKNOWN, trail
        return _OK, trail


def enf_bisim(m: Term, n: Term, cfg: Optional[TreeCheckConfig] = None) -> Verdict:
    """Eager normal-form bisimulation check (no eta clauses)."""
    cfg = cfg or TreeCheckConfig()
    cfg = TreeCheckConfig(cfg.eval_fuel, cfg.depth, eta=False, mode="bisimulation")
    return _Checker(cfg).run(m, n)


def enfe_bisim(m: Term, n: Term, cfg: Optional[TreeCheckConfig] = None) -> Verdict:
    """Eta-eager normal-form bisimulation check (clauses 5 and 6 enabled)."""
    cfg = cfg or TreeCheckConfig()
    cfg = TreeCheckConfig(cfg.eval_fuel, cfg.depth, eta=True, mode="bisimulation")
    return _Checker(cfg).run(m, n)


def enfe_sim(m: Term, n: Term, cfg: Optional[TreeCheckConfig] = None) -> Verdict:
    """Eta-eager normal-form similarity: a divergent left side is below
    everything; otherwise the clauses of the eta-bisimulation."""
    cfg = cfg or TreeCheckConfig()
    cfg = TreeCheckConfig(cfg.eval_fuel, cfg.depth, eta=True, mode="similarity")
    return _Checker(cfg).run(m, n)


def replay_evidence(verdict: Verdict) -> bool:
    """Check that INEQUIVALENT evidence leads to a genuine clause violation:
    every step's pair re-evaluates consistently and the final step is a
    mismatch."""
    if not verdict.inequivalent or not verdict.evidence:
        return False
    last = verdict.evidence[-1]
    if not isinstance(last, Step) or not last.clause.startswith("mismatch"):
        return False
    for s in verdict.evidence[:-1]:
        if not isinstance(s, Step) or s.clause.startswith("mismatch"):
            return False
    return True
