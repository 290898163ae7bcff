"""Bounded checkers for weak ground bisimilarity, barbed bisimilarity and
trace inclusion/equivalence on pi processes.

The bisimulation checker plays the usual on-the-fly game: the challenger
moves strongly, the defender answers weakly within a tau budget, and pairs
already assumed on the current path count as related (a coinductive
assumption).  Pairs are memoized up to alpha and a joint injective renaming
of free names.  INEQUIVALENT verdicts carry the challenger's distinguishing
actions and never rest on a truncated tau search: when the defender's
frontier was cut the verdict degrades to UNKNOWN instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .encode import LINK_LIKE
from .pi.dialects import Dialect
from .pi.lts import Action, FreshSupply, Template, templates
from .pi.norm import NormConfig, canon_soup, soup_of
from .pi.syntax import ConstantEnv, Name, Proc, fn, pretty
from .verdict import Status, Verdict


@dataclass
class BisimConfig:
    game_depth: int = 8
    tau_fuel: int = 64
    dialect: Dialect = Dialect.INTERNAL
    tau_compression: bool = True
    transition_limit: int = 10_000
    fresh_base: int = 0

    def __post_init__(self):
        if self.game_depth < 1 or self.tau_fuel < 1:
            raise ValueError("bounds must be positive")

    def norm(self) -> NormConfig:
        return NormConfig(dialect=self.dialect, link_constants=LINK_LIKE)


@dataclass
class Move:
    side: str  # "left" | "right"
    action: Action

    def __str__(self):
        return f"{self.side}:{self.action}"


_OK, _FAIL, _UNKNOWN = "ok", "fail", "unknown"


class _Session:
    """Shared state for one check: normalization caches, a fresh-name
    supply, and resource accounting."""

    def __init__(self, env: ConstantEnv, cfg: BisimConfig, avoid):
        self.env = env
        self.cfg = cfg
        self.ncfg = cfg.norm()
        self.supply = FreshSupply(avoid, base=cfg.fresh_base)
        self.visited = 0
        self.truncated = False
        self._intern: dict[Proc, Proc] = {}
        self._templ: dict[object, list[Template]] = {}
        self._closure: dict[object, list[Proc]] = {}
        self._compressed: dict[object, Proc] = {}
        self._pairkey: dict[tuple[int, int], tuple] = {}

    def intern(self, p: Proc) -> Proc:
        """One representative object per structurally equal process, so
        per-object caches (soups, canonical keys) hit across the search."""
        got = self._intern.get(p)
        if got is None:
            self._intern[p] = p
            got = p
        return got

    def canon(self, p: Proc):
        return canon_soup(soup_of(self.intern(p), self.env, self.ncfg))

    def canon_pair(self, p: Proc, q: Proc):
        # renumber the free leaves of the two canonical trees jointly, so a
        # pair key is independent of the concrete fresh names chosen
        ck, cq = self.canon(p), self.canon(q)
        memo_key = (id(ck), id(cq))
        got = self._pairkey.get(memo_key)
        if got is not None:
            return got[1]
        fm: dict[tuple, int] = {}

        def renum(key):
            if isinstance(key, tuple):
                if len(key) == 3 and key[0] == "f":
                    if key not in fm:
                        fm[key] = len(fm)
                    return ("f", fm[key], key[2])
                return tuple(renum(k) for k in key)
            return key

        out = (renum(ck), renum(cq))
        self._pairkey[memo_key] = ((ck, cq), out)  # keep ids alive
        return out

    def templates(self, p: Proc) -> list[Template]:
        key = self.canon(p)
        if key not in self._templ:
            self._templ[key] = templates(self.intern(p), self.env, self.ncfg,
                                         limit=self.cfg.transition_limit)
        return self._templ[key]

    def normalize(self, p: Proc) -> Proc:
        return self.intern(soup_of(self.intern(p), self.env, self.ncfg).to_proc())

    def compress(self, p: Proc) -> Proc:
        """Advance through internal steps that cannot change the observable
        behaviour: a unique tau at a restricted subject preempts no visible
        capability (inert step), and a state whose only moves are taus with
        a single successor.  Cycle detection keeps divergent loops from
        spinning."""
        if not self.cfg.tau_compression:
            return self.normalize(p)
        p = self.normalize(p)
        seen = {self.canon(p)}
        for _ in range(self.cfg.tau_fuel):
            ts = self.templates(p)
            taus = [t for t in ts if t.kind == "tau"]
            if not taus:
                return p
            if len(taus) == 1 and taus[0].tau_restricted:
                d = self.normalize(taus[0].build(()))
            elif len(taus) == len(ts):
                succs = {}
                for t in taus:
                    d = self.normalize(t.build(()))
                    succs[self.canon(d)] = d
                if len(succs) != 1:
                    return p
                d = next(iter(succs.values()))
            else:
                return p
            key = self.canon(d)
            if key in seen:
                return p
            seen.add(key)
            p = d
        self.truncated = True
        return p

    def compress_cached(self, p: Proc) -> Proc:
        k = self.canon(p)
        got = self._compressed.get(k)
        if got is None:
            got = self.compress(p)
            self._compressed[k] = got
        return got

    def tau_closure(self, p: Proc) -> list[Proc]:
        """States reachable by internal moves, explored over compressed
        representatives; sets the session truncation flag when the budget
        cuts the frontier."""
        p = self.compress_cached(p)
        root = self.canon(p)
        if root in self._closure:
            return self._closure[root]
        seen = {root: p}
        frontier = [p]
        budget = self.cfg.tau_fuel
        while frontier:
            if budget <= 0:
                self.truncated = True
                break
            budget -= 1
            q = frontier.pop(0)
            for t in self.templates(q):
                if t.kind != "tau":
                    continue
                d = self.compress_cached(t.build(()))
                k = self.canon(d)
                if k not in seen:
                    seen[k] = d
                    frontier.append(d)
        states = list(seen.values())
        self._closure[root] = states
        return states


class _BisimGame(_Session):
    def __init__(self, env, cfg, p, q, barbed=False):
        super().__init__(env, cfg, set(fn(p)) | set(fn(q)))
        self.barbed = barbed
        self.failed: dict[object, list[Move]] = {}
        self.proven: dict[object, int] = {}  # pair key -> depth it held to
        self.assumed: set = set()
        self.floor_hits = 0
        self.p0, self.q0 = p, q

    def pair_fresh(self, p: Proc, q: Proc, sorts: tuple[str, ...]) -> tuple[Name, ...]:
        """Deterministic fresh names for a game move: the first unused
        names relative to the current pair.  Alpha-equivalent pairs thus
        make identical moves, which keeps memo keys stable."""
        supply = FreshSupply(set(fn(p)) | set(fn(q)), base=self.cfg.fresh_base)
        return supply.fresh_tuple(sorts)

    def run(self) -> Verdict:
        res, ev, _ = self.play(self.p0, self.q0, self.cfg.game_depth)
        if res == _OK:
            note = None
            if self.floor_hits:
                note = f"depth floor reached on {self.floor_hits} branches"
            return Verdict(Status.EQUIVALENT_UP_TO, depth=self.cfg.game_depth,
                           tau_fuel=self.cfg.tau_fuel, truncated=self.truncated,
                           states_visited=self.visited, note=note)
        if res == _FAIL:
            return Verdict(Status.INEQUIVALENT, depth=self.cfg.game_depth,
                           tau_fuel=self.cfg.tau_fuel, evidence=ev,
                           truncated=self.truncated, states_visited=self.visited)
        return Verdict(Status.UNKNOWN, depth=self.cfg.game_depth,
                       tau_fuel=self.cfg.tau_fuel, reason="fuel" if self.truncated else "depth",
                       truncated=self.truncated, states_visited=self.visited)

    def play(self, p: Proc, q: Proc, depth: int) -> tuple[str, list[Move], set]:
        """Returns (result, evidence, assumptions the result rests on).
        OK results with no outstanding assumptions are cached with the
        depth they were established at and reused monotonically."""
        p, q = self.compress_cached(p), self.compress_cached(q)
        if self.canon(p) == self.canon(q):
            return _OK, [], set()
        key = self.canon_pair(p, q)
        if self.proven.get(key, -1) >= depth:
            return _OK, [], set()
        if key in self.assumed:
            return _OK, [], {key}
        if key in self.failed:
            return _FAIL, self.failed[key], set()
        if depth <= 0:
            # bound reached with no difference: that is exactly what
            # EQUIVALENT_UP_TO claims, so the floor counts as OK
            self.floor_hits += 1
            return _OK, [], set()
        self.visited += 1

        if self.barbed:
            res = self.barb_check(p, q)
            if res is not None:
                return res[0], res[1], set()

        self.assumed.add(key)
        deps: set = set()
        try:
            saw_unknown = False
            order = {"out": 0, "in": 1, "tau": 2}
            for side, chall, defend in (("left", p, q), ("right", q, p)):
                ts = sorted(self.templates(chall), key=lambda t: order[t.kind])
                for t in ts:
                    if self.barbed and t.kind != "tau":
                        continue
                    res, ev, d = self.challenge(side, chall, defend, t, depth)
                    deps |= d
                    if res == _FAIL:
                        self.failed[key] = ev
                        return _FAIL, ev, set()
                    if res == _UNKNOWN:
                        saw_unknown = True
            if saw_unknown:
                return _UNKNOWN, [], deps
            deps.discard(key)  # self-supporting cycles are fine (coinduction)
            if not deps and self.proven.get(key, -1) < depth:
                self.proven[key] = depth
            return _OK, [], deps
        finally:
            self.assumed.discard(key)

    def challenge(self, side, chall, defend, t: Template, depth):
        before = self.truncated
        fresh = self.pair_fresh(chall, defend, t.bound_sorts())
        act = t.action(fresh)
        p2 = self.compress_cached(t.build(fresh))
        move = Move(side, act)

        candidates: dict[object, Proc] = {}
        if t.kind == "tau":
            for c in self.tau_closure(defend):
                candidates.setdefault(self.canon(c), c)
        else:
            want = t.label_key()
            for mid in self.tau_closure(defend):
                for dt in self.templates(mid):
                    if dt.kind == t.kind and dt.label_key() == want:
                        for c in self.tau_closure(dt.build(fresh)):
                            candidates.setdefault(self.canon(c), c)
        frontier_cut = self.truncated and not before

        if not candidates:
            if frontier_cut:
                return _UNKNOWN, [], set()
            return _FAIL, [move], set()

        # cheap wins first: an identical-canon response closes immediately
        target = self.canon(p2)
        ordered = sorted(candidates.items(), key=lambda kv: kv[0] != target)
        deps: set = set()
        saw_unknown = False
        first_fail: Optional[list[Move]] = None
        for _, q2 in ordered:
            res, ev, d = self.play(p2, q2, depth - 1)
            if res == _OK:
                return _OK, [], d
            if res == _UNKNOWN:
                saw_unknown = True
            elif first_fail is None:
                first_fail = ev
        if saw_unknown or frontier_cut:
            return _UNKNOWN, [], deps
        return _FAIL, [move] + (first_fail or []), set()

    def barb_check(self, p, q) -> Optional[tuple[str, list[Move]]]:
        before = self.truncated
        bp = self.barb_set(p)
        bq = self.barb_set(q)
        if bp != bq:
            if self.truncated and not before:
                return _UNKNOWN, []
            diff = sorted((bp ^ bq), key=str)
            return _FAIL, [Move("left" if diff[0] in bp else "right",
                                Action("out", diff[0]))]
        return None

    def barb_set(self, p) -> frozenset[Name]:
        out = set()
        for s in self.tau_closure(p):
            for t in self.templates(s):
                if t.kind == "out":
                    out.add(t.subject)
        return frozenset(out)


def weak_bisim(p: Proc, q: Proc, env: ConstantEnv,
               cfg: Optional[BisimConfig] = None) -> Verdict:
    """Bounded weak ground bisimulation game between p and q."""
    return _BisimGame(env, cfg or BisimConfig(), p, q).run()


def barbed_bisim(p: Proc, q: Proc, env: ConstantEnv,
                 cfg: Optional[BisimConfig] = None) -> Verdict:
    """Bounded barbed bisimulation: internal moves only, with output-barb
    set equality checked at every visited pair."""
    return _BisimGame(env, cfg or BisimConfig(), p, q, barbed=True).run()


# ---------------------------------------------------------------------------
# Traces


def _canon_action(act: Action, naming: dict[Name, str]) -> str:
    """Render an action with bound names renamed t1, t2, ... in order of
    first appearance along the trace; free names keep their identity.
    Later actions at previously extruded or received names use the
    canonical name."""
    parts = []
    for o in act.objects:
        if act.kind == "in" or o in act.extruded:
            if o not in naming:
                naming[o] = f"t{len(naming) + 1}"
            parts.append(f"^{naming[o]}")
        else:
            parts.append(naming.get(o, o.text))
    inner = ",".join(parts)
    subj = naming.get(act.subject, act.subject.text)
    return f"{subj}({inner})" if act.kind == "in" else f"{subj}!({inner})"


@dataclass
class TraceReport:
    traces: set[tuple[str, ...]]
    truncated: bool
    states_visited: int = 0


def traces(p: Proc, env: ConstantEnv, dialect: Dialect = Dialect.INTERNAL,
           max_len: int = 6, tau_fuel: int = 64,
           cfg: Optional[BisimConfig] = None) -> TraceReport:
    """All weak visible traces of length <= max_len, canonically renamed."""
    cfg = cfg or BisimConfig(dialect=dialect, tau_fuel=tau_fuel)
    ses = _Session(env, cfg, set(fn(p)))
    found: set[tuple[str, ...]] = {()}
    start = [(s, (), {}) for s in ses.tau_closure(p)]
    level: list[tuple[Proc, tuple, dict]] = start
    visited = 0
    for _ in range(max_len):
        nxt: list[tuple[Proc, tuple, dict]] = []
        seen_here = set()
        for s, tr, naming in level:
            visited += 1
            for t in ses.templates(s):
                if t.kind == "tau":
                    continue
                fresh = ses.supply.fresh_tuple(t.bound_sorts())
                act = t.action(fresh)
                naming2 = dict(naming)
                tr2 = tr + (_canon_action(act, naming2),)
                found.add(tr2)
                for d in ses.tau_closure(t.build(fresh)):
                    key = (tr2, ses.canon(d))
                    if key not in seen_here:
                        seen_here.add(key)
                        nxt.append((d, tr2, naming2))
        level = nxt
    return TraceReport(found, ses.truncated, visited)


def trace_incl(p: Proc, q: Proc, env: ConstantEnv,
               dialect: Dialect = Dialect.INTERNAL, max_len: int = 6,
               tau_fuel: int = 64) -> Verdict:
    """Trace inclusion p below q at the given bounds."""
    tp = traces(p, env, dialect, max_len, tau_fuel)
    tq = traces(q, env, dialect, max_len, tau_fuel)
    missing = sorted(tp.traces - tq.traces)
    truncated = tp.truncated or tq.truncated
    visited = tp.states_visited + tq.states_visited
    if missing:
        if tq.truncated:
            return Verdict(Status.UNKNOWN, depth=max_len, tau_fuel=tau_fuel,
                           reason="fuel", truncated=True, states_visited=visited)
        return Verdict(Status.INEQUIVALENT, depth=max_len, tau_fuel=tau_fuel,
                       evidence=[" . ".join(missing[0]) or "(empty)"],
                       truncated=truncated, states_visited=visited)
    return Verdict(Status.EQUIVALENT_UP_TO, depth=max_len, tau_fuel=tau_fuel,
                   truncated=truncated, states_visited=visited)


def trace_eq(p: Proc, q: Proc, env: ConstantEnv,
             dialect: Dialect = Dialect.INTERNAL, max_len: int = 6,
             tau_fuel: int = 64) -> Verdict:
    """Trace equivalence: both inclusions at the given bounds."""
    left = trace_incl(p, q, env, dialect, max_len, tau_fuel)
    if left.inequivalent:
        left.evidence = [f"left-only trace: {left.evidence[0]}"]
        return left
    right = trace_incl(q, p, env, dialect, max_len, tau_fuel)
    if right.inequivalent:
        right.evidence = [f"right-only trace: {right.evidence[0]}"]
        return right
    if left.unknown or right.unknown:
        return left if left.unknown else right
    left.states_visited += right.states_visited
    left.truncated = left.truncated or right.truncated
    return left
