"""Ground early labelled transition systems for full pi, Internal pi and
ALpi (with dynamic links).

Input transitions instantiate parameters with fresh names only; the game
layer chooses the names through transition templates, while the plain
`transitions` entry point draws them from a deterministic supply.  In the
ALpi dialect an output of free names is observed as a bound output of
fresh names with a replicated link installed per object (the Local-pi
treatment); restricted objects are extruded as usual.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from .dialects import Dialect
from .norm import NormConfig, Soup, all_names, canon_soup, soup_of, _fresh_like
from .syntax import (
    Apply, BoundOutput, ConstantEnv, EqVar, Input, Name, Nil, Output,
    Parallel, PiAbstraction, Proc, ReplicatedInput, Restriction, SortError,
    SortTable, BUILTIN_SORTS, instantiate, parallel_all, rename,
    restrict_all,
)


class TransitionLimitError(RuntimeError):
    """Image-finiteness assertion tripped: one state produced more
    transitions than the configured bound."""


class UnguardedConstantError(RuntimeError):
    pass


@dataclass(frozen=True)
class Action:
    kind: str  # "tau" | "in" | "out"
    subject: Optional[Name] = None
    objects: tuple[Name, ...] = ()
    extruded: frozenset[Name] = frozenset()

    def label_key(self):
        """Matching key: bound (fresh/extruded) object positions are
        numbered by first occurrence, free objects keep their identity."""
        if self.kind == "tau":
            return ("tau",)
        slots: dict[Name, int] = {}
        entries = []
        for o in self.objects:
            if self.kind == "in" or o in self.extruded:
                if o not in slots:
                    slots[o] = len(slots)
                entries.append(("bound", slots[o], o.sort))
            else:
                entries.append(("free", o.text, o.sort))
        return (self.kind, self.subject.text, self.subject.sort, tuple(entries))

    def __str__(self):
        if self.kind == "tau":
            return "tau"
        parts = []
        for o in self.objects:
            if self.kind == "in" or o in self.extruded:
                parts.append(f"^{o.text}")
            else:
                parts.append(o.text)
        body = ",".join(parts)
        return f"{self.subject}({body})" if self.kind == "in" \
            else f"{self.subject}!({body})"


TAU = Action("tau")


class FreshSupply:
    """Deterministic per-sort fresh names, disjoint from an avoid set."""

    _PREFIX = {"v": "u", "c": "k"}

    def __init__(self, avoid: Iterable[Name] = (), base: int = 0):
        self.avoid = set(avoid)
        self.counter = base

    def fresh(self, sort: str) -> Name:
        prefix = self._PREFIX.get(sort, (sort[:1] or "n"))
        while True:
            self.counter += 1
            n = Name(f"{prefix}{self.counter}", sort)
            if n not in self.avoid:
                self.avoid.add(n)
                return n

    def fresh_tuple(self, sorts: Iterable[str]) -> tuple[Name, ...]:
        return tuple(self.fresh(s) for s in sorts)


@dataclass
class Template:
    """A transition with the fresh-name choice left to the caller.

    kind "in":  slots = parameter sorts; build(names) -> derivative.
    kind "out": slots = ("free", name) / ("bound", sort) per object
                position; build(fresh names, one per bound slot).
    kind "tau": build(()) -> derivative; subject is the channel, and
                tau_restricted records whether it was restricted (such a
                step preempts no visible capability).
    """
    kind: str
    subject: Optional[Name]
    slots: tuple
    build: Callable[[tuple[Name, ...]], Proc]
    tau_restricted: bool = False

    def label_key(self):
        if self.kind == "tau":
            return ("tau",)
        entries = []
        nbound = 0
        for s in self.slots:
            if self.kind == "in":
                entries.append(("bound", nbound, s))
                nbound += 1
            elif s[0] == "bound":
                entries.append(("bound", nbound, s[1]))
                nbound += 1
            else:
                entries.append(("free", s[1].text, s[1].sort))
        return (self.kind, self.subject.text, self.subject.sort, tuple(entries))

    def bound_sorts(self) -> tuple[str, ...]:
        if self.kind == "in":
            return tuple(self.slots)
        if self.kind == "out":
            return tuple(s[1] for s in self.slots if s[0] == "bound")
        return ()

    def action(self, fresh: tuple[Name, ...]) -> Action:
        if self.kind == "tau":
            return TAU
        if self.kind == "in":
            return Action("in", self.subject, fresh)
        objs = []
        i = 0
        for s in self.slots:
            if s[0] == "bound":
                objs.append(fresh[i])
                i += 1
            else:
                objs.append(s[1])
        return Action("out", self.subject, tuple(objs), frozenset(fresh))


LINK_V = "lnk_v"
LINK_C = "lnk_c"


def link_constants(sorts: SortTable = BUILTIN_SORTS) -> ConstantEnv:
    """The links the ALpi transition system installs when a free name is
    emitted: a(ys).b!(ys), replicated at value sorts, linear at
    continuation sorts.  Continuation names are used once by the
    encodings; an omega-receptive continuation link would let an observer
    pump the continuation and tell a forwarded continuation from a direct
    one, breaking the laws the link semantics exists to validate."""
    out: ConstantEnv = {}
    for sort, kname, repl in (("v", LINK_V, True), ("c", LINK_C, False)):
        sig = sorts[sort]
        src = Name("a", sort)
        dst = Name("b", sort)
        ys = tuple(Name(f"y{i}", s) for i, s in enumerate(sig))
        body = Output(dst, ys, Nil())
        out[kname] = PiAbstraction(
            (src, dst),
            ReplicatedInput(src, ys, body) if repl else Input(src, ys, body))
    return out


def _link_for(fresh: Name, target: Name) -> Proc:
    return Apply(LINK_V if target.sort == "v" else LINK_C, (fresh, target))


def _expand(soup: Soup, env: ConstantEnv, cfg: NormConfig) -> Soup:
    """Unfold constant applications at the soup top until only prefixes
    remain.  Guarded constants converge; unguarded recursion is an error."""
    rounds = 0
    while any(isinstance(c, Apply) for c in soup.components):
        rounds += 1
        if rounds > 64:
            raise UnguardedConstantError("constant unfolding does not converge")
        parts: list[Proc] = []
        for c in soup.components:
            if isinstance(c, Apply):
                if isinstance(c.target, EqVar):
                    raise SortError(
                        f"equation variable X_{{{c.target.index}}} is not executable")
                if isinstance(c.target, str):
                    if c.target not in env:
                        raise SortError(f"undefined constant {c.target}")
                    parts.append(instantiate(env[c.target], c.args))
                else:
                    parts.append(instantiate(c.target, c.args))
            else:
                parts.append(c)
        rebuilt = restrict_all(soup.restricted, parallel_all(parts))
        plain = NormConfig(dialect=cfg.dialect, gc=False, compress_links=False)
        soup = Soup(*_raw_soup(rebuilt, env, plain))
    return soup


def _raw_soup(p: Proc, env: ConstantEnv, cfg: NormConfig):
    s = soup_of(p, env, cfg)
    return s.restricted, s.components


def templates(p: Proc, env: ConstantEnv, cfg: NormConfig,
              limit: int = 10_000) -> list[Template]:
    ex = _expand(soup_of(p, env, cfg), env, cfg)
    rset = frozenset(ex.restricted)
    comps = ex.components
    every_name = all_names(ex.to_proc())

    def declash(injected: tuple[Name, ...]):
        """Alpha-rename restricted names clashing with caller-supplied
        fresh names, before any substitution touches the soup."""
        clash = set(injected) & rset
        if not clash:
            return list(ex.restricted), list(comps)
        avoid = set(every_name) | set(injected)
        sub = {}
        for n in clash:
            n2 = _fresh_like(n, avoid)
            avoid.add(n2)
            sub[n] = n2
        return ([sub.get(n, n) for n in ex.restricted],
                [rename(c, sub) for c in comps])

    def rebuild(res: list[Name], parts: list[Proc],
                extra_res: tuple[Name, ...] = ()) -> Proc:
        return restrict_all(tuple(res) + tuple(extra_res), parallel_all(parts))

    ins: list[tuple[int, Name, tuple[Name, ...], bool]] = []
    outs: list[tuple[int, Name, tuple[Name, ...], bool]] = []
    for i, c in enumerate(comps):
        match c:
            case Input(a, xs, _):
                ins.append((i, a, xs, False))
            case ReplicatedInput(a, xs, _):
                ins.append((i, a, xs, True))
            case Output(a, bs, _):
                outs.append((i, a, bs, False))
            case BoundOutput(a, bs, _):
                outs.append((i, a, bs, True))
            case Nil():
                pass
            case other:
                raise AssertionError(f"unexpanded component: {other!r}")

    result: list[Template] = []

    # visible inputs (ground: objects are always fresh names)
    for i, a, xs, repl in ins:
        if a in rset:
            continue

        def build_in(fresh, i=i, repl=repl):
            res, parts = declash(fresh)
            c = parts[i]
            body = rename(c.body, dict(zip(c.params, fresh)))
            parts[i:i + 1] = ([c, body] if repl else [body])
            return rebuild(res, parts)

        result.append(Template("in", a, tuple(x.sort for x in xs), build_in))

    # visible outputs
    for i, a, bs, bound in outs:
        if a in rset:
            continue
        if bound:  # Internal pi primitive: all objects fresh
            def build_bout(fresh, i=i):
                res, parts = declash(fresh)
                c = parts[i]
                parts[i] = rename(c.body, dict(zip(c.objects, fresh)))
                return rebuild(res, parts)

            result.append(Template(
                "out", a, tuple(("bound", o.sort) for o in bs), build_bout))
        elif cfg.dialect is Dialect.ALPI:
            if len(set(bs)) != len(bs):
                raise SortError(f"repeated object in ALpi output at {a}")

            def build_alpi(fresh, i=i):
                res, parts = declash(fresh)
                c = parts[i]
                new_parts: list[Proc] = [c.body]
                sub: dict[Name, Name] = {}
                for o, f in zip(c.objects, fresh):
                    if o in res:
                        sub[o] = f  # extruded: alpha-rename to the slot name
                    else:
                        new_parts.append(_link_for(f, o))
                parts[i:i + 1] = new_parts
                res = [n for n in res if n not in sub]
                out = rebuild(res, parts)
                return rename(out, sub) if sub else out

            result.append(Template(
                "out", a, tuple(("bound", o.sort) for o in bs), build_alpi))
        else:  # full pi: free output, restricted objects extruded
            extruding = [o for o in bs if o in rset]
            if len(set(extruding)) != len(extruding):
                raise SortError(f"repeated extruded object at {a}")
            slots = tuple(("bound", o.sort) if o in rset else ("free", o)
                          for o in bs)

            def build_out(fresh, i=i):
                res, parts = declash(fresh)
                c = parts[i]
                sub: dict[Name, Name] = {}
                k = 0
                for o in c.objects:
                    if o in res:
                        sub[o] = fresh[k]
                        k += 1
                parts[i] = c.body
                res = [n for n in res if n not in sub]
                out = rebuild(res, parts)
                return rename(out, sub) if sub else out

            result.append(Template("out", a, slots, build_out))

    # internal communication
    for i, a, bs, bound in outs:
        for j, a2, xs, repl in ins:
            if i == j or a != a2:
                continue
            if len(bs) != len(xs):
                raise SortError(f"arity mismatch in communication at {a}")
            if bound:
                def build_tau_b(_, i=i, j=j):
                    co, ci = comps[i], comps[j]
                    supply = FreshSupply(every_name)
                    fresh = supply.fresh_tuple(o.sort for o in co.objects)
                    parts = list(comps)
                    parts[i] = rename(co.body, dict(zip(co.objects, fresh)))
                    recv = rename(ci.body, dict(zip(ci.params, fresh)))
                    parts[j:j + 1] = ([ci, recv] if repl else [recv])
                    return rebuild(list(ex.restricted), parts, extra_res=fresh)

                result.append(Template("tau", a, (), build_tau_b,
                                       tau_restricted=a in rset))
            else:
                def build_tau(_, i=i, j=j, repl=repl):
                    co, ci = comps[i], comps[j]
                    parts = list(comps)
                    parts[i] = co.body
                    recv = rename(ci.body, dict(zip(ci.params, co.objects)))
                    parts[j:j + 1] = ([ci, recv] if repl else [recv])
                    return rebuild(list(ex.restricted), parts)

                result.append(Template("tau", a, (), build_tau,
                                       tau_restricted=a in rset))

    if len(result) > limit:
        raise TransitionLimitError(f"{len(result)} transitions from one state")
    return result


def transitions(p: Proc, env: ConstantEnv, cfg: NormConfig,
                supply: Optional[FreshSupply] = None) -> list[tuple[Action, Proc]]:
    """Concrete ground transitions; fresh names drawn deterministically
    and disjoint from every name of p."""
    base_avoid = all_names(p)
    res = []
    for t in templates(p, env, cfg):
        sup = FreshSupply(set(base_avoid) | (set(supply.avoid) if supply else set()))
        fresh = sup.fresh_tuple(t.bound_sorts())
        res.append((t.action(fresh), t.build(fresh)))
    return res


def tau_closure(p: Proc, env: ConstantEnv, cfg: NormConfig, fuel: int,
                ) -> tuple[list[Proc], bool]:
    """All states reachable by internal moves, expanding at most `fuel`
    states.  Returns (states, truncated)."""
    start = soup_of(p, env, cfg).to_proc()
    seen = {canon_soup(soup_of(start, env, cfg)): start}
    frontier = [start]
    budget = fuel
    truncated = False
    while frontier:
        if budget <= 0:
            truncated = True
            break
        budget -= 1
        q = frontier.pop(0)
        for t in templates(q, env, cfg):
            if t.kind != "tau":
                continue
            d = t.build(())
            d = soup_of(d, env, cfg).to_proc()
            key = canon_soup(soup_of(d, env, cfg))
            if key not in seen:
                seen[key] = d
                frontier.append(d)
    return list(seen.values()), truncated


def weak_transitions(p: Proc, env: ConstantEnv, cfg: NormConfig,
                     tau_fuel: int = 64,
                     ) -> tuple[list[tuple[Optional[Action], Proc]], bool]:
    """Derivatives reachable as  =tau=>* [one visible action] =tau=>*.
    The empty (epsilon) results carry action None."""
    pre, trunc = tau_closure(p, env, cfg, tau_fuel)
    out: list[tuple[Optional[Action], Proc]] = [(None, q) for q in pre]
    truncated = trunc
    seen = set()
    for q in pre:
        for act, d in transitions(q, env, cfg):
            if act.kind == "tau":
                continue
            post, t2 = tau_closure(d, env, cfg, tau_fuel)
            truncated = truncated or t2
            for d2 in post:
                key = (act.label_key(), canon_soup(soup_of(d2, env, cfg)))
                if key not in seen:
                    seen.add(key)
                    out.append((act, d2))
    return out, truncated


def barbs(p: Proc, env: ConstantEnv, cfg: NormConfig,
          tau_fuel: int = 64) -> tuple[frozenset[Name], bool]:
    """Subjects of output actions reachable within tau_fuel internal
    moves."""
    states, truncated = tau_closure(p, env, cfg, tau_fuel)
    found: set[Name] = set()
    for q in states:
        for t in templates(q, env, cfg):
            if t.kind == "out":
                found.add(t.subject)
    return frozenset(found), truncated
