"""Polyadic pi-calculus processes with sorts and recursive constants.

Names carry a sort; a sorting table maps each sort to the payload signature
of the tuples carried over names of that sort.  Two sorts are built in and
cover all the lambda encodings: value names ("v") carry a value-continuation
pair, continuation names ("c") carry a single value name.  User-defined
sorts with arbitrary signatures are allowed.

Equation variables (EqVar) may appear in application position inside
equation bodies; they are not executable and the transition system rejects
them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

VAL = "v"
CONT = "c"

SortTable = dict[str, tuple[str, ...]]

BUILTIN_SORTS: SortTable = {VAL: (VAL, CONT), CONT: (VAL,)}


class SortError(ValueError):
    pass


class _HashCached:
    """Structural hash, computed once per node.  Process trees are hashed
    constantly (memo tables, canonical-form caches); recomputing the
    recursive hash dominates profiles otherwise."""

    __hash_fields__: tuple[str, ...] = ()

    def __hash__(self):
        h = self.__dict__.get("_h")
        if h is None:
            h = hash((self.__class__.__name__,)
                     + tuple(getattr(self, f) for f in self.__hash_fields__))
            object.__setattr__(self, "_h", h)
        return h


@dataclass(frozen=True, order=True)
class Name:
    text: str
    sort: str = VAL

    def __str__(self):
        return self.text


# ---------------------------------------------------------------------------
# Process syntax


@dataclass(frozen=True, eq=False)
class Nil(_HashCached):
    def __eq__(self, other):
        return isinstance(other, Nil)


@dataclass(frozen=True, eq=False)
class Input(_HashCached):
    subject: Name
    params: tuple[Name, ...]
    body: "Proc"
    __hash_fields__ = ("subject", "params", "body")

    def __eq__(self, other):
        return self is other or (
            isinstance(other, Input) and hash(self) == hash(other)
            and self.subject == other.subject and self.params == other.params
            and self.body == other.body)


@dataclass(frozen=True, eq=False)
class Output(_HashCached):
    subject: Name
    objects: tuple[Name, ...]
    body: "Proc"
    __hash_fields__ = ("subject", "objects", "body")

    def __eq__(self, other):
        return self is other or (
            isinstance(other, Output) and hash(self) == hash(other)
            and self.subject == other.subject and self.objects == other.objects
            and self.body == other.body)


@dataclass(frozen=True, eq=False)
class BoundOutput(_HashCached):
    """Emission of fresh names: primitive in Internal pi, sugar elsewhere
    (full pi: new b in a!(b).P; ALpi: new b in (a!(b) | P))."""
    subject: Name
    objects: tuple[Name, ...]  # binders for body
    body: "Proc"
    __hash_fields__ = ("subject", "objects", "body")

    def __eq__(self, other):
        return self is other or (
            isinstance(other, BoundOutput) and hash(self) == hash(other)
            and self.subject == other.subject and self.objects == other.objects
            and self.body == other.body)


@dataclass(frozen=True, eq=False)
class Restriction(_HashCached):
    name: Name
    body: "Proc"
    __hash_fields__ = ("name", "body")

    def __eq__(self, other):
        return self is other or (
            isinstance(other, Restriction) and hash(self) == hash(other)
            and self.name == other.name and self.body == other.body)


@dataclass(frozen=True, eq=False)
class Parallel(_HashCached):
    left: "Proc"
    right: "Proc"
    __hash_fields__ = ("left", "right")

    def __eq__(self, other):
        return self is other or (
            isinstance(other, Parallel) and hash(self) == hash(other)
            and self.left == other.left and self.right == other.right)


@dataclass(frozen=True, eq=False)
class ReplicatedInput(_HashCached):
    subject: Name
    params: tuple[Name, ...]
    body: "Proc"
    __hash_fields__ = ("subject", "params", "body")

    def __eq__(self, other):
        return self is other or (
            isinstance(other, ReplicatedInput) and hash(self) == hash(other)
            and self.subject == other.subject and self.params == other.params
            and self.body == other.body)


@dataclass(frozen=True, eq=False)
class PiAbstraction(_HashCached):
    params: tuple[Name, ...]
    body: "Proc"
    __hash_fields__ = ("params", "body")

    def __eq__(self, other):
        return self is other or (
            isinstance(other, PiAbstraction) and hash(self) == hash(other)
            and self.params == other.params and self.body == other.body)


@dataclass(frozen=True)
class EqVar:
    """Equation variable reference, e.g. X_{3}."""
    index: str


@dataclass(frozen=True, eq=False)
class Apply(_HashCached):
    """Application of a constant (by name), an equation variable, or an
    inline abstraction to a tuple of names."""
    target: Union[str, EqVar, PiAbstraction]
    args: tuple[Name, ...]
    __hash_fields__ = ("target", "args")

    def __eq__(self, other):
        return self is other or (
            isinstance(other, Apply) and hash(self) == hash(other)
            and self.target == other.target and self.args == other.args)


Proc = Union[Nil, Input, Output, BoundOutput, Restriction, Parallel,
             ReplicatedInput, Apply]

# defining __eq__ in a class body implicitly clears __hash__
for _cls in (Nil, Input, Output, BoundOutput, Restriction, Parallel,
             ReplicatedInput, PiAbstraction, Apply):
    _cls.__hash__ = _HashCached.__hash__

ConstantEnv = dict[str, PiAbstraction]


def restrict_all(names: tuple[Name, ...], body: Proc) -> Proc:
    for n in reversed(names):
        body = Restriction(n, body)
    return body


def parallel_all(ps: list[Proc]) -> Proc:
    if not ps:
        return Nil()
    out = ps[0]
    for p in ps[1:]:
        out = Parallel(out, p)
    return out


# ---------------------------------------------------------------------------
# Free names and renaming


def fn(p: Proc) -> frozenset[Name]:
    got = p.__dict__.get("_fn")
    if got is not None:
        return got
    match p:
        case Nil():
            out = frozenset()
        case Input(a, xs, b) | ReplicatedInput(a, xs, b):
            out = (fn(b) - frozenset(xs)) | {a}
        case Output(a, bs, b):
            out = fn(b) | {a} | frozenset(bs)
        case BoundOutput(a, bs, b):
            out = (fn(b) - frozenset(bs)) | {a}
        case Restriction(n, b):
            out = fn(b) - {n}
        case Parallel(l, r):
            out = fn(l) | fn(r)
        case Apply(t, args):
            out = frozenset(args)
            if isinstance(t, PiAbstraction):
                out |= fn(t.body) - frozenset(t.params)
        case _:
            raise TypeError(f"not a pi process: {p!r}")
    object.__setattr__(p, "_fn", out)
    return out


def _freshen(base: Name, avoid: set[Name]) -> Name:
    if base not in avoid:
        return base
    stem = base.text.rstrip("0123456789")
    i = 1
    while Name(f"{stem}{i}", base.sort) in avoid:
        i += 1
    return Name(f"{stem}{i}", base.sort)


def _rename_binders(binders: tuple[Name, ...], body: Proc,
                    sub: dict[Name, Name]) -> tuple[tuple[Name, ...], Proc, dict[Name, Name]]:
    """Prepare a binder tuple for substitution: drop shadowed entries and
    alpha-rename binders that would capture substituted names."""
    sub = {k: v for k, v in sub.items() if k not in binders}
    if not sub:
        return binders, body, sub
    clash = set(sub.values()) & set(binders)
    if clash:
        avoid = set(sub.values()) | set(sub.keys()) | fn(body) | set(binders)
        ren: dict[Name, Name] = {}
        new_binders = []
        for b in binders:
            if b in clash:
                nb = _freshen(b, avoid)
                avoid.add(nb)
                ren[b] = nb
                new_binders.append(nb)
            else:
                new_binders.append(b)
        body = rename(body, ren)
        binders = tuple(new_binders)
    return binders, body, sub


def rename(p: Proc, sub: dict[Name, Name]) -> Proc:
    """Capture-avoiding simultaneous renaming of free names."""
    if not sub:
        return p
    for k, v in sub.items():
        if k.sort != v.sort:
            raise SortError(f"renaming changes sort: {k} -> {v}")
    return _rename(p, sub)


def _rename(p: Proc, sub: dict[Name, Name]) -> Proc:
    if not sub:
        return p
    free = fn(p)
    if not any(k in free for k in sub):
        # untouched subtree; also no capture possible when no substituted
        # name occurs free below
        return p

    def get(n: Name) -> Name:
        return sub.get(n, n)

    match p:
        case Nil():
            return p
        case Input(a, xs, b):
            xs2, b2, sub2 = _rename_binders(xs, b, sub)
            return Input(get(a), xs2, rename(b2, sub2))
        case ReplicatedInput(a, xs, b):
            xs2, b2, sub2 = _rename_binders(xs, b, sub)
            return ReplicatedInput(get(a), xs2, rename(b2, sub2))
        case Output(a, bs, b):
            return Output(get(a), tuple(get(x) for x in bs), rename(b, sub))
        case BoundOutput(a, bs, b):
            bs2, b2, sub2 = _rename_binders(bs, b, sub)
            return BoundOutput(get(a), bs2, rename(b2, sub2))
        case Restriction(n, b):
            ns, b2, sub2 = _rename_binders((n,), b, sub)
            return Restriction(ns[0], rename(b2, sub2))
        case Parallel(l, r):
            return Parallel(rename(l, sub), rename(r, sub))
        case Apply(t, args):
            if isinstance(t, PiAbstraction):
                ps, b2, sub2 = _rename_binders(t.params, t.body, sub)
                t = PiAbstraction(ps, rename(b2, sub2))
            return Apply(t, tuple(get(x) for x in args))
    raise TypeError(f"not a pi process: {p!r}")


def instantiate(abs_: PiAbstraction, args: tuple[Name, ...]) -> Proc:
    if len(abs_.params) != len(args):
        raise SortError(
            f"arity mismatch: abstraction of {len(abs_.params)} applied to {len(args)}")
    for prm, arg in zip(abs_.params, args):
        if prm.sort != arg.sort:
            raise SortError(f"sort mismatch in application: {prm}:{prm.sort} vs {arg}:{arg.sort}")
    return rename(abs_.body, dict(zip(abs_.params, args)))


def check_sorted(p: Proc, sorts: SortTable, env: Optional[ConstantEnv] = None):
    """Raise SortError unless every prefix agrees with the sorting table."""
    def sig(n: Name) -> tuple[str, ...]:
        if n.sort not in sorts:
            raise SortError(f"undeclared sort {n.sort!r} of name {n}")
        return sorts[n.sort]

    def obj_check(a: Name, objs: tuple[Name, ...]):
        s = sig(a)
        if len(s) != len(objs):
            raise SortError(
                f"name {a}:{a.sort} carries {len(s)} names, got {len(objs)}")
        for want, got in zip(s, objs):
            if got.sort != want:
                raise SortError(f"object {got}:{got.sort} where sort {want} expected (at {a})")

    match p:
        case Nil():
            return
        case Input(a, xs, b) | ReplicatedInput(a, xs, b):
            obj_check(a, xs)
            check_sorted(b, sorts, env)
        case Output(a, bs, b) | BoundOutput(a, bs, b):
            obj_check(a, bs)
            check_sorted(b, sorts, env)
        case Restriction(_, b):
            check_sorted(b, sorts, env)
        case Parallel(l, r):
            check_sorted(l, sorts, env)
            check_sorted(r, sorts, env)
        case Apply(t, args):
            if isinstance(t, PiAbstraction):
                if len(t.params) != len(args):
                    raise SortError("arity mismatch in application")
                for prm, arg in zip(t.params, args):
                    if prm.sort != arg.sort:
                        raise SortError(f"application sort mismatch: {prm} vs {arg}")
                check_sorted(t.body, sorts, env)
            elif isinstance(t, str) and env is not None:
                if t not in env:
                    raise SortError(f"undefined constant {t}")
                prms = env[t].params
                if len(prms) != len(args):
                    raise SortError(f"constant {t}: arity mismatch")
                for prm, arg in zip(prms, args):
                    if prm.sort != arg.sort:
                        raise SortError(f"constant {t}: sort mismatch {prm} vs {arg}")
            return
    return


# ---------------------------------------------------------------------------
# Printing
#
#   P ::= '0' | a '(' names ')' '.' P | a '!(' names ')' ['.' P]
#       | a '!(^' names ')' ['.' P] | 'new' names 'in' P | P '|' P
#       | '!' a '(' names ')' '.' P | K '<' names '>' | X_{i} '<' names '>'


def _names(ns) -> str:
    return ",".join(n.text for n in ns)


def pretty(p: Proc) -> str:
    def par(q: Proc) -> str:
        s = pretty(q)
        return f"({s})" if isinstance(q, Parallel) else s

    match p:
        case Nil():
            return "0"
        case Input(a, xs, b):
            return f"{a}({_names(xs)}). {par(b)}" if not isinstance(b, Nil) \
                else f"{a}({_names(xs)}). 0"
        case ReplicatedInput(a, xs, b):
            return f"!{a}({_names(xs)}). {par(b)}" if not isinstance(b, Nil) \
                else f"!{a}({_names(xs)}). 0"
        case Output(a, bs, b):
            head = f"{a}!({_names(bs)})"
            return head if isinstance(b, Nil) else f"{head}. {par(b)}"
        case BoundOutput(a, bs, b):
            head = f"{a}!(^{_names(bs)})"
            return head if isinstance(b, Nil) else f"{head}. {par(b)}"
        case Restriction(_, _):
            ns = []
            while isinstance(p, Restriction):
                ns.append(p.name)
                p = p.body
            return f"new {_names(ns)} in {par(p)}"
        case Parallel(l, r):
            return f"{pretty(l)} | {pretty(r)}"
        case Apply(t, args):
            if isinstance(t, EqVar):
                return f"X_{{{t.index}}}<{_names(args)}>"
            if isinstance(t, PiAbstraction):
                return f"(({_names(t.params)}) {pretty(t.body)})<{_names(args)}>"
            return f"{t}<{_names(args)}>"
    raise TypeError(f"not a pi process: {p!r}")


def pretty_abstraction(a: PiAbstraction) -> str:
    return f"({_names(a.params)}) {pretty(a.body)}"


# ---------------------------------------------------------------------------
# Parsing with sort inference
#
# The parser first builds a sortless tree, then assigns one sort per name
# text by constraint propagation against the sort table: a subject carrying
# k objects must have a sort of payload arity k, and resolved subjects force
# the sorts of their objects.  Unconstrained names default to the value
# sort.  Ambiguities (two candidate sorts with the same arity) are errors.


class PiParseError(ValueError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} (at position {pos})")
        self.pos = pos


_KEYWORDS = {"new", "in", "def", "sort"}


class _Tok:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, msg):
        raise PiParseError(msg, self.pos)

    def skip(self):
        while self.pos < len(self.text):
            c = self.text[self.pos]
            if c.isspace():
                self.pos += 1
            elif c == "#":  # comment to end of line
                while self.pos < len(self.text) and self.text[self.pos] != "\n":
                    self.pos += 1
            else:
                break

    def peek(self, k: int = 1) -> str:
        self.skip()
        return self.text[self.pos:self.pos + k]

    def eat(self, s: str):
        self.skip()
        if not self.text.startswith(s, self.pos):
            self.error(f"expected {s!r}")
        self.pos += len(s)

    def try_eat(self, s: str) -> bool:
        self.skip()
        if self.text.startswith(s, self.pos):
            self.pos += len(s)
            return True
        return False

    def at_ident(self) -> bool:
        c = self.peek()
        return bool(c) and c.isascii() and (c.isalpha() or c == "_")

    def ident(self) -> str:
        self.skip()
        if not self.at_ident():
            self.error("expected identifier")
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isascii() \
                and (self.text[self.pos].isalnum() or self.text[self.pos] == "_"):
            self.pos += 1
        while self.pos < len(self.text) and self.text[self.pos] == "'":
            self.pos += 1
        return self.text[start:self.pos]


# Raw tree: names are bare strings until sorts are solved.

@dataclass
class _Raw:
    kind: str
    subject: Optional[str] = None
    names: tuple[str, ...] = ()
    body: Optional["_Raw"] = None
    left: Optional["_Raw"] = None
    right: Optional["_Raw"] = None
    target: Optional[object] = None  # str constant, EqVar


def _parse_raw(tok: _Tok) -> _Raw:
    left = _parse_seq(tok)
    while tok.peek() == "|":
        tok.eat("|")
        right = _parse_seq(tok)
        left = _Raw("par", left=left, right=right)
    return left


def _name_list(tok: _Tok) -> tuple[str, ...]:
    out = [tok.ident()]
    while tok.try_eat(","):
        out.append(tok.ident())
    return tuple(out)


def _parse_seq(tok: _Tok) -> _Raw:
    tok.skip()
    if tok.try_eat("0"):
        return _Raw("nil")
    if tok.peek() == "(":
        tok.eat("(")
        inner = _parse_raw(tok)
        tok.eat(")")
        return inner
    if tok.peek() == "!":
        tok.eat("!")
        a = tok.ident()
        tok.eat("(")
        xs = _name_list(tok)
        tok.eat(")")
        tok.eat(".")
        return _Raw("repl", subject=a, names=xs, body=_parse_seq(tok))
    if tok.peek(3) == "X_{":  # equation-variable application X_{i}<...>
        tok.eat("X_{")
        tok.skip()
        start = tok.pos
        while tok.pos < len(tok.text) and tok.text[tok.pos] != "}":
            tok.pos += 1
        idx = tok.text[start:tok.pos].strip()
        tok.eat("}")
        tok.eat("<")
        args = _name_list(tok) if tok.peek() != ">" else ()
        tok.eat(">")
        return _Raw("call", target=EqVar(idx), names=args)
    if not tok.at_ident():
        tok.error("expected process")
    ident = tok.ident()
    if ident == "new":
        ns = _name_list(tok)
        tok.eat("in")
        return _Raw("res", names=ns, body=_parse_seq(tok))
    if ident in _KEYWORDS:
        tok.error(f"unexpected keyword {ident!r}")
    tok.skip()
    if tok.peek() == "<":  # constant application
        tok.eat("<")
        args = _name_list(tok) if tok.peek() != ">" else ()
        tok.eat(">")
        return _Raw("call", target=ident, names=args)
    if tok.peek(2) == "!(":
        tok.eat("!(")
        bound = tok.try_eat("^")
        ns = _name_list(tok)
        tok.eat(")")
        body = _Raw("nil")
        if tok.try_eat("."):
            body = _parse_seq(tok)
        return _Raw("bout" if bound else "out", subject=ident, names=ns, body=body)
    if tok.peek() == "(":
        tok.eat("(")
        xs = _name_list(tok)
        tok.eat(")")
        tok.eat(".")
        return _Raw("inp", subject=ident, names=xs, body=_parse_seq(tok))
    tok.error(f"cannot parse process starting with {ident!r}")


class _SortSolver:
    def __init__(self, sorts: SortTable):
        self.sorts = sorts
        self.cand: dict[str, set[str]] = {}
        self.fixed: dict[str, str] = {}

    def var(self, text: str) -> set[str]:
        if text not in self.cand:
            self.cand[text] = set(self.sorts)
        return self.cand[text]

    def restrict(self, text: str, allowed: set[str]):
        c = self.var(text)
        c &= allowed
        self.cand[text] = c
        if not c:
            raise SortError(f"no consistent sort for name {text!r}")

    def constrain_prefix(self, subject: str, objects: tuple[str, ...]):
        arity_ok = {s for s, sig in self.sorts.items() if len(sig) == len(objects)}
        if not arity_ok:
            raise SortError(
                f"no declared sort carries {len(objects)} names (subject {subject!r})")
        self.restrict(subject, arity_ok)
        self.pending.append((subject, objects))

    def solve(self, constraints) -> dict[str, str]:
        self.pending = []
        for kind, a, ns in constraints:
            if kind == "prefix":
                self.constrain_prefix(a, ns)
            else:  # fixed sorts, e.g. constant application args
                for text, sort in zip(ns, a):
                    self.restrict(text, {sort})
        changed = True
        while changed:
            changed = False
            for subject, objects in self.pending:
                c = self.var(subject)
                if len(c) == 1:
                    sig = self.sorts[next(iter(c))]
                    for text, sort in zip(objects, sig):
                        before = set(self.var(text))
                        self.restrict(text, {sort})
                        if self.var(text) != before:
                            changed = True
                # objects may also pin down the subject
                feasible = set()
                for s in c:
                    sig = self.sorts[s]
                    if all(sort in self.var(text) for text, sort in zip(objects, sig)):
                        feasible.add(s)
                if feasible != c:
                    self.cand[subject] = feasible
                    if not feasible:
                        raise SortError(f"no consistent sort for {subject!r}")
                    changed = True
        out = {}
        for text, c in self.cand.items():
            if len(c) == 1:
                out[text] = next(iter(c))
            elif len(c) == len(self.sorts):
                out[text] = VAL  # unconstrained: default to the value sort
            elif VAL in c:
                out[text] = VAL
            else:
                raise SortError(
                    f"ambiguous sort for name {text!r}: candidates {sorted(c)}")
        return out


def _collect_constraints(raw: _Raw, env: ConstantEnv, acc: list,
                         pending: frozenset[str] = frozenset()):
    match raw.kind:
        case "nil":
            return
        case "inp" | "repl" | "out" | "bout":
            acc.append(("prefix", raw.subject, raw.names))
            _collect_constraints(raw.body, env, acc, pending)
        case "res":
            _collect_constraints(raw.body, env, acc, pending)
        case "par":
            _collect_constraints(raw.left, env, acc, pending)
            _collect_constraints(raw.right, env, acc, pending)
        case "call":
            if isinstance(raw.target, str):
                if raw.target in pending:
                    return  # self-recursive definition: sorts settle elsewhere
                if raw.target not in env:
                    raise SortError(f"undefined constant {raw.target!r}")
                sig = tuple(p.sort for p in env[raw.target].params)
                if len(sig) != len(raw.names):
                    raise SortError(f"constant {raw.target}: arity mismatch")
                acc.append(("fixed", sig, raw.names))
            return
        case other:
            raise AssertionError(other)


def _realize(raw: _Raw, sort_of: dict[str, str]) -> Proc:
    def nm(t: str) -> Name:
        return Name(t, sort_of.get(t, VAL))

    match raw.kind:
        case "nil":
            return Nil()
        case "inp":
            return Input(nm(raw.subject), tuple(nm(x) for x in raw.names),
                         _realize(raw.body, sort_of))
        case "repl":
            return ReplicatedInput(nm(raw.subject), tuple(nm(x) for x in raw.names),
                                   _realize(raw.body, sort_of))
        case "out":
            return Output(nm(raw.subject), tuple(nm(x) for x in raw.names),
                          _realize(raw.body, sort_of))
        case "bout":
            return BoundOutput(nm(raw.subject), tuple(nm(x) for x in raw.names),
                               _realize(raw.body, sort_of))
        case "res":
            return restrict_all(tuple(nm(x) for x in raw.names),
                                _realize(raw.body, sort_of))
        case "par":
            return Parallel(_realize(raw.left, sort_of), _realize(raw.right, sort_of))
        case "call":
            return Apply(raw.target, tuple(nm(x) for x in raw.names))
    raise AssertionError(raw.kind)


def parse_pi(text: str, env: Optional[ConstantEnv] = None,
             sorts: Optional[SortTable] = None) -> Proc:
    """Parse a single process.  Sorts are inferred; the result is well
    sorted with respect to `sorts` (default: the built-in table)."""
    env = env or {}
    sorts = sorts or dict(BUILTIN_SORTS)
    tok = _Tok(text)
    raw = _parse_raw(tok)
    tok.skip()
    if tok.pos != len(text):
        tok.error("trailing input")
    acc: list = []
    _collect_constraints(raw, env, acc)
    sort_of = _SortSolver(sorts).solve(acc)
    proc = _realize(raw, sort_of)
    check_sorted(proc, sorts, env)
    return proc


def parse_program(text: str) -> tuple[ConstantEnv, SortTable, Optional[Proc]]:
    """Parse sort declarations, constant definitions and an optional final
    process:

        sort s : (v, c)
        def K(a, b) = P
        <process>
    """
    sorts = dict(BUILTIN_SORTS)
    env: ConstantEnv = {}
    tok = _Tok(text)
    while True:
        tok.skip()
        if tok.pos >= len(text):
            return env, sorts, None
        save = tok.pos
        if tok.at_ident():
            word = tok.ident()
            if word == "sort":
                sid = tok.ident()
                tok.eat(":")
                tok.eat("(")
                sig = []
                if tok.peek() != ")":
                    sig.append(tok.ident())
                    while tok.try_eat(","):
                        sig.append(tok.ident())
                tok.eat(")")
                sorts[sid] = tuple(sig)
                continue
            if word == "def":
                kname = tok.ident()
                tok.eat("(")
                params = _name_list(tok) if tok.peek() != ")" else ()
                tok.eat(")")
                tok.eat("=")
                raw = _parse_seq(tok)
                while tok.peek() == "|":
                    tok.eat("|")
                    raw = _Raw("par", left=raw, right=_parse_seq(tok))
                acc: list = []
                _collect_constraints(raw, env, acc, pending=frozenset({kname}))
                sort_of = _SortSolver(sorts).solve(acc)
                body = _realize(raw, sort_of)
                prms = tuple(Name(p, sort_of.get(p, VAL)) for p in params)
                if fn(body) - set(prms):
                    extra = ", ".join(str(n) for n in sorted(fn(body) - set(prms)))
                    raise SortError(f"constant {kname} is not name-closed: free {extra}")
                env[kname] = PiAbstraction(prms, body)
                check_sorted(body, sorts, env)
                continue
        tok.pos = save
        remainder = text[tok.pos:]
        proc = parse_pi(remainder, env, sorts)
        return env, sorts, proc
