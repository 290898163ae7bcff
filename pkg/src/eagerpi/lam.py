"""Call-by-value lambda calculus: terms, eager reduction, eager normal forms.

Terms are immutable; all operations are pure.  Reduction is the eager
(beta-v) strategy: a redex (\\x.M)V fires only when V is a value (a
variable or an abstraction) and only in evaluation position.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Union

# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Abs:
    binder: str
    body: "Term"


@dataclass(frozen=True)
class App:
    fun: "Term"
    arg: "Term"


Term = Union[Var, Abs, App]


def is_value(t: Term) -> bool:
    return isinstance(t, (Var, Abs))


def fv(t: Term) -> frozenset[str]:
    match t:
        case Var(x):
            return frozenset((x,))
        case Abs(x, b):
            return fv(b) - {x}
        case App(f, a):
            return fv(f) | fv(a)
    raise TypeError(f"not a lambda term: {t!r}")


def subterms(t: Term) -> Iterator[Term]:
    yield t
    match t:
        case Abs(_, b):
            yield from subterms(b)
        case App(f, a):
            yield from subterms(f)
            yield from subterms(a)


def fresh_var(base: str, avoid: frozenset[str] | set[str]) -> str:
    """First of base, base1, base2, ... not in avoid."""
    if base not in avoid:
        return base
    i = 1
    while f"{base}{i}" in avoid:
        i += 1
    return f"{base}{i}"


def rename_binder(t: Abs, avoid: frozenset[str] | set[str]) -> Abs:
    x2 = fresh_var(t.binder, set(avoid) | fv(t.body))
    return Abs(x2, subst_value(t.body, t.binder, Var(x2)))


def subst_value(m: Term, x: str, v: Term) -> Term:
    """Capture-avoiding M{V/x}.  V must be a value (call-by-value discipline)."""
    if not is_value(v):
        raise ValueError(f"substitution of a non-value: {pretty(v)}")
    match m:
        case Var(y):
            return v if y == x else m
        case Abs(y, b):
            if y == x:
                return m
            if y in fv(v) and x in fv(b):
                m = rename_binder(m, fv(v) | {x})
                return Abs(m.binder, subst_value(m.body, x, v))
            return Abs(y, subst_value(b, x, v))
        case App(f, a):
            return App(subst_value(f, x, v), subst_value(a, x, v))
    raise TypeError(f"not a lambda term: {m!r}")


# ---------------------------------------------------------------------------
# Alpha-equivalence via canonical keys.  Bound variables become de-Bruijn
# indices; free variables keep their identity (canon) or are numbered by
# first occurrence (canon_pair, used for memo keys of checker pairs).


def _canon(t: Term, bound: dict[str, int], depth: int, free: Optional[dict[str, int]]):
    match t:
        case Var(x):
            if x in bound:
                return ("b", depth - 1 - bound[x])
            if free is None:
                return ("f", x)
            if x not in free:
                free[x] = len(free)
            return ("f", free[x])
        case Abs(x, b):
            saved = bound.get(x)
            bound[x] = depth
            key = ("abs", _canon(b, bound, depth + 1, free))
            if saved is None:
                del bound[x]
            else:
                bound[x] = saved
            return key
        case App(f, a):
            return ("app", _canon(f, bound, depth, free), _canon(a, bound, depth, free))
    raise TypeError(f"not a lambda term: {t!r}")


def canon(t: Term):
    """Hashable key identifying t up to alpha-equivalence."""
    return _canon(t, {}, 0, None)


def canon_pair(m: Term, n: Term):
    """Key for the pair (m, n) up to alpha-equivalence and a joint injective
    renaming of free variables.  Checker clauses only test coincidence
    patterns of free names, so relations closed under injective renaming
    stay sound; this is what lets cyclic eta-expansions be detected."""
    free: dict[str, int] = {}
    return (_canon(m, {}, 0, free), _canon(n, {}, 0, free))


def canon_pair_slots(m: Term, n: Term):
    """canon_pair plus the map from free variables to their canonical
    slots; two alpha-variant pairs are related by the induced bijection."""
    free: dict[str, int] = {}
    key = (_canon(m, {}, 0, free), _canon(n, {}, 0, free))
    return key, free


def alpha_eq(m: Term, n: Term) -> bool:
    return canon(m) == canon(n)


# ---------------------------------------------------------------------------
# Evaluation contexts: E ::= <> | E M | V E


@dataclass(frozen=True)
class Hole:
    pass


@dataclass(frozen=True)
class AppL:
    ctx: "EvalContext"
    arg: Term


@dataclass(frozen=True)
class AppR:
    val: Term  # must be a value
    ctx: "EvalContext"

    def __post_init__(self):
        if not is_value(self.val):
            raise ValueError("AppR function position must be a value")


EvalContext = Union[Hole, AppL, AppR]


def plug(ctx: EvalContext, t: Term) -> Term:
    match ctx:
        case Hole():
            return t
        case AppL(c, a):
            return App(plug(c, t), a)
        case AppR(v, c):
            return App(v, plug(c, t))
    raise TypeError(f"not an evaluation context: {ctx!r}")


def ctx_fv(ctx: EvalContext) -> frozenset[str]:
    match ctx:
        case Hole():
            return frozenset()
        case AppL(c, a):
            return ctx_fv(c) | fv(a)
        case AppR(v, c):
            return fv(v) | ctx_fv(c)
    raise TypeError(f"not an evaluation context: {ctx!r}")


# ---------------------------------------------------------------------------
# One-step eager reduction


def step(t: Term) -> Optional[Term]:
    """The unique eager contractum of t, or None if t is in eager normal form."""
    match t:
        case Var(_) | Abs(_, _):
            return None
        case App(f, a):
            if not is_value(f):
                f2 = step(f)
                return None if f2 is None else App(f2, a)
            if not is_value(a):
                a2 = step(a)
                return None if a2 is None else App(f, a2)
            if isinstance(f, Abs):
                return subst_value(f.body, f.binder, a)
            return None  # stuck: variable in function position
    raise TypeError(f"not a lambda term: {t!r}")


# ---------------------------------------------------------------------------
# Iterated evaluation with sound divergence detection


@dataclass(frozen=True)
class Enf:
    term: Term
    steps: int


@dataclass(frozen=True)
class Diverged:
    cycle: tuple[Term, ...]  # a genuine reduction cycle: last steps to first


@dataclass(frozen=True)
class FuelExhausted:
    last: Term


EvalOutcome = Union[Enf, Diverged, FuelExhausted]

DEFAULT_FUEL = 10_000


def evaluate(t: Term, fuel: int = DEFAULT_FUEL) -> EvalOutcome:
    """Iterate `step` up to `fuel` times.

    Divergence is reported only when a reduction cycle is detected on
    canonical forms, so a Diverged outcome is always genuine; non-cyclic
    infinite reductions surface as FuelExhausted.
    """
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    seen: dict[object, int] = {canon(t): 0}
    trace = [t]
    cur = t
    for n in range(1, fuel + 1):
        nxt = step(cur)
        if nxt is None:
            return Enf(cur, n - 1)
        key = canon(nxt)
        if key in seen:
            return Diverged(tuple(trace[seen[key]:]))
        seen[key] = n
        trace.append(nxt)
        cur = nxt
    return FuelExhausted(cur)


# ---------------------------------------------------------------------------
# Shapes of eager normal forms: values, or stuck applications E[x V]


@dataclass(frozen=True)
class ValueVar:
    name: str


@dataclass(frozen=True)
class ValueAbs:
    binder: str
    body: Term


@dataclass(frozen=True)
class Stuck:
    ctx: EvalContext
    head: str
    arg: Term  # a value


EnfShape = Union[ValueVar, ValueAbs, Stuck]


def classify_enf(t: Term) -> EnfShape:
    """Unique decomposition of an eager normal form.

    Rejects reducible input.  For a stuck term the decomposition satisfies
    plug(ctx, App(Var(head), arg)) == t.
    """
    if step(t) is not None:
        raise ValueError(f"term is not in eager normal form: {pretty(t)}")
    match t:
        case Var(x):
            return ValueVar(x)
        case Abs(x, b):
            return ValueAbs(x, b)
    # Walk to the redex position; t is a stuck application.
    def walk(u: Term) -> tuple[EvalContext, str, Term]:
        assert isinstance(u, App)
        f, a = u.fun, u.arg
        if not is_value(f):
            ctx, x, v = walk(f)
            return AppL(ctx, a), x, v
        if not is_value(a):
            ctx, x, v = walk(a)
            return AppR(f, ctx), x, v
        assert isinstance(f, Var), "value-value application with Abs head is a redex"
        return Hole(), f.name, a

    ctx, x, v = walk(t)
    return Stuck(ctx, x, v)


# ---------------------------------------------------------------------------
# Concrete syntax
#
#   term ::= '\' ident+ '.' term | atom+
#   atom ::= ident | '(' term ')'
#
# Application is left-associative; \x y.M sugars \x.\y.M.  Identifiers are
# ASCII alphanumeric starting with a letter, optionally followed by primes
# (x' and x'' appear throughout the source examples).


class LambdaParseError(ValueError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} (at position {pos})")
        self.pos = pos


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, msg: str):
        raise LambdaParseError(msg, self.pos)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def eat(self, ch: str):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def ident(self) -> str:
        self.skip_ws()
        start = self.pos
        if not (self.peek().isalpha() and self.peek().isascii()):
            self.error("expected identifier")
        while self.peek().isascii() and self.peek().isalnum():
            self.pos += 1
        while self.peek() == "'":
            self.pos += 1
        return self.text[start:self.pos]

    def term(self) -> Term:
        self.skip_ws()
        if self.peek() == "\\":
            self.eat("\\")
            binders = [self.ident()]
            self.skip_ws()
            while self.peek() != ".":
                binders.append(self.ident())
                self.skip_ws()
            self.eat(".")
            body = self.term()
            for b in reversed(binders):
                body = Abs(b, body)
            return body
        atoms = [self.atom()]
        while True:
            self.skip_ws()
            if self.peek() == "(" or (self.peek().isalpha() and self.peek().isascii()):
                atoms.append(self.atom())
            else:
                break
        t = atoms[0]
        for a in atoms[1:]:
            t = App(t, a)
        return t

    def atom(self) -> Term:
        self.skip_ws()
        if self.peek() == "(":
            self.eat("(")
            t = self.term()
            self.skip_ws()
            self.eat(")")
            return t
        return Var(self.ident())


def parse_lambda(text: str) -> Term:
    p = _Parser(text)
    t = p.term()
    p.skip_ws()
    if p.pos != len(text):
        p.error("trailing input")
    return t


def pretty(t: Term) -> str:
    match t:
        case Var(x):
            return x
        case Abs(_, _):
            binders = []
            while isinstance(t, Abs):
                binders.append(t.binder)
                t = t.body
            return f"\\{' '.join(binders)}. {pretty(t)}"
        case App(f, a):
            fs = pretty(f)
            if isinstance(f, Abs):
                fs = f"({fs})"
            as_ = pretty(a)
            if not isinstance(a, Var):
                as_ = f"({as_})"
            return f"{fs} {as_}"
    raise TypeError(f"not a lambda term: {t!r}")


# ---------------------------------------------------------------------------
# Stock terms

OMEGA = parse_lambda("(\\x. x x) (\\x. x x)")
IDENTITY = parse_lambda("\\x. x")

# A call-by-value fixpoint (Turing's Z): Z g x  ==>  g-unfoldings on demand.
Z_FIXPOINT = parse_lambda("\\g. (\\x. g (\\v. x x v)) (\\x. g (\\v. x x v))")
