"""The three call-by-value encodings of lambda terms into pi processes.

* Milner's V: a variable is translated to an immediate free output of
  itself at the continuation.
* Milner's V': the variable rule delays the free output behind a
  replicated one-place buffer; abstraction and application are as in V.
* The Internal-pi encoding: V' with every residual free output replaced
  by a bound output plus a forwarder constant, chosen by sort; value
  forwarders are replicated, continuation forwarders are not.

Every encoding is parametric on a continuation name and deterministic:
generated names follow a fixed schema (y, q, r, w, w', p', with numeric
suffixes on collision), so encodings are reproducible and printable.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Union

from . import lam
from .pi.dialects import Dialect
from .pi.lts import LINK_C, LINK_V, link_constants
from .pi.syntax import (
    Apply, BoundOutput, ConstantEnv, CONT, EqVar, Input, Name, Nil, Output,
    Parallel, PiAbstraction, Proc, ReplicatedInput, Restriction, VAL,
)

FWD_V = "fwd_v"
FWD_C = "fwd_c"


def forwarder_env() -> ConstantEnv:
    """Defining equations of the forwarder constant, one per sort.

    fwd_c<p,q>: p(x). q!(^y). fwd_v<y,x>          (continuation names)
    fwd_v<x,y>: !x(v,c). y!(^v',c'). (fwd_v<v',v> | fwd_c<c',c>)
    """
    p, q = Name("p", CONT), Name("q", CONT)
    x, y = Name("x", VAL), Name("y", VAL)
    v, c = Name("v", VAL), Name("c", CONT)
    v2, c2 = Name("v'", VAL), Name("c'", CONT)
    env: ConstantEnv = {
        FWD_C: PiAbstraction(
            (p, q), Input(p, (x,), BoundOutput(q, (y,), Apply(FWD_V, (y, x))))),
        FWD_V: PiAbstraction(
            (x, y), ReplicatedInput(x, (v, c), BoundOutput(
                y, (v2, c2),
                Parallel(Apply(FWD_V, (v2, v)), Apply(FWD_C, (c2, c)))))),
    }
    return env


def fwd(a: Name, b: Name) -> Proc:
    """The link a >-> b: retransmits everything received at a onto b."""
    if a.sort != b.sort:
        raise ValueError(f"forwarder endpoints must share a sort: {a}, {b}")
    return Apply(FWD_V if a.sort == VAL else FWD_C, (a, b))


def base_env() -> ConstantEnv:
    """Forwarders plus the ALpi link constants (the latter appear only in
    derivatives of the ALpi transition system)."""
    env = forwarder_env()
    env.update(link_constants())
    return env


LINK_LIKE = frozenset({FWD_V, FWD_C, LINK_V, LINK_C})


class EncodingId(enum.Enum):
    MILNER_V = "milner"
    MILNER_V_PRIME = "milner-prime"
    INTERNAL = "internal"


#: dialects in which each encoding's output is meant to be run / checked
ENCODING_DIALECTS = {
    EncodingId.MILNER_V: (Dialect.FULL, Dialect.ALPI),
    EncodingId.MILNER_V_PRIME: (Dialect.FULL,),
    EncodingId.INTERNAL: (Dialect.INTERNAL,),
}


@dataclass(frozen=True)
class EqVarTerm:
    """An equation-variable occurrence inside a lambda body, encoded as
    (p) X<ys,p> where ys are the free variables of the indexed pair."""
    index: str
    fvs: tuple[str, ...]


ETerm = Union[lam.Term, EqVarTerm]


def _term_fv(t: ETerm) -> frozenset[str]:
    if isinstance(t, EqVarTerm):
        return frozenset(t.fvs)
    match t:
        case lam.Var(x):
            return frozenset((x,))
        case lam.Abs(x, b):
            return _term_fv(b) - {x}
        case lam.App(f, a):
            return _term_fv(f) | _term_fv(a)
    raise TypeError(f"not an encodable term: {t!r}")


class _NameGen:
    def __init__(self, used: set[str]):
        self.used = used

    def get(self, base: str, sort: str) -> Name:
        if base not in self.used:
            self.used.add(base)
            return Name(base, sort)
        i = 1
        while f"{base}{i}" in self.used:
            i += 1
        self.used.add(f"{base}{i}")
        return Name(f"{base}{i}", sort)


def val(x: str) -> Name:
    return Name(x, VAL)


def _encode(t: ETerm, p: Name, gen: _NameGen, style: EncodingId) -> Proc:
    if isinstance(t, EqVarTerm):
        return Apply(EqVar(t.index), tuple(val(x) for x in t.fvs) + (p,))
    match t:
        case lam.Var(x):
            if style is EncodingId.MILNER_V:
                return Output(p, (val(x),), Nil())
            y = gen.get("y", VAL)
            if style is EncodingId.MILNER_V_PRIME:
                z, q = gen.get("z", VAL), gen.get("q", CONT)
                return BoundOutput(p, (y,), ReplicatedInput(
                    y, (z, q), Output(val(x), (z, q), Nil())))
            return BoundOutput(p, (y,), fwd(y, val(x)))
        case lam.Abs(x, body):
            y, q = gen.get("y", VAL), gen.get("q", CONT)
            return BoundOutput(p, (y,), ReplicatedInput(
                y, (val(x), q), _encode(body, q, gen, style)))
        case lam.App(f, a):
            q, y = gen.get("q", CONT), gen.get("y", VAL)
            r, w = gen.get("r", CONT), gen.get("w", VAL)
            enc_f = _encode(f, q, gen, style)
            enc_a = _encode(a, r, gen, style)
            if style is EncodingId.INTERNAL:
                w2, p2 = gen.get("w'", VAL), gen.get("p'", CONT)
                inner = BoundOutput(y, (w2, p2),
                                    Parallel(fwd(w2, w), fwd(p2, p)))
            else:
                inner = Output(y, (w, p), Nil())
            return Restriction(q, Parallel(
                enc_f,
                Input(q, (y,), Restriction(r, Parallel(
                    enc_a, Input(r, (w,), inner))))))
    raise TypeError(f"not an encodable term: {t!r}")


def _run(t: ETerm, p: Name, style: EncodingId) -> Proc:
    if p.sort != CONT:
        raise ValueError(f"continuation parameter must be continuation-sorted: {p}")
    if p.text in _term_fv(t):
        raise ValueError(f"continuation {p} clashes with a free variable")
    used = set(_term_fv(t)) | {p.text}
    return _encode(t, p, _NameGen(used), style)


def encode_milner(t: ETerm, p: Name) -> Proc:
    return _run(t, p, EncodingId.MILNER_V)


def encode_milner_prime(t: ETerm, p: Name) -> Proc:
    return _run(t, p, EncodingId.MILNER_V_PRIME)


def encode_internal(t: ETerm, p: Name) -> Proc:
    return _run(t, p, EncodingId.INTERNAL)


def encode_with(style: EncodingId, t: ETerm, p: Name) -> Proc:
    return _run(t, p, style)


def encode_abstraction(style: EncodingId, t: ETerm,
                       fvs: Optional[tuple[str, ...]] = None,
                       cont: str = "p") -> PiAbstraction:
    """(ys, p) [[t]]p  -- the name-closed uncurried abstraction over the
    term's free variables plus a continuation."""
    ys = tuple(sorted(_term_fv(t))) if fvs is None else fvs
    p = Name(cont, CONT)
    return PiAbstraction(tuple(val(y) for y in ys) + (p,),
                         _run(t, p, style))
