"""Dialect tags and syntactic validators for Internal pi and ALpi."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from .syntax import (
    Apply, BoundOutput, ConstantEnv, EqVar, Input, Name, Nil, Output,
    Parallel, PiAbstraction, Proc, ReplicatedInput, Restriction,
)


class Dialect(enum.Enum):
    FULL = "full"
    INTERNAL = "internal"
    ALPI = "alpi"


@dataclass
class ValidationReport:
    ok: bool
    violations: list[str] = field(default_factory=list)

    def __bool__(self):
        return self.ok

    def __str__(self):
        return "ok" if self.ok else "; ".join(self.violations)


def _walk_with_env(p: Proc, env: Optional[ConstantEnv], visit, seen: set[str]):
    """Apply `visit` to every node of p and (once) of each referenced
    constant definition."""
    visit(p)
    match p:
        case Input(_, _, b) | ReplicatedInput(_, _, b) | Output(_, _, b) \
                | BoundOutput(_, _, b) | Restriction(_, b):
            _walk_with_env(b, env, visit, seen)
        case Parallel(l, r):
            _walk_with_env(l, env, visit, seen)
            _walk_with_env(r, env, visit, seen)
        case Apply(t, _):
            if isinstance(t, PiAbstraction):
                _walk_with_env(t.body, env, visit, seen)
            elif isinstance(t, str) and env and t in env and t not in seen:
                seen.add(t)
                _walk_with_env(env[t].body, env, visit, seen)
        case _:
            pass


def validate_internal(p: Proc, env: Optional[ConstantEnv] = None) -> ValidationReport:
    """Internal pi: every output is a bound output, and all tuples (input,
    bound output, application) have pairwise distinct components."""
    report = ValidationReport(True)

    def visit(q: Proc):
        match q:
            case Output(a, bs, _):
                report.ok = False
                report.violations.append(
                    f"free output at {a} carrying ({','.join(map(str, bs))})")
            case Input(a, xs, _) | ReplicatedInput(a, xs, _) | BoundOutput(a, xs, _):
                if len(set(xs)) != len(xs):
                    report.ok = False
                    report.violations.append(
                        f"repeated component in tuple at {a}: ({','.join(map(str, xs))})")
            case Apply(_, args):
                if len(set(args)) != len(args):
                    report.ok = False
                    report.violations.append(
                        f"repeated component in application ({','.join(map(str, args))})")
            case _:
                pass

    _walk_with_env(p, env, visit, set())
    return report


def validate_alpi(p: Proc, env: Optional[ConstantEnv] = None) -> ValidationReport:
    """ALpi: received names are used only in output position, and output
    prefixes have no continuation.  BoundOutput(a, bs, P) is accepted as
    sugar for new bs in (a!(bs) | P)."""
    report = ValidationReport(True)

    def check(q: Proc, received: frozenset[Name]):
        match q:
            case Nil():
                return
            case Input(a, xs, b) | ReplicatedInput(a, xs, b):
                if a in received:
                    report.ok = False
                    report.violations.append(f"received name {a} used as input subject")
                check(b, received | frozenset(xs))
            case Output(a, _, b):
                if not isinstance(b, Nil):
                    report.ok = False
                    report.violations.append(f"output at {a} has a continuation")
                else:
                    check(b, received)
            case BoundOutput(a, _, b):
                # sugar: the continuation runs in parallel with the particle
                check(b, received)
            case Restriction(_, b):
                check(b, received)
            case Parallel(l, r):
                check(l, received)
                check(r, received)
            case Apply(t, _):
                if isinstance(t, PiAbstraction):
                    check(t.body, received)
                elif isinstance(t, str) and env and t in env:
                    pass  # constants are validated separately, once
            case _:
                pass

    check(p, frozenset())
    if env:
        for k, a in env.items():
            before = len(report.violations)
            check(a.body, frozenset())
            if len(report.violations) > before:
                report.violations[before:] = [
                    f"in constant {k}: {v}" for v in report.violations[before:]]
    return report


def free_input_subjects(p: Proc, env: Optional[ConstantEnv] = None) -> frozenset[Name]:
    """Free names used in input-subject position.  ALpi agents with such
    names fall outside the scope of the bisimilarity/barbed-congruence
    coincidence; callers may warn."""
    out: set[Name] = set()

    def check(q: Proc, bound: frozenset[Name]):
        match q:
            case Input(a, xs, b) | ReplicatedInput(a, xs, b):
                if a not in bound:
                    out.add(a)
                check(b, bound | frozenset(xs))
            case Output(_, _, b):
                check(b, bound)
            case BoundOutput(_, bs, b):
                check(b, bound | frozenset(bs))
            case Restriction(n, b):
                check(b, bound | {n})
            case Parallel(l, r):
                check(l, bound)
                check(r, bound)
            case Apply(t, _):
                if isinstance(t, PiAbstraction):
                    check(t.body, bound | frozenset(t.params))
            case _:
                pass

    check(p, frozenset())
    return frozenset(out)
