"""Systems of equations over pi abstractions, built from relations on
lambda terms.

A system maps indices to name-closed abstraction bodies that may apply
equation variables X_{i}<names>.  The builders close a seed relation under
the clauses of eager normal-form (eta-)bisimulation and emit one equation
per reachable pair: the plain system encodes each pair's normal-form
skeleton through the Internal-pi encoding; the optimised system emits
tau-free bodies and adds an auxiliary value family (one extra equation per
value pair), so it extends the plain system.

Alpha-variant pairs share an equation: pairs are keyed up to a joint
injective renaming and references map their free variables through the
induced bijection.  That is what keeps systems over infinite bisimulations
(x vs Y f x) finite.

The checkable preconditions of the unique-solution theorems live here as
well: guardedness, the static input/output separation argument for
divergence-freedom, a bounded divergence scan, solution verification, and
pre-/post-fixed-point checks for trace inclusion.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import lam
from .encode import (
    EncodingId, EqVarTerm, FWD_C, FWD_V, base_env, encode_abstraction, fwd,
    val,
)
from .equiv import BisimConfig, trace_incl, weak_bisim
from .pi.lts import FreshSupply, UnguardedConstantError, templates
from .pi.syntax import (
    Apply, BoundOutput, ConstantEnv, CONT, EqVar, Input, Name, Nil, Output,
    Parallel, PiAbstraction, Proc, ReplicatedInput, Restriction, VAL,
    pretty,
)
from .verdict import Status, Verdict


class BuildError(ValueError):
    pass


class ClosureError(BuildError):
    """The relation is not closed under the bisimulation clauses: some
    pair classifies into no case."""


# ---------------------------------------------------------------------------
# Systems


@dataclass
class Equation:
    index: str
    params: tuple[Name, ...]
    body: Proc

    def abstraction(self) -> PiAbstraction:
        return PiAbstraction(self.params, self.body)

    def pretty(self) -> str:
        ps = ",".join(n.text for n in self.params)
        return f"X_{{{self.index}}} = ({ps}) {pretty(self.body)}"


@dataclass
class EquationSystem:
    equations: dict[str, Equation] = field(default_factory=dict)

    @property
    def indices(self) -> list[str]:
        return list(self.equations)

    def pretty(self) -> str:
        return "\n".join(eq.pretty() for eq in self.equations.values())

    def close(self, index: str, candidates: dict[str, PiAbstraction]) -> PiAbstraction:
        """The equation body with every variable replaced by its
        candidate abstraction."""
        eq = self.equations[index]
        return PiAbstraction(eq.params, subst_eqvars(eq.body, candidates))


def subst_eqvars(p: Proc, cands: dict[str, PiAbstraction]) -> Proc:
    match p:
        case Apply(EqVar(idx), args):
            if idx not in cands:
                raise BuildError(f"no candidate for equation variable X_{{{idx}}}")
            return Apply(cands[idx], args)
        case Input(a, xs, b):
            return Input(a, xs, subst_eqvars(b, cands))
        case ReplicatedInput(a, xs, b):
            return ReplicatedInput(a, xs, subst_eqvars(b, cands))
        case Output(a, bs, b):
            return Output(a, bs, subst_eqvars(b, cands))
        case BoundOutput(a, bs, b):
            return BoundOutput(a, bs, subst_eqvars(b, cands))
        case Restriction(n, b):
            return Restriction(n, subst_eqvars(b, cands))
        case Parallel(l, r):
            return Parallel(subst_eqvars(l, cands), subst_eqvars(r, cands))
        case _:
            return p


def eqvar_indices(p: Proc) -> set[str]:
    out: set[str] = set()

    def go(q: Proc):
        match q:
            case Apply(EqVar(idx), _):
                out.add(idx)
            case Input(_, _, b) | ReplicatedInput(_, _, b) | Output(_, _, b) \
                    | BoundOutput(_, _, b) | Restriction(_, b):
                go(b)
            case Parallel(l, r):
                go(l)
                go(r)
            case _:
                pass

    go(p)
    return out


@dataclass
class PairEntry:
    index: str
    family: str  # "term" or "value"
    left: lam.Term
    right: lam.Term
    case: str  # var | div | abs | stuck | eta-left | eta-right | value-aux
    fvs: tuple[str, ...]
    aux: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "index": self.index,
            "family": self.family,
            "left": lam.pretty(self.left),
            "right": lam.pretty(self.right),
            "case": self.case,
            "fvs": list(self.fvs),
            "aux": self.aux,
        }


PairTable = dict[str, PairEntry]


def pair_table_json(table: PairTable) -> str:
    return json.dumps([e.to_json() for e in table.values()], indent=2)


@dataclass
class BuildConfig:
    eval_fuel: int = lam.DEFAULT_FUEL
    max_pairs: int = 200


# ---------------------------------------------------------------------------
# Closing the relation under the bisimulation clauses.
#
# Term nodes carry one of the cases {var, div, abs, stuck, eta-left,
# eta-right}; pairs of values additionally get a value node (the XV family
# of the optimised system).  References store the target index plus the
# argument variables in the target's parameter order.


Ref = tuple[str, tuple[str, ...]]


@dataclass
class _Node:
    index: str
    left: lam.Term
    right: lam.Term
    fvs: tuple[str, ...]
    slots: dict[str, int]
    case: Optional[str] = None
    refs: dict[str, Ref] = field(default_factory=dict)
    aux: dict = field(default_factory=dict)


class _Closure:
    def __init__(self, cfg: BuildConfig, eta: bool, preorder: bool):
        self.cfg = cfg
        self.eta = eta
        self.preorder = preorder
        self.nodes: dict[tuple[str, object], _Node] = {}
        self.order: list[tuple[str, _Node]] = []
        self.work: list[tuple[str, _Node]] = []
        self.fresh_count = 0
        self.avoid: set[str] = set()

    def fresh(self, base: str) -> str:
        self.fresh_count += 1
        name = lam.fresh_var(f"{base}{self.fresh_count}", self.avoid)
        self.avoid.add(name)
        return name

    def ref(self, family: str, m: lam.Term, n: lam.Term) -> Ref:
        key, slots = lam.canon_pair_slots(m, n)
        got = self.nodes.get((family, key))
        if got is None:
            if len(self.nodes) >= self.cfg.max_pairs:
                raise BuildError(
                    f"closure exceeded {self.cfg.max_pairs} pairs without "
                    f"cycling; partial closure")
            count = sum(1 for f, _ in self.nodes if f == family)
            idx = str(count) if family == "term" else f"V{count}"
            got = _Node(idx, m, n, tuple(sorted(slots)), dict(slots))
            self.nodes[(family, key)] = got
            self.avoid |= set(slots)
            self.work.append((family, got))
            self.order.append((family, got))
            return got.index, got.fvs
        inv = {slot: here for here, slot in slots.items()}
        args = tuple(inv[got.slots[y]] for y in got.fvs)
        return got.index, args

    def run(self, seeds):
        for m, n in seeds:
            self.avoid |= lam.fv(m) | lam.fv(n)
        for m, n in seeds:
            self.ref("term", m, n)
        while self.work:
            family, node = self.work.pop(0)
            if family == "term":
                self.classify_term(node)
            else:
                self.classify_value(node)

    def eval_shape(self, t: lam.Term):
        out = lam.evaluate(t, self.cfg.eval_fuel)
        if isinstance(out, lam.FuelExhausted):
            raise BuildError(f"evaluation fuel exhausted on {lam.pretty(t)}")
        if isinstance(out, lam.Diverged):
            return None
        return lam.classify_enf(out.term)

    def classify_term(self, node: _Node):
        where = f"pair ({lam.pretty(node.left)}, {lam.pretty(node.right)})"
        sm = self.eval_shape(node.left)
        if sm is None and self.preorder:
            node.case = "div"
            node.aux["left_only"] = True
            return
        sn = self.eval_shape(node.right)
        if sm is None or sn is None:
            if sm is None and sn is None:
                node.case = "div"
                return
            raise ClosureError(f"{where}: exactly one side diverges")

        if isinstance(sm, lam.Stuck) or isinstance(sn, lam.Stuck):
            if not (isinstance(sm, lam.Stuck) and isinstance(sn, lam.Stuck)):
                raise ClosureError(f"{where}: stuck against value")
            if sm.head != sn.head:
                raise ClosureError(
                    f"{where}: stuck on {sm.head} vs {sn.head}")
            w = self.fresh("w")
            vm, vn = sm.arg, sn.arg
            node.case = "stuck"
            node.aux["head"] = sm.head
            node.aux["context_binder"] = w
            node.refs["value"] = self.ref("value", vm, vn)
            node.refs["value_term"] = self.ref("term", vm, vn)
            node.refs["context"] = self.ref(
                "term", lam.plug(sm.ctx, lam.Var(w)), lam.plug(sn.ctx, lam.Var(w)))
            self.audit(node)
            return

        vm, vn = _as_term(sm), _as_term(sn)
        node.case = "value"
        node.refs["value"] = self.ref("value", vm, vn)
        node.aux["via_value"] = node.refs["value"][0]
        self.audit(node)

    def value_node(self, idx: str) -> _Node:
        for (family, _), n in self.nodes.items():
            if family == "value" and n.index == idx:
                return n
        raise KeyError(idx)

    def term_case(self, node: _Node) -> str:
        """Display tag for a term node (value routes take the tag of the
        underlying value shape)."""
        if node.case != "value":
            return node.case
        vcase = self.value_node(node.refs["value"][0]).case
        return {"value-var": "var", "value-abs": "abs",
                "value-eta-left": "eta-left",
                "value-eta-right": "eta-right"}[vcase]

    def classify_value(self, node: _Node):
        where = f"value pair ({lam.pretty(node.left)}, {lam.pretty(node.right)})"
        vm, vn = node.left, node.right
        match vm, vn:
            case lam.Var(x), lam.Var(y):
                if x != y:
                    raise ClosureError(f"{where}: distinct variables")
                node.case = "value-var"
                node.aux["var"] = x
            case lam.Abs(x, mb), lam.Abs(y, nb):
                if y != x:
                    z = self.fresh("x")
                    mb = lam.subst_value(mb, x, lam.Var(z))
                    nb = lam.subst_value(nb, y, lam.Var(z))
                    x = z
                node.case = "value-abs"
                node.aux["binder"] = x
                node.refs["body"] = self.ref("term", mb, nb)
            case lam.Var(x), lam.Abs(y, nb):
                self.value_eta(node, x, y, nb, flip=False, where=where)
            case lam.Abs(y, mb), lam.Var(x):
                self.value_eta(node, x, y, mb, flip=True, where=where)
            case _:
                raise ClosureError(f"{where}: not a pair of values")
        self.audit(node)

    def value_eta(self, node: _Node, x: str, y: str, body: lam.Term,
                  flip: bool, where: str):
        if not self.eta:
            raise ClosureError(
                f"{where}: variable against abstraction (eta disabled)")
        shape = self.eval_shape(body)
        if not isinstance(shape, lam.Stuck) or shape.head != x:
            raise ClosureError(f"{where}: abstraction body not stuck on {x}")
        z = self.fresh("z")
        w = self.fresh("w")
        node.case = "value-eta-right" if flip else "value-eta-left"
        node.aux["head"] = x
        node.aux["binder"] = y
        node.aux["value_binder"] = z
        node.aux["context_binder"] = w
        ectx = lam.plug(shape.ctx, lam.Var(w))
        varg = lam.subst_value(shape.arg, y, lam.Var(z)) if y in lam.fv(shape.arg) \
            else shape.arg
        ectx = lam.subst_value(ectx, y, lam.Var(z)) if y in lam.fv(ectx) else ectx
        if flip:
            node.refs["value"] = self.ref("value", varg, lam.Var(z))
            node.refs["value_term"] = self.ref("term", varg, lam.Var(z))
            node.refs["context"] = self.ref("term", ectx, lam.Var(w))
        else:
            node.refs["value"] = self.ref("value", lam.Var(z), varg)
            node.refs["value_term"] = self.ref("term", lam.Var(z), varg)
            node.refs["context"] = self.ref("term", lam.Var(w), ectx)

    def audit(self, node: _Node):
        """Record which variables feed which sub-variable (the primed
        tuples of the construction), for review."""
        for role, (idx, args) in node.refs.items():
            node.aux[f"args_{role}"] = [idx, list(args)]


def _as_term(shape) -> lam.Term:
    match shape:
        case lam.ValueVar(x):
            return lam.Var(x)
        case lam.ValueAbs(x, b):
            return lam.Abs(x, b)
    raise TypeError(shape)


# ---------------------------------------------------------------------------
# Emission


def _close_relation(seeds, cfg: BuildConfig, eta: bool, preorder: bool) -> _Closure:
    closure = _Closure(cfg or BuildConfig(), eta, preorder)
    closure.run(seeds)
    return closure


def _value_skeleton(closure: _Closure, vidx: str, args: tuple[str, ...]):
    """The lambda skeleton of a value pair, with term-family equation
    variables at the coinductive positions (the plain system's view)."""
    vnode = closure.value_node(vidx)
    sub = dict(zip(vnode.fvs, args))

    def m(a: str) -> str:
        return sub.get(a, a)

    def mref(ref: Ref) -> EqVarTerm:
        idx, rargs = ref
        return EqVarTerm(idx, tuple(m(a) for a in rargs))

    case = vnode.case
    if case == "value-var":
        return lam.Var(m(vnode.aux["var"]))
    if case == "value-abs":
        return lam.Abs(vnode.aux["binder"], mref(vnode.refs["body"]))
    # eta: \z.((\w.X_ctx) (x X_val))  or its mirror
    z, w = vnode.aux["value_binder"], vnode.aux["context_binder"]
    head = m(vnode.aux["head"])
    inner = lam.App(lam.Var(head), mref(vnode.refs["value_term"]))
    return lam.Abs(z, lam.App(lam.Abs(w, mref(vnode.refs["context"])), inner))


def build_eqcbv(seeds, cfg: Optional[BuildConfig] = None, eta: bool = False,
                preorder: bool = False) -> tuple[EquationSystem, PairTable]:
    """The plain system: one equation per pair of the closed relation,
    each body the Internal-pi encoding of the pair's normal-form skeleton
    with equation variables at the coinductive positions."""
    closure = _close_relation(seeds, cfg, eta, preorder)
    sys = EquationSystem()
    table: PairTable = {}
    for family, node in closure.order:
        if family != "term":
            continue
        if node.case == "div":
            term = lam.OMEGA
        elif node.case == "stuck":
            w = node.aux["context_binder"]
            cidx, cargs = node.refs["context"]
            inner = lam.App(lam.Var(node.aux["head"]),
                            EqVarTerm(*node.refs["value_term"]))
            term = lam.App(lam.Abs(w, EqVarTerm(cidx, cargs)), inner)
        else:
            term = _value_skeleton(closure, *node.refs["value"])
        abs_ = encode_abstraction(
            EncodingId.INTERNAL, term, fvs=node.fvs,
            cont=lam.fresh_var("p", set(node.fvs)))
        sys.equations[node.index] = Equation(node.index, abs_.params, abs_.body)
        table[node.index] = PairEntry(node.index, "term", node.left,
                                      node.right, closure.term_case(node),
                                      node.fvs, dict(node.aux))
    return sys, table


def build_eqcbvp(seeds, cfg: Optional[BuildConfig] = None, eta: bool = False,
                 preorder: bool = False) -> tuple[EquationSystem, PairTable]:
    """The optimised system: tau-free bodies, with the auxiliary value
    family XV (indices V0, V1, ...) and first actions exposed directly."""
    closure = _close_relation(seeds, cfg, eta, preorder)
    sys = EquationSystem()
    table: PairTable = {}
    for family, node in closure.order:
        gen = _gen_names(set(node.fvs))
        if family == "term":
            eq = _optimised_term_eq(node, gen)
            case = closure.term_case(node)
        else:
            eq = _optimised_value_eq(node, gen)
            case = "value-aux"
        sys.equations[eq.index] = eq
        entry_aux = dict(node.aux)
        if family == "value":
            entry_aux["value_case"] = node.case
        table[eq.index] = PairEntry(eq.index, family, node.left, node.right,
                                    case, node.fvs, entry_aux)
    return sys, table


def _gen_names(avoid: set[str]) -> Callable[[str, str], Name]:
    def get(base: str, sort: str) -> Name:
        name = lam.fresh_var(base, avoid)
        avoid.add(name)
        return Name(name, sort)
    return get


def _optimised_term_eq(node: _Node, gen) -> Equation:
    p = gen("p", CONT)
    params = tuple(val(y) for y in node.fvs) + (p,)
    if node.case == "div":
        body: Proc = Nil()
    elif node.case == "stuck":
        z, q, w = gen("z", VAL), gen("q", CONT), gen("w", VAL)
        vidx, vargs = node.refs["value"]
        cidx, cargs = node.refs["context"]
        wname = node.aux["context_binder"]
        cargs_named = tuple(w if a == wname else val(a) for a in cargs)
        body = BoundOutput(
            val(node.aux["head"]), (z, q), Parallel(
                Apply(EqVar(vidx), (z,) + tuple(val(a) for a in vargs)),
                Input(q, (w,), Apply(EqVar(cidx), cargs_named + (p,)))))
    else:  # converges to a value: route through the value family
        z = gen("z", VAL)
        vidx, vargs = node.refs["value"]
        body = BoundOutput(p, (z,), Apply(
            EqVar(vidx), (z,) + tuple(val(a) for a in vargs)))
    return Equation(node.index, params, body)


def _optimised_value_eq(node: _Node, gen) -> Equation:
    z0 = gen("z", VAL)
    params = (z0,) + tuple(val(y) for y in node.fvs)
    if node.case == "value-var":
        body: Proc = fwd(z0, val(node.aux["var"]))
    elif node.case == "value-abs":
        q = gen("q", CONT)
        bidx, bargs = node.refs["body"]
        body = ReplicatedInput(z0, (val(node.aux["binder"]), q), Apply(
            EqVar(bidx), tuple(val(a) for a in bargs) + (q,)))
    else:
        zb = node.aux["value_binder"]
        wb = node.aux["context_binder"]
        q, z2, q2, w = gen("q", CONT), gen("z'", VAL), gen("q'", CONT), gen("w", VAL)
        vidx, vargs = node.refs["value"]
        cidx, cargs = node.refs["context"]
        vargs_named = tuple(val(zb) if a == zb else val(a) for a in vargs)
        cargs_named = tuple(w if a == wb else val(a) for a in cargs)
        body = ReplicatedInput(z0, (val(zb), q), BoundOutput(
            val(node.aux["head"]), (z2, q2), Parallel(
                Apply(EqVar(vidx), (z2,) + vargs_named),
                Input(q2, (w,), Apply(EqVar(cidx), cargs_named + (q,))))))
    return Equation(node.index, params, body)


# ---------------------------------------------------------------------------
# Checkable preconditions


@dataclass
class CheckReport:
    ok: bool
    violations: list[str] = field(default_factory=list)

    def __bool__(self):
        return self.ok

    def __str__(self):
        return "ok" if self.ok else "; ".join(self.violations)


def check_guarded(sys: EquationSystem) -> CheckReport:
    """Every occurrence of an equation variable sits underneath a
    prefix."""
    report = CheckReport(True)

    def walk(q: Proc, guarded: bool, idx: str):
        match q:
            case Apply(EqVar(j), _):
                if not guarded:
                    report.ok = False
                    report.violations.append(
                        f"X_{{{j}}} unguarded in equation X_{{{idx}}}")
            case Input(_, _, b) | ReplicatedInput(_, _, b) | Output(_, _, b) \
                    | BoundOutput(_, _, b):
                walk(b, True, idx)
            case Restriction(_, b):
                walk(b, guarded, idx)
            case Parallel(l, r):
                walk(l, guarded, idx)
                walk(r, guarded, idx)
            case _:
                pass

    for idx, eq in sys.equations.items():
        # every referenced variable must have an equation
        for j in eqvar_indices(eq.body):
            if j not in sys.equations:
                report.ok = False
                report.violations.append(
                    f"X_{{{j}}} referenced in X_{{{idx}}} has no equation")
        walk(eq.body, False, idx)
    return report


def static_io_separation(sys: EquationSystem,
                         env: Optional[ConstantEnv] = None) -> CheckReport:
    """True when in every body (constants included, transitively) no name
    is used both as an input subject and as an output subject.  Under the
    ground transition system this rules out every internal move, after any
    number of visible actions."""
    env = env if env is not None else base_env()
    report = CheckReport(True)

    # fixpoint over parameter roles of equations and constants
    roles: dict[str, tuple[set[str], ...]] = {
        idx: tuple(set() for _ in eq.params) for idx, eq in sys.equations.items()}
    kroles: dict[str, tuple[set[str], ...]] = {
        k: tuple(set() for _ in a.params) for k, a in env.items()}

    def param_roles(target) -> Optional[tuple[set[str], ...]]:
        if isinstance(target, EqVar):
            return roles.get(target.index)
        if isinstance(target, str):
            return kroles.get(target)
        return None

    def scan(q: Proc, acc: dict[Name, set[str]]):
        match q:
            case Input(a, _, b) | ReplicatedInput(a, _, b):
                acc.setdefault(a, set()).add("in")
                scan(b, acc)
            case Output(a, _, b) | BoundOutput(a, _, b):
                acc.setdefault(a, set()).add("out")
                scan(b, acc)
            case Restriction(_, b):
                scan(b, acc)
            case Parallel(l, r):
                scan(l, acc)
                scan(r, acc)
            case Apply(t, args):
                prs = param_roles(t)
                if prs is None:
                    for a in args:
                        acc.setdefault(a, set()).update(("in", "out"))
                else:
                    for a, rs in zip(args, prs):
                        acc.setdefault(a, set()).update(rs)
            case _:
                pass

    defs = [(idx, eq.params, eq.body, roles) for idx, eq in sys.equations.items()]
    defs += [(k, a.params, a.body, kroles) for k, a in env.items()]
    changed = True
    while changed:
        changed = False
        for key, params, body, table in defs:
            acc: dict[Name, set[str]] = {}
            scan(body, acc)
            new = tuple(set(acc.get(prm, set())) for prm in params)
            if new != table[key]:
                table[key] = new
                changed = True

    for key, params, body, _ in defs:
        acc = {}
        scan(body, acc)
        for n, rs in acc.items():
            if "in" in rs and "out" in rs:
                report.ok = False
                report.violations.append(
                    f"name {n} used both as input and output subject in "
                    f"{'constant' if key in env else 'equation'} {key}")
    return report


def syntactic_solution(sys: EquationSystem, prefix: str = "K") -> ConstantEnv:
    """The recursively defined constants obtained by reading each equation
    as a definition (variables become constant references)."""
    names = {idx: f"{prefix}_{idx}" for idx in sys.equations}

    def fold(q: Proc) -> Proc:
        match q:
            case Apply(EqVar(idx), args):
                if idx not in names:
                    raise BuildError(f"unbound equation variable X_{{{idx}}}")
                return Apply(names[idx], args)
            case Input(a, xs, b):
                return Input(a, xs, fold(b))
            case ReplicatedInput(a, xs, b):
                return ReplicatedInput(a, xs, fold(b))
            case Output(a, bs, b):
                return Output(a, bs, fold(b))
            case BoundOutput(a, bs, b):
                return BoundOutput(a, bs, fold(b))
            case Restriction(n, b):
                return Restriction(n, fold(b))
            case Parallel(l, r):
                return Parallel(fold(l), fold(r))
            case _:
                return q

    return {names[idx]: PiAbstraction(eq.params, fold(eq.body))
            for idx, eq in sys.equations.items()}


def solution_candidates(sys: EquationSystem, env: ConstantEnv,
                        prefix: str = "K") -> dict[str, PiAbstraction]:
    """The syntactic solution viewed as a candidate family (and its
    constants merged into env for execution)."""
    sol = syntactic_solution(sys, prefix)
    env.update(sol)
    return {idx: PiAbstraction(eq.params,
                               Apply(f"{prefix}_{idx}", eq.params))
            for idx, eq in sys.equations.items()}


def divergence_scan(agent: PiAbstraction, env: ConstantEnv, depth: int = 4,
                    tau_fuel: int = 64,
                    cfg: Optional[BisimConfig] = None) -> Verdict:
    """Search for an internal cycle reachable within `depth` visible
    actions.  INEQUIVALENT carries the cycle witness; EQUIVALENT_UP_TO
    means no divergence was found within the bounds."""
    cfg = cfg or BisimConfig(tau_fuel=tau_fuel)
    ncfg = cfg.norm()
    supply = FreshSupply(set(), base=cfg.fresh_base)
    start = Apply(agent, supply.fresh_tuple(p.sort for p in agent.params))

    from .pi.norm import canon_soup, soup_of

    def canon(p: Proc):
        return canon_soup(soup_of(p, env, ncfg))

    visited_states = 0
    seen_visible: set = set()
    truncated = False

    def tau_cycle(p: Proc) -> Optional[list[Proc]]:
        # DFS over internal moves with an on-path set
        path: list[Proc] = []
        onpath: dict[object, int] = {}
        done: set = set()

        def dfs(q: Proc, budget: int) -> Optional[list[Proc]]:
            nonlocal visited_states, truncated
            key = canon(q)
            if key in onpath:
                return path[onpath[key]:] + [q]
            if key in done:
                return None
            if budget <= 0:
                truncated = True
                return None
            visited_states += 1
            onpath[key] = len(path)
            path.append(q)
            try:
                for t in templates(q, env, ncfg):
                    if t.kind != "tau":
                        continue
                    got = dfs(t.build(()), budget - 1)
                    if got is not None:
                        return got
            finally:
                path.pop()
                del onpath[key]
                done.add(key)
            return None

        return dfs(p, tau_fuel)

    frontier = [start]
    for level in range(depth + 1):
        nxt: list[Proc] = []
        for q in frontier:
            cyc = tau_cycle(q)
            if cyc is not None:
                return Verdict(Status.INEQUIVALENT, depth=depth, tau_fuel=tau_fuel,
                               evidence=[pretty(s) for s in cyc],
                               states_visited=visited_states,
                               note="internal cycle found")
            if level == depth:
                continue
            for t in templates(q, env, ncfg):
                if t.kind == "tau":
                    continue
                fresh = supply.fresh_tuple(t.bound_sorts())
                d = t.build(fresh)
                key = canon(d)
                if key not in seen_visible:
                    seen_visible.add(key)
                    nxt.append(d)
        frontier = nxt
    return Verdict(Status.EQUIVALENT_UP_TO, depth=depth, tau_fuel=tau_fuel,
                   truncated=truncated, states_visited=visited_states)


def divergence_scan_system(sys: EquationSystem, env: Optional[ConstantEnv] = None,
                           depth: int = 3, tau_fuel: int = 64) -> dict[str, Verdict]:
    """Divergence-freedom of the syntactic solution, per index.  When the
    static input/output separation holds no internal move is ever possible
    and the scan is skipped."""
    env = env if env is not None else base_env()
    static = static_io_separation(sys, env)
    sol_env = dict(env)
    cands = solution_candidates(sys, sol_env)
    out: dict[str, Verdict] = {}
    for idx, eq in sys.equations.items():
        if static.ok:
            out[idx] = Verdict(Status.EQUIVALENT_UP_TO, depth=depth,
                               tau_fuel=tau_fuel,
                               note="divergence-free by static argument")
        else:
            out[idx] = divergence_scan(cands[idx], sol_env, depth, tau_fuel)
    return out


# ---------------------------------------------------------------------------
# Solution verification and fixed-point checks


def _fresh_args(params: tuple[Name, ...], base: int = 0) -> tuple[Name, ...]:
    supply = FreshSupply(set(), base=base)
    return supply.fresh_tuple(p.sort for p in params)


def verify_solution(sys: EquationSystem, candidates: dict[str, PiAbstraction],
                    env: ConstantEnv, cfg: Optional[BisimConfig] = None,
                    ) -> dict[str, Verdict]:
    """Bounded bisimulation of each candidate against its equation body
    closed with the candidate family, at shared fresh arguments."""
    cfg = cfg or BisimConfig()
    out: dict[str, Verdict] = {}
    for idx, eq in sys.equations.items():
        if idx not in candidates:
            raise BuildError(f"missing candidate for X_{{{idx}}}")
        args = _fresh_args(eq.params, cfg.fresh_base)
        lhs = Apply(candidates[idx], args)
        rhs = Apply(sys.close(idx, candidates), args)
        out[idx] = weak_bisim(lhs, rhs, env, cfg)
    return out


def prefix_point_check(sys: EquationSystem, candidates: dict[str, PiAbstraction],
                       env: ConstantEnv, dialect=None, max_len: int = 6,
                       tau_fuel: int = 64) -> dict[str, Verdict]:
    """E_i[F] below F_i in trace inclusion, per index (pre-fixed point)."""
    from .pi.dialects import Dialect
    dialect = dialect or Dialect.INTERNAL
    out = {}
    for idx, eq in sys.equations.items():
        args = _fresh_args(eq.params)
        lhs = Apply(sys.close(idx, candidates), args)
        rhs = Apply(candidates[idx], args)
        out[idx] = trace_incl(lhs, rhs, env, dialect, max_len, tau_fuel)
    return out


def postfix_point_check(sys: EquationSystem, candidates: dict[str, PiAbstraction],
                        env: ConstantEnv, dialect=None, max_len: int = 6,
                        tau_fuel: int = 64) -> dict[str, Verdict]:
    """F_i below E_i[F] in trace inclusion, per index (post-fixed point)."""
    from .pi.dialects import Dialect
    dialect = dialect or Dialect.INTERNAL
    out = {}
    for idx, eq in sys.equations.items():
        args = _fresh_args(eq.params)
        lhs = Apply(candidates[idx], args)
        rhs = Apply(sys.close(idx, candidates), args)
        out[idx] = trace_incl(lhs, rhs, env, dialect, max_len, tau_fuel)
    return out


def check_extends(sys_ext: EquationSystem, sys: EquationSystem,
                  extra: set[str], env: ConstantEnv,
                  cfg: Optional[BisimConfig] = None) -> dict[str, Verdict]:
    """Bounded witness that sys_ext extends sys: the index sets differ
    exactly by `extra`, and on every shared index the two bodies are
    weakly bisimilar once both are closed with the extended system's
    syntactic solution.  A report, not a proof."""
    cfg = cfg or BisimConfig()
    shared = set(sys.equations)
    if shared & extra:
        raise BuildError("extra indices overlap the shared ones")
    if set(sys_ext.equations) != shared | extra:
        raise BuildError("index sets do not differ by exactly the extra set")
    sol_env = dict(env)
    cands = solution_candidates(sys_ext, sol_env, prefix="KE")
    out: dict[str, Verdict] = {}
    for idx in sorted(shared):
        eq = sys.equations[idx]
        if sys_ext.equations[idx].params != eq.params:
            raise BuildError(f"parameter mismatch on shared index {idx}")
        args = _fresh_args(eq.params, cfg.fresh_base)
        lhs = Apply(sys.close(idx, cands), args)
        rhs = Apply(sys_ext.close(idx, cands), args)
        out[idx] = weak_bisim(lhs, rhs, sol_env, cfg)
    return out


def encoding_candidates(table: PairTable, side: str,
                        style: EncodingId = EncodingId.INTERNAL,
                        ) -> dict[str, PiAbstraction]:
    """The candidate family obtained by encoding the left or right
    component of every pair (term family), or the value access process for
    the value family: XV candidates receive (z, ys) and serve the value at
    z, which is exactly what the encoding of the value does after its
    initial output."""
    out: dict[str, PiAbstraction] = {}
    for idx, entry in table.items():
        t = entry.left if side == "left" else entry.right
        if entry.family == "term":
            out[idx] = encode_abstraction(style, t, fvs=entry.fvs,
                                          cont=lam.fresh_var("p", set(entry.fvs)))
        else:
            out[idx] = _value_access_abstraction(t, entry.fvs)
    return out


def _value_access_abstraction(v: lam.Term, fvs: tuple[str, ...]) -> PiAbstraction:
    """(z, ys) body-of-[[v]] at access name z: the replicated resource for
    an abstraction, the forwarder for a variable."""
    z = Name(lam.fresh_var("z", set(fvs)), VAL)
    params = (z,) + tuple(val(y) for y in fvs)
    match v:
        case lam.Var(x):
            return PiAbstraction(params, fwd(z, val(x)))
        case lam.Abs(x, body):
            gen = _gen_names(set(fvs) | {z.text, x})
            q = gen("q", CONT)
            enc = encode_abstraction(EncodingId.INTERNAL, body,
                                     fvs=tuple(sorted(lam.fv(body))),
                                     cont=q.text)
            inner = Apply(enc, tuple(val(y) for y in sorted(lam.fv(body))) + (q,))
            return PiAbstraction(params, ReplicatedInput(z, (val(x), q), inner))
    raise BuildError(f"not a value: {lam.pretty(v)}")
