import pytest

from eagerpi.encode import LINK_LIKE, base_env, encode_internal, encode_milner
from eagerpi.lam import OMEGA, IDENTITY, parse_lambda, Var
from eagerpi.pi import (
    Apply, Dialect, Name, Nil, NormConfig, Parallel, TransitionLimitError,
    UnguardedConstantError, barbs, fn, normalize, parse_pi, pretty,
    tau_closure, templates, transitions, weak_transitions,
    validate_internal, validate_alpi,
)
from eagerpi.pi.syntax import (
    CONT, VAL, Output, PiAbstraction, ReplicatedInput, parse_program,
)

ENV = base_env()
P = Name("p", CONT)
I_CFG = NormConfig(dialect=Dialect.INTERNAL, link_constants=LINK_LIKE)
F_CFG = NormConfig(dialect=Dialect.FULL, link_constants=LINK_LIKE)
A_CFG = NormConfig(dialect=Dialect.ALPI, link_constants=LINK_LIKE)


def test_variable_encoding_single_transition():
    ts = transitions(encode_internal(Var("x"), P), ENV, I_CFG)
    assert len(ts) == 1
    act, deriv = ts[0]
    assert act.kind == "out" and act.subject == P
    assert len(act.objects) == 1 and act.objects[0] in act.extruded
    assert normalize(deriv, ENV, I_CFG) == Apply("fwd_v", (act.objects[0], Name("x", VAL)))


def test_full_pi_communication():
    p = parse_pi("a!(b,k) | a(x,q). 0")
    ts = transitions(p, {}, F_CFG)
    kinds = {a.kind for a, _ in ts}
    assert "tau" in kinds
    taus = [(a, d) for a, d in ts if a.kind == "tau"]
    assert normalize(taus[0][1], {}, F_CFG) == Nil()


def test_ground_input_freshness():
    p = parse_pi("a(x,q). x!(y,k)")
    for act, deriv in transitions(p, {}, F_CFG):
        if act.kind == "in":
            assert not (set(act.objects) & fn(p))


def test_free_output_label_and_extrusion():
    p = parse_pi("new b in a!(b,k)")
    ts = transitions(p, {}, F_CFG)
    assert len(ts) == 1
    act, deriv = ts[0]
    assert act.kind == "out"
    # b extruded (bound), k free in the label
    assert len(act.extruded) == 1
    assert Name("k", CONT) in act.objects


def test_alpi_output_installs_links():
    p = Output(Name("a", VAL), (Name("b", VAL),), Nil())
    cfg = NormConfig(dialect=Dialect.ALPI, link_constants=LINK_LIKE)
    # a carries (v, c) under the builtin sorting; use a one-name user sort
    env, sorts, proc = parse_program("sort s : (s)\n0")
    a, b = Name("a", "s"), Name("b", "s")
    out = Output(a, (b,), Nil())
    cfg2 = NormConfig(dialect=Dialect.ALPI, link_constants=LINK_LIKE)
    from eagerpi.pi.lts import link_constants
    env = dict(ENV)
    ts = transitions(encode_milner(Var("x"), P), env, cfg2)
    # [[x]] = p!(x): observed as a bound output with a link to x
    assert len(ts) == 1
    act, deriv = ts[0]
    assert act.kind == "out" and act.objects[0] in act.extruded
    d = normalize(deriv, env, cfg2)
    assert d == Apply("lnk_v", (act.objects[0], Name("x", VAL)))


def test_weak_transitions_nil():
    res, trunc = weak_transitions(Nil(), {}, I_CFG)
    assert [(a, normalize(d, {}, I_CFG)) for a, d in res] == [(None, Nil())]
    assert not trunc


def test_weak_transitions_beta_first_action():
    ii = encode_internal(parse_lambda("(\\x.x)(\\y.y)"), P)
    v = encode_internal(parse_lambda("\\y.y"), P)
    keys1 = {a.label_key() for a, _ in weak_transitions(ii, ENV, I_CFG)[0] if a}
    keys2 = {a.label_key() for a, _ in weak_transitions(v, ENV, I_CFG)[0] if a}
    assert keys1 == keys2 != set()


def test_weak_transitions_omega_silent():
    res, trunc = weak_transitions(encode_internal(OMEGA, P), ENV, I_CFG)
    assert all(a is None for a, _ in res)
    assert not trunc  # the internal loop closes on canonical forms


def test_omega_tau_closure_finite_all_dialects():
    from eagerpi.encode import encode_milner_prime
    cases = [
        (encode_internal(OMEGA, P), I_CFG),
        (encode_milner(OMEGA, P), F_CFG),
        (encode_milner(OMEGA, P), A_CFG),
        (encode_milner_prime(OMEGA, P), F_CFG),
    ]
    for proc, cfg in cases:
        states, trunc = tau_closure(proc, ENV, cfg, fuel=200)
        assert not trunc
        assert all(t.kind == "tau" for s in states for t in templates(s, ENV, cfg))


def test_barbs():
    assert barbs(encode_internal(IDENTITY, P), ENV, I_CFG)[0] == frozenset({P})
    assert barbs(encode_internal(OMEGA, P), ENV, I_CFG)[0] == frozenset()
    a, b = Name("a", VAL), Name("b", VAL)
    assert barbs(Output(a, (b, Name("k", CONT)), Nil()), {}, F_CFG)[0] == frozenset({a})


def test_internal_validity_preserved_by_transitions():
    seen = 0
    for text in ["x", "\\x.x", "x y", "(\\x.x)(\\y.y)", "\\y.x y"]:
        frontier = [encode_internal(parse_lambda(text), P)]
        for _ in range(3):
            nxt = []
            for proc in frontier:
                assert validate_internal(normalize(proc, ENV, I_CFG), ENV), text
                for _, d in transitions(proc, ENV, I_CFG):
                    nxt.append(d)
                    seen += 1
            frontier = nxt[:6]
    assert seen > 10


def test_alpi_validity_preserved_by_transitions():
    for text in ["x", "\\x.x", "x y"]:
        frontier = [encode_milner(parse_lambda(text), P)]
        for _ in range(3):
            nxt = []
            for proc in frontier:
                assert validate_alpi(normalize(proc, ENV, A_CFG), ENV), text
                for _, d in transitions(proc, ENV, A_CFG):
                    nxt.append(d)
            frontier = nxt[:6]


def test_boundoutput_desugaring_transitions_agree():
    # in full pi, transitions of a!(^b).P match those of new b in a!(b).P
    sugar = parse_pi("a!(^b,k). b(x,q). 0")
    manual = parse_pi("new b,k in a!(b,k). b(x,q). 0")
    ts1 = transitions(sugar, {}, F_CFG)
    ts2 = transitions(manual, {}, F_CFG)
    assert {a.label_key() for a, _ in ts1} == {a.label_key() for a, _ in ts2}


def test_unguarded_constant_detected():
    env, sorts, _ = parse_program("def K(a) = K<a>\n0")
    with pytest.raises(UnguardedConstantError):
        templates(Apply("K", (Name("a", VAL),)), env, F_CFG)


def test_transition_limit():
    big = Parallel(Output(Name("a", VAL), (Name("b", VAL), Name("k", CONT)), Nil()),
                   Output(Name("a", VAL), (Name("c", VAL), Name("k2", CONT)), Nil()))
    with pytest.raises(TransitionLimitError):
        templates(big, {}, F_CFG, limit=1)


def test_constant_unfolds_lazily():
    # the forwarder fires without being consumed (replicated body)
    p = Parallel(Apply("fwd_v", (Name("a", VAL), Name("b", VAL))),
                 Nil())
    ts = transitions(p, ENV, I_CFG)
    assert len(ts) == 1
    act, d = ts[0]
    assert act.kind == "in" and act.subject == Name("a", VAL)
    nd = normalize(d, ENV, I_CFG)
    # the replicated resource persists in the derivative
    assert "fwd_v<a,b>" in pretty(nd)
