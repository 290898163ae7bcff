import pytest

from eagerpi.encode import base_env, encode_internal, encode_milner
from eagerpi.lam import parse_lambda
from eagerpi.pi import (
    Apply, BoundOutput, Dialect, Input, Name, Nil, NormConfig, Output,
    Parallel, PiParseError, ReplicatedInput, Restriction, SortError,
    canon_proc, fn, normalize, parse_pi, parse_program, pretty, rename,
    soup_of, validate_alpi, validate_internal,
)
from eagerpi.pi.syntax import CONT, VAL, check_sorted, BUILTIN_SORTS

ENV = base_env()


def v(x):
    return Name(x, VAL)


def c(x):
    return Name(x, CONT)


def test_parse_nil():
    assert parse_pi("0") == Nil()


def test_parse_bound_output_replication():
    p = parse_pi("p!(^y). !y(x,q). 0")
    assert p == BoundOutput(c("p"), (v("y"),),
                            ReplicatedInput(v("y"), (v("x"), c("q")), Nil()))


def test_parse_restriction_parallel():
    p = parse_pi("new q in (q!(^y). 0 | q(y). 0)")
    assert isinstance(p, Restriction)
    assert isinstance(p.body, Parallel)


def test_parse_free_output_no_continuation():
    p = parse_pi("p!(x)")
    assert p == Output(c("p"), (v("x"),), Nil())


def test_parallel_lowest_precedence():
    p = parse_pi("q(y). 0 | p!(x)")
    assert isinstance(p, Parallel)
    assert isinstance(p.left, Input)


def test_roundtrip_through_printer():
    texts = [
        "p!(^y). !y(x,q). 0",
        "new q in (q!(^y). fwd_v<y,x> | q(y1). 0)",
        "p!(^y). (fwd_v<y,x> | fwd_c<q,p>)",
        "new a,b in a!(^y). 0",
    ]
    for text in texts:
        p = parse_pi(text, ENV)
        q = parse_pi(pretty(p), ENV)
        assert p == q, text


def test_parse_constant_application():
    p = parse_pi("fwd_v<a,b>", ENV)
    assert p == Apply("fwd_v", (v("a"), v("b")))


def test_parse_equation_variable():
    p = parse_pi("p!(^y). !y(x,q). X_{1}<x,q>")
    assert "X_{1}<x,q>" in pretty(p)


def test_sort_inference_continuation():
    p = parse_pi("p!(^y). !y(x,q). 0")
    assert p.subject.sort == CONT
    assert p.objects[0].sort == VAL


def test_sort_error_reported():
    with pytest.raises(SortError):
        parse_pi("new a in (a!(^b). 0 | a(x). x!(^c). 0)")


def test_parse_program_defs_and_sorts():
    env, sorts, proc = parse_program("""
        sort t : ()
        def Ping(a) = a!(^x,k). 0
        def Loop(b) = b(x,k). Loop<b>
        new a in (Ping<a> | Loop<a>)
    """)
    assert set(env) == {"Ping", "Loop"}
    assert sorts["t"] == ()
    assert proc is not None
    check_sorted(proc, sorts, env)


def test_program_rejects_open_constant():
    with pytest.raises(SortError):
        parse_program("def K(a) = b!(^x,q). 0\n0")


def test_parse_error_position():
    with pytest.raises(PiParseError):
        parse_pi("new in 0")
    with pytest.raises(PiParseError):
        parse_pi("p!(")


def test_fn_and_rename():
    p = parse_pi("new q in (q!(^y). fwd_v<y,x> | q(y1). p!(^z). 0)", ENV)
    assert fn(p) == frozenset({v("x"), c("p")})
    q = rename(p, {v("x"): v("w"), c("p"): c("r")})
    assert fn(q) == frozenset({v("w"), c("r")})


def test_rename_capture_avoiding():
    # renaming x -> y must not be captured by the binder y
    p = parse_pi("p!(^y). fwd_v<y,x>", ENV)
    q = rename(p, {v("x"): v("y")})
    assert isinstance(q, BoundOutput)
    binder = q.objects[0]
    assert binder != v("y")
    assert q.body == Apply("fwd_v", (binder, v("y")))


def test_rename_sort_mismatch():
    p = parse_pi("p!(x)")
    with pytest.raises(SortError):
        rename(p, {v("x"): c("k")})


def test_validate_internal_rejects_free_output():
    assert not validate_internal(Output(v("a"), (v("b"),), Nil()))


def test_validate_internal_rejects_repeated_tuple():
    assert not validate_internal(BoundOutput(v("a"), (v("b"), v("b")), Nil()))


def test_validate_internal_accepts_encodings():
    for text in ["x", "\\x.x", "x y", "(\\x.x)(\\y.y)", "\\y.x y"]:
        p = encode_internal(parse_lambda(text), c("p"))
        assert validate_internal(p, ENV), text


def test_validate_alpi_rejects_received_input_subject():
    p = parse_pi("a(x,q). x(y,k). 0")
    assert not validate_alpi(p)


def test_validate_alpi_rejects_output_continuation():
    bad = Output(v("a"), (v("b"), c("k")), Output(v("d"), (v("e"), c("k2")), Nil()))
    assert not validate_alpi(bad)


def test_validate_alpi_accepts_milner():
    for text in ["x", "\\x.x", "x y", "(\\x.x)(\\y.y)", "\\y.x y"]:
        p = encode_milner(parse_lambda(text), c("p"))
        assert validate_alpi(p, ENV), text


def test_normalize_flattens_and_drops_nil():
    cfg = NormConfig(dialect=Dialect.FULL)
    p = parse_pi("(0 | p!(x)) | 0")
    assert normalize(p, {}, cfg) == Output(c("p"), (v("x"),), Nil())


def test_normalize_orders_components_canonically():
    cfg = NormConfig(dialect=Dialect.FULL)
    a = parse_pi("p!(x) | q(y). 0")
    b = parse_pi("q(y). 0 | p!(x)")
    assert normalize(a, {}, cfg) == normalize(b, {}, cfg)


def test_normalize_hoists_restrictions():
    cfg = NormConfig(dialect=Dialect.FULL)
    a = parse_pi("new a in (a(x,q). 0 | a!(y,k)) | p!(z)")
    out = normalize(a, {}, cfg)
    assert isinstance(out, Restriction)

    def flat(q):
        if isinstance(q, Parallel):
            return flat(q.left) + flat(q.right)
        return [q]

    assert len(flat(out.body)) == 3


def test_normalize_gc_removes_unreachable_scope():
    # a is never used in output position: the whole scope is inert
    cfg = NormConfig(dialect=Dialect.FULL)
    p = parse_pi("new a in (a(x,q). 0) | p!(y)")
    assert normalize(p, {}, cfg) == Output(c("p"), (v("y"),), Nil())


def test_normalize_drops_dead_restriction():
    cfg = NormConfig(dialect=Dialect.FULL)
    p = parse_pi("new a in p!(x)")
    assert normalize(p, {}, cfg) == Output(c("p"), (v("x"),), Nil())


def test_normalize_gc_dead_input():
    # nobody can ever output at a: the replicated input is unreachable
    cfg = NormConfig(dialect=Dialect.FULL, gc=True)
    p = parse_pi("new a in (!a(x,q). q!(^w). 0 | p!(y))")
    assert normalize(p, {}, cfg) == Output(c("p"), (v("y"),), Nil())


def test_canon_proc_alpha_invariance():
    cfg = NormConfig(dialect=Dialect.INTERNAL)
    a = parse_pi("new a in (a(x,q). 0 | a!(^y,k). 0)")
    b = parse_pi("new b in (b(u,r). 0 | b!(^w,k2). 0)")
    assert canon_proc(a, {}, cfg) == canon_proc(b, {}, cfg)


def test_boundoutput_desugar_full_vs_internal():
    p = parse_pi("p!(^y). !y(x,q). 0")
    full = soup_of(p, {}, NormConfig(dialect=Dialect.FULL))
    internal = soup_of(p, {}, NormConfig(dialect=Dialect.INTERNAL))
    # full pi: restriction plus free-output prefix; internal: primitive
    assert any(isinstance(comp, Output) for comp in full.components)
    assert any(isinstance(comp, BoundOutput) for comp in internal.components)
    assert full.restricted and not internal.restricted


def test_check_sorted_rejects_arity():
    with pytest.raises(SortError):
        check_sorted(Output(c("p"), (v("x"), c("q")), Nil()), BUILTIN_SORTS)
