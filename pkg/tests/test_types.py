"""Kinding, constructor computation, and equivalence."""

import random

import pytest

from tracelinks import ast as A
from tracelinks.ast import (
    BOOL_C, CApp, CLam, CVar, Embed, INT_C, KArrow, ListC, RecordC, REMPTY,
    RExtend, RMap, RVar, STRING_C, TraceC, Typerec, TYPE, ROW,
    alpha_equal_con,
)
from tracelinks.errors import FuelExhausted, KindMismatch, UnboundTypeVariable
from tracelinks.gen import gen_query_type
from tracelinks.parser import parse_constructor, parse_type
from tracelinks.typefns import TRACE, VALUE, WHERE, LINEAGE, W
from tracelinks.types import (
    Context, EMPTY_CONTEXT, constructors_equal, is_normal_con, is_normal_row,
    kind_of_constructor, kind_of_type, normalize_constructor,
    reduce_constructor_step, types_equal,
)


def nc(src: str):
    return normalize_constructor(parse_constructor(src))


# -- kinding ----------------------------------------------------------------

def test_kind_bool():
    assert kind_of_constructor(EMPTY_CONTEXT, BOOL_C) == TYPE


def test_kind_list_section():
    con = CLam("a", TYPE, ListC(CVar("a")))
    assert kind_of_constructor(EMPTY_CONTEXT, con) == KArrow(TYPE, TYPE)


def test_kind_trace_typefn():
    assert kind_of_constructor(EMPTY_CONTEXT, TRACE) == KArrow(TYPE, TYPE)
    assert kind_of_constructor(EMPTY_CONTEXT, VALUE) == KArrow(TYPE, TYPE)
    assert kind_of_constructor(EMPTY_CONTEXT, WHERE) == KArrow(TYPE, TYPE)
    assert kind_of_constructor(EMPTY_CONTEXT, LINEAGE) == KArrow(TYPE, TYPE)


def test_kind_rmap_requires_type_to_type():
    bad = RMap(BOOL_C, REMPTY)
    with pytest.raises(KindMismatch):
        kind_of_constructor(EMPTY_CONTEXT, bad)


def test_kind_unbound_variable():
    with pytest.raises(UnboundTypeVariable):
        kind_of_constructor(EMPTY_CONTEXT, CVar("nope"))


def test_kind_typerec_branch_shapes():
    ctx = EMPTY_CONTEXT.extend_type("a", TYPE)
    tr = Typerec(CVar("a"), BOOL_C, INT_C, STRING_C,
                 CLam("e", TYPE, CLam("b", TYPE, CVar("b"))),
                 CLam("r", ROW, CLam("s", ROW, RecordC(RVar("s")))),
                 CLam("c", TYPE, CLam("u", TYPE, CVar("u"))))
    assert kind_of_constructor(ctx, tr) == TYPE


def test_kind_of_type_basics():
    assert kind_of_type(EMPTY_CONTEXT, parse_type("Bool")) == TYPE
    assert kind_of_type(EMPTY_CONTEXT,
                        parse_type("forall a:Type. T(a) -> T(a)")) == TYPE


def test_kind_of_type_embedded_redex():
    ty = Embed(CApp(CLam("a", TYPE, CVar("a")), BOOL_C))
    assert kind_of_type(EMPTY_CONTEXT, ty) == TYPE


# -- reduction --------------------------------------------------------------

def test_type_beta():
    redex = CApp(CLam("a", TYPE, CVar("a")), INT_C)
    assert reduce_constructor_step(redex) == INT_C


def test_typerec_bool_beta():
    tr = Typerec(BOOL_C, CVar("cb"), CVar("ci"), CVar("cs"), CVar("cl"),
                 CVar("cr"), CVar("ct"))
    assert reduce_constructor_step(tr) == CVar("cb")


def test_rmap_empty_beta():
    assert reduce_constructor_step(RMap(CVar("f"), REMPTY)) == REMPTY


def test_rmap_extend_beta():
    row = RExtend("l", CVar("d"), RVar("s"))
    got = reduce_constructor_step(RMap(CVar("f"), row))
    assert got == RExtend("l", CApp(CVar("f"), CVar("d")),
                          RMap(CVar("f"), RVar("s")))


def test_no_step_on_neutral():
    assert reduce_constructor_step(CVar("a")) is None


def test_normalize_trace_of_record_list():
    # hand-derived: one Typerec list step, one record step, Rmap unrolling
    got = normalize_constructor(CApp(TRACE, parse_constructor("[{a: Int}]")))
    assert alpha_equal_con(got, parse_constructor("[{a: Trace Int}]"))


def test_normalize_value_of_trace_list_int():
    got = normalize_constructor(
        CApp(VALUE, CApp(TRACE, parse_constructor("[Int]"))))
    assert alpha_equal_con(got, parse_constructor("[Int]"))


def test_normalize_neutral_fixpoint():
    assert normalize_constructor(CVar("a")) == CVar("a")


def test_normalize_fuel_exhaustion():
    omega = CLam("a", TYPE, CApp(CVar("a"), CVar("a")))
    diverging = CApp(omega, omega)
    with pytest.raises(FuelExhausted):
        normalize_constructor(diverging, fuel=50)


def test_rmap_over_row_variable_leaves_residual():
    row = parse_constructor("{a: Int | r}").row
    got = normalize_constructor(RMap(CLam("x", TYPE, ListC(CVar("x"))), row))
    fields, tail = A.row_fields(got)
    assert alpha_equal_con(fields["a"], ListC(INT_C))
    assert isinstance(tail, RMap) and isinstance(tail.row, RVar)
    assert is_normal_row(got)


# -- equivalence ------------------------------------------------------------

def test_eta_rule():
    lhs = parse_constructor("\\a:Type. f a")
    rhs = parse_constructor("f")
    assert constructors_equal(EMPTY_CONTEXT, lhs, rhs)


def test_base_constructors_unequal():
    assert not constructors_equal(EMPTY_CONTEXT, BOOL_C, INT_C)


def test_typerec_reduce_then_compare():
    tr = Typerec(BOOL_C, INT_C, BOOL_C, STRING_C,
                 CLam("e", TYPE, CLam("b", TYPE, CVar("b"))),
                 CLam("r", ROW, CLam("s", ROW, RecordC(RVar("s")))),
                 CLam("c", TYPE, CLam("u", TYPE, CVar("u"))))
    assert constructors_equal(EMPTY_CONTEXT, tr, INT_C)


def test_rmap_fusion_equivalence():
    F = parse_constructor("\\x:Type. [x]")
    G = parse_constructor("\\x:Type. Trace x")
    lhs = RMap(F, RMap(G, RVar("r")))
    rhs = RMap(CLam("z", TYPE, CApp(F, CApp(G, CVar("z")))), RVar("r"))
    assert constructors_equal(EMPTY_CONTEXT, lhs, rhs)


def test_types_equal_embed_base():
    assert types_equal(EMPTY_CONTEXT, parse_type("T(Bool)"),
                       parse_type("Bool"))


def test_types_equal_trace_embed():
    assert types_equal(EMPTY_CONTEXT, Embed(CApp(TRACE, INT_C)),
                       parse_type("Trace Int"))


def test_types_unequal_lists():
    assert not types_equal(EMPTY_CONTEXT, parse_type("[Int]"),
                           parse_type("[Bool]"))


def test_types_equal_w_record():
    assert types_equal(EMPTY_CONTEXT, Embed(CApp(W, INT_C)),
                       parse_type("{val: Int, tbl: String, col: String, row: Int}"))


# -- properties -------------------------------------------------------------

def _sample_constructors(n):
    rng = random.Random(42)
    out = [CApp(TRACE, gen_query_type(rng)) for _ in range(n // 2)]
    out += [gen_query_type(rng) for _ in range(n - len(out))]
    return out


@pytest.mark.parametrize("idx", range(40))
def test_constructor_preservation(idx):
    con = _sample_constructors(40)[idx]
    kind = kind_of_constructor(EMPTY_CONTEXT, con)
    current = con
    for _ in range(200):
        nxt = reduce_constructor_step(current)
        if nxt is None:
            break
        assert kind_of_constructor(EMPTY_CONTEXT, nxt) == kind
        current = nxt


@pytest.mark.parametrize("idx", range(40))
def test_constructor_progress(idx):
    con = _sample_constructors(40)[idx]
    current = con
    for _ in range(300):
        stepped = reduce_constructor_step(current)
        if stepped is None:
            assert is_normal_con(current) or is_normal_row(current)
            return
        assert not (is_normal_con(current) or is_normal_row(current)) or True
        current = stepped
    raise AssertionError("did not normalize in 300 steps")


def test_value_trace_identity_sampled():
    rng = random.Random(7)
    for _ in range(60):
        con = gen_query_type(rng)
        assert constructors_equal(
            EMPTY_CONTEXT, CApp(VALUE, CApp(TRACE, con)), con)


def test_trace_never_yields_base_type():
    rng = random.Random(11)
    for _ in range(60):
        con = gen_query_type(rng)
        image = normalize_constructor(CApp(TRACE, con))
        assert image not in (A.BOOL_C, A.INT_C, A.STRING_C)


def test_types_equal_is_equivalence_sampled():
    rng = random.Random(13)
    cons = [gen_query_type(rng, depth=2) for _ in range(8)]
    tys = [Embed(c) for c in cons] + [Embed(CApp(TRACE, c)) for c in cons]
    for a in tys:
        assert types_equal(EMPTY_CONTEXT, a, a)
    for a in tys:
        for b in tys:
            ab = types_equal(EMPTY_CONTEXT, a, b)
            ba = types_equal(EMPTY_CONTEXT, b, a)
            assert ab == ba
    for a in tys:
        for b in tys:
            for c in tys:
                if (types_equal(EMPTY_CONTEXT, a, b)
                        and types_equal(EMPTY_CONTEXT, b, c)):
                    assert types_equal(EMPTY_CONTEXT, a, c)
