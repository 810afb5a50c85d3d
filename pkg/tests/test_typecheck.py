"""Term typing, substitutions, and the structural lemmas."""

import random

import pytest

from tracelinks import ast as A
from tracelinks.ast import (
    alpha_equal, BOOL_T, CApp, Const, CVar, Embed, INT_T, IntT, Lam, ListC,
    Plus, RecordT, STRING_T, TraceT, Var, TYPE, trow_of,
)
from tracelinks.errors import (
    BadTableSchema, CannotInfer, MissingLabel, TypeMismatch, UnboundVariable,
)
from tracelinks.gen import gen_term
from tracelinks.parser import parse_term, parse_type
from tracelinks.printer import print_type
from tracelinks.typecheck import (
    check_type, substitute_constructor_in_term, substitute_term, type_of,
)
from tracelinks.typefns import TRACE, WHERE
from tracelinks.types import Context, EMPTY_CONTEXT, types_equal


def synth(src: str, ctx: Context = EMPTY_CONTEXT):
    return type_of(ctx, parse_term(src))


def test_plus_types_int():
    assert types_equal(EMPTY_CONTEXT, synth("2 + 3"), INT_T)


def test_boattours_type(boattours):
    ty = type_of(EMPTY_CONTEXT, boattours)
    want = parse_type("[{name: String, phone: String}]")
    assert types_equal(EMPTY_CONTEXT, ty, want)


def test_wherep_builtin_type():
    from tracelinks.builtins import get_builtin
    wherep = get_builtin("wherep")
    want = A.Forall("a", TYPE, A.FunT(Embed(CApp(TRACE, CVar("a"))),
                                      Embed(CApp(WHERE, CVar("a")))))
    assert types_equal(EMPTY_CONTEXT, wherep.declared_type, want)


def test_unbound_variable():
    with pytest.raises(UnboundVariable):
        synth("nope + 1")


def test_if_branch_mismatch():
    with pytest.raises(TypeMismatch):
        synth('if true then 1 else "s"')


def test_projection_missing_label():
    with pytest.raises(MissingLabel):
        synth("{a = 1}.b")


def test_table_requires_oid():
    with pytest.raises(BadTableSchema):
        synth('table "t" {a: Int}')


def test_table_requires_base_columns():
    with pytest.raises(BadTableSchema):
        synth('table "t" {oid: Int, bad: [Int]}')


def test_table_types_as_list_of_schema():
    ty = synth('table "t" {oid: Int, a: Bool}')
    assert types_equal(EMPTY_CONTEXT, ty, parse_type("[{oid: Int, a: Bool}]"))


def test_empty_list_needs_expectation():
    with pytest.raises(CannotInfer):
        synth("[]")
    check_type(EMPTY_CONTEXT, A.EmptyList(), parse_type("[Int]"))


def test_eq_requires_base_or_record_of_base():
    assert types_equal(EMPTY_CONTEXT, synth("{a = 1} == {a = 2}"), BOOL_T)
    with pytest.raises(TypeMismatch):
        synth("[1] == [1]")


def test_trace_constructor_types():
    assert types_equal(EMPTY_CONTEXT, synth("Lit 2"), TraceT(INT_T))
    assert types_equal(
        EMPTY_CONTEXT,
        synth('Cell {tbl = "t", col = "c", row = 1, val = true}'),
        TraceT(BOOL_T))
    assert types_equal(
        EMPTY_CONTEXT,
        synth("OpPlus {l = Lit 1, r = Lit 2}"), TraceT(INT_T))
    assert types_equal(
        EMPTY_CONTEXT,
        synth("OpEq Int {l = Lit 1, r = Lit 2}"), TraceT(BOOL_T))


def test_cell_requires_exact_payload():
    with pytest.raises(TypeMismatch):
        synth('Cell {tbl = "t", col = "c", row = true, val = 1}')


def test_trif_payload():
    ty = synth("If {cond = Lit true, out = Lit 3}")
    assert types_equal(EMPTY_CONTEXT, ty, TraceT(INT_T))


# -- substitution -----------------------------------------------------------

def test_substitute_var():
    assert substitute_term(Var("x"), "x", Const(1)) == Const(1)


def test_substitute_shadowed():
    lam = parse_term("\\x:Int. x")
    assert substitute_term(lam, "x", Const(1)) == lam


def test_substitute_capture_avoiding():
    lam = A.Lam("y", INT_T, Var("x"))
    got = substitute_term(lam, "x", Var("y"))
    assert isinstance(got, A.Lam)
    assert got.param != "y"
    assert got.body == Var("y")
    assert alpha_equal(got, A.Lam("z", INT_T, Var("y")))


def test_substitute_constructor_in_term():
    body = A.Lam("x", Embed(CVar("a")), Var("x"))
    got = substitute_constructor_in_term(body, "a", A.INT_C)
    assert got == A.Lam("x", Embed(A.INT_C), Var("x"))


def test_substitute_constructor_in_trfor():
    t = A.TrFor(CVar("a"), Var("m"))
    got = substitute_constructor_in_term(t, "a", A.BOOL_C)
    assert got == A.TrFor(A.BOOL_C, Var("m"))


def test_typecase_beta_preserves_motive_instantiation():
    # stepping typecase on List* C lands in the List branch at B[a := List* C]
    from tracelinks.normalize import step
    count = 0
    for seed in range(800):
        ctx, term = gen_term(seed)
        if not isinstance(term, A.Typecase):
            continue
        if not isinstance(term.scrutinee, (A.ListC, A.RecordC, A.TraceC)):
            continue
        before = type_of(ctx, term)
        after = step(term)
        assert after is not None
        check_type(ctx, after, before)
        count += 1
        if count >= 20:
            break
    assert count >= 20


# -- structural lemmas ------------------------------------------------------

def test_weakening():
    term = parse_term("{a = 1} == {a = 2}")
    base = type_of(EMPTY_CONTEXT, term)
    widened = EMPTY_CONTEXT.extend_term("unused", STRING_T)
    assert types_equal(widened, type_of(widened, term), base)


def test_exchange():
    ctx1 = (EMPTY_CONTEXT.extend_term("x", INT_T)
            .extend_term("y", STRING_T))
    ctx2 = (EMPTY_CONTEXT.extend_term("y", STRING_T)
            .extend_term("x", INT_T))
    term = parse_term("x + 1")
    assert types_equal(ctx1, type_of(ctx1, term), type_of(ctx2, term))


def test_weakening_exchange_sampled():
    for seed in range(40):
        ctx, term = gen_term(seed)
        ty = type_of(ctx, term)
        widened = ctx.extend_term("zzz_unused", STRING_T)
        assert types_equal(widened, type_of(widened, term), ty)


def test_diagnostic_payloads():
    try:
        synth('if true then 1 else "s"')
    except TypeMismatch as exc:
        data = exc.to_dict()
        assert data["code"] == "type-mismatch"
        assert "expected" in data and "actual" in data
    else:
        raise AssertionError("expected a TypeMismatch")


def test_trace_splice_rejected_outside_pipeline():
    from tracelinks.errors import TypeMismatch as TM
    with pytest.raises(TM):
        type_of(EMPTY_CONTEXT, parse_term("trace (2 + 3)"))


def test_trace_splice_elaborates_in_pipeline():
    from tracelinks.pipeline import elaborate_traces
    got = elaborate_traces(parse_term("trace (2 + 3)"))
    assert alpha_equal(got, parse_term("OpPlus {l = Lit 2, r = Lit 3}"))
