"""Random well-typed term and constructor generators for the property
suites.

`gen_query_type` draws query-type constructors (base/list/closed-record).
`gen_term` draws a context and a term that synthesizes a type under it,
covering the exotic constructs (typecase, tracecase, rmap, rfold, fix,
trace constructors, open neutrals).  Generation is type-directed, so every
draw typechecks; the suites assert that as an invariant.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from . import ast as A
from .ast import (
    App, BOOL_C, BOOL_T, Const, Constructor, CVar, Embed, EmptyList, Eq,
    Fix, For, FunT, If, INT_C, INT_T, IntT, Lam, ListC, ListT, Plus,
    Project, RecordC, RecordT, Singleton, STRING_C, STRING_T, Table,
    TermRfold, TermRmap, TraceC, TraceT, Tracecase, TrCell, TrFor, TrIf,
    TrLit, TrOpEq, TrOpPlus, Term, Typecase, TyLam, Type, TYPE, Var,
    record_of, row_of, trow_of,
)
from .types import Context, EMPTY_CONTEXT

_BASE_CONS = (BOOL_C, INT_C, STRING_C)
_BASE_TYPES = {BOOL_C: BOOL_T, INT_C: INT_T, STRING_C: STRING_T}


def gen_query_type(rng: random.Random, depth: int = 3) -> Constructor:
    """A random query-type constructor: base, list, or closed record."""
    roll = rng.random()
    if depth <= 0 or roll < 0.35:
        return rng.choice(_BASE_CONS)
    if roll < 0.7:
        return ListC(gen_query_type(rng, depth - 1))
    fields = {f"f{i}": gen_query_type(rng, depth - 1)
              for i in range(rng.randint(1, 3))}
    return RecordC(row_of(fields))


@dataclass
class _Ctx:
    rng: random.Random
    ctx: Context
    term_vars: dict[str, Type]
    depth: int
    counter: int = 0

    def fresh(self, base: str = "g") -> str:
        self.counter += 1
        return f"{base}{self.counter}"

    def vars_of(self, ty: Type) -> list[str]:
        from .types import types_equal
        out = []
        for name, bound in self.term_vars.items():
            try:
                if types_equal(self.ctx, bound, ty):
                    out.append(name)
            except Exception:
                pass
        return sorted(out)


def gen_term(seed: int) -> tuple[Context, Term]:
    """A random well-typed term under a random (possibly open) context."""
    rng = random.Random(seed)
    ctx = EMPTY_CONTEXT
    term_vars: dict[str, Type] = {}
    # Query-context style record variables.
    for i in range(rng.randint(0, 2)):
        fields = {f"c{j}": _BASE_TYPES[rng.choice(_BASE_CONS)]
                  for j in range(rng.randint(1, 3))}
        ty = RecordT(trow_of(fields))
        name = f"row{i}"
        ctx = ctx.extend_term(name, ty)
        term_vars[name] = ty
    # Occasionally a variable of traced base type.
    if rng.random() < 0.4:
        ty = TraceT(rng.choice((BOOL_T, INT_T, STRING_T)))
        ctx = ctx.extend_term("tr0", ty)
        term_vars["tr0"] = ty
    if rng.random() < 0.3:
        ctx = ctx.extend_type("alpha", TYPE)
    state = _Ctx(rng, ctx, term_vars, depth=rng.randint(1, 3))
    target = _gen_type(state)
    term = _gen_at(state, target, state.depth)
    return ctx, term


def _gen_type(state: _Ctx) -> Type:
    rng = state.rng
    roll = rng.random()
    if roll < 0.4:
        return _BASE_TYPES[rng.choice(_BASE_CONS)]
    if roll < 0.6:
        return ListT(_BASE_TYPES[rng.choice(_BASE_CONS)])
    if roll < 0.8:
        fields = {f"f{i}": _BASE_TYPES[rng.choice(_BASE_CONS)]
                  for i in range(rng.randint(1, 2))}
        return RecordT(trow_of(fields))
    return TraceT(rng.choice((BOOL_T, INT_T)))


def _base_con_of(ty: Type) -> Constructor:
    if isinstance(ty, IntT):
        return INT_C
    if isinstance(ty, A.BoolT):
        return BOOL_C
    return STRING_C


def _gen_at(state: _Ctx, ty: Type, depth: int) -> Term:
    rng = state.rng
    match ty:
        case IntT():
            return _gen_base(state, ty, depth)
        case A.BoolT() | A.StringT():
            return _gen_base(state, ty, depth)
        case ListT(elem):
            return _gen_list(state, elem, depth)
        case RecordT(row):
            return _gen_record(state, A.trow_fields(row), depth)
        case TraceT(elem):
            return _gen_trace(state, elem, depth)
    raise AssertionError(f"no generator for {ty!r}")


def _literal(rng: random.Random, ty: Type) -> Term:
    if isinstance(ty, IntT):
        return Const(rng.randint(-3, 9))
    if isinstance(ty, A.BoolT):
        return Const(rng.choice([True, False]))
    return Const(rng.choice(["ab", "cd", "", "xyz"]))


def _projections(state: _Ctx, ty: Type) -> list[Term]:
    out: list[Term] = []
    for name, bound in state.term_vars.items():
        if isinstance(bound, RecordT):
            for label, fty in A.trow_fields(bound.row).items():
                if fty == ty:
                    out.append(Project(Var(name), label))
    return out


def _gen_base(state: _Ctx, ty: Type, depth: int) -> Term:
    rng = state.rng
    options = ["lit"]
    projs = _projections(state, ty)
    if projs:
        options += ["proj"] * 2
    if state.vars_of(ty):
        options.append("var")
    if depth > 0:
        options += ["if", "app"]
        if isinstance(ty, IntT):
            options += ["plus", "rfold", "tracecase", "fixapp"]
        if isinstance(ty, A.BoolT):
            options.append("eq")
        options.append("typecase")
    choice = rng.choice(options)
    if choice == "lit":
        return _literal(rng, ty)
    if choice == "proj":
        return rng.choice(projs)
    if choice == "var":
        return Var(rng.choice(state.vars_of(ty)))
    if choice == "if":
        return If(_gen_at(state, BOOL_T, depth - 1),
                  _gen_at(state, ty, depth - 1),
                  _gen_at(state, ty, depth - 1))
    if choice == "plus":
        return Plus(_gen_at(state, ty, depth - 1),
                    _gen_at(state, ty, depth - 1))
    if choice == "eq":
        base = rng.choice((INT_T, STRING_T, BOOL_T))
        return Eq(_gen_at(state, base, depth - 1),
                  _gen_at(state, base, depth - 1))
    if choice == "app":
        param = state.fresh("x")
        dom = rng.choice((INT_T, BOOL_T))
        body = _gen_at(state, ty, depth - 1)
        return App(Lam(param, dom, body), _gen_at(state, dom, depth - 1))
    if choice == "fixapp":
        f = state.fresh("f")
        x = state.fresh("x")
        fn = Fix(f, FunT(INT_T, INT_T),
                 Lam(x, INT_T, Plus(Var(x), Const(1))))
        return App(fn, _gen_at(state, INT_T, depth - 1))
    if choice == "rfold":
        labels = {f"k{i}": INT_T for i in range(rng.randint(1, 3))}
        rec = _gen_record(state, labels, depth - 1)
        p, q = state.fresh("p"), state.fresh("q")
        combine = Lam(p, INT_T, Lam(q, INT_T, Plus(Var(p), Var(q))))
        row = row_of({k: INT_C for k in labels})
        return TermRfold(row, combine, Const(0), rec)
    if choice == "tracecase":
        return _gen_tracecase(state, ty, depth)
    if choice == "typecase":
        return _gen_typecase(state, ty, depth)
    return _literal(rng, ty)


def _gen_list(state: _Ctx, elem: Type, depth: int) -> Term:
    rng = state.rng
    options = ["single"]
    if depth > 0:
        options += ["concat", "for", "ifnil"]
        if isinstance(elem, RecordT):
            fields = A.trow_fields(elem.row)
            if ("oid" in fields and isinstance(fields["oid"], IntT)
                    and all(isinstance(t, (IntT, A.BoolT, A.StringT))
                            for t in fields.values())):
                options.append("table")
    choice = rng.choice(options)
    if choice == "single":
        return Singleton(_gen_at(state, elem, max(depth - 1, 0)))
    if choice == "concat":
        return A.Concat(_gen_list(state, elem, depth - 1),
                        _gen_list(state, elem, depth - 1))
    if choice == "for":
        binder = state.fresh("it")
        src_elem = RecordT(trow_of({"a": INT_T}))
        source = Singleton(_gen_record(state, {"a": INT_T}, depth - 1))
        saved = dict(state.term_vars)
        state.term_vars[binder] = src_elem
        inner_ctx = state.ctx
        state.ctx = state.ctx.extend_term(binder, src_elem)
        body = Singleton(_gen_at(state, elem, depth - 1))
        state.term_vars = saved
        state.ctx = inner_ctx
        return For(binder, source, body)
    if choice == "ifnil":
        return If(_gen_at(state, BOOL_T, depth - 1),
                  _gen_list(state, elem, depth - 1),
                  EmptyList())
    if choice == "table":
        fields = A.trow_fields(elem.row)
        return Table(f"gen_{state.fresh('t')}", trow_of(fields))
    raise AssertionError(choice)


def _gen_record(state: _Ctx, fields: dict[str, Type], depth: int) -> Term:
    rng = state.rng
    if depth > 0 and rng.random() < 0.2 and fields:
        # generic identity map over a literal record
        inner = record_of({k: _gen_at(state, t, depth - 1)
                           for k, t in fields.items()})
        a, x = state.fresh("a"), state.fresh("x")
        identity = TyLam(a, TYPE, Lam(x, Embed(CVar(a)), Var(x)))
        row = row_of({k: _base_con_of(t) for k, t in fields.items()})
        return TermRmap(row, identity, inner)
    return record_of({k: _gen_at(state, t, max(depth - 1, 0))
                      for k, t in fields.items()})


def _gen_trace(state: _Ctx, elem: Type, depth: int) -> Term:
    rng = state.rng
    options = ["lit"]
    if state.vars_of(TraceT(elem)):
        options.append("var")
    if depth > 0:
        options += ["trif", "trfor"]
        if isinstance(elem, IntT):
            options.append("opplus")
        if isinstance(elem, A.BoolT):
            options.append("opeq")
        options.append("cell")
    choice = rng.choice(options)
    if choice == "lit":
        return TrLit(_literal(rng, elem))
    if choice == "var":
        return Var(rng.choice(state.vars_of(TraceT(elem))))
    if choice == "trif":
        return TrIf(record_of({
            "cond": _gen_trace(state, BOOL_T, depth - 1),
            "out": _gen_trace(state, elem, depth - 1)}))
    if choice == "trfor":
        con = rng.choice(_BASE_CONS)
        return TrFor(con, record_of({
            "in": _gen_trace(state, _BASE_TYPES[con], depth - 1),
            "out": _gen_trace(state, elem, depth - 1)}))
    if choice == "opplus":
        return TrOpPlus(record_of({
            "l": _gen_trace(state, INT_T, depth - 1),
            "r": _gen_trace(state, INT_T, depth - 1)}))
    if choice == "opeq":
        con = rng.choice(_BASE_CONS)
        base = _BASE_TYPES[con]
        return TrOpEq(con, record_of({
            "l": _gen_trace(state, base, depth - 1),
            "r": _gen_trace(state, base, depth - 1)}))
    if choice == "cell":
        return TrCell(record_of({
            "tbl": _gen_at(state, STRING_T, 0),
            "col": _gen_at(state, STRING_T, 0),
            "row": _gen_at(state, INT_T, 0),
            "val": _gen_at(state, elem, max(depth - 1, 0))}))
    raise AssertionError(choice)


def _gen_tracecase(state: _Ctx, ty: Type, depth: int) -> Term:
    rng = state.rng
    elem = rng.choice((INT_T, BOOL_T))
    scrut = _gen_trace(state, elem, depth - 1)
    x = state.fresh("b")
    at = state.fresh("at")
    ae = state.fresh("ae")

    def body() -> Term:
        return _gen_at(state, ty, 0)

    return Tracecase(
        scrut, x, body(), x, body(), at, x, body(), x, body(),
        ae, x, body(), x, body())


def _gen_typecase(state: _Ctx, ty: Type, depth: int) -> Term:
    rng = state.rng
    if state.ctx.lookup_type("alpha") is not None and rng.random() < 0.5:
        scrut: Constructor = CVar("alpha")
    else:
        scrut = rng.choice((BOOL_C, INT_C, STRING_C, ListC(INT_C),
                            RecordC(row_of({"a": INT_C})), TraceC(BOOL_C)))
    w = state.fresh("w")
    b = state.fresh("tv")
    r = state.fresh("rv")
    t = state.fresh("gv")

    def body() -> Term:
        return _gen_at(state, ty, 0)

    return Typecase(scrut, w, ty, body(), body(), body(),
                    b, body(), r, body(), t, body())
