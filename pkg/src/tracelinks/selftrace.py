"""The self-tracing transformation: rewrite a normalized query so that
running it yields a trace of its own execution.

Variables pass through untouched (a variable's subtrace is whatever the
traced comprehension binds it to); constants become Lit; operators build
OpPlus/OpEq nodes recording their subtraces (OpEq also records the
comparison type); records, projections, and list constructors are
homomorphic; tables expand to a comprehension emitting a Cell per data
column; comprehensions and conditionals distribute a For/If wrapper over
every trace leaf of the body via `dist`.

The `oid` column is a row identifier rather than data: its trace is
`Lit y.oid`, so it never contributes provenance annotations of its own,
which keeps lineage annotation counts at one per data column plus one for
the output cell.  Everything else about the table rule is unchanged, and
the traced table still has the full traced row type.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import ast as A
from .ast import (
    App, BOOL_C, Concat, ConOrRow, Const, Constructor, EmptyList,
    EmptyRecord, Eq, For, If, INT_C, ListC, Plus, Project, RecordC,
    RecordExt, RowType, Singleton, STRING_C, Table, TraceC, Term, TrCell,
    TrFor, TrIf, TrLit, TrOpEq, TrOpPlus, TyApp, Var, fresh, record_of,
    row_fields, trow_fields,
)
from .errors import NotAQueryType, NotInNormalForm, ShapeMismatch
from .printer import print_constructor, print_term
from .typefns import TRACE
from .types import (
    Context, kind_of_constructor, normalize_constructor, to_constructor,
    type_norm, TYPE,
)


def trace_type(c: Constructor) -> Constructor:
    """The trace image of a type constructor, as an application; callers
    normalize when they need the structural form."""
    return A.CApp(TRACE, c)


# ---------------------------------------------------------------------------
# Hole expressions


@dataclass(frozen=True)
class HoleExpr:
    """A trace constructor with exactly one hole in its `out` field; the two
    shapes are If{cond, out=HOLE} and For D {in, out=HOLE}."""

    kind: str  # "if" | "for"
    payload: Term  # cond subtrace / in subtrace
    con: Optional[Constructor] = None  # For's element type

    def fill(self, out: Term) -> Term:
        if self.kind == "if":
            return TrIf(record_of({"cond": self.payload, "out": out}))
        return TrFor(self.con, record_of({"in": self.payload, "out": out}))


def dist(c: Constructor, hole: HoleExpr, m: Term) -> Term:
    """Distribute `hole` over every trace leaf of `m`, whose type is the
    normalized trace image `c` (records/lists over Trace leaves)."""
    match c:
        case TraceC(_):
            return hole.fill(m)
        case RecordC(row):
            fields, tail = row_fields(row)
            if not isinstance(tail, A.REmpty):
                raise ShapeMismatch(
                    f"dist target row is open: {print_constructor(c)}")
            return record_of({label: dist(field_c, hole, Project(m, label))
                              for label, field_c in fields.items()})
        case ListC(elem):
            if isinstance(m, EmptyList):
                # `for (x <- []) [..]` reduces to [] immediately; emitting the
                # reduct keeps the traced term synthesizable.
                return m
            binder = fresh("x")
            return For(binder, m, Singleton(dist(elem, hole, Var(binder))))
    raise ShapeMismatch(
        f"dist target is not a trace image: {print_constructor(c)}")


# ---------------------------------------------------------------------------
# The transformation


def self_trace(m: Term, at: Constructor, ctx: Context = Context()) -> Term:
    """Rewrite normal-form query `m` of type T(at) into its self-tracing
    form of type T(TRACE at)."""
    from .normalize import classify

    cls = classify(m)
    if not cls.is_normal:
        raise NotInNormalForm(
            f"self-tracing requires a normalized query: {cls.reason}")
    if kind_of_constructor(ctx, at) != TYPE or not _is_query_con(
            normalize_constructor(at)):
        raise NotAQueryType(
            f"not a query type: {print_constructor(at)}")
    env: dict[str, Constructor] = {}
    for b in ctx.bindings:
        con = to_constructor(type_norm(b.ty))
        env[b.name] = con
    return _trace(m, normalize_constructor(at), env)


def _is_query_con(c: ConOrRow) -> bool:
    match c:
        case A.BoolC() | A.IntC() | A.StringC():
            return True
        case ListC(e):
            return _is_query_con(e)
        case RecordC(row):
            fields, tail = row_fields(row)
            return isinstance(tail, A.REmpty) and all(
                _is_query_con(v) for v in fields.values())
        case _:
            return False


def _value_at_trace_bool() -> Term:
    from .builtins import get_builtin
    return TyApp(get_builtin("value").term, TraceC(BOOL_C))


def _trace(m: Term, c: Constructor, env: dict[str, Constructor]) -> Term:
    match m:
        case Var(_):
            return m
        case Const(_):
            return TrLit(m)
        case Plus(l, r):
            return TrOpPlus(record_of({"l": _trace(l, INT_C, env),
                                       "r": _trace(r, INT_C, env)}))
        case Eq(l, r):
            cmp = _con_of(l, env) if not isinstance(l, EmptyList) else _con_of(r, env)
            return TrOpEq(cmp, record_of({"l": _trace(l, cmp, env),
                                          "r": _trace(r, cmp, env)}))
        case EmptyRecord():
            return m
        case RecordExt():
            fields, tail = A.record_spine(m)
            if tail is not None:
                raise NotInNormalForm(
                    "record extension over a non-literal tail cannot be traced")
            row, rtail = row_fields(_record_row(c, m))
            return record_of({label: _trace(value, row[label], env)
                              for label, value in fields.items()})
        case Project(rec, label):
            return Project(_trace(rec, _con_of(rec, env), env), label)
        case EmptyList():
            return m
        case Singleton(elem):
            return Singleton(_trace(elem, _elem_con(c, m), env))
        case Concat(l, r):
            return Concat(_trace(l, c, env), _trace(r, c, env))
        case Table(name, schema):
            return _trace_table(name, schema)
        case For(binder, source, body):
            src_con = normalize_constructor(_con_of(source, env))
            elem = _elem_con(src_con, source)
            traced_src = _trace(source, src_con, env)
            hole = HoleExpr("for", Var(binder), con=elem)
            inner_env = dict(env)
            inner_env[binder] = elem
            traced_body = _trace(body, c, inner_env)
            image = normalize_constructor(A.CApp(TRACE, c))
            return For(binder, traced_src, dist(image, hole, traced_body))
        case If(cond, then, els):
            traced_cond = _trace(cond, BOOL_C, env)
            condition = App(_value_at_trace_bool(), traced_cond)
            image = normalize_constructor(A.CApp(TRACE, c))
            hole = HoleExpr("if", traced_cond)
            return If(condition,
                      dist(image, hole, _trace(then, c, env)),
                      dist(image, hole, _trace(els, c, env)))
    raise NotInNormalForm(
        f"term form cannot appear in a normalized query: {print_term(m)}")


def _trace_table(name: str, schema: RowType) -> Term:
    binder = fresh("y")
    fields = trow_fields(schema)
    traced: dict[str, Term] = {}
    for label in fields:
        if label == "oid":
            traced[label] = TrLit(Project(Var(binder), "oid"))
        else:
            traced[label] = TrCell(record_of({
                "tbl": Const(name),
                "col": Const(label),
                "row": Project(Var(binder), "oid"),
                "val": Project(Var(binder), label),
            }))
    return For(binder, Table(name, schema), Singleton(record_of(traced)))


def _record_row(c: Constructor, m: Term):
    n = normalize_constructor(c)
    if isinstance(n, RecordC):
        return n.row
    raise ShapeMismatch(
        f"record term traced at non-record constructor "
        f"{print_constructor(n)}: {print_term(m)}")


def _elem_con(c: Constructor, m: Term) -> Constructor:
    n = normalize_constructor(c)
    if isinstance(n, ListC):
        return n.elem
    raise ShapeMismatch(
        f"list term traced at non-list constructor {print_constructor(n)}: "
        f"{print_term(m)}")


def _con_of(m: Term, env: dict[str, Constructor]) -> Constructor:
    """Untraced type constructor of a normal NRC subterm."""
    match m:
        case Var(name):
            if name not in env:
                raise NotInNormalForm(f"unbound variable {name!r} in query")
            return env[name]
        case Const(value):
            if isinstance(value, bool):
                return BOOL_C
            if isinstance(value, int):
                return INT_C
            return STRING_C
        case Plus(_, _):
            return INT_C
        case Eq(_, _):
            return BOOL_C
        case Project(rec, label):
            rec_con = normalize_constructor(_con_of(rec, env))
            if isinstance(rec_con, RecordC):
                fields, _ = row_fields(rec_con.row)
                if label in fields:
                    return fields[label]
            raise ShapeMismatch(
                f"projection from non-record in query: {print_term(m)}")
        case Table(_, schema):
            return ListC(RecordC(to_constructor(schema)))
        case Singleton(elem):
            return ListC(_con_of(elem, env))
        case Concat(l, r):
            if not isinstance(l, EmptyList):
                return _con_of(l, env)
            return _con_of(r, env)
        case For(binder, source, body):
            src = normalize_constructor(_con_of(source, env))
            inner = dict(env)
            inner[binder] = _elem_con(src, source)
            return _con_of(body, inner)
        case If(_, then, els):
            if not isinstance(then, EmptyList):
                return _con_of(then, env)
            return _con_of(els, env)
        case RecordExt():
            fields, tail = A.record_spine(m)
            if tail is not None:
                raise NotInNormalForm("record extension in query")
            return RecordC(A.row_of({k: _con_of(v, env)
                                     for k, v in fields.items()}))
        case EmptyRecord():
            return RecordC(A.REMPTY)
    raise NotInNormalForm(
        f"cannot synthesize a query type for {print_term(m)}")
