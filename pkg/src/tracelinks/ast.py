"""Abstract syntax: kinds, constructors, row constructors, types, rows, terms.

All nodes are frozen dataclasses; construction never mutates, so values can be
shared freely across threads.  Record rows and record terms keep their labels
in sorted order along fully-known spines (the parser and all internal builders
enforce this), which makes printing deterministic and lets the positional row
rules coincide with unordered-label semantics.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


# ---------------------------------------------------------------------------
# Kinds


class Kind:
    pass


@dataclass(frozen=True)
class KType(Kind):
    def __str__(self) -> str:
        return "Type"


@dataclass(frozen=True)
class KRow(Kind):
    def __str__(self) -> str:
        return "Row"


@dataclass(frozen=True)
class KArrow(Kind):
    dom: Kind
    cod: Kind

    def __str__(self) -> str:
        d = f"({self.dom})" if isinstance(self.dom, KArrow) else str(self.dom)
        return f"{d} -> {self.cod}"


TYPE = KType()
ROW = KRow()


# ---------------------------------------------------------------------------
# Constructors and row constructors


class Constructor:
    pass


class RowConstructor:
    pass


ConOrRow = Union[Constructor, RowConstructor]


@dataclass(frozen=True)
class BoolC(Constructor):
    pass


@dataclass(frozen=True)
class IntC(Constructor):
    pass


@dataclass(frozen=True)
class StringC(Constructor):
    pass


@dataclass(frozen=True)
class CVar(Constructor):
    name: str


@dataclass(frozen=True)
class CLam(Constructor):
    param: str
    kind: Kind
    body: Constructor


@dataclass(frozen=True)
class CApp(Constructor):
    fn: Constructor
    arg: ConOrRow


@dataclass(frozen=True)
class ListC(Constructor):
    elem: Constructor


@dataclass(frozen=True)
class RecordC(Constructor):
    row: RowConstructor


@dataclass(frozen=True)
class TraceC(Constructor):
    elem: Constructor


@dataclass(frozen=True)
class Typerec(Constructor):
    scrutinee: Constructor
    on_bool: Constructor
    on_int: Constructor
    on_string: Constructor
    on_list: Constructor
    on_record: Constructor
    on_trace: Constructor

    def branches(self) -> tuple[Constructor, ...]:
        return (self.on_bool, self.on_int, self.on_string,
                self.on_list, self.on_record, self.on_trace)


@dataclass(frozen=True)
class REmpty(RowConstructor):
    pass


@dataclass(frozen=True)
class RExtend(RowConstructor):
    label: str
    head: Constructor
    tail: RowConstructor


@dataclass(frozen=True)
class RVar(RowConstructor):
    name: str


@dataclass(frozen=True)
class RMap(RowConstructor):
    fn: Constructor
    row: RowConstructor


BOOL_C = BoolC()
INT_C = IntC()
STRING_C = StringC()
REMPTY = REmpty()


def row_of(fields: dict[str, Constructor], tail: RowConstructor = REMPTY) -> RowConstructor:
    """Build an Extend spine with labels in canonical sorted order."""
    row = tail
    for label in sorted(fields, reverse=True):
        row = RExtend(label, fields[label], row)
    return row


def row_fields(row: RowConstructor) -> tuple[dict[str, Constructor], RowConstructor]:
    """Split a row into its known Extend prefix and the residual tail."""
    fields: dict[str, Constructor] = {}
    while isinstance(row, RExtend):
        fields[row.label] = row.head
        row = row.tail
    return fields, row


# ---------------------------------------------------------------------------
# Types and row types (computation-free; constructors enter via Embed)


class Type:
    pass


class RowType:
    pass


@dataclass(frozen=True)
class Embed(Type):
    con: Constructor


@dataclass(frozen=True)
class BoolT(Type):
    pass


@dataclass(frozen=True)
class IntT(Type):
    pass


@dataclass(frozen=True)
class StringT(Type):
    pass


@dataclass(frozen=True)
class FunT(Type):
    dom: Type
    cod: Type


@dataclass(frozen=True)
class ListT(Type):
    elem: Type


@dataclass(frozen=True)
class RecordT(Type):
    row: RowType


@dataclass(frozen=True)
class TraceT(Type):
    elem: Type


@dataclass(frozen=True)
class Forall(Type):
    param: str
    kind: Kind
    body: Type


@dataclass(frozen=True)
class TEmpty(RowType):
    pass


@dataclass(frozen=True)
class TExtend(RowType):
    label: str
    head: Type
    tail: RowType


BOOL_T = BoolT()
INT_T = IntT()
STRING_T = StringT()
TEMPTY = TEmpty()


def trow_of(fields: dict[str, Type]) -> RowType:
    row: RowType = TEMPTY
    for label in sorted(fields, reverse=True):
        row = TExtend(label, fields[label], row)
    return row


def trow_fields(row: RowType) -> dict[str, Type]:
    fields: dict[str, Type] = {}
    while isinstance(row, TExtend):
        fields[row.label] = row.head
        row = row.tail
    return fields


# ---------------------------------------------------------------------------
# Terms


class Term:
    span: Optional[Span]


def _t(cls):
    """Decorator: a frozen term dataclass with a non-compared span slot."""
    return dataclass(frozen=True)(cls)


@dataclass(frozen=True)
class Const(Term):
    value: object  # bool | int | str; bool checked before int everywhere
    span: Optional[Span] = field(default=None, compare=False)

    @property
    def literal_kind(self) -> str:
        if isinstance(self.value, bool):
            return "bool"
        if isinstance(self.value, int):
            return "int"
        return "string"


@dataclass(frozen=True)
class Var(Term):
    name: str
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Lam(Term):
    param: str
    annot: Type
    body: Term
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class TyLam(Term):
    param: str
    kind: Kind
    body: Term
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class TyApp(Term):
    fn: Term
    arg: ConOrRow
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Fix(Term):
    name: str
    annot: Type
    body: Term
    unrolls: int = field(default=0, compare=False)
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class If(Term):
    cond: Term
    then: Term
    els: Term
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Plus(Term):
    lhs: Term
    rhs: Term
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Eq(Term):
    lhs: Term
    rhs: Term
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class EmptyRecord(Term):
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class RecordExt(Term):
    label: str
    head: Term
    tail: Term
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Project(Term):
    rec: Term
    label: str
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class TermRmap(Term):
    row: RowConstructor
    fn: Term
    rec: Term
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class TermRfold(Term):
    row: RowConstructor
    combine: Term
    init: Term
    rec: Term
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class EmptyList(Term):
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Singleton(Term):
    elem: Term
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Concat(Term):
    lhs: Term
    rhs: Term
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class For(Term):
    binder: str
    source: Term
    body: Term
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Table(Term):
    name: str
    schema: RowType
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class TrLit(Term):
    arg: Term
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class TrIf(Term):
    arg: Term
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class TrFor(Term):
    con: Constructor
    arg: Term
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class TrCell(Term):
    arg: Term
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class TrOpEq(Term):
    con: Constructor
    arg: Term
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class TrOpPlus(Term):
    arg: Term
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Tracecase(Term):
    """Branch order fixed: Lit, If, For, Cell, OpEq, OpPlus.

    Lit/If/Cell/OpPlus branches bind one term variable; For and OpEq
    additionally bind a type variable.
    """

    scrutinee: Term
    lit_var: str
    lit_body: Term
    if_var: str
    if_body: Term
    for_tyvar: str
    for_var: str
    for_body: Term
    cell_var: str
    cell_body: Term
    opeq_tyvar: str
    opeq_var: str
    opeq_body: Term
    opplus_var: str
    opplus_body: Term
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Typecase(Term):
    """Branch order fixed: Bool, Int, String, List, Record, Trace.

    Carries an explicit motive (motive_var, motive): the result type as a
    function of the scrutinee constructor.
    """

    scrutinee: Constructor
    motive_var: str
    motive: Type
    on_bool: Term
    on_int: Term
    on_string: Term
    list_tyvar: str
    on_list: Term
    record_rowvar: str
    on_record: Term
    trace_tyvar: str
    on_trace: Term
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class TraceSplice(Term):
    """Surface `trace M`: replaced by the self-traced form of M before
    typechecking.  Never appears in elaborated programs."""

    arg: Term
    span: Optional[Span] = field(default=None, compare=False)


def record_of(fields: dict[str, Term]) -> Term:
    term: Term = EmptyRecord()
    for label in sorted(fields, reverse=True):
        term = RecordExt(label, fields[label], term)
    return term


def record_spine(term: Term) -> tuple[dict[str, Term], Optional[Term]]:
    """Known label/value prefix of a record term plus residual non-literal
    tail (None when the spine ends in the empty record)."""
    fields: dict[str, Term] = {}
    while isinstance(term, RecordExt):
        fields[term.label] = term.head
        term = term.tail
    if isinstance(term, EmptyRecord):
        return fields, None
    return fields, term


# ---------------------------------------------------------------------------
# Fresh names

_counter = itertools.count(1)


def fresh(base: str) -> str:
    base = base.split("!", 1)[0] or "x"
    return f"{base}!{next(_counter)}"


def base_name(name: str) -> str:
    return name.split("!", 1)[0] or "x"


# ---------------------------------------------------------------------------
# Free variables


def free_con_vars(c: ConOrRow) -> set[str]:
    match c:
        case CVar(name) | RVar(name):
            return {name}
        case CLam(param, _, body):
            return free_con_vars(body) - {param}
        case CApp(fn, arg):
            return free_con_vars(fn) | free_con_vars(arg)
        case ListC(e) | TraceC(e):
            return free_con_vars(e)
        case RecordC(row):
            return free_con_vars(row)
        case Typerec():
            out = free_con_vars(c.scrutinee)
            for b in c.branches():
                out |= free_con_vars(b)
            return out
        case RExtend(_, head, tail):
            return free_con_vars(head) | free_con_vars(tail)
        case RMap(fn, row):
            return free_con_vars(fn) | free_con_vars(row)
        case _:
            return set()


def free_type_con_vars(t: Type | RowType) -> set[str]:
    match t:
        case Embed(con):
            return free_con_vars(con)
        case FunT(dom, cod):
            return free_type_con_vars(dom) | free_type_con_vars(cod)
        case ListT(e) | TraceT(e):
            return free_type_con_vars(e)
        case RecordT(row):
            return free_type_con_vars(row)
        case Forall(param, _, body):
            return free_type_con_vars(body) - {param}
        case TExtend(_, head, tail):
            return free_type_con_vars(head) | free_type_con_vars(tail)
        case _:
            return set()


_FV_CACHE: dict[int, tuple[Term, frozenset[str]]] = {}


def cached_free_term_vars(m: Term) -> frozenset[str]:
    """Memoized free term variables; safe because terms are immutable and
    entries pin their keys.  Recursive through the cache, so shared subtrees
    are computed once."""
    key = id(m)
    hit = _FV_CACHE.get(key)
    if hit is not None and hit[0] is m:
        return hit[1]
    if len(_FV_CACHE) > 400_000:
        _FV_CACHE.clear()
    match m:
        case Var(name):
            out = frozenset((name,))
        case Lam(param, _, body):
            out = cached_free_term_vars(body) - {param}
        case Fix(name, _, body):
            out = cached_free_term_vars(body) - {name}
        case For(binder, source, body):
            out = cached_free_term_vars(source) | (
                cached_free_term_vars(body) - {binder})
        case Tracecase():
            out = cached_free_term_vars(m.scrutinee)
            out |= cached_free_term_vars(m.lit_body) - {m.lit_var}
            out |= cached_free_term_vars(m.if_body) - {m.if_var}
            out |= cached_free_term_vars(m.for_body) - {m.for_var}
            out |= cached_free_term_vars(m.cell_body) - {m.cell_var}
            out |= cached_free_term_vars(m.opeq_body) - {m.opeq_var}
            out |= cached_free_term_vars(m.opplus_body) - {m.opplus_var}
            out = frozenset(out)
        case _:
            acc: set[str] = set()
            for child in term_children(m):
                acc |= cached_free_term_vars(child)
            out = frozenset(acc)
    out = frozenset(out)
    _FV_CACHE[key] = (m, out)
    return out


def free_term_vars(m: Term) -> set[str]:
    match m:
        case Var(name):
            return {name}
        case Lam(param, _, body):
            return free_term_vars(body) - {param}
        case Fix(name, _, body):
            return free_term_vars(body) - {name}
        case For(binder, source, body):
            return free_term_vars(source) | (free_term_vars(body) - {binder})
        case Tracecase():
            out = free_term_vars(m.scrutinee)
            out |= free_term_vars(m.lit_body) - {m.lit_var}
            out |= free_term_vars(m.if_body) - {m.if_var}
            out |= free_term_vars(m.for_body) - {m.for_var}
            out |= free_term_vars(m.cell_body) - {m.cell_var}
            out |= free_term_vars(m.opeq_body) - {m.opeq_var}
            out |= free_term_vars(m.opplus_body) - {m.opplus_var}
            return out
        case _:
            out: set[str] = set()
            for child in term_children(m):
                out |= free_term_vars(child)
            return out


_FTV_CACHE: dict[int, tuple[Term, frozenset[str]]] = {}


def cached_free_tyvars_in_term(m: Term) -> frozenset[str]:
    """Bottom-up memoized variant of free_tyvars_in_term."""
    key = id(m)
    hit = _FTV_CACHE.get(key)
    if hit is not None and hit[0] is m:
        return hit[1]
    if len(_FTV_CACHE) > 400_000:
        _FTV_CACHE.clear()
    rec = cached_free_tyvars_in_term
    match m:
        case TyLam(param, _, body):
            out = rec(body) - {param}
        case TyApp(fn, arg):
            out = rec(fn) | free_con_vars(arg)
        case Lam(_, annot, body):
            out = frozenset(free_type_con_vars(annot)) | rec(body)
        case Fix(_, annot, body):
            out = frozenset(free_type_con_vars(annot)) | rec(body)
        case Table(_, schema):
            out = frozenset(free_type_con_vars(schema))
        case TermRmap(row, fn, rc):
            out = frozenset(free_con_vars(row)) | rec(fn) | rec(rc)
        case TermRfold(row, combine, init, rc):
            out = (frozenset(free_con_vars(row)) | rec(combine)
                   | rec(init) | rec(rc))
        case TrFor(con, arg) | TrOpEq(con, arg):
            out = frozenset(free_con_vars(con)) | rec(arg)
        case Tracecase():
            out = (rec(m.scrutinee) | rec(m.lit_body) | rec(m.if_body)
                   | (rec(m.for_body) - {m.for_tyvar}) | rec(m.cell_body)
                   | (rec(m.opeq_body) - {m.opeq_tyvar}) | rec(m.opplus_body))
        case Typecase():
            out = (frozenset(free_con_vars(m.scrutinee))
                   | (frozenset(free_type_con_vars(m.motive)) - {m.motive_var})
                   | rec(m.on_bool) | rec(m.on_int) | rec(m.on_string)
                   | (rec(m.on_list) - {m.list_tyvar})
                   | (rec(m.on_record) - {m.record_rowvar})
                   | (rec(m.on_trace) - {m.trace_tyvar}))
        case _:
            acc: frozenset[str] = frozenset()
            for child in term_children(m):
                acc |= rec(child)
            out = acc
    out = frozenset(out)
    _FTV_CACHE[key] = (m, out)
    return out


def free_tyvars_in_term(m: Term) -> set[str]:
    """Free constructor/row variables occurring in annotations, constructor
    arguments, and motives inside a term."""
    out: set[str] = set()

    def go(t: Term, bound: frozenset[str]) -> None:
        def cvars(x: ConOrRow | Type | RowType) -> None:
            if isinstance(x, (Type, RowType)):
                out.update(free_type_con_vars(x) - bound)
            else:
                out.update(free_con_vars(x) - bound)

        match t:
            case Lam(_, annot, body):
                cvars(annot)
                go(body, bound)
            case Fix(_, annot, body):
                cvars(annot)
                go(body, bound)
            case TyLam(param, _, body):
                go(body, bound | {param})
            case TyApp(fn, arg):
                go(fn, bound)
                cvars(arg)
            case TermRmap(row, fn, rec):
                cvars(row)
                go(fn, bound)
                go(rec, bound)
            case TermRfold(row, combine, init, rec):
                cvars(row)
                go(combine, bound)
                go(init, bound)
                go(rec, bound)
            case Table(_, schema):
                cvars(schema)
            case TrFor(con, arg) | TrOpEq(con, arg):
                cvars(con)
                go(arg, bound)
            case Tracecase():
                go(t.scrutinee, bound)
                go(t.lit_body, bound)
                go(t.if_body, bound)
                go(t.for_body, bound | {t.for_tyvar})
                go(t.cell_body, bound)
                go(t.opeq_body, bound | {t.opeq_tyvar})
                go(t.opplus_body, bound)
            case Typecase():
                cvars(t.scrutinee)
                out.update(free_type_con_vars(t.motive) - (bound | {t.motive_var}))
                go(t.on_bool, bound)
                go(t.on_int, bound)
                go(t.on_string, bound)
                go(t.on_list, bound | {t.list_tyvar})
                go(t.on_record, bound | {t.record_rowvar})
                go(t.on_trace, bound | {t.trace_tyvar})
            case _:
                for child in term_children(t):
                    go(child, bound)

    go(m, frozenset())
    return out


def term_children(m: Term) -> Iterator[Term]:
    match m:
        case Lam(_, _, body) | TyLam(_, _, body) | Fix(_, _, body):
            yield body
        case App(fn, arg):
            yield fn
            yield arg
        case TyApp(fn, _):
            yield fn
        case If(c, t, e):
            yield c
            yield t
            yield e
        case Plus(l, r) | Eq(l, r) | Concat(l, r):
            yield l
            yield r
        case RecordExt(_, head, tail):
            yield head
            yield tail
        case Project(rec, _):
            yield rec
        case TermRmap(_, fn, rec):
            yield fn
            yield rec
        case TermRfold(_, combine, init, rec):
            yield combine
            yield init
            yield rec
        case Singleton(e) | TrLit(e) | TrIf(e) | TrCell(e) | TrOpPlus(e) | TraceSplice(e):
            yield e
        case TrFor(_, e) | TrOpEq(_, e):
            yield e
        case For(_, source, body):
            yield source
            yield body
        case Tracecase():
            yield m.scrutinee
            yield m.lit_body
            yield m.if_body
            yield m.for_body
            yield m.cell_body
            yield m.opeq_body
            yield m.opplus_body
        case Typecase():
            yield m.on_bool
            yield m.on_int
            yield m.on_string
            yield m.on_list
            yield m.on_record
            yield m.on_trace
        case _:
            return


# ---------------------------------------------------------------------------
# Alpha equality


def alpha_equal_con(a: ConOrRow, b: ConOrRow,
                    env_a: dict[str, int] | None = None,
                    env_b: dict[str, int] | None = None,
                    depth: int = 0) -> bool:
    env_a = env_a or {}
    env_b = env_b or {}

    def var_eq(x: str, y: str) -> bool:
        ia, ib = env_a.get(x), env_b.get(y)
        if ia is None and ib is None:
            return x == y
        return ia == ib

    match (a, b):
        case (BoolC(), BoolC()) | (IntC(), IntC()) | (StringC(), StringC()):
            return True
        case (REmpty(), REmpty()):
            return True
        case (CVar(x), CVar(y)) | (RVar(x), RVar(y)):
            return var_eq(x, y)
        case (CLam(px, kx, bx), CLam(py, ky, by)):
            if kx != ky:
                return False
            return alpha_equal_con(bx, by,
                                   {**env_a, px: depth}, {**env_b, py: depth},
                                   depth + 1)
        case (CApp(f1, a1), CApp(f2, a2)):
            return (alpha_equal_con(f1, f2, env_a, env_b, depth)
                    and alpha_equal_con(a1, a2, env_a, env_b, depth))
        case (ListC(x), ListC(y)) | (TraceC(x), TraceC(y)):
            return alpha_equal_con(x, y, env_a, env_b, depth)
        case (RecordC(r1), RecordC(r2)):
            return alpha_equal_con(r1, r2, env_a, env_b, depth)
        case (Typerec(), Typerec()):
            if not alpha_equal_con(a.scrutinee, b.scrutinee, env_a, env_b, depth):
                return False
            return all(alpha_equal_con(x, y, env_a, env_b, depth)
                       for x, y in zip(a.branches(), b.branches()))
        case (RExtend(l1, h1, t1), RExtend(l2, h2, t2)):
            return (l1 == l2
                    and alpha_equal_con(h1, h2, env_a, env_b, depth)
                    and alpha_equal_con(t1, t2, env_a, env_b, depth))
        case (RMap(f1, r1), RMap(f2, r2)):
            return (alpha_equal_con(f1, f2, env_a, env_b, depth)
                    and alpha_equal_con(r1, r2, env_a, env_b, depth))
        case _:
            return False


def alpha_equal_type(a: Type | RowType, b: Type | RowType,
                     env_a: dict[str, int] | None = None,
                     env_b: dict[str, int] | None = None,
                     depth: int = 0) -> bool:
    env_a = env_a or {}
    env_b = env_b or {}
    match (a, b):
        case (BoolT(), BoolT()) | (IntT(), IntT()) | (StringT(), StringT()) | (TEmpty(), TEmpty()):
            return True
        case (Embed(c1), Embed(c2)):
            return alpha_equal_con(c1, c2, env_a, env_b, depth)
        case (FunT(d1, c1), FunT(d2, c2)):
            return (alpha_equal_type(d1, d2, env_a, env_b, depth)
                    and alpha_equal_type(c1, c2, env_a, env_b, depth))
        case (ListT(x), ListT(y)) | (TraceT(x), TraceT(y)):
            return alpha_equal_type(x, y, env_a, env_b, depth)
        case (RecordT(r1), RecordT(r2)):
            return alpha_equal_type(r1, r2, env_a, env_b, depth)
        case (Forall(p1, k1, b1), Forall(p2, k2, b2)):
            if k1 != k2:
                return False
            return alpha_equal_type(b1, b2,
                                    {**env_a, p1: depth}, {**env_b, p2: depth},
                                    depth + 1)
        case (TExtend(l1, h1, t1), TExtend(l2, h2, t2)):
            return (l1 == l2
                    and alpha_equal_type(h1, h2, env_a, env_b, depth)
                    and alpha_equal_type(t1, t2, env_a, env_b, depth))
        case _:
            return False


def alpha_equal(a: Term, b: Term) -> bool:
    return _alpha_term(a, b, {}, {}, {}, {}, 0)


def _alpha_term(a: Term, b: Term,
                ta: dict[str, int], tb: dict[str, int],
                ca: dict[str, int], cb: dict[str, int],
                depth: int) -> bool:
    def var_eq(x: str, y: str) -> bool:
        ia, ib = ta.get(x), tb.get(y)
        if ia is None and ib is None:
            return x == y
        return ia == ib

    def con_eq(x: ConOrRow, y: ConOrRow) -> bool:
        return alpha_equal_con(x, y, ca, cb, depth)

    def ty_eq(x: Type | RowType, y: Type | RowType) -> bool:
        return alpha_equal_type(x, y, ca, cb, depth)

    match (a, b):
        case (Const(v1), Const(v2)):
            return type(v1) is type(v2) and v1 == v2
        case (Var(x), Var(y)):
            return var_eq(x, y)
        case (Lam(p1, a1, b1), Lam(p2, a2, b2)):
            return ty_eq(a1, a2) and _alpha_term(
                b1, b2, {**ta, p1: depth}, {**tb, p2: depth}, ca, cb, depth + 1)
        case (Fix(n1, a1, b1), Fix(n2, a2, b2)):
            return ty_eq(a1, a2) and _alpha_term(
                b1, b2, {**ta, n1: depth}, {**tb, n2: depth}, ca, cb, depth + 1)
        case (TyLam(p1, k1, b1), TyLam(p2, k2, b2)):
            return k1 == k2 and _alpha_term(
                b1, b2, ta, tb, {**ca, p1: depth}, {**cb, p2: depth}, depth + 1)
        case (App(f1, x1), App(f2, x2)):
            return (_alpha_term(f1, f2, ta, tb, ca, cb, depth)
                    and _alpha_term(x1, x2, ta, tb, ca, cb, depth))
        case (TyApp(f1, c1), TyApp(f2, c2)):
            return _alpha_term(f1, f2, ta, tb, ca, cb, depth) and con_eq(c1, c2)
        case (If(c1, t1, e1), If(c2, t2, e2)):
            return all((_alpha_term(c1, c2, ta, tb, ca, cb, depth),
                        _alpha_term(t1, t2, ta, tb, ca, cb, depth),
                        _alpha_term(e1, e2, ta, tb, ca, cb, depth)))
        case ((Plus(l1, r1), Plus(l2, r2)) | (Eq(l1, r1), Eq(l2, r2))
              | (Concat(l1, r1), Concat(l2, r2))):
            return (_alpha_term(l1, l2, ta, tb, ca, cb, depth)
                    and _alpha_term(r1, r2, ta, tb, ca, cb, depth))
        case (EmptyRecord(), EmptyRecord()) | (EmptyList(), EmptyList()):
            return True
        case (RecordExt(l1, h1, t1), RecordExt(l2, h2, t2)):
            return (l1 == l2
                    and _alpha_term(h1, h2, ta, tb, ca, cb, depth)
                    and _alpha_term(t1, t2, ta, tb, ca, cb, depth))
        case (Project(r1, l1), Project(r2, l2)):
            return l1 == l2 and _alpha_term(r1, r2, ta, tb, ca, cb, depth)
        case (TermRmap(s1, f1, r1), TermRmap(s2, f2, r2)):
            return (con_eq(s1, s2)
                    and _alpha_term(f1, f2, ta, tb, ca, cb, depth)
                    and _alpha_term(r1, r2, ta, tb, ca, cb, depth))
        case (TermRfold(s1, c1, i1, r1), TermRfold(s2, c2, i2, r2)):
            return (con_eq(s1, s2)
                    and _alpha_term(c1, c2, ta, tb, ca, cb, depth)
                    and _alpha_term(i1, i2, ta, tb, ca, cb, depth)
                    and _alpha_term(r1, r2, ta, tb, ca, cb, depth))
        case (Singleton(x), Singleton(y)):
            return _alpha_term(x, y, ta, tb, ca, cb, depth)
        case (For(v1, s1, b1), For(v2, s2, b2)):
            return _alpha_term(s1, s2, ta, tb, ca, cb, depth) and _alpha_term(
                b1, b2, {**ta, v1: depth}, {**tb, v2: depth}, ca, cb, depth + 1)
        case (Table(n1, s1), Table(n2, s2)):
            return n1 == n2 and ty_eq(s1, s2)
        case ((TrLit(x), TrLit(y)) | (TrIf(x), TrIf(y)) | (TrCell(x), TrCell(y))
              | (TrOpPlus(x), TrOpPlus(y)) | (TraceSplice(x), TraceSplice(y))):
            return _alpha_term(x, y, ta, tb, ca, cb, depth)
        case (TrFor(c1, x), TrFor(c2, y)) | (TrOpEq(c1, x), TrOpEq(c2, y)):
            return con_eq(c1, c2) and _alpha_term(x, y, ta, tb, ca, cb, depth)
        case (Tracecase(), Tracecase()):
            if not _alpha_term(a.scrutinee, b.scrutinee, ta, tb, ca, cb, depth):
                return False
            d = depth

            def br(x1, m1, x2, m2):
                return _alpha_term(m1, m2, {**ta, x1: d}, {**tb, x2: d},
                                   ca, cb, d + 1)

            def br2(a1, x1, m1, a2, x2, m2):
                return _alpha_term(m1, m2, {**ta, x1: d}, {**tb, x2: d},
                                   {**ca, a1: d}, {**cb, a2: d}, d + 1)

            return all((br(a.lit_var, a.lit_body, b.lit_var, b.lit_body),
                        br(a.if_var, a.if_body, b.if_var, b.if_body),
                        br2(a.for_tyvar, a.for_var, a.for_body,
                            b.for_tyvar, b.for_var, b.for_body),
                        br(a.cell_var, a.cell_body, b.cell_var, b.cell_body),
                        br2(a.opeq_tyvar, a.opeq_var, a.opeq_body,
                            b.opeq_tyvar, b.opeq_var, b.opeq_body),
                        br(a.opplus_var, a.opplus_body,
                           b.opplus_var, b.opplus_body)))
        case (Typecase(), Typecase()):
            if not con_eq(a.scrutinee, b.scrutinee):
                return False
            d = depth
            if not alpha_equal_type(a.motive, b.motive,
                                    {**ca, a.motive_var: d},
                                    {**cb, b.motive_var: d}, d + 1):
                return False

            def plain(m1, m2):
                return _alpha_term(m1, m2, ta, tb, ca, cb, d)

            def bound(v1, m1, v2, m2):
                return _alpha_term(m1, m2, ta, tb,
                                   {**ca, v1: d}, {**cb, v2: d}, d + 1)

            return all((plain(a.on_bool, b.on_bool),
                        plain(a.on_int, b.on_int),
                        plain(a.on_string, b.on_string),
                        bound(a.list_tyvar, a.on_list, b.list_tyvar, b.on_list),
                        bound(a.record_rowvar, a.on_record,
                              b.record_rowvar, b.on_record),
                        bound(a.trace_tyvar, a.on_trace,
                              b.trace_tyvar, b.on_trace)))
        case _:
            return False
