"""Kinding, constructor computation, and the equivalence procedures.

Constructor reduction follows a fixed leftmost-outermost strategy; the rules
are exactly the computation rules (type-level beta, the two Rmap rules, the
six Typerec rules) plus congruences.  Equivalence normalizes both sides and
then compares alpha-equal normal forms after a canonicalization pass that
eta-contracts type lambdas and fuses nested row maps; the fusion equations
are not reduction steps, so the normal-form classifier stays aligned with
the reduction relation.  The procedure is sound; it is documented as
possibly incomplete on adversarial neutral constructors.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional

from . import ast as A
from .ast import (
    BoolC, BoolT, CApp, CLam, ConOrRow, CVar, Embed, Forall, FunT, IntC,
    IntT, KArrow, Kind, ListC, ListT, RecordC, RecordT, REmpty, RExtend,
    RMap, RowType, RVar, StringC, StringT, TEmpty, TExtend, TraceC, TraceT,
    Type, Typerec, TYPE, ROW, fresh, free_con_vars,
)
from .errors import (
    FuelExhausted, KindMismatch, NotComparable, UnboundTypeVariable,
)

DEFAULT_CONSTRUCTOR_FUEL = 100_000


def constructor_fuel() -> int:
    env = os.environ.get("TRACELINKS_FUEL")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return DEFAULT_CONSTRUCTOR_FUEL


# ---------------------------------------------------------------------------
# Contexts


@dataclass(frozen=True)
class TypeBinding:
    name: str
    kind: Kind


@dataclass(frozen=True)
class TermBinding:
    name: str
    ty: Type


@dataclass(frozen=True)
class Context:
    bindings: tuple = ()

    def extend_type(self, name: str, kind: Kind) -> "Context":
        return Context(self.bindings + (TypeBinding(name, kind),))

    def extend_term(self, name: str, ty: Type) -> "Context":
        return Context(self.bindings + (TermBinding(name, ty),))

    def lookup_type(self, name: str) -> Optional[Kind]:
        for b in reversed(self.bindings):
            if isinstance(b, TypeBinding) and b.name == name:
                return b.kind
        return None

    def lookup_term(self, name: str) -> Optional[Type]:
        for b in reversed(self.bindings):
            if isinstance(b, TermBinding) and b.name == name:
                return b.ty
        return None

    def names(self) -> set[str]:
        return {b.name for b in self.bindings}


EMPTY_CONTEXT = Context()


# ---------------------------------------------------------------------------
# Capture-avoiding substitution on constructors


def subst_con(c: ConOrRow, mapping: dict[str, ConOrRow]) -> ConOrRow:
    if not mapping:
        return c
    free_in_values: set[str] = set()
    for v in mapping.values():
        free_in_values |= free_con_vars(v)

    def go(c: ConOrRow, mapping: dict[str, ConOrRow]) -> ConOrRow:
        match c:
            case CVar(name):
                return mapping.get(name, c)
            case RVar(name):
                return mapping.get(name, c)
            case CLam(param, kind, body):
                inner = {k: v for k, v in mapping.items() if k != param}
                if not inner:
                    return c
                if param in free_in_values:
                    renamed = fresh(param)
                    body = go(body, {param: CVar(renamed)})
                    param = renamed
                return CLam(param, kind, go(body, inner))
            case CApp(fn, arg):
                return CApp(go(fn, mapping), go(arg, mapping))
            case ListC(e):
                return ListC(go(e, mapping))
            case TraceC(e):
                return TraceC(go(e, mapping))
            case RecordC(row):
                return RecordC(go(row, mapping))
            case Typerec():
                return Typerec(go(c.scrutinee, mapping),
                               *(go(b, mapping) for b in c.branches()))
            case RExtend(label, head, tail):
                return RExtend(label, go(head, mapping), go(tail, mapping))
            case RMap(fn, row):
                return RMap(go(fn, mapping), go(row, mapping))
            case _:
                return c

    return go(c, mapping)


def subst_type(t: Type | RowType, mapping: dict[str, ConOrRow]):
    if not mapping:
        return t
    match t:
        case Embed(con):
            return Embed(subst_con(con, mapping))
        case FunT(dom, cod):
            return FunT(subst_type(dom, mapping), subst_type(cod, mapping))
        case ListT(e):
            return ListT(subst_type(e, mapping))
        case TraceT(e):
            return TraceT(subst_type(e, mapping))
        case RecordT(row):
            return RecordT(subst_type(row, mapping))
        case Forall(param, kind, body):
            inner = {k: v for k, v in mapping.items() if k != param}
            if not inner:
                return t
            captured = set()
            for v in inner.values():
                captured |= free_con_vars(v)
            if param in captured:
                renamed = fresh(param)
                body = subst_type(body, {param: CVar(renamed)})
                param = renamed
            return Forall(param, kind, subst_type(body, inner))
        case TExtend(label, head, tail):
            return TExtend(label, subst_type(head, mapping),
                           subst_type(tail, mapping))
        case _:
            return t


# ---------------------------------------------------------------------------
# Kinding


def kind_of_constructor(ctx: Context, c: ConOrRow) -> Kind:
    match c:
        case BoolC() | IntC() | StringC():
            return TYPE
        case CVar(name):
            kind = ctx.lookup_type(name)
            if kind is None:
                raise UnboundTypeVariable(f"unbound type variable {name!r}")
            return kind
        case CLam(param, kind, body):
            inner = ctx.extend_type(param, kind)
            return KArrow(kind, kind_of_constructor(inner, body))
        case CApp(fn, arg):
            fn_kind = kind_of_constructor(ctx, fn)
            if not isinstance(fn_kind, KArrow):
                raise KindMismatch(
                    f"applied constructor has kind {fn_kind}, not an arrow",
                    constructor=repr(fn))
            arg_kind = kind_of_constructor(ctx, arg)
            if arg_kind != fn_kind.dom:
                raise KindMismatch(
                    f"constructor argument has kind {arg_kind}, expected {fn_kind.dom}",
                    constructor=repr(arg))
            return fn_kind.cod
        case ListC(e) | TraceC(e):
            _expect_kind(ctx, e, TYPE)
            return TYPE
        case RecordC(row):
            _expect_kind(ctx, row, ROW)
            return TYPE
        case Typerec():
            _expect_kind(ctx, c.scrutinee, TYPE)
            k = kind_of_constructor(ctx, c.on_bool)
            _expect_kind(ctx, c.on_int, k)
            _expect_kind(ctx, c.on_string, k)
            _expect_kind(ctx, c.on_list, KArrow(TYPE, KArrow(k, k)))
            _expect_kind(ctx, c.on_record, KArrow(ROW, KArrow(ROW, k)))
            _expect_kind(ctx, c.on_trace, KArrow(TYPE, KArrow(k, k)))
            return k
        case REmpty():
            return ROW
        case RExtend(_, head, tail):
            _expect_kind(ctx, head, TYPE)
            _expect_kind(ctx, tail, ROW)
            return ROW
        case RVar(name):
            kind = ctx.lookup_type(name)
            if kind is None:
                raise UnboundTypeVariable(f"unbound row variable {name!r}")
            return kind
        case RMap(fn, row):
            _expect_kind(ctx, fn, KArrow(TYPE, TYPE))
            _expect_kind(ctx, row, ROW)
            return ROW
    raise AssertionError(f"unkindable constructor {c!r}")


def _expect_kind(ctx: Context, c: ConOrRow, expected: Kind) -> None:
    actual = kind_of_constructor(ctx, c)
    if actual != expected:
        raise KindMismatch(
            f"constructor has kind {actual}, expected {expected}",
            constructor=repr(c))


def kind_of_type(ctx: Context, t: Type | RowType) -> Kind:
    match t:
        case BoolT() | IntT() | StringT():
            return TYPE
        case Embed(con):
            kind = kind_of_constructor(ctx, con)
            if kind not in (TYPE, ROW):
                raise KindMismatch(
                    f"embedded constructor has kind {kind}, expected Type or Row",
                    constructor=repr(con))
            return kind
        case FunT(dom, cod):
            _expect_type_kind(ctx, dom, TYPE)
            _expect_type_kind(ctx, cod, TYPE)
            return TYPE
        case ListT(e) | TraceT(e):
            _expect_type_kind(ctx, e, TYPE)
            return TYPE
        case RecordT(row):
            _expect_type_kind(ctx, row, ROW)
            return TYPE
        case Forall(param, kind, body):
            inner = ctx.extend_type(param, kind)
            _expect_type_kind(inner, body, TYPE)
            return TYPE
        case TEmpty():
            return ROW
        case TExtend(_, head, tail):
            _expect_type_kind(ctx, head, TYPE)
            _expect_type_kind(ctx, tail, ROW)
            return ROW
    raise AssertionError(f"unkindable type {t!r}")


def _expect_type_kind(ctx: Context, t: Type | RowType, expected: Kind) -> None:
    actual = kind_of_type(ctx, t)
    if actual != expected:
        raise KindMismatch(f"type has kind {actual}, expected {expected}",
                           constructor=repr(t))


# ---------------------------------------------------------------------------
# Constructor reduction


def reduce_constructor_step(c: ConOrRow) -> Optional[ConOrRow]:
    match c:
        case CApp(CLam(param, _, body), arg):
            return subst_con(body, {param: arg})
        case CApp(fn, arg):
            fn2 = reduce_constructor_step(fn)
            if fn2 is not None:
                return CApp(fn2, arg)
            arg2 = reduce_constructor_step(arg)
            if arg2 is not None:
                return CApp(fn, arg2)
            return None
        case CLam(param, kind, body):
            body2 = reduce_constructor_step(body)
            return CLam(param, kind, body2) if body2 is not None else None
        case ListC(e):
            e2 = reduce_constructor_step(e)
            return ListC(e2) if e2 is not None else None
        case TraceC(e):
            e2 = reduce_constructor_step(e)
            return TraceC(e2) if e2 is not None else None
        case RecordC(row):
            row2 = reduce_constructor_step(row)
            return RecordC(row2) if row2 is not None else None
        case Typerec():
            scrut = c.scrutinee
            branches = c.branches()
            match scrut:
                case BoolC():
                    return c.on_bool
                case IntC():
                    return c.on_int
                case StringC():
                    return c.on_string
                case ListC(d):
                    return CApp(CApp(c.on_list, d), Typerec(d, *branches))
                case TraceC(d):
                    return CApp(CApp(c.on_trace, d), Typerec(d, *branches))
                case RecordC(row):
                    var = fresh("a")
                    inner = CLam(var, TYPE, Typerec(CVar(var), *branches))
                    return CApp(CApp(c.on_record, row), RMap(inner, row))
            scrut2 = reduce_constructor_step(scrut)
            if scrut2 is not None:
                return Typerec(scrut2, *branches)
            for i, b in enumerate(branches):
                b2 = reduce_constructor_step(b)
                if b2 is not None:
                    new = list(branches)
                    new[i] = b2
                    return Typerec(scrut, *new)
            return None
        case RMap(fn, row):
            match row:
                case REmpty():
                    return REmpty()
                case RExtend(label, head, tail):
                    return RExtend(label, CApp(fn, head), RMap(fn, tail))
            fn2 = reduce_constructor_step(fn)
            if fn2 is not None:
                return RMap(fn2, row)
            row2 = reduce_constructor_step(row)
            if row2 is not None:
                return RMap(fn, row2)
            return None
        case RExtend(label, head, tail):
            head2 = reduce_constructor_step(head)
            if head2 is not None:
                return RExtend(label, head2, tail)
            tail2 = reduce_constructor_step(tail)
            if tail2 is not None:
                return RExtend(label, head, tail2)
            return None
        case _:
            return None


def normalize_constructor(c: ConOrRow, fuel: int | None = None) -> ConOrRow:
    budget = fuel if fuel is not None else constructor_fuel()
    current = c
    for _ in range(budget):
        nxt = reduce_constructor_step(current)
        if nxt is None:
            return current
        current = nxt
    raise FuelExhausted(
        f"constructor normalization exceeded {budget} steps")


# ---------------------------------------------------------------------------
# Normal-form grammar for constructors (sorts C/E/S/U)


def is_neutral_con(c: ConOrRow) -> bool:
    match c:
        case CVar(_):
            return True
        case CApp(fn, arg):
            return is_neutral_con(fn) and (is_normal_con(arg) or is_normal_row(arg))
        case Typerec():
            return (is_neutral_con(c.scrutinee)
                    and all(is_normal_con(b) for b in c.branches()))
        case _:
            return False


def is_normal_con(c: ConOrRow) -> bool:
    match c:
        case BoolC() | IntC() | StringC():
            return True
        case CLam(_, _, body):
            return is_normal_con(body)
        case ListC(e) | TraceC(e):
            return is_normal_con(e)
        case RecordC(row):
            return is_normal_row(row)
        case _:
            return is_neutral_con(c)


def is_neutral_row(row: ConOrRow) -> bool:
    match row:
        case RVar(_):
            return True
        case RExtend(_, head, tail):
            return is_normal_con(head) and is_neutral_row(tail)
        case RMap(fn, inner):
            return is_normal_con(fn) and is_neutral_row(inner)
        case _:
            return False


def is_normal_row(row: ConOrRow) -> bool:
    match row:
        case REmpty():
            return True
        case RExtend(_, head, tail):
            return is_normal_con(head) and is_normal_row(tail)
        case _:
            return is_neutral_row(row)


# ---------------------------------------------------------------------------
# Canonicalization for the equivalence procedures: eta-contraction for type
# lambdas plus row-map fusion (Rmap C (Rmap D S) = Rmap (C . D) S) and the
# identity law (Rmap (\a.a) S = S).  These are equivalence axioms, not
# reduction steps.


def _post_simplify(c: ConOrRow) -> ConOrRow:
    match c:
        case CLam(param, kind, body):
            body = _post_simplify(body)
            if (isinstance(body, CApp) and isinstance(body.arg, CVar)
                    and body.arg.name == param
                    and param not in free_con_vars(body.fn)):
                return body.fn
            return CLam(param, kind, body)
        case CApp(fn, arg):
            return CApp(_post_simplify(fn), _post_simplify(arg))
        case ListC(e):
            return ListC(_post_simplify(e))
        case TraceC(e):
            return TraceC(_post_simplify(e))
        case RecordC(row):
            return RecordC(_post_simplify(row))
        case Typerec():
            return Typerec(_post_simplify(c.scrutinee),
                           *(_post_simplify(b) for b in c.branches()))
        case RExtend(label, head, tail):
            return RExtend(label, _post_simplify(head), _post_simplify(tail))
        case RMap(fn, row):
            fn = _post_simplify(fn)
            row = _post_simplify(row)
            if (isinstance(fn, CLam) and isinstance(fn.body, CVar)
                    and fn.body.name == fn.param):
                return row
            if isinstance(row, RMap):
                var = fresh("a")
                composed = CLam(var, TYPE, CApp(fn, CApp(row.fn, CVar(var))))
                return RMap(composed, row.row)
            return RMap(fn, row)
        case _:
            return c


_CANON_CACHE: dict[int, tuple[ConOrRow, ConOrRow]] = {}


def canonicalize_constructor(c: ConOrRow, fuel: int | None = None) -> ConOrRow:
    key = id(c)
    hit = _CANON_CACHE.get(key)
    if hit is not None and hit[0] is c:
        return hit[1]
    current = normalize_constructor(c, fuel)
    for _ in range(64):
        simplified = _post_simplify(current)
        if simplified is current or A.alpha_equal_con(simplified, current):
            break
        current = normalize_constructor(simplified, fuel)
    if len(_CANON_CACHE) > 200_000:
        _CANON_CACHE.clear()
    _CANON_CACHE[key] = (c, current)
    return current


def constructors_equal(ctx: Context, c1: ConOrRow, c2: ConOrRow,
                       at_kind: Kind | None = None,
                       fuel: int | None = None) -> bool:
    n1 = canonicalize_constructor(c1, fuel)
    n2 = canonicalize_constructor(c2, fuel)
    return A.alpha_equal_con(n1, n2)


# ---------------------------------------------------------------------------
# Embedding normalization for types: push T(.) through constructors


_TYPE_NORM_CACHE: dict[int, tuple] = {}


def type_norm(t: Type | RowType, fuel: int | None = None) -> Type | RowType:
    key = id(t)
    hit = _TYPE_NORM_CACHE.get(key)
    if hit is not None and hit[0] is t:
        return hit[1]
    out = _type_norm_uncached(t, fuel)
    if len(_TYPE_NORM_CACHE) > 200_000:
        _TYPE_NORM_CACHE.clear()
    _TYPE_NORM_CACHE[key] = (t, out)
    return out


def _type_norm_uncached(t: Type | RowType, fuel: int | None):
    match t:
        case Embed(con):
            return _distribute(canonicalize_constructor(con, fuel), fuel)
        case FunT(dom, cod):
            return FunT(type_norm(dom, fuel), type_norm(cod, fuel))
        case ListT(e):
            return ListT(type_norm(e, fuel))
        case TraceT(e):
            return TraceT(type_norm(e, fuel))
        case RecordT(row):
            return RecordT(type_norm(row, fuel))
        case Forall(param, kind, body):
            return Forall(param, kind, type_norm(body, fuel))
        case TExtend(label, head, tail):
            return TExtend(label, type_norm(head, fuel), type_norm(tail, fuel))
        case _:
            return t


def _distribute(con: ConOrRow, fuel: int | None) -> Type:
    match con:
        case BoolC():
            return A.BOOL_T
        case IntC():
            return A.INT_T
        case StringC():
            return A.STRING_T
        case ListC(e):
            return ListT(_distribute(e, fuel))
        case TraceC(e):
            return TraceT(_distribute(e, fuel))
        case RecordC(row):
            fields, tail = A.row_fields(row)
            if isinstance(tail, REmpty):
                trow: RowType = A.TEMPTY
                for label in sorted(fields, reverse=True):
                    trow = TExtend(label, _distribute(fields[label], fuel), trow)
                return RecordT(trow)
            return Embed(RecordC(row))
        case _:
            return Embed(con)


def _is_stuck(t: Type | RowType) -> bool:
    return isinstance(t, Embed)


def types_equal(ctx: Context, a: Type, b: Type, fuel: int | None = None) -> bool:
    na = type_norm(a, fuel)
    nb = type_norm(b, fuel)
    return _types_eq(na, nb, {}, {}, 0)


def _types_eq(a, b, env_a: dict[str, int], env_b: dict[str, int], depth: int) -> bool:
    match (a, b):
        case (BoolT(), BoolT()) | (IntT(), IntT()) | (StringT(), StringT()) | (TEmpty(), TEmpty()):
            return True
        case (Embed(c1), Embed(c2)):
            return A.alpha_equal_con(c1, c2, env_a, env_b, depth)
        case (FunT(d1, c1), FunT(d2, c2)):
            return (_types_eq(d1, d2, env_a, env_b, depth)
                    and _types_eq(c1, c2, env_a, env_b, depth))
        case (ListT(x), ListT(y)) | (TraceT(x), TraceT(y)):
            return _types_eq(x, y, env_a, env_b, depth)
        case (RecordT(r1), RecordT(r2)):
            return _types_eq(r1, r2, env_a, env_b, depth)
        case (Forall(p1, k1, b1), Forall(p2, k2, b2)):
            if k1 != k2:
                return False
            return _types_eq(b1, b2, {**env_a, p1: depth},
                             {**env_b, p2: depth}, depth + 1)
        case (TExtend(l1, h1, t1), TExtend(l2, h2, t2)):
            return (l1 == l2 and _types_eq(h1, h2, env_a, env_b, depth)
                    and _types_eq(t1, t2, env_a, env_b, depth))
        case _:
            if _is_stuck(a) != _is_stuck(b) and (_is_stuck(a) or _is_stuck(b)):
                stuck = a if _is_stuck(a) else b
                if free_con_vars(stuck.con):
                    raise NotComparable(
                        "cannot decide equality: embedded constructor is stuck "
                        f"on a free type variable ({stuck.con!r} vs a concrete type)")
            return False


# ---------------------------------------------------------------------------
# Types <-> constructors


def to_constructor(t: Type | RowType) -> ConOrRow:
    """Re-express a polymorphism-free, function-free type as a constructor.

    Raises ValueError on function or polymorphic types; callers turn that
    into their own diagnostics.
    """
    match t:
        case BoolT():
            return A.BOOL_C
        case IntT():
            return A.INT_C
        case StringT():
            return A.STRING_C
        case Embed(con):
            return con
        case ListT(e):
            return ListC(to_constructor(e))
        case TraceT(e):
            return TraceC(to_constructor(e))
        case RecordT(row):
            return RecordC(to_constructor(row))
        case TEmpty():
            return A.REMPTY
        case TExtend(label, head, tail):
            return RExtend(label, to_constructor(head), to_constructor(tail))
    raise ValueError(f"type has no constructor form: {t!r}")
