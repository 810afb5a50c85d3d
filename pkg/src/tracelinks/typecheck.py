"""Term typing for the full calculus, plus the substitution operations.

`type_of(ctx, m)` synthesizes; `type_of(ctx, m, expected)` checks, which is
how empty lists and case branches get their types.  Conversion is folded in:
every rule that demands agreement goes through `types_equal`.

Two rules are implemented more liberally than their bare statements so the
shipped trace-analysis functions typecheck structurally:

* `rmap` accepts functions of shape `forall a. T(G a) -> T(C a)` for any
  type function G (the plain rule is the `G = identity` case); the argument
  record's row must equal `Rmap G S` for the superscript row S, and the
  result row is `Rmap C S`.  The reduct `<l_i = (M C_i) N.l_i>` types either
  way.
* `tracecase` refines the result type in the OpEq and OpPlus branches: when
  the scrutinee's element type is a type variable, those branches are
  checked with the variable specialized to Bool and Int respectively (in
  those branches the scrutinee's element type is forced).

`rfold`'s record argument is checked to have row `Rmap (\\_. C) S`, i.e.
every field carries the fold's value type C, which is what its reduction
rule consumes.
"""

from __future__ import annotations

from typing import Optional

from . import ast as A
from .ast import (
    App, BOOL_T, BoolT, CApp, CLam, Concat, ConOrRow, Const, Constructor,
    CVar, Embed, EmptyList, EmptyRecord, Eq, Fix, For, Forall, FunT, If,
    INT_T, IntT, Lam, ListT, Plus, Project, RecordC, RecordT, RecordExt,
    REmpty, RMap, RVar, Singleton, STRING_T, StringT, Table, TEmpty,
    TermRfold, TermRmap, TraceC, TraceSplice, TraceT, Tracecase, TrCell,
    TrFor, TrIf, TrLit, TrOpEq, TrOpPlus, Term, TyApp, Typecase, TyLam,
    Type, TYPE, ROW, Var, fresh, free_con_vars, trow_fields,
)
from .errors import (
    BadTableSchema, CannotInfer, KindMismatch, MissingLabel, NotAList,
    NotARecord, NotATrace, RmapFunctionShape, TypeMismatch, UnboundVariable,
)
from .printer import print_type
from .typefns import TRACE
from .types import (
    Context, kind_of_constructor, kind_of_type, subst_con, subst_type,
    to_constructor, type_norm, types_equal,
)


# ---------------------------------------------------------------------------
# Substitution


def substitute_term(m: Term, x: str, n: Term) -> Term:
    return _subst_term(m, {x: n})


def _subst_term(m: Term, mapping: dict[str, Term]) -> Term:
    if not mapping:
        return m
    free: set[str] = set()
    for v in mapping.values():
        free |= A.cached_free_term_vars(v)

    def go(m: Term, mapping: dict[str, Term]) -> Term:
        if not mapping or not (mapping.keys() & A.cached_free_term_vars(m)):
            return m

        def rebind(name: str, *bodies: Term) -> tuple[str, list[Term], dict]:
            inner = {k: v for k, v in mapping.items() if k != name}
            out = list(bodies)
            if inner and name in free:
                renamed = fresh(name)
                out = [_subst_term(b, {name: Var(renamed)}) for b in out]
                name = renamed
            return name, out, inner

        match m:
            case Var(name):
                return mapping.get(name, m)
            case Lam(param, annot, body):
                param, [body], inner = rebind(param, body)
                return Lam(param, annot, go(body, inner), span=m.span)
            case Fix(name, annot, body):
                name, [body], inner = rebind(name, body)
                return Fix(name, annot, go(body, inner),
                           unrolls=m.unrolls, span=m.span)
            case For(binder, source, body):
                src = go(source, mapping)
                binder, [body], inner = rebind(binder, body)
                return For(binder, src, go(body, inner), span=m.span)
            case Tracecase():
                scrut = go(m.scrutinee, mapping)
                lv, [lb], li = rebind(m.lit_var, m.lit_body)
                iv, [ib], ii = rebind(m.if_var, m.if_body)
                fv, [fb], fi = rebind(m.for_var, m.for_body)
                cv, [cb], ci = rebind(m.cell_var, m.cell_body)
                ev, [eb], ei = rebind(m.opeq_var, m.opeq_body)
                pv, [pb], pi = rebind(m.opplus_var, m.opplus_body)
                return A.Tracecase(
                    scrut, lv, go(lb, li), iv, go(ib, ii),
                    m.for_tyvar, fv, go(fb, fi), cv, go(cb, ci),
                    m.opeq_tyvar, ev, go(eb, ei), pv, go(pb, pi), span=m.span)
            case _:
                return _map_children(m, lambda child: go(child, mapping))

    return go(m, mapping)


def _map_children(m: Term, f) -> Term:
    match m:
        case Const() | Var() | EmptyRecord() | EmptyList() | Table():
            return m
        case Lam(param, annot, body):
            return Lam(param, annot, f(body), span=m.span)
        case App(fn, arg):
            return App(f(fn), f(arg), span=m.span)
        case TyLam(param, kind, body):
            return TyLam(param, kind, f(body), span=m.span)
        case TyApp(fn, arg):
            return TyApp(f(fn), arg, span=m.span)
        case Fix(name, annot, body):
            return Fix(name, annot, f(body), unrolls=m.unrolls, span=m.span)
        case If(c, t, e):
            return If(f(c), f(t), f(e), span=m.span)
        case Plus(l, r):
            return Plus(f(l), f(r), span=m.span)
        case Eq(l, r):
            return Eq(f(l), f(r), span=m.span)
        case RecordExt(label, head, tail):
            return RecordExt(label, f(head), f(tail), span=m.span)
        case Project(rec, label):
            return Project(f(rec), label, span=m.span)
        case TermRmap(row, fn, rec):
            return TermRmap(row, f(fn), f(rec), span=m.span)
        case TermRfold(row, combine, init, rec):
            return TermRfold(row, f(combine), f(init), f(rec), span=m.span)
        case Singleton(e):
            return Singleton(f(e), span=m.span)
        case Concat(l, r):
            return Concat(f(l), f(r), span=m.span)
        case For(binder, source, body):
            return For(binder, f(source), f(body), span=m.span)
        case TrLit(e):
            return TrLit(f(e), span=m.span)
        case TrIf(e):
            return TrIf(f(e), span=m.span)
        case TrFor(c, e):
            return TrFor(c, f(e), span=m.span)
        case TrCell(e):
            return TrCell(f(e), span=m.span)
        case TrOpEq(c, e):
            return TrOpEq(c, f(e), span=m.span)
        case TrOpPlus(e):
            return TrOpPlus(f(e), span=m.span)
        case TraceSplice(e):
            return TraceSplice(f(e), span=m.span)
        case Tracecase():
            return A.Tracecase(
                f(m.scrutinee), m.lit_var, f(m.lit_body), m.if_var,
                f(m.if_body), m.for_tyvar, m.for_var, f(m.for_body),
                m.cell_var, f(m.cell_body), m.opeq_tyvar, m.opeq_var,
                f(m.opeq_body), m.opplus_var, f(m.opplus_body), span=m.span)
        case Typecase():
            return A.Typecase(
                m.scrutinee, m.motive_var, m.motive, f(m.on_bool),
                f(m.on_int), f(m.on_string), m.list_tyvar, f(m.on_list),
                m.record_rowvar, f(m.on_record), m.trace_tyvar, f(m.on_trace),
                span=m.span)
    raise AssertionError(f"unmappable term {m!r}")


def substitute_constructor_in_term(m: Term, var: str, c: ConOrRow) -> Term:
    mapping = {var: c}
    free = free_con_vars(c)

    def go(m: Term, mapping: dict[str, ConOrRow]) -> Term:
        if not mapping:
            return m

        def ty(t):
            return subst_type(t, mapping)

        def cn(x):
            return subst_con(x, mapping)

        def rebind_ty(name: str, *bodies):
            inner = {k: v for k, v in mapping.items() if k != name}
            out = list(bodies)
            if inner and name in free:
                renamed = fresh(name)
                out = [substitute_constructor_in_term(b, name, CVar(renamed))
                       if isinstance(b, Term)
                       else subst_type(b, {name: CVar(renamed)})
                       for b in out]
                name = renamed
            return name, out, inner

        match m:
            case Const() | Var() | EmptyRecord() | EmptyList():
                return m
            case Table(name, schema):
                return Table(name, ty(schema), span=m.span)
            case Lam(param, annot, body):
                return Lam(param, ty(annot), go(body, mapping), span=m.span)
            case Fix(name, annot, body):
                return Fix(name, ty(annot), go(body, mapping),
                           unrolls=m.unrolls, span=m.span)
            case TyLam(param, kind, body):
                param, [body], inner = rebind_ty(param, body)
                return TyLam(param, kind, go(body, inner), span=m.span)
            case TyApp(fn, arg):
                return TyApp(go(fn, mapping), cn(arg), span=m.span)
            case TermRmap(row, fn, rec):
                return TermRmap(cn(row), go(fn, mapping), go(rec, mapping),
                                span=m.span)
            case TermRfold(row, combine, init, rec):
                return TermRfold(cn(row), go(combine, mapping),
                                 go(init, mapping), go(rec, mapping), span=m.span)
            case TrFor(con, arg):
                return TrFor(cn(con), go(arg, mapping), span=m.span)
            case TrOpEq(con, arg):
                return TrOpEq(cn(con), go(arg, mapping), span=m.span)
            case Tracecase():
                ftv, [fb], fi = rebind_ty(m.for_tyvar, m.for_body)
                etv, [eb], ei = rebind_ty(m.opeq_tyvar, m.opeq_body)
                return A.Tracecase(
                    go(m.scrutinee, mapping),
                    m.lit_var, go(m.lit_body, mapping),
                    m.if_var, go(m.if_body, mapping),
                    ftv, m.for_var, go(fb, fi),
                    m.cell_var, go(m.cell_body, mapping),
                    etv, m.opeq_var, go(eb, ei),
                    m.opplus_var, go(m.opplus_body, mapping), span=m.span)
            case Typecase():
                mv, [motive], mi = rebind_ty(m.motive_var, m.motive)
                ltv, [lb], li = rebind_ty(m.list_tyvar, m.on_list)
                rtv, [rb], ri = rebind_ty(m.record_rowvar, m.on_record)
                ttv, [tb], ti = rebind_ty(m.trace_tyvar, m.on_trace)
                return A.Typecase(
                    cn(m.scrutinee), mv, subst_type(motive, mi),
                    go(m.on_bool, mapping), go(m.on_int, mapping),
                    go(m.on_string, mapping),
                    ltv, go(lb, li), rtv, go(rb, ri), ttv, go(tb, ti),
                    span=m.span)
            case _:
                return _map_children(m, lambda child: go(child, mapping))

    return go(m, mapping)


# ---------------------------------------------------------------------------
# Typing


_BASES = (BoolT, IntT, StringT)


def _record_row_of(ctx: Context, t: Type, err, span=None) -> dict[str, Type]:
    n = type_norm(t)
    if isinstance(n, RecordT):
        return trow_fields(n.row)
    if isinstance(n, Embed) and isinstance(n.con, RecordC):
        fields, tail = A.row_fields(n.con.row)
        if isinstance(tail, REmpty):
            return {k: Embed(v) for k, v in fields.items()}
    raise err(f"expected a record type, found {print_type(n)}", span=span)


def _is_base(t: Type) -> bool:
    return isinstance(type_norm(t), _BASES)


def type_of(ctx: Context, m: Term, expected: Optional[Type] = None) -> Type:
    """Synthesize m's type, or check m against `expected` and return it."""
    if expected is None:
        return _synth(ctx, m)
    _check(ctx, m, expected)
    return expected


def check_type(ctx: Context, m: Term, expected: Type) -> None:
    _check(ctx, m, expected)


def _mismatch(ctx: Context, m: Term, expected: Type, actual: Type):
    raise TypeMismatch(
        f"expected {print_type(type_norm(expected))}, "
        f"found {print_type(type_norm(actual))}",
        span=m.span,
        expected=print_type(type_norm(expected)),
        actual=print_type(type_norm(actual)))


def _env_key(ctx: Context, m: Term):
    """Identity fingerprint of the context slice a term depends on: the
    binding type objects of its free term variables and the kinds of its
    free type variables.  Two contexts with identical slices give identical
    judgments, so (term id, slice) keys memoized checking; the pinned
    objects ride along in the cache values."""
    fv = A.cached_free_term_vars(m)
    ftv = A.cached_free_tyvars_in_term(m)
    if len(fv) > 8 or len(ftv) > 6:
        return None, ()
    parts = []
    pins = []
    for v in sorted(fv):
        ty = ctx.lookup_term(v)
        if ty is None:
            return None, ()
        parts.append((v, id(ty)))
        pins.append(ty)
    for v in sorted(ftv):
        kind = ctx.lookup_type(v)
        if kind is None:
            return None, ()
        parts.append((v, str(kind)))
    return tuple(parts), tuple(pins)


_CHECK_CACHE: dict = {}


def _check(ctx: Context, m: Term, expected: Type) -> None:
    env_key, pins = (None, ()) if isinstance(m, (Const, Var)) else _env_key(ctx, m)
    if env_key is not None:
        key = (id(m), id(expected), env_key)
        hit = _CHECK_CACHE.get(key)
        if hit is not None and hit[0] is m and hit[1] is expected:
            return
    _check_impl(ctx, m, expected)
    if env_key is not None:
        if len(_CHECK_CACHE) > 200_000:
            _CHECK_CACHE.clear()
        _CHECK_CACHE[(id(m), id(expected), env_key)] = (m, expected, pins)


def _check_impl(ctx: Context, m: Term, expected: Type) -> None:
    norm = type_norm(expected)
    match m:
        case EmptyList():
            if not isinstance(norm, ListT):
                raise _mismatch(ctx, m, expected, ListT(Embed(CVar("_"))))
            return
        case Singleton(elem):
            if isinstance(norm, ListT):
                _check(ctx, elem, norm.elem)
                return
        case Concat(lhs, rhs):
            _check(ctx, lhs, expected)
            _check(ctx, rhs, expected)
            return
        case If(cond, then, els):
            _check(ctx, cond, BOOL_T)
            _check(ctx, then, expected)
            _check(ctx, els, expected)
            return
        case For(binder, source, body):
            if not isinstance(norm, ListT):
                raise _mismatch(ctx, m, expected, ListT(Embed(CVar("_"))))
            if isinstance(source, EmptyList):
                # Degenerate comprehension over a literal empty list: the
                # binder's type is unconstrained and the term reduces to []
                # at any list type, so checking accepts it outright.  Such
                # terms only occur transiently during normalization.
                return
            src = type_norm(_synth(ctx, source))
            if not isinstance(src, ListT):
                raise NotAList(
                    f"comprehension source has type {print_type(src)}",
                    span=m.span)
            ctx2, binder, [body] = _bind_term(ctx, binder, src.elem, body)
            _check(ctx2, body, expected)
            return
        case Lam(param, annot, body):
            if isinstance(norm, FunT):
                kind_of_type(ctx, annot)
                if not types_equal(ctx, annot, norm.dom):
                    raise _mismatch(ctx, m, norm.dom, annot)
                ctx2, param, [body] = _bind_term(ctx, param, annot, body)
                _check(ctx2, body, norm.cod)
                return
        case TyLam(param, kind, body):
            if isinstance(norm, Forall):
                if kind != norm.kind:
                    raise KindMismatch(
                        f"type abstraction binds kind {kind}, "
                        f"expected {norm.kind}", span=m.span)
                ctx2, param, [body] = _bind_con(ctx, param, kind, body)
                body_ty = subst_type(norm.body, {norm.param: _var_of(kind, param)})
                _check(ctx2, body, body_ty)
                return
        case Fix(name, annot, body):
            kind_of_type(ctx, annot)
            if not types_equal(ctx, annot, expected):
                raise _mismatch(ctx, m, expected, annot)
            _synth(ctx, m)
            return
        case Tracecase():
            _type_tracecase(ctx, m, expected)
            return
        case RecordExt() | EmptyRecord() if isinstance(norm, (RecordT, Embed)):
            fields, tail = A.record_spine(m)
            want = _record_row_of(ctx, norm, NotARecord, m.span)
            if tail is None:
                if set(fields) != set(want):
                    raise _mismatch(ctx, m, expected, _synth_or(ctx, m, expected))
                for label, value in fields.items():
                    _check(ctx, value, want[label])
                return
    actual = _synth(ctx, m)
    if not types_equal(ctx, actual, expected):
        raise _mismatch(ctx, m, expected, actual)


def _synth_or(ctx: Context, m: Term, fallback: Type) -> Type:
    try:
        return _synth(ctx, m)
    except CannotInfer:
        return fallback


def _var_of(kind, name: str) -> ConOrRow:
    return RVar(name) if kind == ROW else CVar(name)


def _bind_term(ctx: Context, name: str, ty: Type, *bodies: Term):
    if name in ctx.names():
        renamed = fresh(name)
        bodies = tuple(substitute_term(b, name, Var(renamed)) for b in bodies)
        name = renamed
    return ctx.extend_term(name, ty), name, list(bodies)


def _bind_con(ctx: Context, name: str, kind, *bodies):
    if name in ctx.names():
        renamed = fresh(name)
        out = []
        for b in bodies:
            if isinstance(b, Term):
                out.append(substitute_constructor_in_term(
                    b, name, _var_of(kind, renamed)))
            else:
                out.append(subst_type(b, {name: _var_of(kind, renamed)}))
        bodies = tuple(out)
        name = renamed
    return ctx.extend_type(name, kind), name, list(bodies)


_SYNTH_CACHE: dict = {}


def _synth(ctx: Context, m: Term) -> Type:
    # A term's synthesized type depends only on the context slice its free
    # variables see; the slices stay identical (by object identity) across
    # normalization traces, so this cache makes instrumented preservation
    # checks affordable.
    if isinstance(m, (Const, Var)):
        return _synth_impl(ctx, m)
    env_key, pins = _env_key(ctx, m)
    if env_key is not None:
        hit = _SYNTH_CACHE.get((id(m), env_key))
        if hit is not None and hit[0] is m:
            return hit[1]
    out = _synth_impl(ctx, m)
    if env_key is not None:
        if len(_SYNTH_CACHE) > 200_000:
            _SYNTH_CACHE.clear()
        _SYNTH_CACHE[(id(m), env_key)] = (m, out, pins)
    return out


def _synth_impl(ctx: Context, m: Term) -> Type:
    match m:
        case Const(value):
            if isinstance(value, bool):
                return BOOL_T
            if isinstance(value, int):
                return INT_T
            return STRING_T
        case Var(name):
            ty = ctx.lookup_term(name)
            if ty is None:
                raise UnboundVariable(f"unbound variable {name!r}", span=m.span)
            return ty
        case Lam(param, annot, body):
            kind_of_type(ctx, annot)
            ctx2, param, [body] = _bind_term(ctx, param, annot, body)
            return FunT(annot, _synth(ctx2, body))
        case App(fn, arg):
            fn_ty = type_norm(_synth(ctx, fn))
            if not isinstance(fn_ty, FunT):
                raise TypeMismatch(
                    f"applied term has type {print_type(fn_ty)}, not a function",
                    span=m.span)
            _check(ctx, arg, fn_ty.dom)
            return fn_ty.cod
        case TyLam(param, kind, body):
            ctx2, param, [body] = _bind_con(ctx, param, kind, body)
            return Forall(param, kind, _synth(ctx2, body))
        case TyApp(fn, arg):
            fn_ty = type_norm(_synth(ctx, fn))
            if not isinstance(fn_ty, Forall):
                raise TypeMismatch(
                    f"type-applied term has type {print_type(fn_ty)}, "
                    f"not polymorphic", span=m.span)
            arg_kind = kind_of_constructor(ctx, arg)
            if arg_kind != fn_ty.kind:
                raise KindMismatch(
                    f"type argument has kind {arg_kind}, expected {fn_ty.kind}",
                    span=m.span)
            return subst_type(fn_ty.body, {fn_ty.param: arg})
        case Fix(name, annot, body):
            kind_of_type(ctx, annot)
            if not isinstance(body, (Lam, TyLam)):
                raise TypeMismatch(
                    "fix body must be a term or type abstraction", span=m.span)
            ctx2, name, [body] = _bind_term(ctx, name, annot, body)
            _check(ctx2, body, annot)
            return annot
        case If(cond, then, els):
            _check(ctx, cond, BOOL_T)
            try:
                then_ty = _synth(ctx, then)
            except CannotInfer:
                els_ty = _synth(ctx, els)
                _check(ctx, then, els_ty)
                return els_ty
            _check(ctx, els, then_ty)
            return then_ty
        case Plus(lhs, rhs):
            _check(ctx, lhs, INT_T)
            _check(ctx, rhs, INT_T)
            return INT_T
        case Eq(lhs, rhs):
            try:
                ty = _synth(ctx, lhs)
                _check(ctx, rhs, ty)
            except CannotInfer:
                ty = _synth(ctx, rhs)
                _check(ctx, lhs, ty)
            _check_comparable(ctx, ty, m)
            return BOOL_T
        case EmptyRecord():
            return RecordT(TEmpty())
        case RecordExt(label, head, tail):
            fields, rest = A.record_spine(m)
            out: dict[str, Type] = {k: _synth(ctx, v) for k, v in fields.items()}
            if rest is not None:
                rest_fields = _record_row_of(ctx, _synth(ctx, rest), NotARecord,
                                             m.span)
                overlap = set(out) & set(rest_fields)
                if overlap:
                    raise TypeMismatch(
                        f"record extension duplicates labels {sorted(overlap)}",
                        span=m.span)
                out.update(rest_fields)
            return RecordT(A.trow_of(out))
        case Project(rec, label):
            fields = _record_row_of(ctx, _synth(ctx, rec), NotARecord, m.span)
            if label not in fields:
                raise MissingLabel(
                    f"record has no label {label!r} "
                    f"(labels: {sorted(fields)})", span=m.span)
            return fields[label]
        case TermRmap():
            return _type_rmap(ctx, m)
        case TermRfold():
            return _type_rfold(ctx, m)
        case EmptyList():
            raise CannotInfer(
                "cannot infer the element type of []; "
                "use it where a list type is expected", span=m.span)
        case Singleton(elem):
            return ListT(_synth(ctx, elem))
        case Concat(lhs, rhs):
            try:
                ty = _synth(ctx, lhs)
            except CannotInfer:
                ty = _synth(ctx, rhs)
                _check(ctx, lhs, ty)
                return ty
            _check(ctx, rhs, ty)
            return ty
        case For(binder, source, body):
            src = type_norm(_synth(ctx, source))
            if not isinstance(src, ListT):
                raise NotAList(
                    f"comprehension source has type {print_type(src)}",
                    span=m.span)
            ctx2, binder, [body] = _bind_term(ctx, binder, src.elem, body)
            body_ty = type_norm(_synth(ctx2, body))
            if not isinstance(body_ty, ListT):
                raise NotAList(
                    f"comprehension body has type {print_type(body_ty)}",
                    span=m.span)
            return body_ty
        case Table(name, schema):
            fields = trow_fields(schema)
            if "oid" not in fields or not isinstance(type_norm(fields["oid"]), IntT):
                raise BadTableSchema(
                    f"table {name!r} must declare an oid : Int column",
                    span=m.span)
            for label, ty in fields.items():
                if not _is_base(ty):
                    raise BadTableSchema(
                        f"table {name!r} column {label!r} must have base type",
                        span=m.span)
            return ListT(RecordT(schema))
        case TrLit(arg):
            ty = _synth(ctx, arg)
            if not _is_base(ty):
                raise TypeMismatch(
                    "Lit takes a base-typed argument", span=m.span)
            return TraceT(ty)
        case TrIf(arg):
            fields = _record_row_of(ctx, _synth(ctx, arg), NotARecord, m.span)
            out = _payload(ctx, m, fields, {"cond": TraceT(BOOL_T)}, "out")
            return out
        case TrFor(con, arg):
            _expect_con_kind(ctx, con, TYPE, m)
            fields = _record_row_of(ctx, _synth(ctx, arg), NotARecord, m.span)
            out = _payload(ctx, m, fields,
                           {"in": Embed(CApp(TRACE, con))}, "out")
            return out
        case TrCell(arg):
            fields = _record_row_of(ctx, _synth(ctx, arg), NotARecord, m.span)
            if set(fields) != {"tbl", "col", "row", "val"}:
                raise TypeMismatch(
                    "Cell takes a record {tbl, col, row, val}", span=m.span)
            for label, want in (("tbl", STRING_T), ("col", STRING_T),
                                ("row", INT_T)):
                if not types_equal(ctx, fields[label], want):
                    raise TypeMismatch(
                        f"Cell field {label!r} must have type {print_type(want)}",
                        span=m.span)
            return TraceT(fields["val"])
        case TrOpEq(con, arg):
            _expect_con_kind(ctx, con, TYPE, m)
            fields = _record_row_of(ctx, _synth(ctx, arg), NotARecord, m.span)
            traced = Embed(CApp(TRACE, con))
            if set(fields) != {"l", "r"}:
                raise TypeMismatch("OpEq takes a record {l, r}", span=m.span)
            for label in ("l", "r"):
                if not types_equal(ctx, fields[label], traced):
                    raise TypeMismatch(
                        f"OpEq field {label!r} must have type "
                        f"{print_type(type_norm(traced))}", span=m.span)
            return TraceT(BOOL_T)
        case TrOpPlus(arg):
            fields = _record_row_of(ctx, _synth(ctx, arg), NotARecord, m.span)
            if set(fields) != {"l", "r"}:
                raise TypeMismatch("OpPlus takes a record {l, r}", span=m.span)
            for label in ("l", "r"):
                if not types_equal(ctx, fields[label], TraceT(INT_T)):
                    raise TypeMismatch(
                        f"OpPlus field {label!r} must have type Trace Int",
                        span=m.span)
            return TraceT(INT_T)
        case Tracecase():
            return _type_tracecase(ctx, m, None)
        case Typecase():
            return _type_typecase(ctx, m)
        case TraceSplice():
            raise TypeMismatch(
                "`trace` must be eliminated before typechecking "
                "(run the trace elaboration pass)", span=m.span)
    raise AssertionError(f"untypable term {m!r}")


def _payload(ctx: Context, m: Term, fields: dict[str, Type],
             fixed: dict[str, Type], out_label: str) -> Type:
    want = set(fixed) | {out_label}
    if set(fields) != want:
        raise TypeMismatch(
            f"trace payload must be a record with labels {sorted(want)}",
            span=m.span)
    for label, ty in fixed.items():
        if not types_equal(ctx, fields[label], ty):
            raise TypeMismatch(
                f"trace payload field {label!r} must have type "
                f"{print_type(type_norm(ty))}", span=m.span)
    out = type_norm(fields[out_label])
    if not isinstance(out, TraceT):
        raise NotATrace(
            f"trace payload field {out_label!r} must have a trace type, "
            f"found {print_type(out)}", span=m.span)
    return out


def _expect_con_kind(ctx: Context, con: ConOrRow, kind, m: Term) -> None:
    actual = kind_of_constructor(ctx, con)
    if actual != kind:
        raise KindMismatch(
            f"constructor has kind {actual}, expected {kind}", span=m.span)


def _check_comparable(ctx: Context, ty: Type, m: Term) -> None:
    n = type_norm(ty)
    if isinstance(n, _BASES):
        return
    if isinstance(n, RecordT) and all(
            _is_base(t) for t in trow_fields(n.row).values()):
        return
    # Neutral operand types (free type variables) occur inside polymorphic
    # analysis functions and are permitted; closed queries never produce them.
    if isinstance(n, Embed) and free_con_vars(n.con):
        return
    raise TypeMismatch(
        f"== requires base types or records of base types, "
        f"found {print_type(n)}", span=m.span)


def _type_rmap(ctx: Context, m: TermRmap) -> Type:
    kind = kind_of_constructor(ctx, m.row)
    if kind != ROW:
        raise KindMismatch(f"rmap superscript has kind {kind}, expected Row",
                           span=m.span)
    g_con, c_con = _match_mapper(ctx, m)
    rec_ty = type_norm(_synth(ctx, m.rec))
    rec_row = _row_constructor_of(ctx, rec_ty, m)
    identity = isinstance(g_con, CLam) and g_con.body == CVar(g_con.param)
    required = m.row if identity else RMap(g_con, m.row)
    from .types import constructors_equal
    if not constructors_equal(ctx, rec_row, required):
        raise TypeMismatch(
            "rmap argument record does not match the superscript row "
            "through the function's domain", span=m.span)
    return Embed(RecordC(RMap(c_con, m.row)))


def _match_mapper(ctx: Context, m: TermRmap) -> tuple[Constructor, Constructor]:
    fn_ty = type_norm(_synth(ctx, m.fn))
    if not isinstance(fn_ty, Forall) or fn_ty.kind != TYPE:
        raise RmapFunctionShape(
            "rmap function must have shape forall a:Type. T(G a) -> T(C a)",
            span=m.span)
    body = type_norm(fn_ty.body)
    if not isinstance(body, FunT):
        raise RmapFunctionShape(
            "rmap function must have a function type under the quantifier",
            span=m.span)
    try:
        dom = to_constructor(body.dom)
        cod = to_constructor(body.cod)
    except ValueError as exc:
        raise RmapFunctionShape(str(exc), span=m.span) from exc
    return (CLam(fn_ty.param, TYPE, dom), CLam(fn_ty.param, TYPE, cod))


def _row_constructor_of(ctx: Context, rec_ty: Type, m: Term) -> ConOrRow:
    if isinstance(rec_ty, RecordT):
        return to_constructor(rec_ty.row)
    if isinstance(rec_ty, Embed) and isinstance(rec_ty.con, RecordC):
        return rec_ty.con.row
    raise NotARecord(
        f"expected a record, found {print_type(rec_ty)}", span=m.span)


def _type_rfold(ctx: Context, m: TermRfold) -> Type:
    kind = kind_of_constructor(ctx, m.row)
    if kind != ROW:
        raise KindMismatch(f"rfold superscript has kind {kind}, expected Row",
                           span=m.span)
    comb_ty = type_norm(_synth(ctx, m.combine))
    if (not isinstance(comb_ty, FunT)
            or not isinstance(type_norm(comb_ty.cod), FunT)):
        raise TypeMismatch(
            "rfold combiner must have type T(C) -> T(C) -> T(C)", span=m.span)
    inner = type_norm(comb_ty.cod)
    value_ty = comb_ty.dom
    if not (types_equal(ctx, inner.dom, value_ty)
            and types_equal(ctx, inner.cod, value_ty)):
        raise TypeMismatch(
            "rfold combiner must have type T(C) -> T(C) -> T(C)", span=m.span)
    _check(ctx, m.init, value_ty)
    try:
        c_con = to_constructor(type_norm(value_ty))
    except ValueError as exc:
        raise TypeMismatch(
            "rfold value type must be first-order", span=m.span) from exc
    rec_ty = type_norm(_synth(ctx, m.rec))
    rec_row = _row_constructor_of(ctx, rec_ty, m)
    required = RMap(CLam(fresh("a"), TYPE, c_con), m.row)
    from .types import constructors_equal
    if not constructors_equal(ctx, rec_row, required):
        raise TypeMismatch(
            "rfold record fields must all carry the fold's value type",
            span=m.span)
    return value_ty


def _type_tracecase(ctx: Context, m: Tracecase, expected: Optional[Type]) -> Type:
    scrut_ty = type_norm(_synth(ctx, m.scrutinee))
    if not isinstance(scrut_ty, TraceT):
        raise NotATrace(
            f"tracecase scrutinee has type {print_type(scrut_ty)}",
            span=m.span)
    elem = scrut_ty.elem
    refine_var: Optional[str] = None
    if isinstance(elem, Embed) and isinstance(elem.con, CVar):
        refine_var = elem.con.name

    def branch_goal(b: Optional[Type], forced: Optional[Constructor]):
        """Expected type for a branch whose payload forces the scrutinee
        element type to `forced` (Int for OpPlus, Bool for OpEq).

        If the element type is that type, the branch is live and checks at
        b; if it is a type variable, the branch checks at b with the
        variable specialized; if it is some other concrete type, the branch
        is unreachable (the scrutinee can never carry that constructor) and
        only needs to be internally well-typed."""
        if forced is None:
            return ("check", b)
        forced_ty = Embed(forced)
        if refine_var is not None:
            return ("check",
                    None if b is None else subst_type(b, {refine_var: forced}))
        if types_equal(ctx, elem, forced_ty):
            return ("check", b)
        return ("dead", None)

    branches = [
        ("lit", None, m.lit_var, elem, m.lit_body, None),
        ("if", None, m.if_var,
         RecordT(A.trow_of({"cond": TraceT(BOOL_T), "out": TraceT(elem)})),
         m.if_body, None),
        ("for", (m.for_tyvar, TYPE), m.for_var, None, m.for_body, None),
        ("cell", None, m.cell_var,
         RecordT(A.trow_of({"tbl": STRING_T, "col": STRING_T,
                            "row": INT_T, "val": elem})),
         m.cell_body, None),
        ("opeq", (m.opeq_tyvar, TYPE), m.opeq_var, None, m.opeq_body,
         A.BOOL_C),
        ("opplus", None, m.opplus_var,
         RecordT(A.trow_of({"l": TraceT(INT_T), "r": TraceT(INT_T)})),
         m.opplus_body, A.INT_C),
    ]

    if expected is None:
        # Synthesize from the first unrefined branch that yields a type, then
        # check everything against it.
        for name, tyvar, var, payload, body, refine_to in branches:
            if refine_to is not None:
                continue
            ctx2 = ctx
            body2 = body
            if tyvar is not None:
                tv_name, tv_kind = tyvar
                ctx2, tv_name, [body2] = _bind_con(ctx2, tv_name, tv_kind, body2)
                traced = Embed(CApp(TRACE, CVar(tv_name)))
                payload = RecordT(A.trow_of({"in": traced, "out": TraceT(elem)}))
            ctx2, var, [body2] = _bind_term(ctx2, var, payload, body2)
            try:
                result = _synth(ctx2, body2)
            except CannotInfer:
                continue
            return _type_tracecase(ctx, m, result)
        raise CannotInfer(
            "cannot infer the result type of tracecase", span=m.span)

    for name, tyvar, var, payload, body, refine_to in branches:
        ctx2 = ctx
        body2 = body
        if tyvar is not None:
            tv_name, tv_kind = tyvar
            ctx2, tv_name, [body2] = _bind_con(ctx2, tv_name, tv_kind, body2)
            traced = Embed(CApp(TRACE, CVar(tv_name)))
            if name == "for":
                payload = RecordT(A.trow_of({"in": traced, "out": TraceT(elem)}))
            else:
                payload = RecordT(A.trow_of({"l": traced, "r": traced}))
        ctx2, var, [body2] = _bind_term(ctx2, var, payload, body2)
        mode, goal = branch_goal(expected, refine_to)
        if mode == "dead":
            try:
                _synth(ctx2, body2)
            except CannotInfer:
                pass
        else:
            _check(ctx2, body2, goal)
    return expected


def _type_typecase(ctx: Context, m: Typecase) -> Type:
    _expect_con_kind(ctx, m.scrutinee, TYPE, m)
    ctx_motive, motive_var, [motive] = _bind_con(ctx, m.motive_var, TYPE,
                                                 m.motive)
    kind_of_type(ctx_motive, motive)

    def inst(con: ConOrRow) -> Type:
        return subst_type(motive, {motive_var: con})

    _check(ctx, m.on_bool, inst(A.BOOL_C))
    _check(ctx, m.on_int, inst(A.INT_C))
    _check(ctx, m.on_string, inst(A.STRING_C))

    ctx_l, list_tv, [on_list] = _bind_con(ctx, m.list_tyvar, TYPE, m.on_list)
    _check(ctx_l, on_list, inst(A.ListC(CVar(list_tv))))
    ctx_r, rec_tv, [on_record] = _bind_con(ctx, m.record_rowvar, ROW,
                                           m.on_record)
    _check(ctx_r, on_record, inst(RecordC(RVar(rec_tv))))
    ctx_t, tr_tv, [on_trace] = _bind_con(ctx, m.trace_tyvar, TYPE, m.on_trace)
    _check(ctx_t, on_trace, inst(TraceC(CVar(tr_tv))))

    return inst(m.scrutinee)
