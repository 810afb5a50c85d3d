"""Term reduction: beta rules, commuting conversions, congruence rules,
the normal-form classifier, NRC certification, and the optional syntactic
lineage dedup.

The strategy is deterministic leftmost-outermost: at each node a beta rule is
tried first, then a commuting conversion, then constructor reduction in the
node's constructor slots, then congruence descent into children left to
right.  Fixpoints count their own unrollings (the counter survives
substitution), so runaway recursion surfaces as FuelExhausted rather than a
hang.

Two deliberate amendments to the normal-form grammar are tested and
documented: `M == N` with normal sides is a normal term (the progress
argument treats operators that way, and NRC includes equality), and `fix` is
never normal (it always unrolls, up to the configured limit).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from . import ast as A
from .ast import (
    App, Concat, Const, EmptyList, EmptyRecord, Eq, Fix, For, If, Lam,
    ListT, Plus, Project, RecordExt, RecordT, REmpty, Singleton, Table,
    TermRfold, TermRmap, TraceSplice, Tracecase, TrCell, TrFor, TrIf, TrLit,
    TrOpEq, TrOpPlus, Term, TyApp, Typecase, TyLam, Var, alpha_equal, fresh,
    row_fields, BoolC, IntC, StringC, ListC, RecordC, TraceC,
)
from .errors import (
    FuelExhausted, NotAQueryType, NotInNormalForm, ResidualConstruct,
)
from .printer import print_term
from .typecheck import substitute_constructor_in_term, substitute_term
from .types import (
    Context, is_neutral_con, is_neutral_row, is_normal_con, is_normal_row,
    reduce_constructor_step, type_norm,
)

DEFAULT_FUEL = 1_000_000
DEFAULT_UNROLL_LIMIT = 500


@dataclass(frozen=True)
class NormalizeConfig:
    fuel: int = DEFAULT_FUEL
    unroll_limit: int = DEFAULT_UNROLL_LIMIT
    dedup_lineage: bool = False

    def __post_init__(self):
        if self.fuel < 1:
            raise ValueError("fuel must be at least 1")
        if self.unroll_limit < 0:
            raise ValueError("unroll_limit must be non-negative")


DEFAULT_CONFIG = NormalizeConfig()


# ---------------------------------------------------------------------------
# Normal-form classification


@dataclass(frozen=True)
class NormalFormClass:
    tag: str  # NormalTerm | NeutralTerm | NeutralConditional
    #           | NeutralProjection | NeutralTable | NotNormal
    reason: Optional[str] = None

    @property
    def is_normal(self) -> bool:
        return self.tag != "NotNormal"


def _is_neutral_term(m: Term) -> bool:
    match m:
        case Var(_):
            return True
        case Project(rec, _):
            return _is_neutral_projection(rec)
        case App(fn, arg):
            return _is_neutral_term(fn) and _is_normal_term(arg)
        case TyApp(fn, arg):
            return _is_neutral_term(fn) and (is_normal_con(arg) or is_normal_row(arg))
        case TermRmap(row, fn, rec):
            return (is_neutral_row(row) and _is_normal_term(fn)
                    and _is_normal_term(rec))
        case TermRfold(row, combine, init, rec):
            return (is_neutral_row(row) and _is_normal_term(combine)
                    and _is_normal_term(init) and _is_normal_term(rec))
        case Tracecase():
            return (_is_neutral_term(m.scrutinee)
                    and all(_is_normal_term(b) for b in _tracecase_bodies(m)))
        case Typecase():
            return (is_neutral_con(m.scrutinee)
                    and all(_is_normal_term(b) for b in _typecase_bodies(m)))
        case _:
            return False


def _is_neutral_projection(m: Term) -> bool:
    if isinstance(m, TermRmap):
        return (is_neutral_row(m.row) and _is_normal_term(m.fn)
                and _is_normal_term(m.rec))
    return _is_neutral_term(m)


def _is_neutral_conditional(m: Term) -> bool:
    if isinstance(m, Eq):
        return _is_normal_term(m.lhs) and _is_normal_term(m.rhs)
    return _is_neutral_term(m)


def _is_neutral_table(m: Term) -> bool:
    return isinstance(m, Table) or _is_neutral_term(m)


def _tracecase_bodies(m: Tracecase):
    return (m.lit_body, m.if_body, m.for_body, m.cell_body, m.opeq_body,
            m.opplus_body)


def _typecase_bodies(m: Typecase):
    return (m.on_bool, m.on_int, m.on_string, m.on_list, m.on_record,
            m.on_trace)


def _is_normal_term(m: Term) -> bool:
    match m:
        case Const() | EmptyRecord() | EmptyList() | Table():
            return True
        case Lam(_, _, body) | TyLam(_, _, body):
            return _is_normal_term(body)
        case Fix():
            return False
        case If(cond, then, els):
            return (_is_neutral_conditional(cond) and _is_normal_term(then)
                    and _is_normal_term(els))
        case Plus(l, r) | Eq(l, r) | Concat(l, r):
            return _is_normal_term(l) and _is_normal_term(r)
        case RecordExt(_, head, tail):
            return _is_normal_term(head) and _is_normal_term(tail)
        case Singleton(e):
            return _is_normal_term(e)
        case For(_, source, body):
            return _is_neutral_table(source) and _is_normal_term(body)
        case TrLit(e) | TrIf(e) | TrCell(e) | TrOpPlus(e):
            return _is_normal_term(e)
        case TrFor(c, e) | TrOpEq(c, e):
            return is_normal_con(c) and _is_normal_term(e)
        case TraceSplice():
            return False
        case _:
            return _is_neutral_term(m)


def classify(m: Term) -> NormalFormClass:
    if _is_normal_term(m):
        if isinstance(m, Table):
            return NormalFormClass("NeutralTable")
        if isinstance(m, TermRmap):
            return NormalFormClass("NeutralProjection")
        if isinstance(m, Eq) and not _is_neutral_term(m):
            return NormalFormClass("NeutralConditional")
        if _is_neutral_term(m):
            return NormalFormClass("NeutralTerm")
        return NormalFormClass("NormalTerm")
    return NormalFormClass("NotNormal", reason=_redex_name(m))


def _redex_name(m: Term) -> str:
    stepped = _step(m, _UNLIMITED)
    if stepped is None:
        return "stuck non-normal term"
    return stepped[1]


# ---------------------------------------------------------------------------
# One-step reduction


class _Unroller:
    """Config holder; unlimited instance used for classification probes."""

    def __init__(self, limit: Optional[int]):
        self.limit = limit


_UNLIMITED = _Unroller(None)


def _unroll_fix(m: Fix, cfg: _Unroller) -> Term:
    if cfg.limit is not None and m.unrolls >= cfg.limit:
        raise FuelExhausted(
            f"fix unrolled more than {cfg.limit} times; "
            f"the recursion may not terminate",
            term=print_term(m)[:400])
    next_fix = Fix(m.name, m.annot, m.body, unrolls=m.unrolls + 1, span=m.span)
    return substitute_term(m.body, m.name, next_fix)


def step(m: Term, cfg: NormalizeConfig = DEFAULT_CONFIG) -> Optional[Term]:
    out = _step(m, _Unroller(cfg.unroll_limit))
    return out[0] if out is not None else None


def _step(m: Term, cfg: _Unroller) -> Optional[tuple[Term, str]]:
    # -- beta rules at the root -------------------------------------------
    match m:
        case App(Lam(param, _, body), arg):
            return substitute_term(body, param, arg), "term beta"
        case App(Fix() as f, arg):
            return App(_unroll_fix(f, cfg), arg, span=m.span), "fix unroll"
        case App(If(c, t, e), arg):
            return (If(c, App(t, arg), App(e, arg), span=m.span),
                    "commute if under application")
        case TyApp(TyLam(param, _, body), arg):
            return (substitute_constructor_in_term(body, param, arg),
                    "type beta")
        case TyApp(Fix() as f, arg):
            return TyApp(_unroll_fix(f, cfg), arg, span=m.span), "fix unroll"
        case TyApp(If(c, t, e), arg):
            return (If(c, TyApp(t, arg), TyApp(e, arg), span=m.span),
                    "commute if under type application")
        case Fix():
            return _unroll_fix(m, cfg), "fix unroll"
        case If(Const(True), t, _):
            return t, "if true"
        case If(Const(False), _, e):
            return e, "if false"
        case If(If(c, t1, t2), t, e):
            return (If(c, If(t1, t, e), If(t2, t, e), span=m.span),
                    "commute if under if")
        case Project(RecordExt(label, head, tail), want):
            if want == label:
                return head, "projection beta"
            return Project(tail, want, span=m.span), "projection beta"
        case Project(If(c, t, e), label):
            return (If(c, Project(t, label), Project(e, label), span=m.span),
                    "commute if under projection")
        case TermRmap(row, fn, rec) if _closed_row(row):
            fields, _ = row_fields(row)
            out: Term = EmptyRecord()
            for label in sorted(fields, reverse=True):
                out = RecordExt(label,
                                App(TyApp(fn, fields[label]),
                                    Project(rec, label)), out)
            return out, "rmap unroll"
        case TermRfold(row, combine, init, rec) if _closed_row(row):
            fields, _ = row_fields(row)
            acc: Term = init
            for label in sorted(fields, reverse=True):
                acc = App(App(combine, Project(rec, label)), acc)
            return acc, "rfold unroll"
        case For(_, EmptyList(), _):
            return EmptyList(span=m.span), "for over empty list"
        case For(binder, Singleton(elem), body):
            return substitute_term(body, binder, elem), "for over singleton"
        case For(binder, Concat(l, r), body):
            return (Concat(For(binder, l, body), For(binder, r, body),
                           span=m.span), "commute for over concat")
        case For(x, For(y, src, mid), body):
            if y in A.cached_free_term_vars(body):
                renamed = fresh(y)
                mid = substitute_term(mid, y, Var(renamed))
                y = renamed
            return (For(y, src, For(x, mid, body), span=m.span),
                    "commute for over for")
        case For(binder, If(c, t, e), body):
            return (If(c, For(binder, t, body), For(binder, e, body),
                       span=m.span), "commute if under for source")
        case Tracecase():
            scrut = m.scrutinee
            match scrut:
                case TrLit(payload):
                    return (substitute_term(m.lit_body, m.lit_var, payload),
                            "tracecase Lit beta")
                case TrIf(payload):
                    return (substitute_term(m.if_body, m.if_var, payload),
                            "tracecase If beta")
                case TrFor(con, payload):
                    body = substitute_constructor_in_term(
                        m.for_body, m.for_tyvar, con)
                    return (substitute_term(body, m.for_var, payload),
                            "tracecase For beta")
                case TrCell(payload):
                    return (substitute_term(m.cell_body, m.cell_var, payload),
                            "tracecase Cell beta")
                case TrOpEq(con, payload):
                    body = substitute_constructor_in_term(
                        m.opeq_body, m.opeq_tyvar, con)
                    return (substitute_term(body, m.opeq_var, payload),
                            "tracecase OpEq beta")
                case TrOpPlus(payload):
                    return (substitute_term(m.opplus_body, m.opplus_var,
                                            payload), "tracecase OpPlus beta")
                case If(c, t, e):
                    def retarget(scr: Term) -> Term:
                        return A.Tracecase(
                            scr, m.lit_var, m.lit_body, m.if_var, m.if_body,
                            m.for_tyvar, m.for_var, m.for_body, m.cell_var,
                            m.cell_body, m.opeq_tyvar, m.opeq_var,
                            m.opeq_body, m.opplus_var, m.opplus_body,
                            span=m.span)
                    return (If(c, retarget(t), retarget(e), span=m.span),
                            "commute if under tracecase")
        case Typecase():
            scrut = m.scrutinee
            match scrut:
                case BoolC():
                    return m.on_bool, "typecase Bool beta"
                case IntC():
                    return m.on_int, "typecase Int beta"
                case StringC():
                    return m.on_string, "typecase String beta"
                case ListC(elem):
                    return (substitute_constructor_in_term(
                        m.on_list, m.list_tyvar, elem), "typecase List beta")
                case RecordC(row):
                    return (substitute_constructor_in_term(
                        m.on_record, m.record_rowvar, row),
                        "typecase Record beta")
                case TraceC(elem):
                    return (substitute_constructor_in_term(
                        m.on_trace, m.trace_tyvar, elem),
                        "typecase Trace beta")
            stepped = reduce_constructor_step(scrut)
            if stepped is not None:
                return (A.Typecase(
                    stepped, m.motive_var, m.motive, m.on_bool, m.on_int,
                    m.on_string, m.list_tyvar, m.on_list, m.record_rowvar,
                    m.on_record, m.trace_tyvar, m.on_trace, span=m.span),
                    "typecase scrutinee reduction")

    # -- constructor reduction in constructor slots ------------------------
    match m:
        case TyApp(fn, arg):
            stepped = reduce_constructor_step(arg)
            if stepped is not None:
                return TyApp(fn, stepped, span=m.span), "type argument reduction"
        case TermRmap(row, fn, rec):
            stepped = reduce_constructor_step(row)
            if stepped is not None:
                return (TermRmap(stepped, fn, rec, span=m.span),
                        "rmap row reduction")
        case TermRfold(row, combine, init, rec):
            stepped = reduce_constructor_step(row)
            if stepped is not None:
                return (TermRfold(stepped, combine, init, rec, span=m.span),
                        "rfold row reduction")
        case TrFor(con, arg):
            stepped = reduce_constructor_step(con)
            if stepped is not None:
                return TrFor(stepped, arg, span=m.span), "For constructor reduction"
        case TrOpEq(con, arg):
            stepped = reduce_constructor_step(con)
            if stepped is not None:
                return (TrOpEq(stepped, arg, span=m.span),
                        "OpEq constructor reduction")

    # -- congruence descent, left to right ---------------------------------
    for name, child, rebuild in _frames(m):
        stepped = _step(child, cfg)
        if stepped is not None:
            return rebuild(stepped[0]), stepped[1]
    return None


def _closed_row(row) -> bool:
    _, tail = row_fields(row)
    return isinstance(tail, REmpty)


def _frames(m: Term):
    """Child positions in reduction order."""
    match m:
        case Lam(param, annot, body):
            yield "body", body, lambda b: Lam(param, annot, b, span=m.span)
        case TyLam(param, kind, body):
            yield "body", body, lambda b: TyLam(param, kind, b, span=m.span)
        case App(fn, arg):
            yield "fn", fn, lambda x: App(x, arg, span=m.span)
            yield "arg", arg, lambda x: App(fn, x, span=m.span)
        case TyApp(fn, arg):
            yield "fn", fn, lambda x: TyApp(x, arg, span=m.span)
        case If(cond, then, els):
            yield "cond", cond, lambda x: If(x, then, els, span=m.span)
            yield "then", then, lambda x: If(cond, x, els, span=m.span)
            yield "else", els, lambda x: If(cond, then, x, span=m.span)
        case Plus(l, r):
            yield "lhs", l, lambda x: Plus(x, r, span=m.span)
            yield "rhs", r, lambda x: Plus(l, x, span=m.span)
        case Eq(l, r):
            yield "lhs", l, lambda x: Eq(x, r, span=m.span)
            yield "rhs", r, lambda x: Eq(l, x, span=m.span)
        case Concat(l, r):
            yield "lhs", l, lambda x: Concat(x, r, span=m.span)
            yield "rhs", r, lambda x: Concat(l, x, span=m.span)
        case RecordExt(label, head, tail):
            yield "head", head, lambda x: RecordExt(label, x, tail, span=m.span)
            yield "tail", tail, lambda x: RecordExt(label, head, x, span=m.span)
        case Project(rec, label):
            yield "rec", rec, lambda x: Project(x, label, span=m.span)
        case TermRmap(row, fn, rec):
            yield "fn", fn, lambda x: TermRmap(row, x, rec, span=m.span)
            yield "rec", rec, lambda x: TermRmap(row, fn, x, span=m.span)
        case TermRfold(row, combine, init, rec):
            yield "combine", combine, lambda x: TermRfold(row, x, init, rec, span=m.span)
            yield "init", init, lambda x: TermRfold(row, combine, x, rec, span=m.span)
            yield "rec", rec, lambda x: TermRfold(row, combine, init, x, span=m.span)
        case Singleton(e):
            yield "elem", e, lambda x: Singleton(x, span=m.span)
        case For(binder, source, body):
            yield "source", source, lambda x: For(binder, x, body, span=m.span)
            yield "body", body, lambda x: For(binder, source, x, span=m.span)
        case TrLit(e):
            yield "arg", e, lambda x: TrLit(x, span=m.span)
        case TrIf(e):
            yield "arg", e, lambda x: TrIf(x, span=m.span)
        case TrFor(c, e):
            yield "arg", e, lambda x: TrFor(c, x, span=m.span)
        case TrCell(e):
            yield "arg", e, lambda x: TrCell(x, span=m.span)
        case TrOpEq(c, e):
            yield "arg", e, lambda x: TrOpEq(c, x, span=m.span)
        case TrOpPlus(e):
            yield "arg", e, lambda x: TrOpPlus(x, span=m.span)
        case Tracecase():
            def rb(field_name):
                def build(x):
                    parts = {
                        "scrutinee": m.scrutinee, "lit_body": m.lit_body,
                        "if_body": m.if_body, "for_body": m.for_body,
                        "cell_body": m.cell_body, "opeq_body": m.opeq_body,
                        "opplus_body": m.opplus_body,
                    }
                    parts[field_name] = x
                    return A.Tracecase(
                        parts["scrutinee"], m.lit_var, parts["lit_body"],
                        m.if_var, parts["if_body"], m.for_tyvar, m.for_var,
                        parts["for_body"], m.cell_var, parts["cell_body"],
                        m.opeq_tyvar, m.opeq_var, parts["opeq_body"],
                        m.opplus_var, parts["opplus_body"], span=m.span)
                return build
            yield "scrutinee", m.scrutinee, rb("scrutinee")
            yield "Lit branch", m.lit_body, rb("lit_body")
            yield "If branch", m.if_body, rb("if_body")
            yield "For branch", m.for_body, rb("for_body")
            yield "Cell branch", m.cell_body, rb("cell_body")
            yield "OpEq branch", m.opeq_body, rb("opeq_body")
            yield "OpPlus branch", m.opplus_body, rb("opplus_body")
        case Typecase():
            def rbt(field_name):
                def build(x):
                    parts = {
                        "on_bool": m.on_bool, "on_int": m.on_int,
                        "on_string": m.on_string, "on_list": m.on_list,
                        "on_record": m.on_record, "on_trace": m.on_trace,
                    }
                    parts[field_name] = x
                    return A.Typecase(
                        m.scrutinee, m.motive_var, m.motive, parts["on_bool"],
                        parts["on_int"], parts["on_string"], m.list_tyvar,
                        parts["on_list"], m.record_rowvar, parts["on_record"],
                        m.trace_tyvar, parts["on_trace"], span=m.span)
                return build
            yield "Bool branch", m.on_bool, rbt("on_bool")
            yield "Int branch", m.on_int, rbt("on_int")
            yield "String branch", m.on_string, rbt("on_string")
            yield "List branch", m.on_list, rbt("on_list")
            yield "Record branch", m.on_record, rbt("on_record")
            yield "Trace branch", m.on_trace, rbt("on_trace")
        case _:
            return


# ---------------------------------------------------------------------------
# Normalization


def normalize(m: Term, cfg: NormalizeConfig = DEFAULT_CONFIG,
              on_step: Optional[Callable[[Term], None]] = None) -> Term:
    current = m
    unroller = _Unroller(cfg.unroll_limit)
    for count in range(cfg.fuel):
        stepped = _step(current, unroller)
        if stepped is None:
            return current
        current = stepped[0]
        if on_step is not None:
            on_step(current)
    raise FuelExhausted(
        f"normalization exceeded {cfg.fuel} steps",
        steps=cfg.fuel, term=print_term(current)[:400])


# ---------------------------------------------------------------------------
# NRC certification


_NRC_QUERY_BASES = (A.BoolT, A.IntT, A.StringT)


def _is_query_type(t) -> bool:
    n = type_norm(t)
    if isinstance(n, _NRC_QUERY_BASES):
        return True
    if isinstance(n, ListT):
        return _is_query_type(n.elem)
    if isinstance(n, RecordT):
        return all(_is_query_type(v) for v in A.trow_fields(n.row).values())
    return False


def is_query_context(ctx: Context) -> bool:
    from .types import TermBinding
    for b in ctx.bindings:
        if not isinstance(b, TermBinding):
            return False
        n = type_norm(b.ty)
        if not isinstance(n, RecordT):
            return False
        if not all(isinstance(type_norm(v), _NRC_QUERY_BASES)
                   for v in A.trow_fields(n.row).values()):
            return False
    return True


def extract_nrc(m: Term, ctx: Context = Context()) -> Term:
    """Certify that a normalized term lies in the NRC target grammar.

    Returns the term unchanged on success; raises ResidualConstruct naming
    the offending node and its path otherwise.
    """
    cls = classify(m)
    if not cls.is_normal:
        raise NotInNormalForm(
            f"term is not in normal form: {cls.reason}")

    def walk(t: Term, path: str) -> None:
        match t:
            case Const() | Var() | EmptyRecord() | EmptyList() | Table():
                return
            case RecordExt(label, head, tail):
                walk(head, f"{path}.{label}")
                walk(tail, path)
            case Project(rec, label):
                walk(rec, f"{path}/{label}")
            case Plus(l, r) | Eq(l, r) | Concat(l, r):
                walk(l, path + "/lhs")
                walk(r, path + "/rhs")
            case If(c, t1, t2):
                walk(c, path + "/cond")
                walk(t1, path + "/then")
                walk(t2, path + "/else")
            case Singleton(e):
                walk(e, path + "/elem")
            case For(_, source, body):
                walk(source, path + "/source")
                walk(body, path + "/body")
            case _:
                raise ResidualConstruct(type(t).__name__, path or "<root>")

    walk(m, "")
    return m


def dedup_concat(m: Term) -> Term:
    """Collapse `A ++ B` to `A` when the two sides are alpha-equal, dropping
    empty-list units along the way; bottom-up, to a fixpoint.  Only
    semantics-preserving under a set interpretation."""

    def go(t: Term) -> Term:
        t = _map_term_children(t, go)
        while isinstance(t, Concat):
            if isinstance(t.lhs, EmptyList):
                t = t.rhs
            elif isinstance(t.rhs, EmptyList):
                t = t.lhs
            elif alpha_equal(t.lhs, t.rhs):
                t = t.lhs
            else:
                break
        return t

    return go(m)


def _map_term_children(m: Term, f) -> Term:
    from .typecheck import _map_children
    return _map_children(m, f)
