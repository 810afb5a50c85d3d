"""Deterministic pretty-printer for all five syntactic sorts.

Binders are alpha-renamed by traversal order before printing, so two
alpha-equal terms print byte-identically and `parse(print(t))` is alpha-equal
to `t`.  Record labels are already canonically sorted in the AST.
"""

from __future__ import annotations

from .ast import (
    App, BoolC, BoolT, CApp, CLam, Concat, Const, CVar, Embed, EmptyList,
    EmptyRecord, Eq, Fix, For, Forall, FunT, If, IntC, IntT, KArrow, Kind,
    Lam, ListC, ListT, Plus, Project, RecordC, RecordT, RecordExt, REmpty,
    RExtend, RMap, RVar, Singleton, StringC, StringT, Table, TEmpty, TermRfold,
    TermRmap, TExtend, TraceC, TraceSplice, TraceT, Tracecase, TrCell, TrFor,
    TrIf, TrLit, TrOpEq, TrOpPlus, Term, TyApp, Typecase, TyLam, Typerec,
    Type, RowType, RowConstructor, ConOrRow, Var, base_name,
)

# Term precedence levels
_LOW = 0      # binders, if/for/case bodies
_CONCAT = 1   # ++
_EQ = 2       # ==
_PLUS = 3     # +
_APP = 4      # application, type application, trace constructors
_ATOM = 5


class _Names:
    """Deterministic traversal-order renaming environment."""

    def __init__(self):
        self.used: set[str] = set()

    def pick(self, name: str) -> str:
        base = base_name(name)
        if base not in self.used:
            self.used.add(base)
            return base
        i = 1
        while f"{base}{i}" in self.used:
            i += 1
        picked = f"{base}{i}"
        self.used.add(picked)
        return picked

    def scope(self) -> set[str]:
        return set(self.used)

    def restore(self, snapshot: set[str]) -> None:
        self.used = snapshot


def print_kind(k: Kind) -> str:
    return str(k)


def _quote(s: str) -> str:
    out = s.replace("\\", "\\\\").replace('"', '\\"')
    out = out.replace("\n", "\\n").replace("\t", "\\t")
    return f'"{out}"'


def print_constructor(c: ConOrRow) -> str:
    return _con(c, {}, _Names(), _LOW)


def _con(c: ConOrRow, env: dict[str, str], names: _Names, prec: int) -> str:
    match c:
        case BoolC():
            return "Bool"
        case IntC():
            return "Int"
        case StringC():
            return "String"
        case CVar(name):
            return env.get(name, name)
        case CLam(param, kind, body):
            snap = names.scope()
            p = names.pick(param)
            s = f"\\{p}:{print_kind(kind)}. " + _con(body, {**env, param: p}, names, _LOW)
            names.restore(snap)
            return _wrap(s, prec > _LOW)
        case CApp(fn, arg):
            s = _con(fn, env, names, _APP) + " " + _con(arg, env, names, _ATOM)
            return _wrap(s, prec > _APP)
        case ListC(elem):
            return "[" + _con(elem, env, names, _LOW) + "]"
        case TraceC(elem):
            return _wrap("Trace " + _con(elem, env, names, _ATOM), prec > _APP)
        case RecordC(row):
            return "{" + _row_inner(row, env, names) + "}"
        case Typerec():
            parts = ", ".join(_con(b, env, names, _LOW) for b in c.branches())
            s = f"Typerec {_con(c.scrutinee, env, names, _ATOM)} ({parts})"
            return _wrap(s, prec > _APP)
        case REmpty() | RExtend() | RVar() | RMap():
            return _row_expr(c, env, names)
    raise AssertionError(f"unprintable constructor {c!r}")


def _row_inner(row: RowConstructor, env: dict[str, str], names: _Names) -> str:
    match row:
        case REmpty():
            return ""
        case RVar(name):
            return env.get(name, name)
        case RMap(fn, inner):
            return f"Rmap {_con(fn, env, names, _ATOM)} {_row_expr(inner, env, names)}"
        case RExtend():
            parts = []
            while isinstance(row, RExtend):
                parts.append(f"{row.label}: {_con(row.head, env, names, _LOW)}")
                row = row.tail
            body = ", ".join(parts)
            if isinstance(row, REmpty):
                return body
            return body + " | " + _row_inner(row, env, names)
    raise AssertionError(f"unprintable row {row!r}")


def _row_expr(row: RowConstructor, env: dict[str, str], names: _Names) -> str:
    if isinstance(row, RVar):
        return env.get(row.name, row.name)
    return "(|" + _row_inner(row, env, names) + "|)"


def print_type(t: Type | RowType) -> str:
    return _ty(t, {}, _Names(), _LOW)


def _ty(t: Type | RowType, env: dict[str, str], names: _Names, prec: int) -> str:
    match t:
        case BoolT():
            return "Bool"
        case IntT():
            return "Int"
        case StringT():
            return "String"
        case Embed(con):
            return "T(" + _con(con, env, names, _LOW) + ")"
        case FunT(dom, cod):
            s = _ty(dom, env, names, _APP) + " -> " + _ty(cod, env, names, _LOW)
            return _wrap(s, prec > _LOW)
        case ListT(elem):
            return "[" + _ty(elem, env, names, _LOW) + "]"
        case TraceT(elem):
            return _wrap("Trace " + _ty(elem, env, names, _ATOM), prec > _APP)
        case RecordT(row):
            fields = []
            while isinstance(row, TExtend):
                fields.append(f"{row.label}: {_ty(row.head, env, names, _LOW)}")
                row = row.tail
            return "{" + ", ".join(fields) + "}"
        case Forall(param, kind, body):
            snap = names.scope()
            p = names.pick(param)
            s = f"forall {p}:{print_kind(kind)}. " + _ty(body, {**env, param: p}, names, _LOW)
            names.restore(snap)
            return _wrap(s, prec > _LOW)
        case TEmpty() | TExtend():
            fields = []
            while isinstance(t, TExtend):
                fields.append(f"{t.label}: {_ty(t.head, env, names, _LOW)}")
                t = t.tail
            return "{" + ", ".join(fields) + "}"
    raise AssertionError(f"unprintable type {t!r}")


def print_term(m: Term) -> str:
    return _term(m, {}, {}, _Names(), _LOW)


def _wrap(s: str, need: bool) -> str:
    return f"({s})" if need else s


def _term(m: Term, env: dict[str, str], tyenv: dict[str, str],
          names: _Names, prec: int) -> str:
    def rec(x: Term, p: int) -> str:
        return _term(x, env, tyenv, names, p)

    def ty(x) -> str:
        return _ty(x, tyenv, names, _LOW)

    def con_atom(x: ConOrRow) -> str:
        return _con(x, tyenv, names, _ATOM)

    match m:
        case Const(value):
            if isinstance(value, bool):
                return "true" if value else "false"
            if isinstance(value, int):
                return _wrap(str(value), value < 0 and prec >= _APP)
            return _quote(value)
        case Var(name):
            return env.get(name, name)
        case Lam(param, annot, body):
            snap = names.scope()
            p = names.pick(param)
            s = f"\\{p}:{ty(annot)}. " + _term(body, {**env, param: p}, tyenv, names, _LOW)
            names.restore(snap)
            return _wrap(s, prec > _LOW)
        case TyLam(param, kind, body):
            snap = names.scope()
            p = names.pick(param)
            s = f"/\\{p}:{print_kind(kind)}. " + _term(body, env, {**tyenv, param: p}, names, _LOW)
            names.restore(snap)
            return _wrap(s, prec > _LOW)
        case Fix(name, annot, body):
            snap = names.scope()
            p = names.pick(name)
            s = f"fix ({p} : {ty(annot)}). " + _term(body, {**env, name: p}, tyenv, names, _LOW)
            names.restore(snap)
            return _wrap(s, prec > _LOW)
        case App(fn, arg):
            s = rec(fn, _APP) + " " + rec(arg, _ATOM)
            return _wrap(s, prec > _APP)
        case TyApp(fn, arg):
            if isinstance(arg, (RowConstructor,)):
                a = _row_expr(arg, tyenv, names)
            else:
                a = con_atom(arg)
            s = rec(fn, _APP) + " @" + a
            return _wrap(s, prec > _APP)
        case If(cond, then, els):
            s = (f"if {rec(cond, _LOW)} then {rec(then, _LOW)} "
                 f"else {rec(els, _LOW)}")
            return _wrap(s, prec > _LOW)
        case Plus(lhs, rhs):
            s = rec(lhs, _PLUS) + " + " + rec(rhs, _APP)
            return _wrap(s, prec > _PLUS)
        case Eq(lhs, rhs):
            s = rec(lhs, _PLUS) + " == " + rec(rhs, _PLUS)
            return _wrap(s, prec > _EQ)
        case Concat(lhs, rhs):
            s = rec(lhs, _CONCAT) + " ++ " + rec(rhs, _EQ)
            return _wrap(s, prec > _CONCAT)
        case EmptyRecord():
            return "{}"
        case RecordExt():
            parts = []
            node: Term = m
            while isinstance(node, RecordExt):
                parts.append(f"{node.label} = {_term(node.head, env, tyenv, names, _LOW)}")
                node = node.tail
            body = ", ".join(parts)
            if isinstance(node, EmptyRecord):
                return "{" + body + "}"
            return "{" + body + " | " + _term(node, env, tyenv, names, _LOW) + "}"
        case Project(rec_, label):
            return rec(rec_, _ATOM) + "." + label
        case TermRmap(row, fn, rec_):
            s = (f"rmap^{_row_expr(row, tyenv, names)} "
                 f"{rec(fn, _ATOM)} {rec(rec_, _ATOM)}")
            return _wrap(s, prec > _APP)
        case TermRfold(row, combine, init, rec_):
            s = (f"rfold^{_row_expr(row, tyenv, names)} "
                 f"{rec(combine, _ATOM)} {rec(init, _ATOM)} {rec(rec_, _ATOM)}")
            return _wrap(s, prec > _APP)
        case EmptyList():
            return "[]"
        case Singleton(elem):
            return "[" + rec(elem, _LOW) + "]"
        case For(binder, source, body):
            snap = names.scope()
            b = names.pick(binder)
            s = (f"for ({b} <- {rec(source, _LOW)}) "
                 + _term(body, {**env, binder: b}, tyenv, names, _LOW))
            names.restore(snap)
            return _wrap(s, prec > _LOW)
        case Table(name, schema):
            s = f"table {_quote(name)} {ty(schema)}"
            return _wrap(s, prec > _APP)
        case TrLit(arg):
            return _wrap("Lit " + rec(arg, _ATOM), prec > _APP)
        case TrIf(arg):
            return _wrap("If " + rec(arg, _ATOM), prec > _APP)
        case TrFor(con, arg):
            return _wrap(f"For {con_atom(con)} {rec(arg, _ATOM)}", prec > _APP)
        case TrCell(arg):
            return _wrap("Cell " + rec(arg, _ATOM), prec > _APP)
        case TrOpEq(con, arg):
            return _wrap(f"OpEq {con_atom(con)} {rec(arg, _ATOM)}", prec > _APP)
        case TrOpPlus(arg):
            return _wrap("OpPlus " + rec(arg, _ATOM), prec > _APP)
        case TraceSplice(arg):
            return _wrap("trace " + rec(arg, _ATOM), prec > _APP)
        case Tracecase():
            snap0 = names.scope()
            scrut = rec(m.scrutinee, _LOW)

            def branch(intro: str, tvar: str | None, var: str, body: Term) -> str:
                snap = names.scope()
                tyenv2 = tyenv
                head = intro
                if tvar is not None:
                    tv = names.pick(tvar)
                    tyenv2 = {**tyenv, tvar: tv}
                    head += f" {tv}"
                v = names.pick(var)
                s = f"{head} {v} => " + _term(body, {**env, var: v}, tyenv2, names, _LOW)
                names.restore(snap)
                return s

            parts = [
                branch("Lit", None, m.lit_var, m.lit_body),
                branch("If", None, m.if_var, m.if_body),
                branch("For", m.for_tyvar, m.for_var, m.for_body),
                branch("Cell", None, m.cell_var, m.cell_body),
                branch("OpEq", m.opeq_tyvar, m.opeq_var, m.opeq_body),
                branch("OpPlus", None, m.opplus_var, m.opplus_body),
            ]
            names.restore(snap0)
            s = f"tracecase {scrut} of {{{', '.join(parts)}}}"
            return _wrap(s, prec > _LOW)
        case Typecase():
            snap0 = names.scope()
            scrut = _con(m.scrutinee, tyenv, names, _ATOM)
            mv = names.pick(m.motive_var)
            motive = _ty(m.motive, {**tyenv, m.motive_var: mv}, names, _LOW)
            names.restore(snap0)

            def plain(intro: str, body: Term) -> str:
                return f"{intro} => " + _term(body, env, tyenv, names, _LOW)

            def bound(intro: str, tvar: str, body: Term) -> str:
                snap = names.scope()
                tv = names.pick(tvar)
                s = f"{intro} {tv} => " + _term(body, env, {**tyenv, tvar: tv}, names, _LOW)
                names.restore(snap)
                return s

            parts = [
                plain("Bool", m.on_bool),
                plain("Int", m.on_int),
                plain("String", m.on_string),
                bound("List", m.list_tyvar, m.on_list),
                bound("Record", m.record_rowvar, m.on_record),
                bound("Trace", m.trace_tyvar, m.on_trace),
            ]
            s = f"typecase {scrut} ({mv}. {motive}) of {{{', '.join(parts)}}}"
            return _wrap(s, prec > _LOW)
    raise AssertionError(f"unprintable term {m!r}")
