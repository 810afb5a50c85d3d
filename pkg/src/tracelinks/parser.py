"""Tokenizer and recursive-descent parser for the `.lt` surface syntax.

The grammar (EBNF in docs/grammar.md) is LL(2).  `where (M) N` desugars to
`if M then N else []`, `M && N` to `if M then N else false`; neither survives
parsing.  Record fields and record-type fields are re-sorted into canonical
label order.  A program is an optional block of `NAME = ...;` declarations
followed by at most one main expression; all-uppercase names declare
type-level functions (constructors), any other name declares a term.
Declarations are inlined at use sites, so parsing yields closed ASTs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import ast as A
from .errors import DuplicateLabel, DuplicateName, ParseError

_KEYWORDS = {
    "for", "where", "if", "then", "else", "table", "fix", "typecase",
    "tracecase", "rmap", "rfold", "trace", "of", "true", "false", "forall",
    "Bool", "Int", "String", "Type", "Row", "Trace", "Typerec", "Rmap",
    "List", "Record", "Lit", "If", "For", "Cell", "OpEq", "OpPlus", "T",
}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<int>-?[0-9]+)
  | (?P<string>"(?:\\.|[^"\\])*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<punct>\(\||\|\)|/\\|<-|->|\+\+|==|=>|&&|[\\.(){}\[\],:;=@^+|])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # int, string, ident, keyword, punct, eof
    text: str
    line: int
    col: int

    @property
    def span(self) -> A.Span:
        return A.Span(self.line, self.col)


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}",
                             span=A.Span(line, col))
        text = m.group(0)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            if kind == "ident" and text in _KEYWORDS:
                kind = "keyword"
            tokens.append(Token(kind, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


def _unquote(text: str) -> str:
    out = []
    i = 1
    while i < len(text) - 1:
        ch = text[i]
        if ch == "\\":
            i += 1
            esc = text[i]
            out.append({"n": "\n", "t": "\t"}.get(esc, esc))
        else:
            out.append(ch)
        i += 1
    return "".join(out)


def _is_typefn_name(name: str) -> bool:
    return bool(re.fullmatch(r"[A-Z][A-Z0-9_]*", name))


@dataclass
class Program:
    con_decls: dict[str, A.Constructor]
    term_decls: dict[str, A.Term]
    main: A.Term | None


class Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.pos = 0

    # -- token plumbing ----------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text or 'end of input'!r}",
                             span=tok.span)
        return tok

    def expect_ident(self) -> Token:
        tok = self.next()
        if tok.kind != "ident":
            raise ParseError(f"expected identifier, found {tok.text or 'end of input'!r}",
                             span=tok.span)
        return tok

    def expect_label(self) -> Token:
        # Record labels may coincide with keywords (`type`, `table`, ...).
        tok = self.next()
        if tok.kind not in ("ident", "keyword") or not tok.text.isidentifier():
            raise ParseError(f"expected record label, found {tok.text or 'end of input'!r}",
                             span=tok.span)
        return tok

    def at(self, text: str, ahead: int = 0) -> bool:
        return self.peek(ahead).text == text

    # -- kinds -------------------------------------------------------------

    def kind(self) -> A.Kind:
        left = self.kind_atom()
        if self.at("->"):
            self.next()
            return A.KArrow(left, self.kind())
        return left

    def kind_atom(self) -> A.Kind:
        tok = self.next()
        if tok.text == "Type":
            return A.TYPE
        if tok.text == "Row":
            return A.ROW
        if tok.text == "(":
            k = self.kind()
            self.expect(")")
            return k
        raise ParseError(f"expected kind, found {tok.text!r}", span=tok.span)

    # -- constructors ------------------------------------------------------

    def constructor(self) -> A.Constructor:
        if self.at("\\"):
            self.next()
            param = self.expect_ident().text
            self.expect(":")
            kind = self.kind()
            self.expect(".")
            return A.CLam(param, kind, self.constructor())
        return self.con_app()

    def con_app(self) -> A.Constructor:
        tok = self.peek()
        if tok.text == "Trace":
            self.next()
            return A.TraceC(self.con_atom())
        if tok.text == "Typerec":
            self.next()
            scrut = self.con_atom()
            self.expect("(")
            branches = [self.constructor()]
            for _ in range(5):
                self.expect(",")
                branches.append(self.constructor())
            self.expect(")")
            return A.Typerec(scrut, *branches)
        fn = self.con_atom()
        while self._starts_con_atom():
            arg: A.ConOrRow
            if self.at("(|"):
                arg = self.row_expr()
            else:
                arg = self.con_atom()
            fn = A.CApp(fn, arg)
        return fn

    def _starts_con_atom(self) -> bool:
        t = self.peek()
        return (t.text in ("Bool", "Int", "String", "[", "{", "(", "(|")
                or t.kind == "ident")

    def con_atom(self) -> A.Constructor:
        tok = self.next()
        if tok.text == "Bool":
            return A.BOOL_C
        if tok.text == "Int":
            return A.INT_C
        if tok.text == "String":
            return A.STRING_C
        if tok.kind == "ident":
            return A.CVar(tok.text)
        if tok.text == "[":
            elem = self.constructor()
            self.expect("]")
            return A.ListC(elem)
        if tok.text == "{":
            row = self.row_inner("}")
            self.expect("}")
            return A.RecordC(row)
        if tok.text == "(":
            c = self.constructor()
            self.expect(")")
            return c
        raise ParseError(f"expected constructor, found {tok.text!r}", span=tok.span)

    def row_expr(self) -> A.RowConstructor:
        if self.peek().kind == "ident" and not self.at("(|"):
            return A.RVar(self.next().text)
        self.expect("(|")
        row = self.row_inner("|)")
        self.expect("|)")
        return row

    def row_inner(self, closer: str) -> A.RowConstructor:
        if self.at(closer):
            return A.REMPTY
        if self.at("Rmap"):
            self.next()
            fn = self.con_atom()
            return A.RMap(fn, self.row_expr())
        if self.peek().kind == "ident" and self.peek(1).text == closer:
            return A.RVar(self.next().text)
        fields: dict[str, A.Constructor] = {}
        order_span = self.peek().span
        while True:
            name = self.expect_label()
            self.expect(":")
            if name.text in fields:
                raise DuplicateLabel(f"duplicate record label {name.text!r}",
                                     span=name.span)
            fields[name.text] = self.constructor()
            if self.at(","):
                self.next()
                continue
            break
        tail: A.RowConstructor = A.REMPTY
        if self.at("|"):
            self.next()
            tail = self.row_expr()
            if not isinstance(tail, A.RVar):
                raise ParseError("row tail must be a row variable", span=order_span)
        return A.row_of(fields, tail)

    # -- types -------------------------------------------------------------

    def type_(self) -> A.Type:
        if self.at("forall"):
            self.next()
            param = self.expect_ident().text
            self.expect(":")
            kind = self.kind()
            self.expect(".")
            return A.Forall(param, kind, self.type_())
        left = self.type_app()
        if self.at("->"):
            self.next()
            return A.FunT(left, self.type_())
        return left

    def type_app(self) -> A.Type:
        if self.at("Trace"):
            self.next()
            return A.TraceT(self.type_atom())
        return self.type_atom()

    def type_atom(self) -> A.Type:
        tok = self.next()
        if tok.text == "Bool":
            return A.BOOL_T
        if tok.text == "Int":
            return A.INT_T
        if tok.text == "String":
            return A.STRING_T
        if tok.text == "T":
            self.expect("(")
            con = self.constructor()
            self.expect(")")
            return A.Embed(con)
        if tok.text == "[":
            elem = self.type_()
            self.expect("]")
            return A.ListT(elem)
        if tok.text == "{":
            row = self.type_row("}")
            self.expect("}")
            return A.RecordT(row)
        if tok.text == "(":
            t = self.type_()
            self.expect(")")
            return t
        raise ParseError(f"expected type, found {tok.text!r}", span=tok.span)

    def type_row(self, closer: str) -> A.RowType:
        if self.at(closer):
            return A.TEMPTY
        fields: dict[str, A.Type] = {}
        while True:
            name = self.expect_label()
            if name.text in fields:
                raise DuplicateLabel(f"duplicate record label {name.text!r}",
                                     span=name.span)
            self.expect(":")
            fields[name.text] = self.type_()
            if self.at(","):
                self.next()
                continue
            break
        return A.trow_of(fields)

    # -- terms -------------------------------------------------------------

    def term(self) -> A.Term:
        tok = self.peek()
        span = tok.span
        if tok.text == "\\":
            self.next()
            param = self.expect_ident().text
            self.expect(":")
            annot = self.type_()
            self.expect(".")
            return A.Lam(param, annot, self.term(), span=span)
        if tok.text == "/\\":
            self.next()
            param = self.expect_ident().text
            self.expect(":")
            kind = self.kind()
            self.expect(".")
            return A.TyLam(param, kind, self.term(), span=span)
        if tok.text == "fix":
            self.next()
            self.expect("(")
            name = self.expect_ident().text
            self.expect(":")
            annot = self.type_()
            self.expect(")")
            self.expect(".")
            return A.Fix(name, annot, self.term(), span=span)
        if tok.text == "if":
            self.next()
            cond = self.term()
            self.expect("then")
            then = self.term()
            self.expect("else")
            return A.If(cond, then, self.term(), span=span)
        if tok.text == "for":
            self.next()
            self.expect("(")
            binder = self.expect_ident().text
            self.expect("<-")
            source = self.term()
            self.expect(")")
            return A.For(binder, source, self.term(), span=span)
        if tok.text == "where":
            self.next()
            self.expect("(")
            cond = self.term()
            self.expect(")")
            return A.If(cond, self.term(), A.EmptyList(span=span), span=span)
        if tok.text == "typecase":
            return self.typecase()
        if tok.text == "tracecase":
            return self.tracecase()
        return self.concat_term()

    def typecase(self) -> A.Term:
        span = self.expect("typecase").span
        scrut = self.con_atom()
        self.expect("(")
        motive_var = self.expect_ident().text
        self.expect(".")
        motive = self.type_()
        self.expect(")")
        self.expect("of")
        self.expect("{")
        self.expect("Bool")
        self.expect("=>")
        on_bool = self.term()
        self.expect(",")
        self.expect("Int")
        self.expect("=>")
        on_int = self.term()
        self.expect(",")
        self.expect("String")
        self.expect("=>")
        on_string = self.term()
        self.expect(",")
        self.expect("List")
        list_tyvar = self.expect_ident().text
        self.expect("=>")
        on_list = self.term()
        self.expect(",")
        self.expect("Record")
        record_rowvar = self.expect_ident().text
        self.expect("=>")
        on_record = self.term()
        self.expect(",")
        self.expect("Trace")
        trace_tyvar = self.expect_ident().text
        self.expect("=>")
        on_trace = self.term()
        self.expect("}")
        return A.Typecase(scrut, motive_var, motive, on_bool, on_int,
                          on_string, list_tyvar, on_list, record_rowvar,
                          on_record, trace_tyvar, on_trace, span=span)

    def tracecase(self) -> A.Term:
        span = self.expect("tracecase").span
        scrut = self.term()
        self.expect("of")
        self.expect("{")
        self.expect("Lit")
        lit_var = self.expect_ident().text
        self.expect("=>")
        lit_body = self.term()
        self.expect(",")
        self.expect("If")
        if_var = self.expect_ident().text
        self.expect("=>")
        if_body = self.term()
        self.expect(",")
        self.expect("For")
        for_tyvar = self.expect_ident().text
        for_var = self.expect_ident().text
        self.expect("=>")
        for_body = self.term()
        self.expect(",")
        self.expect("Cell")
        cell_var = self.expect_ident().text
        self.expect("=>")
        cell_body = self.term()
        self.expect(",")
        self.expect("OpEq")
        opeq_tyvar = self.expect_ident().text
        opeq_var = self.expect_ident().text
        self.expect("=>")
        opeq_body = self.term()
        self.expect(",")
        self.expect("OpPlus")
        opplus_var = self.expect_ident().text
        self.expect("=>")
        opplus_body = self.term()
        self.expect("}")
        return A.Tracecase(scrut, lit_var, lit_body, if_var, if_body,
                           for_tyvar, for_var, for_body, cell_var, cell_body,
                           opeq_tyvar, opeq_var, opeq_body, opplus_var,
                           opplus_body, span=span)

    def concat_term(self) -> A.Term:
        left = self.eq_term()
        while self.at("++"):
            span = self.next().span
            left = A.Concat(left, self.eq_term(), span=span)
        return left

    def eq_term(self) -> A.Term:
        left = self.plus_term()
        if self.at("=="):
            span = self.next().span
            right = self.plus_term()
            return A.Eq(left, right, span=span)
        return left

    def plus_term(self) -> A.Term:
        left = self.and_term()
        while self.at("+"):
            span = self.next().span
            left = A.Plus(left, self.and_term(), span=span)
        return left

    def and_term(self) -> A.Term:
        # `M && N` => `if M then N else false`; right-associative
        left = self.app_term()
        if self.at("&&"):
            span = self.next().span
            right = self.and_term()
            return A.If(left, right, A.Const(False, span=span), span=span)
        return left

    def app_term(self) -> A.Term:
        tok = self.peek()
        span = tok.span
        if tok.text == "rmap":
            self.next()
            self.expect("^")
            row = self.row_expr()
            fn = self.atom()
            rec = self.atom()
            return A.TermRmap(row, fn, rec, span=span)
        if tok.text == "rfold":
            self.next()
            self.expect("^")
            row = self.row_expr()
            combine = self.atom()
            init = self.atom()
            rec = self.atom()
            return A.TermRfold(row, combine, init, rec, span=span)
        if tok.text == "table":
            self.next()
            name = self.next()
            if name.kind != "string":
                raise ParseError("expected table name string", span=name.span)
            self.expect("{")
            row = self.type_row("}")
            self.expect("}")
            return A.Table(_unquote(name.text), row, span=span)
        if tok.text == "Lit":
            self.next()
            return A.TrLit(self.atom(), span=span)
        if tok.text == "If":
            self.next()
            return A.TrIf(self.atom(), span=span)
        if tok.text == "For":
            self.next()
            con = self.con_atom()
            return A.TrFor(con, self.atom(), span=span)
        if tok.text == "Cell":
            self.next()
            return A.TrCell(self.atom(), span=span)
        if tok.text == "OpEq":
            self.next()
            con = self.con_atom()
            return A.TrOpEq(con, self.atom(), span=span)
        if tok.text == "OpPlus":
            self.next()
            return A.TrOpPlus(self.atom(), span=span)
        if tok.text == "trace":
            self.next()
            return A.TraceSplice(self.atom(), span=span)
        fn = self.atom()
        while True:
            nxt = self.peek()
            if nxt.text == "@":
                self.next()
                arg: A.ConOrRow
                if self.at("(|"):
                    arg = self.row_expr()
                else:
                    arg = self.con_atom()
                fn = A.TyApp(fn, arg, span=span)
                continue
            if self._starts_atom():
                fn = A.App(fn, self.atom(), span=span)
                continue
            return fn

    def _starts_atom(self) -> bool:
        t = self.peek()
        if t.kind in ("int", "string"):
            return True
        if t.kind == "ident":
            return True
        return t.text in ("true", "false", "[", "{", "(")

    def atom(self) -> A.Term:
        tok = self.next()
        span = tok.span
        out: A.Term
        if tok.kind == "int":
            out = A.Const(int(tok.text), span=span)
        elif tok.kind == "string":
            out = A.Const(_unquote(tok.text), span=span)
        elif tok.text == "true":
            out = A.Const(True, span=span)
        elif tok.text == "false":
            out = A.Const(False, span=span)
        elif tok.kind == "ident":
            out = A.Var(tok.text, span=span)
        elif tok.text == "[":
            if self.at("]"):
                self.next()
                out = A.EmptyList(span=span)
            else:
                elem = self.term()
                self.expect("]")
                out = A.Singleton(elem, span=span)
        elif tok.text == "{":
            out = self.record_body(span)
        elif tok.text == "(":
            out = self.term()
            self.expect(")")
        else:
            raise ParseError(f"expected expression, found {tok.text or 'end of input'!r}",
                             span=span)
        while self.at("."):
            self.next()
            label = self.expect_label()
            out = A.Project(out, label.text, span=label.span)
        return out

    def record_body(self, span: A.Span) -> A.Term:
        if self.at("}"):
            self.next()
            return A.EmptyRecord(span=span)
        fields: dict[str, A.Term] = {}
        tail: A.Term | None = None
        while True:
            name = self.expect_label()
            if name.text in fields:
                raise DuplicateLabel(f"duplicate record label {name.text!r}",
                                     span=name.span)
            self.expect("=")
            fields[name.text] = self.term()
            if self.at(","):
                self.next()
                continue
            if self.at("|"):
                self.next()
                tail = self.term()
            break
        self.expect("}")
        term: A.Term = tail if tail is not None else A.EmptyRecord(span=span)
        for label in sorted(fields, reverse=True):
            term = A.RecordExt(label, fields[label], term, span=span)
        return term

    # -- programs ------------------------------------------------------------

    def program(self) -> Program:
        con_decls: dict[str, A.Constructor] = {}
        term_decls: dict[str, A.Term] = {}
        while (self.peek().kind == "ident" and self.at("=", 1)
               and not self.at("==", 1)):
            name = self.expect_ident()
            self.expect("=")
            if name.text in con_decls or name.text in term_decls:
                raise DuplicateName(f"duplicate top-level name {name.text!r}",
                                    span=name.span)
            if _is_typefn_name(name.text):
                con = self.constructor()
                con_decls[name.text] = _inline_cons(con, con_decls)
            else:
                term = self.term()
                term_decls[name.text] = _inline_term(term, con_decls, term_decls)
            self.expect(";")
        main: A.Term | None = None
        if self.peek().kind != "eof":
            main = _inline_term(self.term(), con_decls, term_decls)
            tok = self.peek()
            if tok.kind != "eof":
                raise ParseError(f"unexpected trailing input {tok.text!r}",
                                 span=tok.span)
        return Program(con_decls, term_decls, main)


# ---------------------------------------------------------------------------
# Declaration inlining (capture is impossible: declarations are closed)


def _inline_cons(c: A.ConOrRow, cons: dict[str, A.Constructor]) -> A.ConOrRow:
    match c:
        case A.CVar(name) if name in cons:
            return cons[name]
        case A.CLam(param, kind, body):
            inner = {k: v for k, v in cons.items() if k != param}
            return A.CLam(param, kind, _inline_cons(body, inner))
        case A.CApp(fn, arg):
            return A.CApp(_inline_cons(fn, cons), _inline_cons(arg, cons))
        case A.ListC(e):
            return A.ListC(_inline_cons(e, cons))
        case A.TraceC(e):
            return A.TraceC(_inline_cons(e, cons))
        case A.RecordC(row):
            return A.RecordC(_inline_cons(row, cons))
        case A.Typerec():
            return A.Typerec(*(_inline_cons(x, cons)
                               for x in (c.scrutinee, *c.branches())))
        case A.RExtend(label, head, tail):
            return A.RExtend(label, _inline_cons(head, cons),
                             _inline_cons(tail, cons))
        case A.RMap(fn, row):
            return A.RMap(_inline_cons(fn, cons), _inline_cons(row, cons))
        case _:
            return c


def _inline_type(t: A.Type | A.RowType, cons: dict[str, A.Constructor]):
    match t:
        case A.Embed(con):
            return A.Embed(_inline_cons(con, cons))
        case A.FunT(dom, cod):
            return A.FunT(_inline_type(dom, cons), _inline_type(cod, cons))
        case A.ListT(e):
            return A.ListT(_inline_type(e, cons))
        case A.TraceT(e):
            return A.TraceT(_inline_type(e, cons))
        case A.RecordT(row):
            return A.RecordT(_inline_type(row, cons))
        case A.Forall(param, kind, body):
            inner = {k: v for k, v in cons.items() if k != param}
            return A.Forall(param, kind, _inline_type(body, inner))
        case A.TExtend(label, head, tail):
            return A.TExtend(label, _inline_type(head, cons),
                             _inline_type(tail, cons))
        case _:
            return t


def _inline_term(m: A.Term, cons: dict[str, A.Constructor],
                 terms: dict[str, A.Term]) -> A.Term:
    def go(m: A.Term, cons: dict, terms: dict) -> A.Term:
        def ty(t):
            return _inline_type(t, cons)

        def cn(c):
            return _inline_cons(c, cons)

        match m:
            case A.Var(name) if name in terms:
                return terms[name]
            case A.Const() | A.Var() | A.EmptyRecord() | A.EmptyList() | A.Table():
                if isinstance(m, A.Table):
                    return A.Table(m.name, ty(m.schema), span=m.span)
                return m
            case A.Lam(param, annot, body):
                inner = {k: v for k, v in terms.items() if k != param}
                return A.Lam(param, ty(annot), go(body, cons, inner), span=m.span)
            case A.Fix(name, annot, body):
                inner = {k: v for k, v in terms.items() if k != name}
                return A.Fix(name, ty(annot), go(body, cons, inner), span=m.span)
            case A.TyLam(param, kind, body):
                inner = {k: v for k, v in cons.items() if k != param}
                return A.TyLam(param, kind, go(body, inner, terms), span=m.span)
            case A.TyApp(fn, arg):
                return A.TyApp(go(fn, cons, terms), cn(arg), span=m.span)
            case A.App(fn, arg):
                return A.App(go(fn, cons, terms), go(arg, cons, terms), span=m.span)
            case A.If(c, t, e):
                return A.If(go(c, cons, terms), go(t, cons, terms),
                            go(e, cons, terms), span=m.span)
            case A.Plus(l, r):
                return A.Plus(go(l, cons, terms), go(r, cons, terms), span=m.span)
            case A.Eq(l, r):
                return A.Eq(go(l, cons, terms), go(r, cons, terms), span=m.span)
            case A.Concat(l, r):
                return A.Concat(go(l, cons, terms), go(r, cons, terms), span=m.span)
            case A.RecordExt(label, head, tail):
                return A.RecordExt(label, go(head, cons, terms),
                                   go(tail, cons, terms), span=m.span)
            case A.Project(rec, label):
                return A.Project(go(rec, cons, terms), label, span=m.span)
            case A.TermRmap(row, fn, rec):
                return A.TermRmap(cn(row), go(fn, cons, terms),
                                  go(rec, cons, terms), span=m.span)
            case A.TermRfold(row, combine, init, rec):
                return A.TermRfold(cn(row), go(combine, cons, terms),
                                   go(init, cons, terms), go(rec, cons, terms),
                                   span=m.span)
            case A.Singleton(e):
                return A.Singleton(go(e, cons, terms), span=m.span)
            case A.For(binder, source, body):
                inner = {k: v for k, v in terms.items() if k != binder}
                return A.For(binder, go(source, cons, terms),
                             go(body, cons, inner), span=m.span)
            case A.TrLit(e):
                return A.TrLit(go(e, cons, terms), span=m.span)
            case A.TrIf(e):
                return A.TrIf(go(e, cons, terms), span=m.span)
            case A.TrFor(c, e):
                return A.TrFor(cn(c), go(e, cons, terms), span=m.span)
            case A.TrCell(e):
                return A.TrCell(go(e, cons, terms), span=m.span)
            case A.TrOpEq(c, e):
                return A.TrOpEq(cn(c), go(e, cons, terms), span=m.span)
            case A.TrOpPlus(e):
                return A.TrOpPlus(go(e, cons, terms), span=m.span)
            case A.TraceSplice(e):
                return A.TraceSplice(go(e, cons, terms), span=m.span)
            case A.Tracecase():
                t_lit = {k: v for k, v in terms.items() if k != m.lit_var}
                t_if = {k: v for k, v in terms.items() if k != m.if_var}
                t_for = {k: v for k, v in terms.items() if k != m.for_var}
                c_for = {k: v for k, v in cons.items() if k != m.for_tyvar}
                t_cell = {k: v for k, v in terms.items() if k != m.cell_var}
                t_opeq = {k: v for k, v in terms.items() if k != m.opeq_var}
                c_opeq = {k: v for k, v in cons.items() if k != m.opeq_tyvar}
                t_opp = {k: v for k, v in terms.items() if k != m.opplus_var}
                return A.Tracecase(
                    go(m.scrutinee, cons, terms),
                    m.lit_var, go(m.lit_body, cons, t_lit),
                    m.if_var, go(m.if_body, cons, t_if),
                    m.for_tyvar, m.for_var, go(m.for_body, c_for, t_for),
                    m.cell_var, go(m.cell_body, cons, t_cell),
                    m.opeq_tyvar, m.opeq_var, go(m.opeq_body, c_opeq, t_opeq),
                    m.opplus_var, go(m.opplus_body, cons, t_opp), span=m.span)
            case A.Typecase():
                c_motive = {k: v for k, v in cons.items() if k != m.motive_var}
                c_list = {k: v for k, v in cons.items() if k != m.list_tyvar}
                c_rec = {k: v for k, v in cons.items() if k != m.record_rowvar}
                c_tr = {k: v for k, v in cons.items() if k != m.trace_tyvar}
                return A.Typecase(
                    cn(m.scrutinee), m.motive_var,
                    _inline_type(m.motive, c_motive),
                    go(m.on_bool, cons, terms), go(m.on_int, cons, terms),
                    go(m.on_string, cons, terms),
                    m.list_tyvar, go(m.on_list, c_list, terms),
                    m.record_rowvar, go(m.on_record, c_rec, terms),
                    m.trace_tyvar, go(m.on_trace, c_tr, terms), span=m.span)
        raise AssertionError(f"uninlinable term {m!r}")

    return go(m, cons, terms)


# ---------------------------------------------------------------------------
# Entry points


def parse_program(source: str) -> Program:
    return Parser(source).program()


def parse_term(source: str) -> A.Term:
    program = parse_program(source)
    if program.main is None:
        raise ParseError("program has no main expression")
    return program.main


def parse_constructor(source: str) -> A.Constructor:
    parser = Parser(source)
    con = parser.constructor()
    tok = parser.peek()
    if tok.kind != "eof":
        raise ParseError(f"unexpected trailing input {tok.text!r}", span=tok.span)
    return con


def parse_type(source: str) -> A.Type:
    parser = Parser(source)
    ty = parser.type_()
    tok = parser.peek()
    if tok.kind != "eof":
        raise ParseError(f"unexpected trailing input {tok.text!r}", span=tok.span)
    return ty
