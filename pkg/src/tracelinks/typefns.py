"""The built-in type functions as constructor values.

These are the canonical in-memory forms; the `.lt` sources shipped with the
stdlib parse to alpha-equal constructors (a test pins that).  TRACE maps a
query type to its trace type: base types become traced base types, lists and
records are preserved, and traced types are left alone (so TRACE is
idempotent on its own image, which is what lets analysis functions recurse
through traced component types).
"""

from __future__ import annotations

from .ast import (
    BOOL_C, CApp, CLam, Constructor, CVar, INT_C, ListC, RecordC, RVar,
    STRING_C, TraceC, TYPE, ROW, Typerec, row_of,
)


def _typerec(var: str, branches) -> Constructor:
    return CLam(var, TYPE, Typerec(CVar(var), *branches))


TRACE = _typerec("a", (
    TraceC(BOOL_C),
    TraceC(INT_C),
    TraceC(STRING_C),
    CLam("e", TYPE, CLam("e2", TYPE, ListC(CVar("e2")))),
    CLam("r", ROW, CLam("r2", ROW, RecordC(RVar("r2")))),
    CLam("b", TYPE, CLam("t", TYPE, CVar("t"))),
))

VALUE = _typerec("a", (
    BOOL_C,
    INT_C,
    STRING_C,
    CLam("e", TYPE, CLam("b", TYPE, ListC(CVar("b")))),
    CLam("r", ROW, CLam("r2", ROW, RecordC(RVar("r2")))),
    CLam("c", TYPE, CLam("u", TYPE, CVar("c"))),
))

# W a = {val: a, tbl: String, col: String, row: Int}
W = CLam("a", TYPE, RecordC(row_of({
    "val": CVar("a"),
    "tbl": STRING_C,
    "col": STRING_C,
    "row": INT_C,
})))

WHERE = _typerec("a", (
    CApp(W, BOOL_C),
    CApp(W, INT_C),
    CApp(W, STRING_C),
    CLam("e", TYPE, CLam("b", TYPE, ListC(CVar("b")))),
    CLam("r", ROW, CLam("r2", ROW, RecordC(RVar("r2")))),
    CLam("b", TYPE, CLam("t", TYPE, CVar("t"))),
))

# Lineage annotations are {table: String, row: Int} lists.
LINEAGE_ANNOTATION_ROW = row_of({"table": STRING_C, "row": INT_C})
LINEAGE_ANNOTATIONS = ListC(RecordC(LINEAGE_ANNOTATION_ROW))

# L a = {data: a, lineage: [{table: String, row: Int}]}
L = CLam("a", TYPE, RecordC(row_of({
    "data": CVar("a"),
    "lineage": LINEAGE_ANNOTATIONS,
})))

LINEAGE = _typerec("a", (
    BOOL_C,
    INT_C,
    STRING_C,
    CLam("e", TYPE, CLam("b", TYPE, ListC(CApp(L, CVar("b"))))),
    CLam("r", ROW, CLam("r2", ROW, RecordC(RVar("r2")))),
    CLam("b", TYPE, CLam("t", TYPE, CVar("t"))),
))

TYPE_FUNCTIONS: dict[str, Constructor] = {
    "TRACE": TRACE,
    "VALUE": VALUE,
    "W": W,
    "WHERE": WHERE,
    "L": L,
    "LINEAGE": LINEAGE,
}


def trace_of(c: Constructor) -> Constructor:
    """App(TRACE, c); callers normalize when they need the image."""
    return CApp(TRACE, c)
