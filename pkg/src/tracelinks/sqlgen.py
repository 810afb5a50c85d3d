"""Flat SQL emission for NRC queries of type list-of-records-over-base.

One SELECT per union branch, joined with UNION ALL; comprehension binders
become FROM aliases in source order; if-guards conjoin into WHERE; nested
records flatten into underscore-joined column names.  Table names are
lower-cased in FROM and matched case-insensitively against fixtures.
Booleans are emitted as 0/1; the dialect is the SQLite-compatible subset
SELECT/FROM/WHERE/UNION ALL with =, AND, +.

`run_sql` executes a statement against an in-memory SQLite database loaded
from the same JSON fixture shape, for the agreement check.
"""

from __future__ import annotations

import sqlite3
from dataclasses import dataclass
from typing import Optional

from . import ast as A
from .ast import (
    Concat, Const, EmptyList, Eq, For, If, Plus, Project, RecordT,
    Singleton, Table, Term, Type, Var, ListT, trow_fields,
)
from .errors import NotFlat, UnsupportedShape
from .printer import print_term
from .runtime import Database
from .types import type_norm

_BASES = (A.BoolT, A.IntT, A.StringT)


def flatten_columns(ty: Type) -> list[str]:
    """Flattened column names of a flat query type, in canonical order."""
    n = type_norm(ty)
    if not isinstance(n, ListT):
        raise NotFlat(f"result type is not a list of records")
    elem = type_norm(n.elem)
    if not isinstance(elem, RecordT):
        raise NotFlat("result type must be a list of records")

    out: list[str] = []

    def walk(t: Type, path: str) -> None:
        t = type_norm(t)
        if isinstance(t, _BASES):
            out.append(path)
            return
        if isinstance(t, RecordT):
            for label, field in trow_fields(t.row).items():
                walk(field, f"{path}_{label}" if path else label)
            return
        if isinstance(t, ListT):
            raise NotFlat(
                f"nested list under column {path!r}; query shredding is out "
                f"of scope")
        raise NotFlat(f"column {path!r} has non-relational type")

    walk(elem, "")
    return out


@dataclass
class _Branch:
    aliases: list[tuple[str, str]]  # (binder, table name)
    guards: list[Term]
    record: Optional[Term]  # None for an empty branch


def _split_branches(m: Term) -> list[Term]:
    if isinstance(m, Concat):
        return _split_branches(m.lhs) + _split_branches(m.rhs)
    return [m]


def _walk_chain(m: Term, aliases: list, guards: list, path: str) -> list[_Branch]:
    match m:
        case EmptyList():
            return [_Branch(aliases, guards, None)]
        case Singleton(elem):
            return [_Branch(aliases, guards, elem)]
        case Concat(l, r):
            return (_walk_chain(l, list(aliases), list(guards), path + "/lhs")
                    + _walk_chain(r, list(aliases), list(guards), path + "/rhs"))
        case If(cond, then, els):
            if not isinstance(els, EmptyList):
                raise UnsupportedShape(
                    "conditional with non-empty else branch", path=path)
            return _walk_chain(then, aliases, guards + [cond], path + "/then")
        case For(binder, Table(name, _), body):
            return _walk_chain(body, aliases + [(binder, name)], guards,
                               path + f"/for({binder})")
        case For(_, source, _):
            raise UnsupportedShape(
                f"comprehension source is not a table: {print_term(source)}",
                path=path)
    raise UnsupportedShape(
        f"node {type(m).__name__} outside the flat query shape", path=path)


def _quote(s: str) -> str:
    return "'" + s.replace("'", "''") + "'"


def _expr_sql(t: Term, aliases: dict[str, str], path: str) -> str:
    match t:
        case Const(value):
            if isinstance(value, bool):
                return "1" if value else "0"
            if isinstance(value, int):
                return str(value)
            return _quote(value)
        case Project(Var(name), label):
            if name not in aliases:
                raise UnsupportedShape(f"free variable {name!r}", path=path)
            return f"{aliases[name]}.{label}"
        case Plus(l, r):
            return (f"({_expr_sql(l, aliases, path)} + "
                    f"{_expr_sql(r, aliases, path)})")
        case Eq(l, r):
            return (f"({_expr_sql(l, aliases, path)} = "
                    f"{_expr_sql(r, aliases, path)})")
    raise UnsupportedShape(
        f"expression {print_term(t)} is not emittable", path=path)


def _guard_sql(t: Term, aliases: dict[str, str], path: str) -> str:
    match t:
        case Eq(l, r):
            return (f"{_expr_sql(l, aliases, path)} = "
                    f"{_expr_sql(r, aliases, path)}")
        case Project(Var(_), _):
            return f"{_expr_sql(t, aliases, path)} = 1"
    raise UnsupportedShape(
        f"guard {print_term(t)} is not a supported conjunct", path=path)


def _select_items(record: Term, aliases: dict[str, str], path: str) -> list[tuple[str, str]]:
    items: list[tuple[str, str]] = []

    def walk(t: Term, prefix: str, p: str) -> None:
        fields, tail = A.record_spine(t)
        if isinstance(t, (A.RecordExt, A.EmptyRecord)):
            if tail is not None:
                raise UnsupportedShape("record with non-literal tail", path=p)
            for label, value in fields.items():
                walk(value, f"{prefix}_{label}" if prefix else label,
                     f"{p}.{label}")
            return
        items.append((prefix, _expr_sql(t, aliases, p)))

    walk(record, "", path)
    if not items:
        raise UnsupportedShape("empty record in result", path=path)
    return items


def emit_sql(m: Term, ty: Type) -> str:
    """Emit one flat SELECT (or a UNION ALL of them) for an NRC query."""
    columns = flatten_columns(ty)
    branches: list[_Branch] = []
    for top in _split_branches(m):
        branches.extend(_walk_chain(top, [], [], ""))
    selects = []
    for branch in branches:
        if branch.record is None:
            continue
        aliases: dict[str, str] = {}
        used: set[str] = set()
        for binder, _ in branch.aliases:
            base = A.base_name(binder)
            alias = base
            i = 1
            while alias in used:
                alias = f"{base}{i}"
                i += 1
            used.add(alias)
            aliases[binder] = alias
        items = _select_items(branch.record, aliases, "")
        if [name for name, _ in items] != columns:
            raise UnsupportedShape(
                f"result columns {[n for n, _ in items]} do not match the "
                f"flattened type {columns}", path="")
        select = "SELECT " + ", ".join(
            f"{expr} AS {name}" for name, expr in items)
        if branch.aliases:
            select += " FROM " + ", ".join(
                f"{table.lower()} AS {aliases[binder]}"
                for binder, table in branch.aliases)
        if branch.guards:
            select += " WHERE " + " AND ".join(
                _guard_sql(g, aliases, "") for g in branch.guards)
        selects.append(select)
    if not selects:
        # All branches are empty: a well-formed zero-row SELECT.
        items = ", ".join(f"0 AS {name}" for name in columns)
        return f"SELECT {items} WHERE 1 = 0"
    return " UNION ALL ".join(selects)


# ---------------------------------------------------------------------------
# Embedded-engine agreement


def sqlite_connection(db: Database) -> sqlite3.Connection:
    conn = sqlite3.connect(":memory:")
    for table in db.tables.values():
        cols = ", ".join(f"{label} {_sqlite_type(kind)}"
                         for label, kind in table.columns.items())
        conn.execute(f"CREATE TABLE {table.name.lower()} ({cols})")
        labels = list(table.columns)
        placeholders = ", ".join("?" for _ in labels)
        for row in table.rows:
            conn.execute(
                f"INSERT INTO {table.name.lower()} VALUES ({placeholders})",
                [_sqlite_value(row[label]) for label in labels])
    conn.commit()
    return conn


def _sqlite_type(kind: str) -> str:
    return {"int": "INTEGER", "bool": "INTEGER", "string": "TEXT"}[kind]


def _sqlite_value(v):
    if isinstance(v, bool):
        return 1 if v else 0
    return v


def run_sql(sql: str, db: Database) -> list[tuple]:
    conn = sqlite_connection(db)
    try:
        rows = conn.execute(sql).fetchall()
    finally:
        conn.close()
    return rows


def flatten_value(value: dict, ty: Type) -> tuple:
    """Flatten an evaluated record the same way emit_sql flattens columns."""
    out = []

    def walk(v) -> None:
        if isinstance(v, dict):
            for key in sorted(v):
                walk(v[key])
        elif isinstance(v, bool):
            out.append(1 if v else 0)
        else:
            out.append(v)

    walk(value)
    return tuple(out)


def sql_agrees(sql: str, m: Term, ty: Type, db: Database) -> bool:
    """Order-insensitive multiset comparison of SQL rows against eval."""
    from .runtime import eval_term
    expected = sorted(flatten_value(r, ty) for r in eval_term(m, db))
    actual = sorted(tuple(row) for row in run_sql(sql, db))
    return expected == actual
