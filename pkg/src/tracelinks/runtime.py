"""In-memory databases, the direct NRC evaluator, and the generators that
fuel the property suites.

Values are plain Python data: bool/int/str, lists, and dicts with keys in
canonical order.  Equality is type-tagged (True != 1).  `for` iterates table
rows in ascending oid, which makes golden outputs deterministic.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Optional

from . import ast as A
from .ast import (
    BOOL_T, Concat, Const, EmptyList, EmptyRecord, Eq, For, If, INT_T,
    Plus, Project, RecordExt, Singleton, STRING_T, Table, Term, Type, Var,
    record_of, trow_fields, trow_of,
)
from .errors import (
    DbError, DuplicateOid, MissingTable, ParseError, SchemaMismatch,
    SchemaViolation,
)
from .printer import print_term

_JSON_TYPES = {"bool": BOOL_T, "int": INT_T, "string": STRING_T}
_TYPE_NAMES = {BOOL_T: "bool", INT_T: "int", STRING_T: "string"}
_PY_TYPES = {"bool": bool, "int": int, "string": str}


@dataclass(frozen=True)
class DbTable:
    name: str
    columns: dict[str, str]  # label -> "bool" | "int" | "string"
    rows: tuple  # tuple of dicts, ascending oid

    @property
    def schema(self):
        return trow_of({label: _JSON_TYPES[kind]
                        for label, kind in self.columns.items()})


@dataclass(frozen=True)
class Database:
    tables: dict[str, DbTable]  # keyed by lowercased name

    def lookup(self, name: str) -> Optional[DbTable]:
        return self.tables.get(name.lower())


def load_db_object(obj: dict) -> Database:
    if not isinstance(obj, dict):
        raise ParseError("database file must be a JSON object of tables")
    tables: dict[str, DbTable] = {}
    for name, spec in obj.items():
        if not isinstance(spec, dict) or "columns" not in spec or "rows" not in spec:
            raise SchemaViolation(
                f"table {name!r} must have 'columns' and 'rows'")
        columns = spec["columns"]
        if not isinstance(columns, dict) or any(
                kind not in _JSON_TYPES for kind in columns.values()):
            raise SchemaViolation(
                f"table {name!r} columns must map labels to bool/int/string")
        if columns.get("oid") != "int":
            raise SchemaViolation(
                f"table {name!r} must declare an oid column of type int")
        seen_oids: set[int] = set()
        rows = []
        for row in spec["rows"]:
            if not isinstance(row, dict) or set(row) != set(columns):
                raise SchemaViolation(
                    f"table {name!r} row {row!r} does not match the schema")
            for label, value in row.items():
                want = _PY_TYPES[columns[label]]
                if not isinstance(value, want) or (
                        want is int and isinstance(value, bool)):
                    raise SchemaViolation(
                        f"table {name!r} column {label!r}: {value!r} is not "
                        f"{columns[label]}")
            oid = row["oid"]
            if oid in seen_oids:
                raise DuplicateOid(f"table {name!r} has duplicate oid {oid}")
            seen_oids.add(oid)
            rows.append(dict(sorted(row.items())))
        rows.sort(key=lambda r: r["oid"])
        lname = name.lower()
        if lname in tables:
            raise SchemaViolation(f"duplicate table name {name!r}")
        tables[lname] = DbTable(name, dict(columns), tuple(rows))
    return Database(tables)


def load_db(path: str) -> Database:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            obj = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ParseError(f"database file is not valid JSON: {exc}") from exc
    return load_db_object(obj)


# ---------------------------------------------------------------------------
# Evaluation


def value_key(v):
    """Canonical tagged form for equality/ordering; keeps bool apart from int."""
    if isinstance(v, bool):
        return ("b", v)
    if isinstance(v, int):
        return ("i", v)
    if isinstance(v, str):
        return ("s", v)
    if isinstance(v, list):
        return ("l", tuple(value_key(x) for x in v))
    if isinstance(v, dict):
        return ("r", tuple((k, value_key(v[k])) for k in sorted(v)))
    raise TypeError(f"not a value: {v!r}")


def values_equal(a, b) -> bool:
    return value_key(a) == value_key(b)


def eval_term(m: Term, db: Database, env: Optional[dict] = None):
    env = env or {}
    match m:
        case Const(value):
            return value
        case Var(name):
            if name not in env:
                raise DbError(f"unbound variable {name!r} at evaluation")
            return env[name]
        case Plus(l, r):
            return eval_term(l, db, env) + eval_term(r, db, env)
        case Eq(l, r):
            return values_equal(eval_term(l, db, env), eval_term(r, db, env))
        case If(c, t, e):
            cond = eval_term(c, db, env)
            if not isinstance(cond, bool):
                raise DbError("if condition did not evaluate to a boolean")
            return eval_term(t, db, env) if cond else eval_term(e, db, env)
        case EmptyRecord():
            return {}
        case RecordExt():
            fields, tail = A.record_spine(m)
            if tail is not None:
                raise DbError("record extension over non-literal tail")
            return {k: eval_term(v, db, env)
                    for k, v in sorted(fields.items())}
        case Project(rec, label):
            value = eval_term(rec, db, env)
            if not isinstance(value, dict) or label not in value:
                raise DbError(f"projection .{label} from non-record {value!r}")
            return value[label]
        case EmptyList():
            return []
        case Singleton(e):
            return [eval_term(e, db, env)]
        case Concat(l, r):
            return eval_term(l, db, env) + eval_term(r, db, env)
        case For(binder, source, body):
            out = []
            for item in eval_term(source, db, env):
                out.extend(eval_term(body, db, {**env, binder: item}))
            return out
        case Table(name, schema):
            table = db.lookup(name)
            if table is None:
                raise MissingTable(f"database has no table {name!r}")
            from .types import type_norm
            declared = {label: _TYPE_NAMES.get(type_norm(ty))
                        for label, ty in trow_fields(schema).items()}
            if declared != table.columns:
                raise SchemaMismatch(
                    f"table {name!r} schema mismatch: query declares "
                    f"{declared}, database has {table.columns}")
            return [dict(row) for row in table.rows]
    raise DbError(f"term is not NRC-evaluable: {print_term(m)}")


# ---------------------------------------------------------------------------
# Generator: closed NRC queries with a matching database


_BASE_KINDS = ("int", "string", "bool")
_STRINGS = ("red", "green", "blue", "teal", "plum")


@dataclass(frozen=True)
class GeneratedQuery:
    db: Database
    term: Term
    con: A.Constructor  # the query's type constructor
    ty: Type


def generate(seed: int, *, max_tables: int = 2, max_cols: int = 3,
             max_rows: int = 6, depth: int = 3,
             allow_nested: bool = True) -> GeneratedQuery:
    """Deterministic-per-seed database + closed well-typed NRC query.

    Generation is type-directed, so the query always typechecks; a test
    pins that as an invariant.
    """
    rng = random.Random(seed)
    next_oid = 1
    tables: dict[str, dict] = {}
    for t in range(rng.randint(1, max_tables)):
        name = f"t{t}"
        columns = {"oid": "int"}
        for c in range(rng.randint(1, max_cols)):
            columns[f"c{c}"] = rng.choice(_BASE_KINDS)
        rows = []
        for _ in range(rng.randint(0, max_rows)):
            row = {}
            for label, kind in columns.items():
                if label == "oid":
                    row[label] = next_oid
                    next_oid += 1
                elif kind == "int":
                    row[label] = rng.randint(0, 4)
                elif kind == "bool":
                    row[label] = rng.choice([True, False])
                else:
                    row[label] = rng.choice(_STRINGS)
            rows.append(row)
        tables[name] = {"columns": columns, "rows": rows}
    db = load_db_object(tables)

    gen = _QueryGen(rng, db, allow_nested)
    term = gen.query(depth)
    from .typecheck import type_of
    from .types import EMPTY_CONTEXT, to_constructor, type_norm
    ty = type_of(EMPTY_CONTEXT, term)
    con = to_constructor(type_norm(ty))
    return GeneratedQuery(db, term, con, ty)


class _QueryGen:
    def __init__(self, rng: random.Random, db: Database, allow_nested: bool):
        self.rng = rng
        self.db = db
        self.allow_nested = allow_nested
        self.counter = 0

    def fresh(self) -> str:
        self.counter += 1
        return f"v{self.counter}"

    def table_term(self) -> tuple[Term, DbTable]:
        table = self.rng.choice(sorted(self.db.tables.values(),
                                       key=lambda t: t.name))
        return Table(table.name, table.schema), table

    def query(self, depth: int) -> Term:
        """A closed query of some list type."""
        src, table = self.table_term()
        binder = self.fresh()
        env = {binder: table}
        body = self.body(env, depth - 1)
        out = For(binder, src, body)
        if depth > 1 and self.rng.random() < 0.25:
            # union with a structurally identical branch
            other = For(binder, src, body)
            out = Concat(out, other)
        return out

    def body(self, env: dict[str, DbTable], depth: int) -> Term:
        roll = self.rng.random()
        if depth > 0 and roll < 0.35:
            src, table = self.table_term()
            binder = self.fresh()
            inner = self.body({**env, binder: table}, depth - 1)
            out: Term = For(binder, src, inner)
        else:
            out = Singleton(self.element(env, depth))
        if self.rng.random() < 0.5:
            out = If(self.guard(env), out, EmptyList())
        return out

    def guard(self, env: dict[str, DbTable]) -> Term:
        binder, table = self.rng.choice(sorted(env.items()))
        data_cols = [c for c in table.columns if c != "oid"]
        col = self.rng.choice(sorted(data_cols) or ["oid"])
        kind = table.columns[col]
        lhs = Project(Var(binder), col)
        others = [(b, t) for b, t in sorted(env.items())
                  if any(t.columns[c] == kind and c != "oid"
                         for c in t.columns)]
        if others and self.rng.random() < 0.5:
            ob, ot = self.rng.choice(others)
            ocol = self.rng.choice(sorted(
                c for c in ot.columns if ot.columns[c] == kind and c != "oid"))
            return Eq(lhs, Project(Var(ob), ocol))
        return Eq(lhs, self.literal(kind))

    def literal(self, kind: str) -> Term:
        if kind == "int":
            return Const(self.rng.randint(0, 4))
        if kind == "bool":
            return Const(self.rng.choice([True, False]))
        return Const(self.rng.choice(_STRINGS))

    def element(self, env: dict[str, DbTable], depth: int) -> Term:
        if self.rng.random() < 0.15:
            return self.base_expr(env, self.rng.choice(_BASE_KINDS))
        fields: dict[str, Term] = {}
        for i in range(self.rng.randint(1, 3)):
            label = f"f{i}"
            if (self.allow_nested and depth > 0
                    and self.rng.random() < 0.2):
                src, table = self.table_term()
                binder = self.fresh()
                inner_env = {**env, binder: table}
                fields[label] = For(binder, src,
                                    Singleton(self.element(inner_env, 0)))
            else:
                fields[label] = self.base_expr(env, self.rng.choice(_BASE_KINDS))
        return record_of(fields)

    def base_expr(self, env: dict[str, DbTable], kind: str) -> Term:
        candidates = []
        for binder, table in sorted(env.items()):
            for col, ckind in sorted(table.columns.items()):
                if ckind == kind:
                    candidates.append(Project(Var(binder), col))
        roll = self.rng.random()
        if candidates and roll < 0.6:
            return self.rng.choice(candidates)
        if kind == "int" and candidates and roll < 0.8:
            return Plus(self.rng.choice(candidates), self.literal("int"))
        if kind == "bool" and candidates and roll < 0.8:
            lhs = self.rng.choice(candidates)
            return Eq(lhs, lhs)
        return self.literal(kind)
