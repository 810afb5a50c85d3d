"""Exception hierarchy shared across the pipeline.

Every user-visible failure derives from TraceLinksError and carries a stable
`code` for machine consumption (`--json` mode, service responses).
"""

from __future__ import annotations


class TraceLinksError(Exception):
    code = "error"

    def __init__(self, message: str, span=None, **extra):
        super().__init__(message)
        self.message = message
        self.span = span
        self.extra = extra

    def to_dict(self) -> dict:
        out = {"code": self.code, "message": self.message}
        if self.span is not None:
            out["span"] = {"line": self.span.line, "col": self.span.col}
        out.update({k: v for k, v in self.extra.items() if v is not None})
        return out


class ParseError(TraceLinksError):
    code = "parse-error"


class DuplicateLabel(ParseError):
    code = "duplicate-label"


class DuplicateName(ParseError):
    code = "duplicate-name"


class KindError(TraceLinksError):
    code = "kind-error"


class UnboundTypeVariable(KindError):
    code = "unbound-type-variable"


class KindMismatch(KindError):
    code = "kind-mismatch"


class TypeCheckError(TraceLinksError):
    code = "type-error"


class UnboundVariable(TypeCheckError):
    code = "unbound-variable"


class TypeMismatch(TypeCheckError):
    code = "type-mismatch"


class NotARecord(TypeCheckError):
    code = "not-a-record"


class NotAList(TypeCheckError):
    code = "not-a-list"


class NotATrace(TypeCheckError):
    code = "not-a-trace"


class MissingLabel(TypeCheckError):
    code = "missing-label"


class BadTableSchema(TypeCheckError):
    code = "bad-table-schema"


class RmapFunctionShape(TypeCheckError):
    code = "rmap-function-shape"


class NotComparable(TypeCheckError):
    code = "not-comparable"


class CannotInfer(TypeCheckError):
    code = "cannot-infer"


class FuelExhausted(TraceLinksError):
    code = "fuel-exhausted"


class NotInNormalForm(TraceLinksError):
    code = "not-in-normal-form"


class NotAQueryType(TraceLinksError):
    code = "not-a-query-type"


class ShapeMismatch(TraceLinksError):
    code = "shape-mismatch"


class ResidualConstruct(TraceLinksError):
    """Certification failure: a non-NRC node survived normalization.  By the
    normal-form theory this indicates an implementation bug, and the message
    says so."""

    code = "residual-construct"

    def __init__(self, kind: str, path: str):
        super().__init__(
            f"internal invariant breach: residual {kind} at {path} after "
            f"normalization; normal closed query terms must be NRC, so this "
            f"is a bug in the normalizer or its caller",
            kind=kind, path=path)


class DbError(TraceLinksError):
    code = "db-error"


class SchemaViolation(DbError):
    code = "schema-violation"


class DuplicateOid(DbError):
    code = "duplicate-oid"


class MissingTable(DbError):
    code = "missing-table"


class SchemaMismatch(DbError):
    code = "schema-mismatch"


class SqlError(TraceLinksError):
    code = "sql-error"


class NotFlat(SqlError):
    code = "not-flat"


class UnsupportedShape(SqlError):
    code = "unsupported-shape"


class UnknownBuiltin(TraceLinksError):
    code = "unknown-builtin"
