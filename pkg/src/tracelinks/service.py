"""Request/response models and handlers for the compile service.

The handlers are plain functions over pydantic models; the FastAPI app wraps
them as POST endpoints and the CLI calls them in-process.  Sources arrive as
text and databases as inline JSON objects, so the service holds no state and
any client can drive the full pipeline remotely.
"""

from __future__ import annotations

from typing import Any, Literal, Optional

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import ast as A
from .ast import CApp, ConOrRow, CVar, Embed, Term, Type
from .builtins import BUILTIN_NAMES, get_builtin
from .errors import ResidualConstruct, TraceLinksError
from .normalize import NormalizeConfig, classify, normalize, dedup_concat, extract_nrc
from .parser import parse_program
from .pipeline import (
    analyze, apply_function, elaborate_traces, normalize_pipeline,
    query_constructor,
)
from .printer import print_term, print_type
from .runtime import eval_term, load_db_object
from .selftrace import self_trace
from .sqlgen import emit_sql, sql_agrees
from .typecheck import type_of
from .typefns import TYPE_FUNCTIONS
from .types import EMPTY_CONTEXT, kind_of_constructor


class ErrorInfo(BaseModel):
    code: str
    message: str
    span: Optional[dict] = None
    expected: Optional[str] = None
    actual: Optional[str] = None


class ServiceError(Exception):
    def __init__(self, info: ErrorInfo, internal: bool = False):
        super().__init__(info.message)
        self.info = info
        self.internal = internal


def _wrap(exc: TraceLinksError) -> ServiceError:
    data = exc.to_dict()
    info = ErrorInfo(
        code=data.pop("code"), message=data.pop("message"),
        span=data.pop("span", None), expected=data.pop("expected", None),
        actual=data.pop("actual", None))
    return ServiceError(info, internal=isinstance(exc, ResidualConstruct))


def _config(fuel: Optional[int], unroll_limit: Optional[int],
            dedup: bool = False) -> NormalizeConfig:
    kwargs: dict = {"dedup_lineage": dedup}
    if fuel is not None:
        kwargs["fuel"] = fuel
    if unroll_limit is not None:
        kwargs["unroll_limit"] = unroll_limit
    return NormalizeConfig(**kwargs)


def _parse_main(source: str) -> Term:
    program = parse_program(source)
    if program.main is None:
        raise TraceLinksError("program has no main expression")
    return program.main


def display_type(ty: Type) -> str:
    """Pretty type with known type functions folded back to their names."""
    return print_type(_fold_type(ty))


def _fold_type(t):
    match t:
        case Embed(con):
            return Embed(_fold_con(con))
        case A.FunT(dom, cod):
            return A.FunT(_fold_type(dom), _fold_type(cod))
        case A.ListT(e):
            return A.ListT(_fold_type(e))
        case A.TraceT(e):
            return A.TraceT(_fold_type(e))
        case A.RecordT(row):
            return A.RecordT(_fold_type(row))
        case A.Forall(p, k, b):
            return A.Forall(p, k, _fold_type(b))
        case A.TExtend(label, head, tail):
            return A.TExtend(label, _fold_type(head), _fold_type(tail))
        case _:
            return t


def _fold_con(c: ConOrRow) -> ConOrRow:
    for name, fn in TYPE_FUNCTIONS.items():
        if A.alpha_equal_con(c, fn):
            return CVar(name)
    match c:
        case A.CLam(p, k, b):
            return A.CLam(p, k, _fold_con(b))
        case CApp(fn, arg):
            return CApp(_fold_con(fn), _fold_con(arg))
        case A.ListC(e):
            return A.ListC(_fold_con(e))
        case A.TraceC(e):
            return A.TraceC(_fold_con(e))
        case A.RecordC(row):
            return A.RecordC(_fold_con(row))
        case A.Typerec():
            return A.Typerec(_fold_con(c.scrutinee),
                             *(_fold_con(b) for b in c.branches()))
        case A.RExtend(label, head, tail):
            return A.RExtend(label, _fold_con(head), _fold_con(tail))
        case A.RMap(fn, row):
            return A.RMap(_fold_con(fn), _fold_con(row))
        case _:
            return c


# ---------------------------------------------------------------------------
# Requests / responses


class CheckRequest(BaseModel):
    source: str


class CheckResponse(BaseModel):
    type: str
    declarations: dict[str, str] = Field(default_factory=dict)


class NormalizeRequest(BaseModel):
    source: str
    fuel: Optional[int] = None
    unroll_limit: Optional[int] = None


class NormalizeResponse(BaseModel):
    normal_form: str
    normal_class: str


class TraceRequest(BaseModel):
    source: str
    fuel: Optional[int] = None
    unroll_limit: Optional[int] = None


class TraceResponse(BaseModel):
    traced: str
    traced_type: str


class AnalyzeRequest(BaseModel):
    source: str
    mode: Literal["value", "where", "lineage"]
    dedup: bool = False
    fuel: Optional[int] = None
    unroll_limit: Optional[int] = None


class AnalyzeResponse(BaseModel):
    nrc: str
    type: str


class ApplyRequest(BaseModel):
    source: str
    function_source: str
    dedup: bool = False
    fuel: Optional[int] = None
    unroll_limit: Optional[int] = None


class RunRequest(BaseModel):
    source: str
    db: dict[str, Any]
    mode: Optional[Literal["value", "where", "lineage"]] = None
    dedup: bool = False
    fuel: Optional[int] = None
    unroll_limit: Optional[int] = None


class RunResponse(BaseModel):
    result: Any


class SqlRequest(BaseModel):
    source: str
    mode: Optional[Literal["value", "where", "lineage"]] = None
    dedup: bool = False
    check: bool = False
    db: Optional[dict[str, Any]] = None
    fuel: Optional[int] = None
    unroll_limit: Optional[int] = None


class SqlResponse(BaseModel):
    sql: str
    checked: Optional[bool] = None


class BuiltinInfo(BaseModel):
    name: str
    kind: Literal["term", "type-function"]
    signature: str


# ---------------------------------------------------------------------------
# Handlers (shared by the HTTP app and the CLI)


def handle_check(req: CheckRequest) -> CheckResponse:
    try:
        program = parse_program(req.source)
        decls = {}
        for name, con in program.con_decls.items():
            decls[name] = str(kind_of_constructor(EMPTY_CONTEXT, con))
        for name, term in program.term_decls.items():
            decls[name] = display_type(type_of(EMPTY_CONTEXT, term))
        if program.main is None:
            return CheckResponse(type="(no main expression)",
                                 declarations=decls)
        main = elaborate_traces(program.main)
        ty = type_of(EMPTY_CONTEXT, main)
        return CheckResponse(type=display_type(ty), declarations=decls)
    except TraceLinksError as exc:
        raise _wrap(exc) from exc


def handle_normalize(req: NormalizeRequest) -> NormalizeResponse:
    try:
        cfg = _config(req.fuel, req.unroll_limit)
        term = _parse_main(req.source)
        nf = normalize_pipeline(term, cfg)
        cls = classify(nf)
        return NormalizeResponse(normal_form=print_term(nf),
                                 normal_class=cls.tag)
    except TraceLinksError as exc:
        raise _wrap(exc) from exc


def handle_trace(req: TraceRequest) -> TraceResponse:
    try:
        cfg = _config(req.fuel, req.unroll_limit)
        term = elaborate_traces(_parse_main(req.source), cfg=cfg)
        at, _ = query_constructor(EMPTY_CONTEXT, term)
        normalized = normalize(term, cfg)
        traced = self_trace(normalized, at)
        ty = type_of(EMPTY_CONTEXT, traced)
        return TraceResponse(traced=print_term(traced),
                             traced_type=display_type(ty))
    except TraceLinksError as exc:
        raise _wrap(exc) from exc


def handle_analyze(req: AnalyzeRequest) -> AnalyzeResponse:
    try:
        cfg = _config(req.fuel, req.unroll_limit, req.dedup)
        term = elaborate_traces(_parse_main(req.source), cfg=cfg)
        nrc = analyze(req.mode, term, cfg=cfg)
        ty = type_of(EMPTY_CONTEXT, nrc)
        return AnalyzeResponse(nrc=print_term(nrc), type=display_type(ty))
    except TraceLinksError as exc:
        raise _wrap(exc) from exc


def handle_apply(req: ApplyRequest) -> AnalyzeResponse:
    try:
        cfg = _config(req.fuel, req.unroll_limit, req.dedup)
        fn = _parse_main(req.function_source)
        term = elaborate_traces(_parse_main(req.source), cfg=cfg)
        nrc = apply_function(fn, term, cfg=cfg)
        ty = type_of(EMPTY_CONTEXT, nrc)
        return AnalyzeResponse(nrc=print_term(nrc), type=display_type(ty))
    except TraceLinksError as exc:
        raise _wrap(exc) from exc


def _nrc_of(req, cfg: NormalizeConfig) -> tuple[Term, Type]:
    term = elaborate_traces(_parse_main(req.source), cfg=cfg)
    if req.mode is None:
        type_of(EMPTY_CONTEXT, term)
        nrc = normalize(term, cfg)
        nrc = extract_nrc(nrc)
        if cfg.dedup_lineage:
            nrc = dedup_concat(nrc)
    else:
        nrc = analyze(req.mode, term, cfg=cfg)
    return nrc, type_of(EMPTY_CONTEXT, nrc)


def handle_run(req: RunRequest) -> RunResponse:
    try:
        cfg = _config(req.fuel, req.unroll_limit, req.dedup)
        nrc, _ = _nrc_of(req, cfg)
        db = load_db_object(req.db)
        return RunResponse(result=eval_term(nrc, db))
    except TraceLinksError as exc:
        raise _wrap(exc) from exc


def handle_sql(req: SqlRequest) -> SqlResponse:
    try:
        cfg = _config(req.fuel, req.unroll_limit, req.dedup)
        nrc, ty = _nrc_of(req, cfg)
        sql = emit_sql(nrc, ty)
        checked = None
        if req.check:
            if req.db is None:
                raise TraceLinksError("--check requires a database fixture")
            checked = sql_agrees(sql, nrc, ty, load_db_object(req.db))
        return SqlResponse(sql=sql, checked=checked)
    except TraceLinksError as exc:
        raise _wrap(exc) from exc


def handle_builtins() -> list[BuiltinInfo]:
    out = []
    for name in BUILTIN_NAMES:
        b = get_builtin(name)
        if b.is_type_function:
            out.append(BuiltinInfo(name=name, kind="type-function",
                                   signature=str(b.kind)))
        else:
            out.append(BuiltinInfo(name=name, kind="term",
                                   signature=display_type(b.declared_type)))
    return out


# ---------------------------------------------------------------------------
# FastAPI application


def create_app() -> FastAPI:
    app = FastAPI(title="tracelinks",
                  description="Typed query calculus with provenance analyses")

    @app.exception_handler(ServiceError)
    async def service_error(request, exc: ServiceError):
        status = 500 if exc.internal else 400
        return JSONResponse(status_code=status,
                            content={"error": exc.info.model_dump()})

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/builtins", response_model=list[BuiltinInfo])
    def builtins():
        return handle_builtins()

    @app.post("/check", response_model=CheckResponse)
    def check(req: CheckRequest):
        return handle_check(req)

    @app.post("/normalize", response_model=NormalizeResponse)
    def normalize_(req: NormalizeRequest):
        return handle_normalize(req)

    @app.post("/trace", response_model=TraceResponse)
    def trace(req: TraceRequest):
        return handle_trace(req)

    @app.post("/analyze", response_model=AnalyzeResponse)
    def analyze_(req: AnalyzeRequest):
        return handle_analyze(req)

    @app.post("/apply", response_model=AnalyzeResponse)
    def apply_(req: ApplyRequest):
        return handle_apply(req)

    @app.post("/run", response_model=RunResponse)
    def run(req: RunRequest):
        return handle_run(req)

    @app.post("/sql", response_model=SqlResponse)
    def sql(req: SqlRequest):
        return handle_sql(req)

    return app


app = create_app()
