"""Batch command-line front end.

A thin client over the service handlers in `service.py`: each subcommand
builds the corresponding request model, invokes the handler in-process, and
formats the response (`--json` for machine output).  `serve` starts the HTTP
service; everything else works offline.

Exit codes: 0 success, 1 user error, 2 internal invariant breach (a
residual construct surviving normalization).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import TraceLinksError
from .service import (
    AnalyzeRequest, ApplyRequest, CheckRequest, NormalizeRequest, RunRequest,
    ServiceError, SqlRequest, TraceRequest, handle_analyze, handle_apply,
    handle_builtins, handle_check, handle_normalize, handle_run, handle_sql,
    handle_trace,
)


def _read_source(path: str) -> str:
    p = Path(path)
    if not p.exists() and not p.is_absolute():
        from .builtins import stdlib_dir
        candidate = stdlib_dir().parent / path
        if candidate.exists():
            p = candidate
    if not p.exists():
        raise TraceLinksError(f"no such file: {path}")
    return p.read_text(encoding="utf-8")


def _read_db(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise TraceLinksError(f"no such database file: {path}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise TraceLinksError(f"database file is not valid JSON: {exc}")


def _env_fuel() -> int | None:
    raw = os.environ.get("TRACELINKS_FUEL")
    if not raw:
        return None
    try:
        return max(1, int(raw))
    except ValueError:
        return None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tracelinks",
        description="Typecheck, trace, analyze, run, and compile queries.")
    parser.add_argument("--json", action="store_true",
                        help="machine-readable JSON output")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--fuel", type=int, default=None,
                       help="normalization step budget")
        p.add_argument("--unroll-limit", type=int, default=None,
                       help="max unrollings per fix node")

    p = sub.add_parser("check", help="parse, kind, and typecheck a program")
    p.add_argument("file")

    p = sub.add_parser("normalize", help="print a program's normal form")
    p.add_argument("file")
    common(p)
    p.add_argument("--trace-steps", metavar="FILE", default=None,
                   help="dump every intermediate term to FILE")

    p = sub.add_parser("trace", help="print the self-traced query")
    p.add_argument("file")
    common(p)

    p = sub.add_parser("analyze", help="compose a trace analysis, print NRC")
    p.add_argument("file")
    p.add_argument("--mode", required=True,
                   choices=["value", "where", "lineage"])
    p.add_argument("--dedup", action="store_true",
                   help="collapse syntactically duplicate lineage")
    common(p)

    p = sub.add_parser("apply", help="compose a user analysis function")
    p.add_argument("file")
    p.add_argument("--fn", required=True, metavar="FN.lt")
    p.add_argument("--dedup", action="store_true")
    common(p)

    p = sub.add_parser("run", help="evaluate against a JSON database")
    p.add_argument("file")
    p.add_argument("--db", required=True)
    p.add_argument("--mode", default=None,
                   choices=["value", "where", "lineage"])
    p.add_argument("--dedup", action="store_true")
    common(p)

    p = sub.add_parser("sql", help="emit flat SQL")
    p.add_argument("file")
    p.add_argument("--mode", default=None,
                   choices=["value", "where", "lineage"])
    p.add_argument("--dedup", action="store_true")
    p.add_argument("--db", default=None)
    p.add_argument("--check", action="store_true",
                   help="run the embedded-engine agreement test")
    common(p)

    p = sub.add_parser("selftest", help="run the invariant suites")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("builtins", help="list the shipped analysis functions")

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def _dispatch(args) -> int:
    fuel = args.fuel if getattr(args, "fuel", None) is not None else _env_fuel()
    unroll = getattr(args, "unroll_limit", None)

    if args.command == "check":
        resp = handle_check(CheckRequest(source=_read_source(args.file)))
        lines = [f"{name} : {sig}" for name, sig in resp.declarations.items()]
        lines.append(resp.type)
        _emit(args, resp.model_dump(), "\n".join(lines))
        return 0

    if args.command == "normalize":
        if args.trace_steps:
            return _normalize_with_steps(args, fuel, unroll)
        resp = handle_normalize(NormalizeRequest(
            source=_read_source(args.file), fuel=fuel, unroll_limit=unroll))
        _emit(args, resp.model_dump(), resp.normal_form)
        return 0

    if args.command == "trace":
        resp = handle_trace(TraceRequest(
            source=_read_source(args.file), fuel=fuel, unroll_limit=unroll))
        _emit(args, resp.model_dump(),
              f"{resp.traced}\n: {resp.traced_type}")
        return 0

    if args.command == "analyze":
        resp = handle_analyze(AnalyzeRequest(
            source=_read_source(args.file), mode=args.mode, dedup=args.dedup,
            fuel=fuel, unroll_limit=unroll))
        _emit(args, resp.model_dump(), resp.nrc)
        return 0

    if args.command == "apply":
        resp = handle_apply(ApplyRequest(
            source=_read_source(args.file),
            function_source=_read_source(args.fn),
            dedup=args.dedup, fuel=fuel, unroll_limit=unroll))
        _emit(args, resp.model_dump(), resp.nrc)
        return 0

    if args.command == "run":
        resp = handle_run(RunRequest(
            source=_read_source(args.file), db=_read_db(args.db),
            mode=args.mode, dedup=args.dedup, fuel=fuel, unroll_limit=unroll))
        _emit(args, resp.model_dump(),
              json.dumps(resp.result, indent=2, sort_keys=True))
        return 0

    if args.command == "sql":
        resp = handle_sql(SqlRequest(
            source=_read_source(args.file), mode=args.mode, dedup=args.dedup,
            check=args.check, db=_read_db(args.db) if args.db else None,
            fuel=fuel, unroll_limit=unroll))
        text = resp.sql
        if resp.checked is not None:
            text += f"\n-- agreement check: {'ok' if resp.checked else 'FAILED'}"
        _emit(args, resp.model_dump(), text)
        return 0 if resp.checked is not False else 2

    if args.command == "selftest":
        return _selftest(args)

    if args.command == "builtins":
        infos = handle_builtins()
        payload = [i.model_dump() for i in infos]
        text = "\n".join(f"{i.name:14} {i.kind:14} {i.signature}"
                         for i in infos)
        _emit(args, {"builtins": payload}, text)
        return 0

    if args.command == "serve":
        import uvicorn
        from .service import app
        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    raise AssertionError(f"unhandled command {args.command}")


def _normalize_with_steps(args, fuel, unroll) -> int:
    from .normalize import NormalizeConfig, classify
    from .pipeline import normalize_pipeline
    from .parser import parse_program
    from .printer import print_term

    kwargs = {}
    if fuel is not None:
        kwargs["fuel"] = fuel
    if unroll is not None:
        kwargs["unroll_limit"] = unroll
    cfg = NormalizeConfig(**kwargs)
    program = parse_program(_read_source(args.file))
    if program.main is None:
        raise TraceLinksError("program has no main expression")
    with open(args.trace_steps, "w", encoding="utf-8") as handle:
        def dump(t):
            handle.write(print_term(t) + "\n")
        nf = normalize_pipeline(program.main, cfg, on_step=dump)
    _emit(args, {"normal_form": print_term(nf),
                 "normal_class": classify(nf).tag}, print_term(nf))
    return 0


def _selftest(args) -> int:
    from .selftest import run_selftest
    ok = run_selftest(seed=args.seed, report=print)
    return 0 if ok else 2


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except ServiceError as exc:
        payload = {"error": exc.info.model_dump()}
        if args.json:
            print(json.dumps(payload, indent=2, sort_keys=True),
                  file=sys.stderr)
        else:
            print(f"error[{exc.info.code}]: {exc.info.message}",
                  file=sys.stderr)
        return 2 if exc.internal else 1
    except TraceLinksError as exc:
        if args.json:
            print(json.dumps({"error": exc.to_dict()}, indent=2,
                             sort_keys=True), file=sys.stderr)
        else:
            print(f"error[{exc.code}]: {exc.message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
