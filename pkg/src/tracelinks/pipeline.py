"""The composition pipeline: typecheck, normalize, self-trace, apply an
analysis function, normalize again, certify NRC.

`analyze(mode, q, at)` builds `f (TRACE at) (self_trace(normalize(q), at))`
for the selected analysis `f` and reduces the composition to NRC.  `apply_fn`
does the same with a user-supplied closed function.  `elaborate_traces`
replaces surface `trace M` splices the same way, so whole programs written
in the composition style run too.
"""

from __future__ import annotations

from typing import Callable, Optional

from . import ast as A
from .ast import App, CApp, Constructor, Term, TraceSplice, TyApp, Type
from .builtins import get_builtin
from .errors import NotAQueryType, TraceLinksError, TypeMismatch
from .normalize import (
    NormalizeConfig, DEFAULT_CONFIG, dedup_concat, extract_nrc, normalize,
)
from .printer import print_type
from .selftrace import self_trace
from .typecheck import type_of, _map_children
from .typefns import TRACE
from .types import (
    Context, EMPTY_CONTEXT, to_constructor, type_norm, types_equal,
)

ANALYSIS_MODES = {"value": "value", "where": "wherep", "lineage": "lineage"}


def query_constructor(ctx: Context, q: Term) -> tuple[Constructor, Type]:
    """Typecheck a query and return its type constructor."""
    ty = type_of(ctx, q)
    norm = type_norm(ty)
    try:
        con = to_constructor(norm)
    except ValueError as exc:
        raise NotAQueryType(
            f"query has non-relational type {print_type(norm)}") from exc
    return con, ty


def analyze(mode: str, q: Term, at: Optional[Constructor] = None,
            cfg: NormalizeConfig = DEFAULT_CONFIG,
            ctx: Context = EMPTY_CONTEXT,
            on_step: Optional[Callable[[Term], None]] = None) -> Term:
    """Compose a builtin analysis with the self-traced query; returns NRC."""
    if mode not in ANALYSIS_MODES:
        raise TraceLinksError(
            f"unknown analysis mode {mode!r}; expected one of "
            f"{sorted(ANALYSIS_MODES)}")
    builtin = get_builtin(ANALYSIS_MODES[mode])
    return apply_function(builtin.term, q, at, cfg, ctx, on_step=on_step,
                          fn_type=builtin.declared_type)


def apply_function(fn: Term, q: Term, at: Optional[Constructor] = None,
                   cfg: NormalizeConfig = DEFAULT_CONFIG,
                   ctx: Context = EMPTY_CONTEXT,
                   on_step: Optional[Callable[[Term], None]] = None,
                   fn_type: Optional[Type] = None) -> Term:
    if at is None:
        at, _ = query_constructor(ctx, q)
    else:
        ty = type_of(ctx, q)
        if not types_equal(ctx, ty, A.Embed(at)):
            raise TypeMismatch(
                f"query does not have the stated type "
                f"T({print_type(type_norm(A.Embed(at)))})")
    normalized_q = normalize(q, cfg)
    traced = self_trace(normalized_q, at, ctx)
    composition = App(TyApp(fn, CApp(TRACE, at)), traced)
    if fn_type is None:
        type_of(ctx, composition)
    else:
        # The analysis function is already typechecked (builtins are checked
        # on load); only the instantiated application needs checking.
        from .types import subst_type, type_norm as tnorm
        norm = tnorm(fn_type)
        if not isinstance(norm, A.Forall) or not isinstance(
                tnorm(norm.body), A.FunT):
            raise TypeMismatch("analysis function must have a polymorphic "
                               "function type")
        inst = subst_type(norm.body, {norm.param: CApp(TRACE, at)})
        dom = tnorm(inst)
        type_of(ctx, traced, expected=dom.dom)
    nf = normalize(composition, cfg, on_step=on_step)
    nrc = extract_nrc(nf, ctx)
    if cfg.dedup_lineage:
        nrc = dedup_concat(nrc)
    return nrc


def elaborate_traces(m: Term, ctx: Context = EMPTY_CONTEXT,
                     cfg: NormalizeConfig = DEFAULT_CONFIG) -> Term:
    """Replace every `trace Q` splice with the self-traced form of Q."""

    def go(t: Term) -> Term:
        if isinstance(t, TraceSplice):
            inner = go(t.arg)
            at, _ = query_constructor(ctx, inner)
            normalized = normalize(inner, cfg)
            return self_trace(normalized, at, ctx)
        return _map_children(t, go)

    return go(m)


def normalize_pipeline(q: Term, cfg: NormalizeConfig = DEFAULT_CONFIG,
                       ctx: Context = EMPTY_CONTEXT,
                       on_step: Optional[Callable[[Term], None]] = None) -> Term:
    """Elaborate trace splices, typecheck, normalize."""
    elaborated = elaborate_traces(q, ctx, cfg)
    type_of(ctx, elaborated)
    return normalize(elaborated, cfg, on_step=on_step)
