"""Loading and caching of the shipped trace-analysis functions.

Builtin terms are stored as `.lt` source under `stdlib/` and parsed and
typechecked on first use, so loading them doubles as an end-to-end test of
the front half of the pipeline.  Type functions (TRACE, VALUE, W, WHERE, L,
LINEAGE) are constructors; the rest are closed terms.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional

from .ast import Constructor, Term, Type, alpha_equal_con
from .errors import TraceLinksError, UnknownBuiltin
from .parser import parse_program
from .typecheck import type_of
from .types import EMPTY_CONTEXT, kind_of_constructor
from .typefns import TYPE_FUNCTIONS

_TERM_FILES = {
    "value": "value.lt",
    "fake": "fake.lt",
    "wherep": "wherep.lt",
    "lineage": "lineage.lt",
    "linnotation": "linnotation.lt",
}

BUILTIN_NAMES = tuple(TYPE_FUNCTIONS) + tuple(_TERM_FILES)


@dataclass(frozen=True)
class Builtin:
    name: str
    term: Optional[Term]  # closed, typechecked; None for type functions
    declared_type: Optional[Type]
    constructor: Optional[Constructor]  # for type functions
    kind: Optional[object]

    @property
    def is_type_function(self) -> bool:
        return self.constructor is not None


def stdlib_dir() -> Path:
    return Path(importlib.resources.files("tracelinks") / "stdlib")


def stdlib_source(filename: str) -> str:
    return (stdlib_dir() / filename).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def get_builtin(name: str) -> Builtin:
    if name in TYPE_FUNCTIONS:
        con = TYPE_FUNCTIONS[name]
        kind = kind_of_constructor(EMPTY_CONTEXT, con)
        return Builtin(name, None, None, con, kind)
    if name not in _TERM_FILES:
        raise UnknownBuiltin(
            f"unknown builtin {name!r}; expected one of {sorted(BUILTIN_NAMES)}")
    program = parse_program(stdlib_source(_TERM_FILES[name]))
    if program.main is None:
        raise TraceLinksError(f"stdlib file for {name!r} has no main term")
    term = program.main
    # Self-test on load: every builtin typechecks at its declared type.
    declared = type_of(EMPTY_CONTEXT, term)
    for fname, con in program.con_decls.items():
        if fname in TYPE_FUNCTIONS and not alpha_equal_con(
                con, TYPE_FUNCTIONS[fname]):
            raise TraceLinksError(
                f"stdlib {name}.lt declares {fname} differently from the "
                f"canonical definition")
    return Builtin(name, term, declared, None, None)


def all_builtins() -> dict[str, Builtin]:
    return {name: get_builtin(name) for name in BUILTIN_NAMES}
