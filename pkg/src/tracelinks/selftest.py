"""Quick invariant suites behind `tracelinks selftest`.

Smaller samples of the properties the test suite runs in full: builtin
self-checks, parser/printer roundtrip, progress/classification agreement,
the VALUE-after-TRACE identity, value-mode semantic roundtrip, and NRC
certification.
"""

from __future__ import annotations

import random

from .ast import CApp, alpha_equal
from .builtins import BUILTIN_NAMES, get_builtin
from .gen import gen_query_type, gen_term
from .normalize import classify, normalize, step
from .parser import parse_term
from .pipeline import analyze
from .printer import print_term
from .runtime import eval_term, generate, values_equal
from .typefns import TRACE, VALUE
from .types import EMPTY_CONTEXT, constructors_equal


def run_selftest(seed: int = 0, report=print) -> bool:
    ok = True

    def suite(name: str, passed: int, failed: int) -> None:
        nonlocal ok
        status = "PASS" if failed == 0 else "FAIL"
        report(f"[{status}] {name}: {passed} ok, {failed} failed")
        if failed:
            ok = False

    failed = 0
    for name in BUILTIN_NAMES:
        try:
            get_builtin(name)
        except Exception:
            failed += 1
    suite("builtins typecheck", len(BUILTIN_NAMES) - failed, failed)

    passed = failed = 0
    for i in range(50):
        ctx, term = gen_term(seed * 1000 + i)
        if alpha_equal(parse_term(print_term(term)), term):
            passed += 1
        else:
            failed += 1
    suite("parse . print roundtrip", passed, failed)

    passed = failed = 0
    for i in range(100):
        _, term = gen_term(seed * 2000 + i)
        not_normal = not classify(term).is_normal
        has_step = step(term) is not None
        if not_normal == has_step:
            passed += 1
        else:
            failed += 1
    suite("progress / classification", passed, failed)

    passed = failed = 0
    rng = random.Random(seed)
    for _ in range(50):
        con = gen_query_type(rng)
        if constructors_equal(EMPTY_CONTEXT, CApp(VALUE, CApp(TRACE, con)), con):
            passed += 1
        else:
            failed += 1
    suite("VALUE after TRACE identity", passed, failed)

    passed = failed = 0
    for i in range(25):
        g = generate(seed * 3000 + i)
        try:
            nrc = analyze("value", g.term, g.con)
            plain = normalize(g.term)
            if values_equal(eval_term(nrc, g.db), eval_term(plain, g.db)):
                passed += 1
            else:
                failed += 1
        except Exception:
            failed += 1
    suite("value-mode roundtrip", passed, failed)

    return ok
