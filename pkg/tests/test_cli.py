"""End-to-end CLI coverage (in-process)."""

import json
import os

import pytest

from tracelinks.cli import main


@pytest.fixture()
def capout(capsys):
    def run(*argv):
        code = main(list(argv))
        captured = capsys.readouterr()
        return code, captured.out, captured.err
    return run


def test_check_stdlib_wherep(capout):
    code, out, _ = capout("check", "stdlib/wherep.lt")
    assert code == 0
    assert out.strip().endswith("forall a:Type. T(TRACE a) -> T(WHERE a)")


def test_check_json_output(capout):
    code, out, _ = capout("--json", "check", "examples/boattours.lt")
    assert code == 0
    payload = json.loads(out)
    assert payload["type"] == "[{name: String, phone: String}]"


def test_run_boattours(capout):
    code, out, _ = capout("run", "examples/boattours.lt",
                          "--db", "fixtures/tours.json")
    assert code == 0
    rows = json.loads(out)
    assert rows == [
        {"name": "EdinTours", "phone": "412 1200"},
        {"name": "EdinTours", "phone": "412 1200"},
        {"name": "Burns's", "phone": "607 3000"},
    ]


def test_run_lineage_dedup(capout):
    code, out, _ = capout("run", "examples/boattours.lt",
                          "--db", "fixtures/tours.json",
                          "--mode", "lineage", "--dedup")
    assert code == 0
    rows = json.loads(out)
    burns = rows[-1]
    assert burns["data"] == {"name": "Burns's", "phone": "607 3000"}
    lineage_set = {(a["table"], a["row"]) for a in burns["lineage"]}
    assert lineage_set == {("Agencies", 2), ("ExternalTours", 7)}


def test_analyze_where_prints_nrc(capout):
    code, out, _ = capout("analyze", "--mode", "where",
                          "examples/boattours.lt")
    assert code == 0
    assert "tbl = \"ExternalTours\"" in out


def test_normalize_with_trace_steps(capout, tmp_path):
    steps = tmp_path / "steps.txt"
    code, out, _ = capout("normalize", "examples/boattours.lt",
                          "--trace-steps", str(steps))
    assert code == 0
    assert steps.read_text() == ""  # boattours is already normal
    code, out, _ = capout("normalize", "examples/xs_projection.lt",
                          "--trace-steps", str(steps))
    assert code == 0


def test_trace_subcommand(capout):
    code, out, _ = capout("trace", "examples/boattours.lt")
    assert code == 0
    assert "Cell {" in out
    assert "trace" not in out.split(":")[0]  # no trace keyword in the output


def test_sql_subcommand_with_check(capout):
    code, out, _ = capout("sql", "examples/boattours.lt", "--mode", "where",
                          "--db", "fixtures/tours.json", "--check")
    assert code == 0
    assert "agreement check: ok" in out


def test_apply_subcommand(capout, tmp_path):
    fn = tmp_path / "my.lt"
    fn.write_text(open("src/tracelinks/stdlib/linnotation.lt").read())
    q = tmp_path / "q.lt"
    q.write_text('for (x <- table "xs" {oid: Int, a: Int}) [x.a]')
    code, out, _ = capout("apply", str(q), "--fn", str(fn))
    assert code == 0
    assert "table =" in out


def test_user_error_exit_code(capout):
    code, _, err = capout("check", "examples/nope.lt")
    assert code == 1
    assert "error" in err


def test_type_error_exit_code(capout, tmp_path):
    bad = tmp_path / "bad.lt"
    bad.write_text("1 + true")
    code, _, err = capout("check", str(bad))
    assert code == 1
    assert "type-mismatch" in err


def test_json_error_payload(capout, tmp_path):
    bad = tmp_path / "bad.lt"
    bad.write_text("1 + true")
    code, _, err = capout("--json", "check", str(bad))
    assert code == 1
    assert json.loads(err)["error"]["code"] == "type-mismatch"


def test_env_fuel_override(capout, tmp_path, monkeypatch):
    slow = tmp_path / "slow.lt"
    slow.write_text("(fix (f : Int -> Int). \\x:Int. f x) 0")
    monkeypatch.setenv("TRACELINKS_FUEL", "30")
    code, _, err = capout("normalize", str(slow))
    assert code == 1
    assert "fuel-exhausted" in err


def test_selftest_subcommand(capout):
    code, out, _ = capout("selftest", "--seed", "1")
    assert code == 0
    assert "PASS" in out and "FAIL" not in out


def test_builtins_subcommand(capout):
    code, out, _ = capout("builtins")
    assert code == 0
    assert "wherep" in out


def test_explicit_composition_with_trace_keyword(capout):
    # the composition style: wherep @(TRACE [..]) (trace Q) as a whole program
    code, out, _ = capout("run", "examples/boattours_where.lt",
                          "--db", "fixtures/tours.json")
    assert code == 0
    rows = json.loads(out)
    assert rows[-1]["name"] == {"col": "name", "row": 7,
                                "tbl": "ExternalTours", "val": "Burns's"}


def test_internal_invariant_breach_exit_code(capout, monkeypatch):
    # a residual construct surviving normalization is an internal bug and
    # maps to exit code 2
    from tracelinks import service as svc
    from tracelinks.errors import ResidualConstruct

    def boom(req):
        raise svc._wrap(ResidualConstruct("Typecase", "<root>"))

    monkeypatch.setattr("tracelinks.cli.handle_normalize", boom)
    code, _, err = capout("normalize", "examples/boattours.lt")
    assert code == 2
    assert "residual" in err


def test_check_declarations_only_file(capout):
    code, out, _ = capout("check", "stdlib/typefns.lt")
    assert code == 0
    assert "TRACE : Type -> Type" in out
    assert "(no main expression)" in out
