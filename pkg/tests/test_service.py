"""The HTTP service endpoints."""

import json

import pytest
from fastapi.testclient import TestClient

from tracelinks.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture(scope="module")
def tours_json(root):
    return json.loads((root / "fixtures" / "tours.json").read_text())


@pytest.fixture(scope="module")
def boattours_src(root):
    return (root / "examples" / "boattours.lt").read_text()


def test_health(client):
    assert client.get("/health").json() == {"status": "ok"}


def test_builtins_listing(client):
    resp = client.get("/builtins")
    assert resp.status_code == 200
    names = {b["name"] for b in resp.json()}
    assert {"TRACE", "VALUE", "WHERE", "W", "LINEAGE", "L",
            "value", "wherep", "fake", "lineage", "linnotation"} <= names
    wherep = next(b for b in resp.json() if b["name"] == "wherep")
    assert wherep["signature"] == "forall a:Type. T(TRACE a) -> T(WHERE a)"


def test_check_endpoint(client, boattours_src):
    resp = client.post("/check", json={"source": boattours_src})
    assert resp.status_code == 200
    assert resp.json()["type"] == "[{name: String, phone: String}]"


def test_check_reports_type_errors(client):
    resp = client.post("/check", json={"source": 'if 1 then 2 else 3'})
    assert resp.status_code == 400
    assert resp.json()["error"]["code"] == "type-mismatch"


def test_normalize_endpoint(client):
    resp = client.post("/normalize", json={"source": "(\\x:Int. x + x) 3"})
    assert resp.status_code == 200
    assert resp.json()["normal_form"] == "3 + 3"
    assert resp.json()["normal_class"] == "NormalTerm"


def test_trace_endpoint(client):
    resp = client.post("/trace", json={"source": "[2 + 3]"})
    assert resp.status_code == 200
    assert resp.json()["traced"] == "[OpPlus {l = Lit 2, r = Lit 3}]"


def test_analyze_endpoint(client, boattours_src):
    resp = client.post("/analyze", json={"source": boattours_src,
                                         "mode": "where"})
    assert resp.status_code == 200
    assert "tbl =" in resp.json()["nrc"] or "tbl" in resp.json()["nrc"]


def test_run_endpoint(client, boattours_src, tours_json):
    resp = client.post("/run", json={"source": boattours_src,
                                     "db": tours_json})
    assert resp.status_code == 200
    assert resp.json()["result"] == [
        {"name": "EdinTours", "phone": "412 1200"},
        {"name": "EdinTours", "phone": "412 1200"},
        {"name": "Burns's", "phone": "607 3000"},
    ]


def test_run_endpoint_where_mode(client, boattours_src, tours_json):
    resp = client.post("/run", json={"source": boattours_src,
                                     "db": tours_json, "mode": "where"})
    burns = resp.json()["result"][-1]
    assert burns["name"]["row"] == 7
    assert burns["phone"]["tbl"] == "Agencies"


def test_sql_endpoint_with_check(client, boattours_src, tours_json):
    resp = client.post("/sql", json={"source": boattours_src,
                                     "mode": "where", "db": tours_json,
                                     "check": True})
    assert resp.status_code == 200
    body = resp.json()
    assert body["checked"] is True
    assert "FROM externaltours" in body["sql"]


def test_apply_endpoint_with_user_function(client):
    # a trivial user analysis: recover the value
    fn = open("src/tracelinks/stdlib/value.lt").read()
    resp = client.post("/apply", json={"source": "[1 + 1]",
                                       "function_source": fn})
    assert resp.status_code == 200
    assert resp.json()["nrc"] == "[1 + 1]"


def test_parse_error_payload(client):
    resp = client.post("/check", json={"source": "for (x <- ) x"})
    assert resp.status_code == 400
    err = resp.json()["error"]
    assert err["code"] == "parse-error"
    assert err["span"]["line"] == 1
