import json

import pytest
from fastapi.testclient import TestClient

from tests.conftest import CORPUS_DIR, corpus_doc
from v1graph.evaluator import evaluate
from v1graph.results import serialize_results
from v1graph.service import build_app


@pytest.fixture(scope="module")
def client(request):
    base_schema = request.getfixturevalue("base_schema")
    base_graph = request.getfixturevalue("base_graph")
    return TestClient(build_app(base_schema, base_graph))


def test_healthz(client):
    r = client.get("/healthz")
    assert r.status_code == 200 and r.text == "ok"


def test_schema_endpoint(client, base_schema):
    r = client.get("/api/schema")
    assert r.status_code == 200
    doc = r.json()
    assert {et["name"] for et in doc["entityTypes"]} == \
        {"Person", "Dragon", "Horse", "Guild", "Kingdom"}
    assert len(doc["relationshipTypes"]) == 9


def test_validate_clean(client):
    r = client.post("/api/validate", content=corpus_doc("q059"))
    assert r.status_code == 200 and r.json() == []


def test_validate_negative_gives_422(client):
    body = (CORPUS_DIR / "negative" / "tr2.json").read_text("utf-8")
    r = client.post("/api/validate", content=body)
    assert r.status_code == 422
    assert [d["code"] for d in r.json()] == ["TR2"]


def test_query_matches_cli_output(client, base_graph):
    from tests.conftest import load_corpus_pattern
    r = client.post("/api/query", content=corpus_doc("q001"))
    assert r.status_code == 200
    want = serialize_results(evaluate(load_corpus_pattern("q001"),
                                      base_graph))
    assert r.text == want


def test_query_on_invalid_pattern_gives_400(client):
    body = (CORPUS_DIR / "negative" / "ar1.json").read_text("utf-8")
    r = client.post("/api/query", content=body)
    assert r.status_code == 400
    assert any(d["code"] == "AR1" for d in r.json()["diagnostics"])


def test_bad_body_gives_400(client):
    r = client.post("/api/query", content=b"{not json")
    assert r.status_code == 400


def test_oversized_body_gives_413(client):
    r = client.post("/api/query", content=b"x" * (2 * 1024 * 1024 + 1))
    assert r.status_code == 413


def test_repeat_queries_identical(client):
    a = client.post("/api/query", content=corpus_doc("q262"))
    b = client.post("/api/query", content=corpus_doc("q262"))
    assert a.text == b.text
