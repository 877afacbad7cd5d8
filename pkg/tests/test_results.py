import json

from tests.conftest import load_corpus_pattern
from v1graph import values as V
from v1graph.evaluator import evaluate
from v1graph.results import (ResultEntity, ResultGraph, parse_results,
                             render_table, result_to_json, serialize_results)


def test_empty_result_shape():
    out = serialize_results(ResultGraph())
    assert json.loads(out) == {"entities": [], "relationships": [],
                               "paths": [], "calculated": []}


def test_serialize_parse_roundtrip(base_graph):
    res = evaluate(load_corpus_pattern("q115v2"), base_graph)
    text = serialize_results(res)
    doc = parse_results(text)
    assert json.dumps(doc, indent=2) + "\n" == text


def test_sorted_by_type_then_id(base_graph):
    res = result_to_json(evaluate(load_corpus_pattern("q004"), base_graph))
    keys = [(e["type"], e["id"]) for e in res["entities"]]
    assert keys == sorted(keys)
    rkeys = [(r["type"], r["id"]) for r in res["relationships"]]
    assert rkeys == sorted(rkeys)


def test_every_entity_is_tagged(base_graph):
    for name in ("q001", "q044", "q047", "q142", "q208"):
        res = result_to_json(evaluate(load_corpus_pattern(name), base_graph))
        assert all(e["tags"] for e in res["entities"]), name


def test_reported_endpoints_are_closed(base_graph):
    # endpoints of every reported relationship are reported, null, or
    # represented by a reported ensemble
    from v1graph.schema import ensemble_member_ids
    for name in ("q001", "q004", "q030v1", "q115v2", "q208"):
        res = result_to_json(evaluate(load_corpus_pattern(name), base_graph))
        ids = {e["id"] for e in res["entities"]}
        covered = set(ids)
        for e in res["entities"]:
            if e["type"] == "ensemble":
                covered |= ensemble_member_ids(
                    base_graph.schema, base_graph,
                    e["id"].split(":", 1)[1])
        for r in res["relationships"]:
            for side in (r["source"], r["target"]):
                ok = side in covered or \
                    base_graph.entities[side].type_name == "Null"
                assert ok, (name, r["id"], side)


def test_serialize_injective_on_distinct_results(base_graph):
    a = serialize_results(evaluate(load_corpus_pattern("q001"), base_graph))
    b = serialize_results(evaluate(load_corpus_pattern("q012"), base_graph))
    assert a != b


def test_table_rendering(base_graph):
    res = evaluate(load_corpus_pattern("q059"), base_graph)
    table = render_table(res)
    assert "entities (4)" in table
    assert "{1} per (A=p-brandon-stark) = 3" in table


def test_calculated_value_encodings():
    entries = [(1, {"A": "x"}, V.durvl(1500)),
               (2, {"A": "x"}, V.setvl([V.ivl(2), V.ivl(1)])),
               (3, {}, V.EMPTY)]
    doc = result_to_json(ResultGraph(calculated=entries))
    vals = {c["tag"]: c["value"] for c in doc["calculated"]}
    assert vals[1] == {"type": "duration", "ms": 1500}
    assert vals[2] == {"type": "set", "items": [1, 2]}
    assert vals[3] is None
