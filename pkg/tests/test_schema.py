import json

import pytest

from v1graph import fixture
from v1graph import schema as S
from v1graph import values as V


def test_fixture_schema_counts(base_schema):
    assert len(base_schema.entity_types) == 5
    assert len(base_schema.relationship_types) == 9


def test_owns_endpoint_pairs(base_schema):
    owns = base_schema.relationship_types["owns"]
    assert ("Person", "Horse") in owns.endpoint_pairs
    assert ("Person", "Dragon") in owns.endpoint_pairs
    assert ("Null", "Dragon") in owns.endpoint_pairs


def test_unknown_endpoint_type():
    doc = {"entityTypes": [{"name": "Person", "properties": []}],
           "relationshipTypes": [{"name": "haunts", "directional": True,
                                  "endpoints": [["Ghost", "Person"]],
                                  "properties": []}]}
    with pytest.raises(S.UnknownEndpointType):
        S.parse_schema(doc)


def test_duplicate_names_rejected():
    doc = {"entityTypes": [{"name": "A", "properties": []},
                           {"name": "A", "properties": []}]}
    with pytest.raises(S.DuplicateName):
        S.parse_schema(doc)


def test_null_both_sides_rejected():
    doc = {"entityTypes": [{"name": "A", "properties": []}],
           "relationshipTypes": [{"name": "r", "endpoints": [["Null", "Null"]],
                                  "properties": []}]}
    with pytest.raises(S.SchemaSyntaxError):
        S.parse_schema(doc)


def test_categorical_requires_values():
    doc = {"entityTypes": [{"name": "A", "properties": [
        {"name": "c", "type": "string", "values": []}]}]}
    with pytest.raises(S.SchemaSyntaxError):
        S.parse_schema(doc)


def test_schema_roundtrip(base_schema):
    text = S.serialize_schema(base_schema)
    again = S.parse_schema(text)
    assert S.serialize_schema(again) == text


def test_valid_endpoint_directions(base_schema):
    owns = base_schema.relationship_types["owns"]
    knows = base_schema.relationship_types["knows"]
    assert S.valid_endpoint(owns, "Person", "Dragon", "forward")
    assert not S.valid_endpoint(owns, "Dragon", "Person", "forward")
    assert S.valid_endpoint(owns, "Dragon", "Person", "backward")
    assert S.valid_endpoint(owns, "Dragon", "Person", "either")
    assert S.valid_endpoint(knows, "Person", "Person", "either")


def test_bidirectional_endpoint_symmetry(base_schema):
    knows = base_schema.relationship_types["knows"]
    types = list(base_schema.entity_types) + [S.NULL_TYPE]
    for a in types:
        for b in types:
            assert S.valid_endpoint(knows, a, b, "either") == \
                S.valid_endpoint(knows, b, a, "either")


def test_ensemble_members_and_auto_props(base_schema, base_graph):
    ids, props = S.ensemble_members(base_schema, base_graph, "Kings")
    assert props["count"] == V.ivl(4)
    ids, props = S.ensemble_members(base_schema, base_graph, "Old People")
    assert sorted(ids) == ["p-elyas-willum", "p-mara-willum",
                           "p-torrhen-karstark"]
    assert props["Person.count"] == V.ivl(3)
    assert props["Person.height.min"] == V.ivl(160)
    assert props["Person.height.avg"].kind == "real"
    ids, props = S.ensemble_members(base_schema, base_graph, "Black Things")
    assert props["count"] == V.ivl(3)
    assert props["Horse.weight.sum"] == V.ivl(450 + 460 + 415)


def test_empty_ensemble_counts_zero(base_schema, base_graph):
    doc = S.schema_to_json(base_schema)
    doc["ensembles"].append({"name": "Nobody", "members": [
        {"type": "Person",
         "where": {"expr": "height", "op": "gt", "rhs": "10000"}}]})
    schema = S.parse_schema(doc)
    ids, props = S.ensemble_members(schema, base_graph, "Nobody")
    assert ids == set()
    assert props["count"] == V.ivl(0)


def test_resolve_logical(base_schema, base_graph):
    old = lambda eid: S.resolve_logical(
        base_schema, "Old Person", base_graph.entities[eid], base_graph)
    assert old("p-elyas-willum") is True
    assert old("p-torrhen-karstark") is True       # born 0919-12-31
    assert old("p-brandon-stark") is False
    king = lambda eid: S.resolve_logical(
        base_schema, "King", base_graph.entities[eid], base_graph)
    assert king("p-rogar-bolton") is True
    assert king("p-brandon-stark") is False


def test_logical_derived_properties(base_schema):
    props = base_schema.logical_properties("Black Thing")
    # every case type contributes 'Type.prop' names
    assert "Horse.color" in props
    assert "Person.height" in props
    # 'name' is shared by several types with one data type: promoted only
    # when the types agree; Person.name is composite while others are plain
    assert "Horse.name" in props


def test_serialized_fixture_matches_module(base_schema):
    from tests.conftest import FIXTURE_DIR
    on_disk = (FIXTURE_DIR / "westeros.schema.json").read_text("utf-8")
    assert on_disk == S.serialize_schema(base_schema)
