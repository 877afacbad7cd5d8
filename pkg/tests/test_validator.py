import json

import pytest

from tests.conftest import corpus_files
from v1graph.corpus import negative_corpus
from v1graph.pattern import ast as P
from v1graph.pattern import parse_pattern
from v1graph.validator import analyze, validate


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
def test_corpus_validates_clean(path, base_schema, spatial_schema):
    schema = spatial_schema if path.stem.startswith("g") else base_schema
    diags = validate(parse_pattern(path.read_text("utf-8")), schema)
    assert [d for d in diags if d.severity == "error"] == [], \
        [d.text() for d in diags]


@pytest.mark.parametrize("name", sorted(negative_corpus()))
def test_negative_corpus_yields_exact_code(name, base_schema):
    code, doc = negative_corpus()[name]
    if code == "MissingPathUpperBound":
        from v1graph.pattern import MissingPathUpperBound
        with pytest.raises(MissingPathUpperBound):
            parse_pattern(json.dumps(doc))
        return
    diags = validate(parse_pattern(json.dumps(doc)), base_schema)
    assert sorted({d.code for d in diags}) == [code], \
        [d.text() for d in diags]


def test_validate_deterministic_and_ordered(base_schema):
    code, doc = negative_corpus()["tr2"]
    a = validate(parse_pattern(json.dumps(doc)), base_schema)
    b = validate(parse_pattern(json.dumps(doc)), base_schema)
    assert [d.text() for d in a] == [d.text() for d in b]
    orders = [d.order for d in a]
    assert orders == sorted(orders)


def _admissible(doc, schema):
    an = analyze(parse_pattern(json.dumps(doc)), schema)
    return {n.tag: set(an.admissible[id(n)])
            for n in P.iter_entity_nodes(an.pattern)}, an


def test_infer_types_untyped_target(base_schema):
    doc = {"start": {"kind": "entity", "tag": "A",
                     "entity": {"kind": "typed", "type": "Person"},
                     "next": {"kind": "rel", "type": "owns",
                              "direction": "forward",
                              "target": {"kind": "entity", "tag": "B",
                                         "entity": {"kind": "untyped"}}}}}
    adm, _ = _admissible(doc, base_schema)
    assert adm["B"] == {"Horse", "Dragon"}


def test_infer_types_identity_intersection(base_schema):
    # B shared between an owns-target and a freezes-target admits dragons
    from v1graph.corpus import ent, quant, rel, untyped
    doc = {"start": ent("A", "Person", next=quant(
        "all",
        rel("owns", untyped("B")),
        rel("offspring of", ent("C", "Person", next=rel(
            "owns", untyped("D", next=rel(
                "freezes", untyped("B"))))))))}
    adm, _ = _admissible(doc, base_schema)
    assert adm["B"] == {"Dragon"}
    assert adm["D"] == {"Dragon"}


def test_infer_types_monotone_under_allowlist(base_schema):
    base = {"start": {"kind": "entity", "tag": "A",
                      "entity": {"kind": "typed", "type": "Person"},
                      "next": {"kind": "rel", "type": "owns",
                               "direction": "forward",
                               "target": {"kind": "entity", "tag": "B",
                                          "entity": {"kind": "untyped"}}}}}
    wide, _ = _admissible(base, base_schema)
    narrowed = json.loads(json.dumps(base))
    narrowed["start"]["next"]["target"]["entity"]["allowedTypes"] = ["Horse"]
    narrow, _ = _admissible(narrowed, base_schema)
    assert narrow["B"] <= wide["B"]


def test_explicit_list_of_implicitly_disallowed_type_errors(base_schema):
    doc = {"start": {"kind": "entity", "tag": "A",
                     "entity": {"kind": "typed", "type": "Person"},
                     "next": {"kind": "rel", "type": "owns",
                              "direction": "forward",
                              "target": {"kind": "entity", "tag": "B",
                                         "entity": {"kind": "untyped",
                                                    "allowedTypes": [
                                                        "Horse", "Guild"]}}}}}
    diags = validate(parse_pattern(json.dumps(doc)), base_schema)
    assert any(d.code == "TYPE_NULLIFIED" for d in diags)


def test_null_admissible_only_at_terminals(base_schema):
    # terminal untyped owner of a dragon may be null (owns supports it)
    doc = {"start": {"kind": "entity", "tag": "A",
                     "entity": {"kind": "typed", "type": "Dragon"},
                     "next": {"kind": "rel", "type": "owns",
                              "direction": "backward",
                              "target": {"kind": "entity", "tag": "B",
                                         "entity": {"kind": "untyped"}}}}}
    adm, _ = _admissible(doc, base_schema)
    assert "Null" in adm["B"]
    # a shared tag forbids null
    doc2 = json.loads(json.dumps(doc))
    doc2["start"]["next"]["target"]["notEqual"] = ["A"]
    adm2, _ = _admissible(doc2, base_schema)
    assert "Null" not in adm2["B"]


def test_typed_null_placement(base_schema):
    from v1graph.corpus import ent, rel
    # a terminal typed-null owner is fine (owns supports a null source)
    ok = {"start": ent("B", "Dragon", next=rel(
        "owns", ent("A", "Null"), direction="backward"))}
    diags = validate(parse_pattern(json.dumps(ok)), base_schema)
    assert not any(d.severity == "error" for d in diags), \
        [d.text() for d in diags]
    # ... but a null entity with a continuation on its right is rejected
    bad = {"start": ent("B", "Dragon", next=rel(
        "owns", ent("A", "Null", next=rel("owns", ent("C", "Dragon"))),
        direction="backward"))}
    diags2 = validate(parse_pattern(json.dumps(bad)), base_schema)
    assert any(d.code in ("NULL_PLACEMENT", "TYPE_NULLIFIED", "REL_ENDPOINT")
               for d in diags2)


def test_concrete_constraint_rejected(base_schema):
    doc = {"start": {"kind": "entity", "tag": "A",
                     "entity": {"kind": "concrete", "id": "p-brandon-stark",
                                "type": "Person"},
                     "chain": [{"kind": "expr", "tag": 1, "expr": "height",
                                "check": {"op": "gt", "rhs": "10"}}]}}
    diags = validate(parse_pattern(json.dumps(doc)), base_schema)
    assert any(d.code == "CONCRETE_CONSTRAINT" for d in diags)


def test_shortest_after_x_rejected(base_schema):
    doc = {"start": {"kind": "entity", "tag": "A",
                     "entity": {"kind": "typed", "type": "Dragon"},
                     "next": {"kind": "path", "length": {"op": "le", "n": 3},
                              "shortest": True, "wrapper": "X",
                              "target": {"kind": "entity", "tag": "B",
                                         "entity": {"kind": "typed",
                                                    "type": "Dragon"}}}}}
    diags = validate(parse_pattern(json.dumps(doc)), base_schema)
    assert any(d.code == "SHORTEST_AFTER_NEG" for d in diags)


def test_none_at_start_rejected(base_schema):
    doc = {"start": {"kind": "quantifier", "quant": "none", "branches": [
        {"kind": "entity", "tag": "A",
         "entity": {"kind": "typed", "type": "Person"}},
        {"kind": "entity", "tag": "B",
         "entity": {"kind": "typed", "type": "Horse"}}]}}
    diags = validate(parse_pattern(json.dumps(doc)), base_schema)
    assert any(d.code == "NONE_AT_START" for d in diags)


def test_all_latent_rejected(base_schema):
    doc = {"start": {"kind": "entity", "tag": "A", "latent": True,
                     "entity": {"kind": "typed", "type": "Person"}}}
    diags = validate(parse_pattern(json.dumps(doc)), base_schema)
    assert any(d.code == "ALL_LATENT" for d in diags)


def test_green_after_aggregator_rejected(base_schema):
    doc = {"start": {"kind": "entity", "tag": "A",
                     "entity": {"kind": "typed", "type": "Dragon"},
                     "next": {"kind": "rel", "type": "freezes",
                              "direction": "forward",
                              "chain": [
                                  {"kind": "agg", "family": "L2", "tag": 1,
                                   "per": "left", "over": "relationships"},
                                  {"kind": "expr", "tag": 2,
                                   "expr": "tf.duration"}],
                              "target": {"kind": "entity", "tag": "B",
                                         "entity": {"kind": "typed",
                                                    "type": "Dragon"}}}}}
    diags = validate(parse_pattern(json.dumps(doc)), base_schema)
    assert any(d.code == "CHAIN_ORDER" for d in diags)
