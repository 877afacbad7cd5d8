import json

import pytest

from v1graph.evaluator import evaluate
from v1graph.oracle import (UnsupportedFeature, generate_instance,
                            oracle_evaluate)
from v1graph.pattern import parse_pattern, serialize_pattern
from v1graph.results import serialize_results
from v1graph.validator import validate


def test_generator_is_deterministic():
    a = generate_instance(1)
    b = generate_instance(1)
    assert json.dumps(a[3]) == json.dumps(b[3])
    assert serialize_pattern(a[2]) == serialize_pattern(b[2])


def test_generated_patterns_validate_clean():
    for seed in range(60):
        schema, graph, ast, _ = generate_instance(seed)
        diags = [d for d in validate(ast, schema) if d.severity == "error"]
        assert diags == [], (seed, [d.text() for d in diags])


def test_empty_graph_gives_empty_result():
    schema, graph, ast, docs = generate_instance(0, entities=0,
                                                 relationships=0)
    assert oracle_evaluate(ast, graph).is_empty()
    assert serialize_results(evaluate(ast, graph)) == \
        serialize_results(oracle_evaluate(ast, graph))


def test_single_entity_pattern_lists_the_type(base_schema, base_graph):
    doc = {"start": {"kind": "entity", "tag": "A",
                     "entity": {"kind": "typed", "type": "Guild"}}}
    ast = parse_pattern(json.dumps(doc))
    res = oracle_evaluate(ast, base_graph)
    assert sorted(e.id for e in res.entities) == \
        ["g-blacksmiths", "g-masons", "g-saddlers"]
    assert serialize_results(res) == serialize_results(
        evaluate(ast, base_graph))


def test_oracle_rejects_out_of_class(base_graph):
    from tests.conftest import load_corpus_pattern
    for name in ("q262", "q130", "q317", "q047"):
        with pytest.raises(UnsupportedFeature):
            oracle_evaluate(load_corpus_pattern(name), base_graph)


def test_differential_smoke():
    for seed in range(120):
        schema, graph, ast, _ = generate_instance(seed)
        assert serialize_results(oracle_evaluate(ast, graph)) == \
            serialize_results(evaluate(ast, graph)), f"seed {seed}"
