import json
import subprocess
import sys
from pathlib import Path

import pytest

from tests.conftest import CORPUS_DIR, FIXTURE_DIR

SCHEMA = str(FIXTURE_DIR / "westeros.schema.json")
GRAPH = str(FIXTURE_DIR / "westeros.graph.json")


def v1(*args):
    return subprocess.run([sys.executable, "-m", "v1graph.cli", *args],
                          capture_output=True, text=True)


def test_validate_schema_ok():
    out = v1("validate-schema", "--schema", SCHEMA)
    assert out.returncode == 0


def test_validate_graph_ok_and_negative(tmp_path):
    assert v1("validate-graph", "--schema", SCHEMA,
              "--graph", GRAPH).returncode == 0
    bad = CORPUS_DIR / "negative" / "null_degree.graph.json"
    out = v1("validate-graph", "--schema", SCHEMA, "--graph", str(bad))
    assert out.returncode == 1
    assert "NullDegreeViolation" in out.stderr


def test_validate_pattern_clean_and_negative():
    ok = v1("validate", "--schema", SCHEMA,
            "--pattern", str(CORPUS_DIR / "q001.json"))
    assert ok.returncode == 0 and ok.stdout.strip() == "ok"
    bad = v1("validate", "--schema", SCHEMA,
             "--pattern", str(CORPUS_DIR / "negative" / "tr2.json"))
    assert bad.returncode == 1
    assert "TR2" in bad.stdout
    neg_path = v1("validate", "--schema", SCHEMA, "--pattern",
                  str(CORPUS_DIR / "negative" /
                      "missing_path_upper_bound.json"))
    assert neg_path.returncode == 1
    assert "MissingPathUpperBound" in neg_path.stderr


def test_query_outputs_results_and_is_deterministic():
    args = ("query", "--schema", SCHEMA, "--graph", GRAPH,
            "--pattern", str(CORPUS_DIR / "q001.json"))
    a, b = v1(*args), v1(*args)
    assert a.returncode == 0
    assert a.stdout == b.stdout
    doc = json.loads(a.stdout)
    assert {e["id"] for e in doc["entities"]} == \
        {"p-brandon-stark", "d-eldrax", "d-syrax"}


def test_query_table_format():
    out = v1("query", "--schema", SCHEMA, "--graph", GRAPH,
             "--pattern", str(CORPUS_DIR / "q001.json"),
             "--format", "table")
    assert out.returncode == 0
    assert "entities (3)" in out.stdout


def test_query_on_invalid_pattern_prints_diagnostics():
    out = v1("query", "--schema", SCHEMA, "--graph", GRAPH,
             "--pattern", str(CORPUS_DIR / "negative" / "ar1.json"))
    assert out.returncode == 1
    assert "AR1" in out.stdout


def test_fixture_subcommand_deterministic(tmp_path):
    a_dir, b_dir = tmp_path / "a", tmp_path / "b"
    assert v1("fixture", "--seed", "7", "--out-dir", str(a_dir)).returncode == 0
    assert v1("fixture", "--seed", "7", "--out-dir", str(b_dir)).returncode == 0
    for name in ("westeros.schema.json", "westeros.graph.json",
                 "spatial.schema.json", "spatial.graph.json"):
        assert (a_dir / name).read_bytes() == (b_dir / name).read_bytes()
    # the committed fixtures are exactly seed 7
    for name in ("westeros.schema.json", "westeros.graph.json"):
        assert (a_dir / name).read_bytes() == \
            (FIXTURE_DIR / name).read_bytes()


def test_fuzz_subcommand():
    out = v1("fuzz", "--seeds", "25")
    assert out.returncode == 0
    assert "25 seeds, 0 failures" in out.stdout


def test_usage_error_exit_code():
    out = v1("query", "--schema", SCHEMA)
    assert out.returncode == 2


def test_query_out_flag(tmp_path):
    out_file = tmp_path / "res.json"
    direct = v1("query", "--schema", SCHEMA, "--graph", GRAPH,
                "--pattern", str(CORPUS_DIR / "q001.json"))
    to_file = v1("query", "--schema", SCHEMA, "--graph", GRAPH,
                 "--pattern", str(CORPUS_DIR / "q001.json"),
                 "--out", str(out_file))
    assert to_file.returncode == 0 and to_file.stdout == ""
    assert out_file.read_text("utf-8") == direct.stdout


def test_env_var_overrides_assignment_cap():
    import os
    env = dict(os.environ, V1_MAX_ASSIGNMENTS="3")
    out = subprocess.run(
        [sys.executable, "-m", "v1graph.cli", "query", "--schema", SCHEMA,
         "--graph", GRAPH, "--pattern", str(CORPUS_DIR / "q036.json")],
        capture_output=True, text=True, env=env)
    assert out.returncode == 1
    assert "ResourceLimit" in out.stderr
