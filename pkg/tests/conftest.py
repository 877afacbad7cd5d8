import json
from pathlib import Path

import pytest

from v1graph import fixture as fixture_mod
from v1graph import graph as graph_mod
from v1graph import schema as schema_mod

ROOT = Path(__file__).resolve().parent.parent
CORPUS_DIR = ROOT / "corpus"
FIXTURE_DIR = ROOT / "fixtures"
GOLDEN_DIR = Path(__file__).resolve().parent / "goldens"


@pytest.fixture(scope="session")
def base_schema():
    return schema_mod.parse_schema(fixture_mod.BASE_SCHEMA)


@pytest.fixture(scope="session")
def base_graph(base_schema):
    return graph_mod.load_graph(fixture_mod.base_graph(7), base_schema)


@pytest.fixture(scope="session")
def spatial_schema():
    return schema_mod.parse_schema(fixture_mod.spatial_schema())


@pytest.fixture(scope="session")
def spatial_graph(spatial_schema):
    return graph_mod.load_graph(fixture_mod.spatial_graph(7), spatial_schema)


def corpus_files():
    return sorted(p for p in CORPUS_DIR.glob("*.json"))


def corpus_doc(name: str) -> str:
    return (CORPUS_DIR / f"{name}.json").read_text(encoding="utf-8")


def load_corpus_pattern(name: str):
    from v1graph.pattern import parse_pattern
    return parse_pattern(corpus_doc(name))


def schema_for(name: str, base, spatial):
    return spatial if name.startswith("g") else base
