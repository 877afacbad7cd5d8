"""The answer model: a union of assignments with tags and calculated values.

Serialized form::

    {"entities":      [{"id", "type", "tags": [..], "props": {..}}],
     "relationships": [{"id", "type", "source", "target", "props": {..}}],
     "paths":         [{"label", "entities": [..], "relationships": [..]}],
     "calculated":    [{"tag", "key": {..}, "value"}]}

Elements are sorted by (type, id); serialization is canonical and stable
across runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import values as V
from .values import Value


@dataclass
class ResultEntity:
    id: str
    type_name: str
    tags: tuple[str, ...]
    props: dict[str, Value] = field(default_factory=dict)


@dataclass
class ResultRelationship:
    id: str
    type_name: str
    source: str
    target: str
    props: dict[str, Value] = field(default_factory=dict)


@dataclass
class ResultPath:
    label: str
    entities: tuple[str, ...]
    relationships: tuple[str, ...]


@dataclass
class ResultGraph:
    entities: list = field(default_factory=list)
    relationships: list = field(default_factory=list)
    paths: list = field(default_factory=list)
    calculated: list = field(default_factory=list)  # (tag, key map, Value)

    def is_empty(self) -> bool:
        return not (self.entities or self.relationships or self.paths
                    or self.calculated)


def _key_json(key: dict) -> dict:
    out = {}
    for k in sorted(key):
        v = key[k]
        if isinstance(v, Value):
            out[k] = V.value_to_json(v)
        elif isinstance(v, tuple):
            out[k] = list(v)
        else:
            out[k] = v
    return out


def result_to_json(r: ResultGraph) -> dict:
    entities = sorted(r.entities, key=lambda e: (e.type_name, e.id))
    rels = sorted(r.relationships, key=lambda x: (x.type_name, x.id))
    paths = sorted(r.paths, key=lambda p: (p.label, p.entities, p.relationships))
    calc = sorted(
        r.calculated,
        key=lambda c: (c[0], json.dumps(_key_json(c[1]), sort_keys=True),
                       json.dumps(V.value_to_json(c[2]), sort_keys=True)))
    return {
        "entities": [
            {"id": e.id, "type": e.type_name, "tags": sorted(set(e.tags)),
             "props": {k: V.value_to_json(v)
                       for k, v in sorted(e.props.items())
                       if not v.is_empty()}}
            for e in entities],
        "relationships": [
            {"id": x.id, "type": x.type_name, "source": x.source,
             "target": x.target,
             "props": {k: V.value_to_json(v)
                       for k, v in sorted(x.props.items())
                       if not v.is_empty()}}
            for x in rels],
        "paths": [
            {"label": p.label, "entities": list(p.entities),
             "relationships": list(p.relationships)}
            for p in paths],
        "calculated": [
            {"tag": c[0], "key": _key_json(c[1]),
             "value": V.value_to_json(c[2])}
            for c in calc],
    }


def serialize_results(r: ResultGraph) -> str:
    return json.dumps(result_to_json(r), indent=2, sort_keys=False) + "\n"


def parse_results(text: str) -> dict:
    return json.loads(text)


def render_table(r: ResultGraph) -> str:
    doc = result_to_json(r)
    lines = []
    lines.append(f"entities ({len(doc['entities'])})")
    for e in doc["entities"]:
        tags = ",".join(e["tags"])
        lines.append(f"  [{tags}] {e['type']} {e['id']}")
    lines.append(f"relationships ({len(doc['relationships'])})")
    for x in doc["relationships"]:
        lines.append(f"  {x['type']} {x['id']}: {x['source']} -> {x['target']}")
    if doc["paths"]:
        lines.append(f"paths ({len(doc['paths'])})")
        for p in doc["paths"]:
            lines.append(f"  {p['label']}: " + " - ".join(p["entities"]))
    if doc["calculated"]:
        lines.append(f"calculated ({len(doc['calculated'])})")
        for c in doc["calculated"]:
            key = ", ".join(f"{k}={v}" for k, v in c["key"].items())
            lines.append(f"  {{{c['tag']}}} per ({key}) = {c['value']}")
    return "\n".join(lines) + "\n"
