"""Immutable in-memory property graph conforming to a Schema.

Document format::

    {"entities":      [{"id", "type", "props": {...}}],
     "relationships": [{"id", "type", "source", "target", "props": {...}}]}

``source``/``target`` are entity ids, or ``{"null": true}`` which creates a
fresh null entity realizing a half-edge. A property set to JSON ``null`` or
omitted is Empty. Scalar encodings follow the schema formats: dates
``YYYY-MM-DD``, datetimes ``YYYY-MM-DDThh:mm:ss``, durations are integer
milliseconds, composites are objects, lists/sets arrays, locations
``{"lat", "lon", "radiusKm"?}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Optional

from . import values as V
from .schema import NULL_TYPE, PropertyDef, Schema
from .values import Value


class GraphError(ValueError):
    code = "GraphError"


class GraphSyntaxError(GraphError):
    code = "SyntaxError"


class UnknownType(GraphError):
    code = "UnknownType"


class UnknownEntity(GraphError):
    code = "UnknownEntity"


class DuplicateId(GraphError):
    code = "DuplicateId"


class EndpointViolation(GraphError):
    code = "EndpointViolation"


class PropertyTypeMismatch(GraphError):
    code = "PropertyTypeMismatch"


class NullDegreeViolation(GraphError):
    code = "NullDegreeViolation"


@dataclass(frozen=True)
class GraphEntity:
    id: str
    type_name: str
    properties: dict[str, Value]

    def is_null(self) -> bool:
        return self.type_name == NULL_TYPE


@dataclass(frozen=True)
class GraphRelationship:
    id: str
    type_name: str
    source_id: str
    target_id: str
    properties: dict[str, Value]

    def other(self, entity_id: str) -> str:
        return self.target_id if entity_id == self.source_id else self.source_id


@dataclass
class PropertyGraph:
    schema: Schema
    entities: dict[str, GraphEntity] = field(default_factory=dict)
    relationships: dict[str, GraphRelationship] = field(default_factory=dict)
    by_entity_type: dict[str, list[str]] = field(default_factory=dict)
    by_rel_type: dict[str, list[str]] = field(default_factory=dict)
    # entity id -> [(rel id, "out" | "in")]
    adjacency: dict[str, list[tuple[str, str]]] = field(default_factory=dict)

    def entities_of_type(self, type_name: str) -> list[str]:
        return self.by_entity_type.get(type_name, [])


# ---------------------------------------------------------------------------
# Value decoding per declared property type


def parse_value(dtype, doc, registry, where="") -> Value:
    if doc is None:
        return V.EMPTY
    try:
        if dtype == "int":
            if isinstance(doc, bool) or not isinstance(doc, int):
                raise PropertyTypeMismatch(f"{where}: expected int, got {doc!r}")
            return V.ivl(doc)
        if dtype == "real":
            if isinstance(doc, bool) or not isinstance(doc, (int, float)):
                raise PropertyTypeMismatch(f"{where}: expected real, got {doc!r}")
            return V.rvl(float(doc))
        if dtype == "string":
            if not isinstance(doc, str):
                raise PropertyTypeMismatch(f"{where}: expected string, got {doc!r}")
            return V.svl(doc)
        if dtype == "date":
            return V.dvl(V.parse_date_text(doc))
        if dtype == "datetime":
            return V.dtvl(V.parse_datetime_text(doc))
        if dtype == "duration":
            if isinstance(doc, bool) or not isinstance(doc, int):
                raise PropertyTypeMismatch(
                    f"{where}: expected duration milliseconds, got {doc!r}")
            return V.durvl(doc)
    except (ValueError, AttributeError) as exc:
        raise PropertyTypeMismatch(f"{where}: {exc}") from None
    if isinstance(dtype, tuple):
        if dtype[0] == "composite":
            if not isinstance(doc, dict):
                raise PropertyTypeMismatch(f"{where}: expected object")
            subs = {}
            for sub_name, sub_type in dtype[2].items():
                subs[sub_name] = parse_value(sub_type, doc.get(sub_name),
                                             registry, f"{where}.{sub_name}")
            extra = set(doc) - set(dtype[2])
            if extra:
                raise PropertyTypeMismatch(f"{where}: unknown sub-properties {extra}")
            return V.compvl(dtype[1], subs)
        if dtype[0] in ("list", "set"):
            if not isinstance(doc, list):
                raise PropertyTypeMismatch(f"{where}: expected array")
            items = [parse_value(dtype[1], e, registry, f"{where}[{i}]")
                     for i, e in enumerate(doc)]
            if any(e.is_empty() for e in items):
                raise PropertyTypeMismatch(
                    f"{where}: multivalued properties may not hold empty elements")
            if dtype[0] == "list":
                return V.lvl(items)
            out = V.setvl(items)
            if len(out.data) != len(items):
                raise PropertyTypeMismatch(f"{where}: duplicate set elements")
            return out
        if dtype[0] == "opaque":
            parser = registry.parser(dtype[1])
            if parser is None:
                raise PropertyTypeMismatch(
                    f"{where}: no parser registered for opaque type {dtype[1]}")
            try:
                return parser(doc)
            except V.V1TypeError as exc:
                raise PropertyTypeMismatch(f"{where}: {exc}") from None
    raise PropertyTypeMismatch(f"{where}: unhandled type {dtype!r}")


def value_to_doc(v: Value) -> object:
    """Inverse of parse_value for schema-typed property values."""
    if v.is_empty():
        return None
    if v.kind in ("int", "real", "string"):
        return v.data
    if v.kind == "date":
        return V.date_text(v.data)
    if v.kind == "datetime":
        return V.datetime_text(v.data)
    if v.kind == "duration":
        return v.data
    if v.kind == "composite":
        return {k: value_to_doc(s) for k, s in v.data[1]}
    if v.kind == "list":
        return [value_to_doc(e) for e in v.data]
    if v.kind == "set":
        return [value_to_doc(e) for e in sorted(v.data, key=V.order_key)]
    if v.kind == "opaque" and v.data[0] == "location":
        lat, lon, r = v.data[1]
        out = {"lat": lat, "lon": lon}
        if r:
            out["radiusKm"] = r
        return out
    raise V.V1TypeError(f"cannot encode {v.kind}")


def _parse_props(defs: tuple[PropertyDef, ...], doc: dict, registry,
                 where: str) -> dict[str, Value]:
    doc = doc or {}
    by_name = {p.name: p for p in defs}
    extra = set(doc) - set(by_name)
    if extra:
        raise PropertyTypeMismatch(f"{where}: unknown properties {sorted(extra)}")
    out = {}
    for name, pdef in by_name.items():
        val = parse_value(pdef.dtype, doc.get(name), registry, f"{where}.{name}")
        if pdef.values is not None and not val.is_empty():
            if val.data not in pdef.values:
                raise PropertyTypeMismatch(
                    f"{where}.{name}: {val.data!r} outside the categorical "
                    f"values {list(pdef.values)}")
        out[name] = val
    return out


# ---------------------------------------------------------------------------
# Loading


def load_graph(document: bytes | str | dict, schema: Schema) -> PropertyGraph:
    if isinstance(document, (bytes, str)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise GraphSyntaxError(f"invalid JSON: {exc}") from None
    else:
        doc = document
    if not isinstance(doc, dict):
        raise GraphSyntaxError("graph document must be a JSON object")

    graph = PropertyGraph(schema)
    for edoc in doc.get("entities", ()):
        eid = edoc.get("id")
        tname = edoc.get("type")
        if not eid or not tname:
            raise GraphSyntaxError("entity requires id and type")
        if eid in graph.entities:
            raise DuplicateId(f"duplicate entity id {eid!r}")
        if tname == NULL_TYPE:
            if edoc.get("props"):
                raise PropertyTypeMismatch(
                    f"{eid}: null entities carry no properties")
            props = {}
        elif tname not in schema.entity_types:
            raise UnknownType(f"{eid}: unknown entity type {tname!r}")
        else:
            props = _parse_props(schema.entity_types[tname].properties,
                                 edoc.get("props"), schema.opaque_registry, eid)
        graph.entities[eid] = GraphEntity(eid, tname, props)
        graph.by_entity_type.setdefault(tname, []).append(eid)
        graph.adjacency.setdefault(eid, [])

    for rdoc in doc.get("relationships", ()):
        rid = rdoc.get("id")
        tname = rdoc.get("type")
        if not rid or not tname:
            raise GraphSyntaxError("relationship requires id and type")
        if rid in graph.relationships:
            raise DuplicateId(f"duplicate relationship id {rid!r}")
        rdef = schema.relationship_types.get(tname)
        if rdef is None:
            raise UnknownType(f"{rid}: unknown relationship type {tname!r}")

        def endpoint(side: str) -> str:
            ref = rdoc.get(side)
            if isinstance(ref, dict) and ref.get("null"):
                nid = f"null:{rid}:{side[0]}"
                graph.entities[nid] = GraphEntity(nid, NULL_TYPE, {})
                graph.by_entity_type.setdefault(NULL_TYPE, []).append(nid)
                graph.adjacency.setdefault(nid, [])
                return nid
            if not isinstance(ref, str):
                raise GraphSyntaxError(f"{rid}: bad {side} reference {ref!r}")
            if ref not in graph.entities:
                raise UnknownEntity(f"{rid}: unknown entity {ref!r}")
            return ref

        src = endpoint("source")
        dst = endpoint("target")
        stype = graph.entities[src].type_name
        dtype = graph.entities[dst].type_name
        ok = (stype, dtype) in rdef.endpoint_pairs or (
            not rdef.directional and (dtype, stype) in rdef.endpoint_pairs)
        if not ok:
            raise EndpointViolation(
                f"{rid}: {tname}({stype}, {dtype}) fits no endpoint pair")
        props = _parse_props(rdef.properties, rdoc.get("props"),
                             schema.opaque_registry, rid)
        rel = GraphRelationship(rid, tname, src, dst, props)
        graph.relationships[rid] = rel
        graph.by_rel_type.setdefault(tname, []).append(rid)
        graph.adjacency[src].append((rid, "out"))
        if dst != src:
            graph.adjacency[dst].append((rid, "in"))

    for ent in graph.entities.values():
        if ent.is_null() and len(graph.adjacency[ent.id]) != 1:
            raise NullDegreeViolation(
                f"null entity {ent.id!r} has degree "
                f"{len(graph.adjacency[ent.id])}, must be 1")

    for key in (graph.by_entity_type, graph.by_rel_type):
        for ids in key.values():
            ids.sort()
    for lst in graph.adjacency.values():
        lst.sort()
    return graph


def graph_to_json(graph: PropertyGraph) -> dict:
    entities = []
    for eid in sorted(graph.entities):
        ent = graph.entities[eid]
        if ent.is_null():
            continue  # re-created from the half-edge on load
        entities.append({
            "id": ent.id, "type": ent.type_name,
            "props": {k: value_to_doc(v) for k, v in sorted(ent.properties.items())
                      if not v.is_empty()}})
    rels = []
    for rid in sorted(graph.relationships):
        rel = graph.relationships[rid]
        rels.append({
            "id": rel.id, "type": rel.type_name,
            "source": ({"null": True} if graph.entities[rel.source_id].is_null()
                       else rel.source_id),
            "target": ({"null": True} if graph.entities[rel.target_id].is_null()
                       else rel.target_id),
            "props": {k: value_to_doc(v) for k, v in sorted(rel.properties.items())
                      if not v.is_empty()}})
    return {"entities": entities, "relationships": rels}


def serialize_graph(graph: PropertyGraph) -> str:
    return json.dumps(graph_to_json(graph), indent=2) + "\n"


# ---------------------------------------------------------------------------
# Traversal


def adjacent(graph: PropertyGraph, entity_id: str,
             rel_type: Optional[str] = None,
             direction: str = "any") -> Iterator[tuple[GraphRelationship, str]]:
    """Incident relationships of one entity with the neighbor id.

    direction out/in follows the stored orientation for directional
    relationship types; bidirectional types match under any direction.
    """
    if entity_id not in graph.entities:
        raise UnknownEntity(f"unknown entity {entity_id!r}")
    for rid, orient in graph.adjacency[entity_id]:
        rel = graph.relationships[rid]
        if rel_type is not None and rel.type_name != rel_type:
            continue
        bidi = not graph.schema.relationship_types[rel.type_name].directional
        selfloop = rel.source_id == rel.target_id
        if direction == "out" and not bidi and not selfloop and orient != "out":
            continue
        if direction == "in" and not bidi and not selfloop and orient != "in":
            continue
        yield rel, rel.other(entity_id)
