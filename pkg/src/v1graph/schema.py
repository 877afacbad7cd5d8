"""Property-graph schema: entity/relationship types, ensembles, logical types.

The schema document is a single JSON object::

    { "entityTypes":       [ {"name", "properties": [propdef...]} ],
      "relationshipTypes": [ {"name", "directional": bool,
                              "endpoints": [["SrcOrNull", "DstOrNull"]],
                              "properties": [propdef...]} ],
      "ensembles":         [ {"name", "members": [selector...]} ],
      "logicalEntityTypes":[ {"name", "cases": [case...]} ] }

A propdef is {"name", "type", "unit"?, "values"?, "leading"?,
"subProperties"?}. Type strings: int, real, string, date, datetime,
duration, dateframe, datetimeframe, list<T>, set<T>, composite, location.
An ensemble member selector is {"id"} or {"type", "where"?} or {"where"};
a logical case is {"id"} or {"ensemble"} or {"type", "where"?}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from . import exprs, values as V
from .values import UnitSpec, Value

NULL_TYPE = "Null"


class SchemaError(ValueError):
    code = "SchemaError"

    def __init__(self, message, where=""):
        super().__init__(f"{message}" + (f" (at {where})" if where else ""))


class SchemaSyntaxError(SchemaError):
    code = "SyntaxError"


class DuplicateName(SchemaError):
    code = "DuplicateName"


class UnknownEndpointType(SchemaError):
    code = "UnknownEndpointType"


class RecursiveComposite(SchemaError):
    code = "RecursiveComposite"


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PropertyDef:
    name: str
    dtype: object            # exprs type descriptor
    unit: Optional[UnitSpec] = None
    values: Optional[tuple[str, ...]] = None   # categorical allow-list
    leading: bool = False


@dataclass(frozen=True)
class EntityTypeDef:
    name: str
    properties: tuple[PropertyDef, ...]

    def prop(self, name: str) -> Optional[PropertyDef]:
        for p in self.properties:
            if p.name == name:
                return p
        return None


@dataclass(frozen=True)
class RelationshipTypeDef:
    name: str
    directional: bool
    endpoint_pairs: tuple[tuple[str, str], ...]
    properties: tuple[PropertyDef, ...]

    def prop(self, name: str) -> Optional[PropertyDef]:
        for p in self.properties:
            if p.name == name:
                return p
        return None


@dataclass(frozen=True)
class WhereClause:
    """A property constraint used by ensemble / logical-type selectors."""

    expr: str                 # expression text over the candidate's props
    check: exprs.Check

    @staticmethod
    def parse(doc: dict) -> "WhereClause":
        exprs.parse_expr(doc["expr"])
        return WhereClause(doc["expr"], exprs.parse_check(doc))

    def to_json(self) -> dict:
        out = {"expr": self.expr}
        out.update(exprs.check_to_json(self.check))
        return out

    def matches(self, schema: "Schema", entity) -> bool:
        ctx = _entity_eval_ctx(schema, entity)
        try:
            lhs = exprs.evaluate(exprs.parse_expr(self.expr), ctx)
            return exprs.eval_check(self.check, lhs, ctx)
        except V.V1TypeError:
            return False


@dataclass(frozen=True)
class EnsembleMember:
    concrete_id: Optional[str] = None
    type_name: Optional[str] = None
    where: Optional[WhereClause] = None


@dataclass(frozen=True)
class EnsembleDef:
    name: str
    members: tuple[EnsembleMember, ...]


@dataclass(frozen=True)
class LogicalCase:
    concrete_id: Optional[str] = None
    ensemble: Optional[str] = None
    type_name: Optional[str] = None
    where: Optional[WhereClause] = None


@dataclass(frozen=True)
class LogicalEntityTypeDef:
    name: str
    cases: tuple[LogicalCase, ...]


@dataclass
class Schema:
    entity_types: dict[str, EntityTypeDef]
    relationship_types: dict[str, RelationshipTypeDef]
    ensembles: dict[str, EnsembleDef] = field(default_factory=dict)
    logical_entity_types: dict[str, LogicalEntityTypeDef] = field(default_factory=dict)
    opaque_registry: V.OpaqueTypeRegistry = field(default_factory=V.default_registry)

    def entity_type_names(self) -> list[str]:
        return sorted(self.entity_types)

    def is_entity_type(self, name: str) -> bool:
        return name in self.entity_types or name == NULL_TYPE

    def prop_types(self, type_name: str) -> dict[str, object]:
        """Property name -> type descriptor for an entity or Null type."""
        if type_name == NULL_TYPE:
            return {}
        return {p.name: p.dtype for p in self.entity_types[type_name].properties}

    def rel_prop_types(self, rel_name: str) -> dict[str, object]:
        return {p.name: p.dtype
                for p in self.relationship_types[rel_name].properties}

    def logical_case_types(self, name: str) -> set[str]:
        """Concrete entity types a logical type's assignments may take."""
        out: set[str] = set()
        for case in self.logical_entity_types[name].cases:
            if case.type_name:
                out.add(case.type_name)
            else:
                out.update(self.entity_types)  # resolved per entity at runtime
        return out

    def logical_properties(self, name: str) -> dict[str, object]:
        """Derived property table: 'et.p' per case-type property, plus
        promotion of names shared (same type) by 2+ case types and clashing
        with none."""
        case_types = sorted(t for t in self.logical_case_types(name)
                            if t in self.entity_types)
        out: dict[str, object] = {}
        shared: dict[str, list] = {}
        for t in case_types:
            for p in self.entity_types[t].properties:
                out[f"{t}.{p.name}"] = p.dtype
                shared.setdefault(p.name, []).append(p.dtype)
        for pname, dtypes in shared.items():
            if len(dtypes) >= 2 and all(d == dtypes[0] for d in dtypes):
                out[pname] = dtypes[0]
        return out


# ---------------------------------------------------------------------------
# Parsing

_SIMPLE_TYPES = {"int", "real", "string", "date", "datetime", "duration"}
_FRAME_TYPES = {
    "dateframe": ("composite", "dateframe", {"since": "date", "till": "date"}),
    "datetimeframe": ("composite", "datetimeframe",
                      {"since": "datetime", "till": "datetime"}),
}


def parse_type_string(text: str, sub_props=None, where="", depth: int = 0):
    if depth > 4:
        raise RecursiveComposite("composite nesting too deep", where)
    text = text.strip()
    if text in _SIMPLE_TYPES:
        return text
    if text in _FRAME_TYPES:
        return _FRAME_TYPES[text]
    if text == "location":
        return ("opaque", "location")
    if text.startswith("list<") and text.endswith(">"):
        return ("list", parse_type_string(text[5:-1], None, where, depth + 1))
    if text.startswith("set<") and text.endswith(">"):
        return ("set", parse_type_string(text[4:-1], None, where, depth + 1))
    if text == "composite":
        if not sub_props:
            raise SchemaSyntaxError("composite type requires subProperties", where)
        subs = {}
        for sp in sub_props:
            subs[sp["name"]] = parse_type_string(
                sp["type"], sp.get("subProperties"), f"{where}.{sp['name']}",
                depth + 1)
        return ("composite", where.rsplit(".", 1)[-1] or "composite", subs)
    raise SchemaSyntaxError(f"unknown type string {text!r}", where)


def _parse_unit(doc) -> Optional[UnitSpec]:
    if doc is None:
        return None
    if isinstance(doc, str):
        if doc not in V.KNOWN_UNITS:
            raise SchemaSyntaxError(f"unknown unit {doc!r}")
        return V.KNOWN_UNITS[doc]
    return UnitSpec(doc["dimension"], doc["name"], float(doc["factor"]))


def _parse_propdef(doc, where) -> PropertyDef:
    try:
        dtype = parse_type_string(doc["type"], doc.get("subProperties"),
                                  f"{where}.{doc['name']}")
        vals = doc.get("values")
        if vals is not None:
            if not vals:
                raise SchemaSyntaxError("categorical value list is empty", where)
            if dtype != "string":
                raise SchemaSyntaxError(
                    "categorical values require a string property", where)
            vals = tuple(vals)
        return PropertyDef(doc["name"], dtype, _parse_unit(doc.get("unit")),
                           vals, bool(doc.get("leading", False)))
    except KeyError as exc:
        raise SchemaSyntaxError(f"missing key {exc}", where) from None


def _parse_props(docs, where) -> tuple[PropertyDef, ...]:
    out, seen = [], set()
    for doc in docs or ():
        p = _parse_propdef(doc, where)
        if p.name in seen:
            raise DuplicateName(f"duplicate property {p.name!r}", where)
        seen.add(p.name)
        out.append(p)
    return tuple(out)


def parse_schema(document: bytes | str | dict) -> Schema:
    """Parse and validate a schema document."""
    if isinstance(document, (bytes, str)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaSyntaxError(f"invalid JSON: {exc}") from None
    else:
        doc = document
    if not isinstance(doc, dict):
        raise SchemaSyntaxError("schema document must be a JSON object")

    entity_types: dict[str, EntityTypeDef] = {}
    for et in doc.get("entityTypes", ()):
        name = et.get("name")
        if not name:
            raise SchemaSyntaxError("entity type without a name")
        if name in entity_types or name == NULL_TYPE:
            raise DuplicateName(f"duplicate entity type {name!r}")
        entity_types[name] = EntityTypeDef(
            name, _parse_props(et.get("properties"), name))

    rel_types: dict[str, RelationshipTypeDef] = {}
    for rt in doc.get("relationshipTypes", ()):
        name = rt.get("name")
        if not name:
            raise SchemaSyntaxError("relationship type without a name")
        if name in rel_types:
            raise DuplicateName(f"duplicate relationship type {name!r}")
        pairs = []
        for pair in rt.get("endpoints", ()):
            src, dst = pair
            for side in (src, dst):
                if side != NULL_TYPE and side not in entity_types:
                    raise UnknownEndpointType(
                        f"endpoint type {side!r} of {name!r} is not defined")
            if src == NULL_TYPE and dst == NULL_TYPE:
                raise SchemaSyntaxError(
                    f"{name!r}: null on both sides of one endpoint pair")
            pairs.append((src, dst))
        if not pairs:
            raise SchemaSyntaxError(f"{name!r} has no endpoint pairs")
        rel_types[name] = RelationshipTypeDef(
            name, bool(rt.get("directional", True)), tuple(pairs),
            _parse_props(rt.get("properties"), name))

    ensembles: dict[str, EnsembleDef] = {}
    for en in doc.get("ensembles", ()):
        name = en["name"]
        if name in ensembles:
            raise DuplicateName(f"duplicate ensemble {name!r}")
        members = []
        for m in en.get("members", ()):
            t = m.get("type")
            if t is not None and t not in entity_types:
                raise UnknownEndpointType(
                    f"ensemble {name!r} selects unknown type {t!r}")
            where = WhereClause.parse(m["where"]) if m.get("where") else None
            if t is None and m.get("id") is None and where is None:
                raise SchemaSyntaxError(
                    f"ensemble {name!r}: untyped member needs a where clause")
            members.append(EnsembleMember(m.get("id"), t, where))
        ensembles[name] = EnsembleDef(name, tuple(members))

    logical: dict[str, LogicalEntityTypeDef] = {}
    for lt in doc.get("logicalEntityTypes", ()):
        name = lt["name"]
        if name in logical or name in entity_types or name == NULL_TYPE:
            raise DuplicateName(f"duplicate logical entity type {name!r}")
        cases = []
        for c in lt.get("cases", ()):
            t = c.get("type")
            if t is not None and t not in entity_types:
                raise UnknownEndpointType(
                    f"logical type {name!r} names unknown type {t!r}")
            ens = c.get("ensemble")
            if ens is not None and ens not in ensembles:
                raise UnknownEndpointType(
                    f"logical type {name!r} names unknown ensemble {ens!r}")
            where = WhereClause.parse(c["where"]) if c.get("where") else None
            cases.append(LogicalCase(c.get("id"), ens, t, where))
        if not cases:
            raise SchemaSyntaxError(f"logical type {name!r} has no cases")
        logical[name] = LogicalEntityTypeDef(name, tuple(cases))

    return Schema(entity_types, rel_types, ensembles, logical)


def _type_to_string(dtype) -> tuple[str, Optional[list]]:
    if isinstance(dtype, str):
        return dtype, None
    if dtype[0] == "opaque":
        return dtype[1], None
    if dtype[0] in ("list", "set"):
        inner, _ = _type_to_string(dtype[1])
        return f"{dtype[0]}<{inner}>", None
    if dtype[0] == "composite":
        if dtype[1] in ("dateframe", "datetimeframe"):
            return dtype[1], None
        subs = [{"name": k, "type": _type_to_string(v)[0]}
                for k, v in dtype[2].items()]
        return "composite", subs
    raise V.V1TypeError(f"unprintable type {dtype}")


def _propdef_json(p: PropertyDef) -> dict:
    tstr, subs = _type_to_string(p.dtype)
    out = {"name": p.name, "type": tstr}
    if subs:
        out["subProperties"] = subs
    if p.unit:
        out["unit"] = p.unit.name if p.unit.name in V.KNOWN_UNITS else {
            "dimension": p.unit.dimension, "name": p.unit.name,
            "factor": p.unit.factor}
    if p.values:
        out["values"] = list(p.values)
    if p.leading:
        out["leading"] = True
    return out


def schema_to_json(schema: Schema) -> dict:
    out = {
        "entityTypes": [
            {"name": et.name,
             "properties": [_propdef_json(p) for p in et.properties]}
            for et in schema.entity_types.values()],
        "relationshipTypes": [
            {"name": rt.name, "directional": rt.directional,
             "endpoints": [list(p) for p in rt.endpoint_pairs],
             "properties": [_propdef_json(p) for p in rt.properties]}
            for rt in schema.relationship_types.values()],
    }
    if schema.ensembles:
        out["ensembles"] = [
            {"name": en.name,
             "members": [
                 {k: v for k, v in (("id", m.concrete_id), ("type", m.type_name),
                                    ("where", m.where and m.where.to_json()))
                  if v is not None}
                 for m in en.members]}
            for en in schema.ensembles.values()]
    if schema.logical_entity_types:
        out["logicalEntityTypes"] = [
            {"name": lt.name,
             "cases": [
                 {k: v for k, v in (("id", c.concrete_id), ("ensemble", c.ensemble),
                                    ("type", c.type_name),
                                    ("where", c.where and c.where.to_json()))
                  if v is not None}
                 for c in lt.cases]}
            for lt in schema.logical_entity_types.values()]
    return out


def serialize_schema(schema: Schema) -> str:
    return json.dumps(schema_to_json(schema), indent=2, sort_keys=False) + "\n"


# ---------------------------------------------------------------------------
# Endpoint checks and schema-level evaluation helpers


def valid_endpoint(rel: RelationshipTypeDef, src: Optional[str],
                   dst: Optional[str], direction: str = "forward") -> bool:
    """True iff some endpoint pair admits (src, dst) under the direction.

    src/dst are entity type names or NULL_TYPE; None acts as a wildcard.
    Direction is forward, backward, or either; bidirectional relationship
    types admit both orders regardless.
    """
    def match(a, b, pair):
        return (a is None or a == pair[0]) and (b is None or b == pair[1])

    for pair in rel.endpoint_pairs:
        fits_fwd = match(src, dst, pair)
        fits_back = match(dst, src, pair)
        if not rel.directional:
            if fits_fwd or fits_back:
                return True
        elif direction == "forward" and fits_fwd:
            return True
        elif direction == "backward" and fits_back:
            return True
        elif direction == "either" and (fits_fwd or fits_back):
            return True
    return False


def _entity_eval_ctx(schema: Schema, entity) -> exprs.EvalContext:
    def props(name: str) -> Value:
        return entity.properties.get(name, V.EMPTY)
    def missing(_):
        raise V.V1TypeError("tags are not available in schema expressions")
    return exprs.EvalContext(props, missing, missing, None,
                             schema.opaque_registry)


def _member_matches(schema: Schema, member: EnsembleMember, entity) -> bool:
    if member.concrete_id is not None:
        return entity.id == member.concrete_id
    if member.type_name is not None and entity.type_name != member.type_name:
        return False
    if member.type_name is None and entity.type_name == NULL_TYPE:
        return False
    if member.where:
        return member.where.matches(schema, entity)
    return member.type_name is not None


def ensemble_member_ids(schema: Schema, graph, name: str) -> set[str]:
    en = schema.ensembles[name]
    out = set()
    for entity in graph.entities.values():
        if any(_member_matches(schema, m, entity) for m in en.members):
            out.add(entity.id)
    return out


def ensemble_members(schema: Schema, graph, name: str):
    """Member ids plus the auto-generated aggregate properties."""
    ids = ensemble_member_ids(schema, graph, name)
    members = [graph.entities[i] for i in sorted(ids)]
    props: dict[str, Value] = {"count": V.ivl(len(members))}
    by_type: dict[str, list] = {}
    for ent in members:
        by_type.setdefault(ent.type_name, []).append(ent)
    for tname in sorted(by_type):
        ents = by_type[tname]
        props[f"{tname}.count"] = V.ivl(len(ents))
        if tname == NULL_TYPE:
            continue
        for p in schema.entity_types[tname].properties:
            vals = [e.properties.get(p.name, V.EMPTY) for e in ents]
            vals = [v for v in vals if not v.is_empty()]
            props[f"{tname}.{p.name}.distinct"] = V.ivl(
                len({V.order_key(v) for v in vals}))
            if p.dtype in ("int", "real", "duration", "date", "datetime"):
                coll = V.lvl(vals)
                for agg in ("min", "max", "avg"):
                    props[f"{tname}.{p.name}.{agg}"] = V.apply_function(
                        agg, coll, ())
                if p.dtype in ("int", "real", "duration"):
                    props[f"{tname}.{p.name}.sum"] = V.apply_function(
                        "sum", coll, ())
    return ids, props


def resolve_logical(schema: Schema, name: str, entity, graph=None) -> bool:
    """True iff the graph entity satisfies at least one case of the type."""
    lt = schema.logical_entity_types[name]
    for case in lt.cases:
        if case.concrete_id is not None:
            if entity.id == case.concrete_id:
                return True
            continue
        if case.ensemble is not None:
            if graph is None:
                continue
            if entity.id in ensemble_member_ids(schema, graph, case.ensemble):
                return True
            continue
        if case.type_name is not None and entity.type_name != case.type_name:
            continue
        if case.type_name is None and entity.type_name == NULL_TYPE:
            continue
        if case.where:
            if case.where.matches(schema, entity):
                return True
            continue
        if case.type_name is not None:
            return True
    return False
