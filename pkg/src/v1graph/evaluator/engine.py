"""Evaluation entry point: rows in, union-of-assignments out."""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass
from typing import Optional

from .. import values as V
from ..graph import PropertyGraph
from ..pattern import ast as P
from ..results import (ResultEntity, ResultGraph, ResultPath,
                       ResultRelationship)
from ..schema import NULL_TYPE
from ..validator import Analysis, analyze
from . import plan as PL
from .matcher import ENSEMBLE_PREFIX, Caps, Matcher, ResourceLimit, Row
from .pipeline import PipelineRunner

DEFAULT_NOW = _dt.datetime(1012, 1, 1, 0, 0, 0)


class ValidationFailed(ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = diagnostics
        super().__init__("; ".join(d.text() for d in diagnostics))


def evaluate(pattern: P.Pattern, graph: PropertyGraph,
             now: Optional[_dt.datetime] = None,
             caps: Optional[Caps] = None,
             analysis: Optional[Analysis] = None) -> ResultGraph:
    """Evaluate a validated pattern; raises ValidationFailed on diagnostics."""
    an = analysis if analysis is not None else analyze(pattern, graph.schema)
    errors = [d for d in an.diagnostics if d.severity == "error"]
    if errors:
        raise ValidationFailed(errors)
    cp = PL.compile_pattern(an)
    matcher = Matcher(cp, graph, now=now or DEFAULT_NOW, caps=caps)
    runner = PipelineRunner(matcher)
    matcher.pipeline_runner = runner
    rows = matcher.run()
    rows = runner.run_root(rows)
    return assemble(cp, matcher, runner, rows)


def match_skeleton(pattern: P.Pattern, graph: PropertyGraph,
                   now: Optional[_dt.datetime] = None,
                   caps: Optional[Caps] = None) -> list[Row]:
    """The positive-skeleton row set (before the aggregation pipeline)."""
    an = analyze(pattern, graph.schema)
    errors = [d for d in an.diagnostics if d.severity == "error"]
    if errors:
        raise ValidationFailed(errors)
    cp = PL.compile_pattern(an)
    matcher = Matcher(cp, graph, now=now or DEFAULT_NOW, caps=caps)
    runner = PipelineRunner(matcher)
    matcher.pipeline_runner = runner
    return matcher.run()


def assemble(cp: PL.Compiled, matcher: Matcher, runner: PipelineRunner,
             rows: list[Row]) -> ResultGraph:
    an = cp.analysis
    g = matcher.g
    out = ResultGraph()

    entity_tags: dict[str, set[str]] = {}
    reported_entities: set[str] = set()
    reported_rels: set[str] = set()
    path_seen: set = set()

    # slot -> plan object lookup for reporting decisions
    slot_entity: dict[int, PL.PlanEntity] = {}
    slot_conn: dict[int, PL.PlanConn] = {}

    def index_plan(obj):
        if isinstance(obj, PL.PlanEntity):
            slot_entity[obj.slot] = obj
            index_plan(obj.next)
        elif isinstance(obj, PL.PlanConn):
            slot_conn[obj.slot] = obj
            index_plan(obj.target)
        elif isinstance(obj, PL.PlanQuant):
            for br in list(obj.branches) + list(obj.optional):
                index_plan(br.next)
        elif isinstance(obj, PL.PlanBranch):
            index_plan(obj.next)

    index_plan(cp.root)

    def node_reported(pe: PL.PlanEntity) -> bool:
        return pe.slot not in cp.latent_slots and \
            pe.node.tag not in an.latent_tags

    path_labels: dict[int, str] = {}
    for i, (slot, pc) in enumerate(sorted(slot_conn.items())):
        if pc.conn.kind == "path":
            path_labels[slot] = f"path-{len(path_labels)}"

    for row in rows:
        for slot, pe in slot_entity.items():
            binding = row.bind.get(slot)
            if binding is None or not node_reported(pe):
                continue
            reported_entities.add(binding)
            entity_tags.setdefault(binding, set()).add(pe.node.tag)
        for slot, pc in slot_conn.items():
            binding = row.bind.get(slot)
            if binding is None:
                continue
            left = an.ctx[id(pc.conn)].host_entity
            left_ok = left is None or (
                id(left) not in an.latent and left.tag not in an.latent_tags)
            right_ok = node_reported(pc.target)
            if not (left_ok and right_ok):
                continue
            if pc.conn.kind == "rel":
                reported_rels.add(binding)
            else:
                ents, rels = binding
                key = (path_labels[slot], ents, rels)
                if key not in path_seen:
                    path_seen.add(key)
                    out.paths.append(ResultPath(path_labels[slot], ents, rels))
                reported_rels.update(rels)
                for eid in ents:
                    reported_entities.add(eid)
                    entity_tags.setdefault(eid, set()).add(path_labels[slot])

    # entity records (ensembles stay assembled; null endpoints included)
    for binding in sorted(reported_entities):
        if binding.startswith(ENSEMBLE_PREFIX):
            name = binding[len(ENSEMBLE_PREFIX):]
            out.entities.append(ResultEntity(
                binding, "ensemble", tuple(sorted(entity_tags[binding])),
                dict(matcher.ensemble_props(name))))
            continue
        ent = g.entities[binding]
        props = {}
        if ent.type_name != NULL_TYPE:
            tdef = g.schema.entity_types[ent.type_name]
            leading = [p.name for p in tdef.properties if p.leading]
            props = {name: ent.properties.get(name, V.EMPTY)
                     for name in (leading or [p.name for p in tdef.properties])}
        out.entities.append(ResultEntity(
            binding, ent.type_name, tuple(sorted(entity_tags[binding])), props))

    # an endpoint assigned through an ensemble is represented by the
    # ensemble record; null endpoints are reported as null entities
    for rid in sorted(reported_rels):
        rel = g.relationships[rid]
        for eid in (rel.source_id, rel.target_id):
            if g.entities[eid].is_null() and eid not in reported_entities:
                reported_entities.add(eid)
                out.entities.append(ResultEntity(
                    eid, NULL_TYPE, (NULL_TYPE.lower(),), {}))
        out.relationships.append(ResultRelationship(
            rid, rel.type_name, rel.source_id, rel.target_id,
            dict(rel.properties)))

    # calculated values, all derived from the surviving rows so that a
    # group killed later in the pipeline leaves no stale entries
    green_entries: set = set()
    for stage_tag, st in sorted(an.tag_stage.items()):
        if not isinstance(st, P.GreenStage):
            continue
        hosts = cp.stage_hosts.get(id(st), [])
        for row in rows:
            if stage_tag not in row.tags:
                continue
            key = None
            for kind, obj in hosts:
                if kind == "entity" and obj is not None:
                    b = row.bind.get(obj.slot)
                    if b is not None and node_reported(obj):
                        key = (obj.node.tag, b)
                        break
                elif kind == "conn":
                    b = row.bind.get(obj.slot)
                    if b is not None and obj.conn.kind == "rel":
                        key = ("rel", b)
                        break
            if key is None:
                continue
            entry = (stage_tag, key, V.order_key(row.tags[stage_tag]))
            if entry not in green_entries:
                green_entries.add(entry)
                out.calculated.append((stage_tag, {key[0]: key[1]},
                                       row.tags[stage_tag]))
    out.calculated.extend(_agg_entries(cp, runner, rows))
    return out


def _agg_entries(cp: PL.Compiled, runner: PipelineRunner,
                 rows: list[Row]) -> list:
    """Aggregation/split tag values per surviving group key."""
    import json as _json

    an = cp.analysis
    entries = []
    for st in an.stages:
        if not isinstance(st, P.AggStage) or st.tag is None:
            continue
        ctx = an.ctx[id(st)]
        res = an.resolved.get(id(st), {})
        per = res.get("per") or []
        splits = list(ctx.splits)
        if st.family == "S1" and splits:
            splits = splits[:-1]   # an S1 value spans its host split
        host_entity = None
        if st.family == "values":
            for kind, obj in cp.stage_hosts.get(id(st), []):
                if kind == "entity" and obj is not None:
                    host_entity = obj
        seen = set()
        for row in rows:
            val = row.tags.get(st.tag)
            if val is None:
                continue
            if st.family == "values":
                if host_entity is None:
                    continue
                b = row.bind.get(host_entity.slot)
                if b is None:
                    continue
                key_map: dict = {host_entity.node.tag: b}
            else:
                gk = runner.group_key(row, per)
                if gk is None:
                    continue
                key_map = dict(gk[1])
            split_vals = []
            computable = True
            for sp in splits:
                sv = runner._split_value(sp, row)
                if sv is None:
                    computable = False
                    break
                split_vals.append(V.value_to_json(sv))
            if not computable:
                continue
            if split_vals:
                key_map["@split"] = split_vals[0] if len(split_vals) == 1 \
                    else split_vals
            ident = (st.tag, _json.dumps(key_map, sort_keys=True,
                                         default=str), V.order_key(val))
            if ident in seen:
                continue
            seen.add(ident)
            entries.append((st.tag, key_map, val))
    return entries
