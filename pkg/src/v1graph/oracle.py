"""Brute-force reference evaluation and random instances for differential
testing.

The oracle re-derives the answer straight from the language definitions:
assignments are explicit occurrence->element mappings enumerated by full
scans (no adjacency indexes, no join planning); quantifiers enumerate
branch subsets literally; negation re-matches the whole right component;
counting aggregates partition the materialized assignment list. It covers
a restricted feature class -- at most a handful of entities, All/Some/None
quantifiers, X boxes, L1/L2 counts, plain paths -- and refuses anything
else, exponential time being acceptable by design.
"""

from __future__ import annotations

import datetime as _dt
import json
import random
from typing import Optional

from . import exprs
from . import values as V
from .graph import PropertyGraph, load_graph
from .pattern import ast as P
from .pattern import parse_pattern
from .results import (ResultEntity, ResultGraph, ResultPath,
                      ResultRelationship)
from .schema import NULL_TYPE, Schema, parse_schema
from .validator import _zero_admitting, analyze
from .values import EMPTY


class UnsupportedFeature(RuntimeError):
    pass


SUPPORTED_QUANTS = {"all", "some", "none"}


def _require(cond: bool, what: str):
    if not cond:
        raise UnsupportedFeature(what)


def _check_class(pattern: P.Pattern):
    entities = list(P.iter_entity_nodes(pattern))
    _require(len(entities) <= 5, "too many entity nodes")
    _require(not pattern.combiners, "combiners")
    _require(not pattern.chain, "query-start stages")
    for node in entities:
        _require(not isinstance(node.spec, P.EnsembleSpec), "ensembles")
        if isinstance(node.spec, P.TypedSpec):
            _require(node.spec.type_name != NULL_TYPE, "null entities")
        _require(not node.latent, "explicit latency")
    for conn in P.iter_connections(pattern):
        _require(conn.wrapper in (P.WRAPPER_NONE, P.WRAPPER_X), "O or NC")
        if conn.kind == "path":
            _require(conn.path.length.upper_bound() <= 3, "long paths")
            _require(not conn.path.shortest, "shortest paths")
            _require(conn.path.patterns is None, "path patterns")
    an = None
    for st in P.iter_all_stages(pattern):
        if isinstance(st, P.AggStage):
            _require(st.family in ("L1", "L2"), f"{st.family} aggregation")
        elif isinstance(st, P.SplitStage):
            raise UnsupportedFeature("splits")
        elif isinstance(st, P.HQuantStage):
            raise UnsupportedFeature("horizontal quantifiers")
        elif isinstance(st, P.GreenStage):
            _require(not st.one_value, "one-value stages")

    # aggregations scoped inside a negation are evaluated per X check by
    # the engine; the literal global-list reading here cannot express that
    def no_agg_inside_x(nxt, in_x):
        if isinstance(nxt, P.Connection):
            inner = in_x or nxt.wrapper == P.WRAPPER_X
            if in_x:
                for st in P.iter_stages(nxt.chain):
                    _require(not isinstance(st, P.AggStage),
                             "aggregation inside a negation")
            tgt = nxt.target
            if isinstance(tgt, P.EntityNode):
                no_agg_inside_x(tgt.tail.next, inner)
            elif isinstance(tgt, P.Quantifier):
                for br in tgt.branches:
                    if isinstance(br, P.EntityNode):
                        no_agg_inside_x(br.tail.next, inner)
        elif isinstance(nxt, P.Quantifier):
            for br in nxt.branches:
                inner = in_x or nxt.quant == "none"
                if isinstance(br, P.Tail):
                    if in_x or nxt.quant == "none":
                        for st in P.iter_stages(br.chain):
                            _require(not isinstance(st, P.AggStage),
                                     "aggregation inside a negation")
                    no_agg_inside_x(br.next, inner)
                else:
                    no_agg_inside_x(br.tail.next if isinstance(
                        br, P.EntityNode) else br, inner)

    if isinstance(pattern.start, P.EntityNode):
        no_agg_inside_x(pattern.start.tail.next, False)
    else:
        no_agg_inside_x(pattern.start, False)

    def check_quant(q):
        _require(q.quant in SUPPORTED_QUANTS, f"quantifier {q.quant}")

    def walk(node):
        if isinstance(node, P.EntityNode):
            walk_next(node.tail.next)
        elif isinstance(node, P.Quantifier):
            check_quant(node)
            for br in node.branches:
                if isinstance(br, P.Tail):
                    walk_next(br.next)
                else:
                    walk(br)

    def walk_next(nxt):
        if isinstance(nxt, P.Connection):
            if isinstance(nxt.target, P.EntityNode):
                walk(nxt.target)
            elif isinstance(nxt.target, P.Quantifier):
                walk(nxt.target)
        elif isinstance(nxt, P.Quantifier):
            walk(nxt)

    walk(pattern.start)


# ---------------------------------------------------------------------------
# Literal evaluation
#
# An assignment is a dict: entity node -> entity id, connection -> rel id or
# path tuple, green stage tag -> Value. Keys are ref strings.


class _Oracle:
    def __init__(self, pattern: P.Pattern, graph: PropertyGraph):
        self.pattern = pattern
        self.g = graph
        self.schema = graph.schema
        self.an = analyze(pattern, graph.schema)
        self.nodes = list(P.iter_entity_nodes(pattern))
        self.conns = list(P.iter_connections(pattern))

    # -- matching ------------------------------------------------------------

    def entity_ok(self, node: P.EntityNode, eid: str, asg: dict) -> bool:
        ent = self.g.entities[eid]
        spec = node.spec
        if isinstance(spec, P.ConcreteSpec):
            if eid != spec.entity_id:
                return False
        elif isinstance(spec, P.TypedSpec):
            if ent.type_name != spec.type_name:
                return False
        else:
            if ent.type_name not in self.an.admissible.get(id(node), ()):
                return False
        return True

    def greens_ok(self, node_or_conn, chain, element_props, asg: dict,
                  collect: Optional[dict]) -> bool:
        for st in chain:
            if isinstance(st, P.AggStage):
                continue     # handled over the assignment set
            if not isinstance(st, P.GreenStage):
                raise UnsupportedFeature("stage")
            ctx = exprs.EvalContext(
                lambda name: element_props.get(name, EMPTY),
                lambda i: asg.get(("tag", i), EMPTY),
                lambda i: EMPTY, None, self.schema.opaque_registry)
            try:
                val = exprs.evaluate(st.expr, ctx)
            except V.V1TypeError:
                val = EMPTY
            asg[("tag", st.tag)] = val
            if collect is not None:
                collect[st.tag] = val
            if st.check is not None and not exprs.eval_check(st.check, val, ctx):
                return False
        return True

    def rel_pairs(self, conn: P.Connection, left_id: str):
        """(rel id, far id) pairs by full relationship scan."""
        spec = conn.rel
        rdef = self.schema.relationship_types[spec.type_name]
        out = []
        for rid in sorted(self.g.relationships):
            r = self.g.relationships[rid]
            if r.type_name != spec.type_name:
                continue
            orientations = []
            if not rdef.directional or spec.direction in ("forward", "either"):
                orientations.append((r.source_id, r.target_id))
            if not rdef.directional or spec.direction in ("backward", "either"):
                orientations.append((r.target_id, r.source_id))
            for near, far in orientations:
                if near == left_id:
                    out.append((rid, far))
        # parallel orientations of one relationship collapse per far side
        seen = set()
        uniq = []
        for rid, far in out:
            if (rid, far) not in seen:
                seen.add((rid, far))
                uniq.append((rid, far))
        return uniq

    def all_paths(self, conn: P.Connection, left_id: str):
        spec = conn.path
        upper = spec.length.upper_bound()
        allowed = spec.rels.allowed if spec.rels and spec.rels.allowed else None
        out = []

        def step(eid):
            for rid in sorted(self.g.relationships):
                r = self.g.relationships[rid]
                if allowed is not None and r.type_name not in allowed:
                    continue
                if r.source_id == eid:
                    yield rid, r.target_id
                if r.target_id == eid:
                    yield rid, r.source_id

        def extend(ents, rels):
            if len(rels) >= upper:
                return
            for rid, far in step(ents[-1]):
                if rid in rels:
                    continue
                if far in ents[1:]:
                    continue
                new_e, new_r = ents + [far], rels + [rid]
                if spec.length.admits(len(new_r)):
                    out.append((tuple(new_e), tuple(new_r)))
                if far != ents[0] and not self.g.entities[far].is_null():
                    extend(new_e, new_r)

        extend([left_id], [])
        return out

    # -- recursive assignment enumeration -------------------------------------

    def match_entity(self, node: P.EntityNode, eid: str, asg: dict) -> list:
        if not self.entity_ok(node, eid, asg):
            return []
        asg = dict(asg)
        prior = asg.get(("ent", id(node)))
        if prior is not None and prior != eid:
            return []
        asg[("ent", id(node))] = eid
        ent = self.g.entities[eid]
        if not self.greens_ok(node, node.tail.chain, ent.properties, asg, None):
            return []
        return self.match_next(node.tail.next, eid, asg)

    def match_next(self, nxt, left_id: str, asg: dict) -> list:
        if nxt is None:
            return [asg]
        if isinstance(nxt, P.Connection):
            return self.match_conn(nxt, left_id, asg)
        return self.match_quant(nxt, left_id, asg)

    def match_conn_positive(self, conn: P.Connection, left_id, asg) -> list:
        out = []
        if conn.kind == "rel":
            targets = conn.target
            if isinstance(targets, P.Quantifier):
                # one relationship instance per branch of the quantifier
                return self.match_relquant(conn, targets, left_id, asg)
            for rid, far in self.rel_pairs(conn, left_id):
                a2 = dict(asg)
                a2[("conn", id(conn))] = rid
                rel = self.g.relationships[rid]
                if not self.greens_ok(conn, conn.chain, rel.properties, a2,
                                      None):
                    continue
                out.extend(self.match_entity(targets, far, a2))
        else:
            for ents, rels in self.all_paths(conn, left_id):
                a2 = dict(asg)
                a2[("conn", id(conn))] = (ents, rels)
                out.extend(self.match_entity(conn.target, ents[-1], a2))
        return out

    def match_conn(self, conn: P.Connection, left_id, asg) -> list:
        if conn.wrapper == P.WRAPPER_X:
            # the witness must satisfy identity/nonidentity over its own
            # bindings as well (see the parent-ownership double negations)
            ext = [a for a in self.match_conn_positive(conn, left_id, asg)
                   if self.identity_ok(a)]
            return [] if ext else [asg]
        return self.match_conn_positive(conn, left_id, asg)

    def match_relquant(self, conn, q: P.Quantifier, left_id, asg) -> list:
        branches = []
        for br in q.branches:
            c2 = P.Connection(kind=conn.kind, rel=conn.rel, path=conn.path,
                              wrapper=conn.wrapper, chain=conn.chain,
                              target=br, ref=conn.ref)
            branches.append(P.Tail([], c2))
        q2 = P.Quantifier(q.quant, q.n, q.n2, q.wrapper, q.chain, branches,
                          q.ref)
        return self.match_quant(q2, left_id, asg)

    def match_branch(self, br, left_id, asg) -> list:
        if isinstance(br, P.Tail):
            a2 = dict(asg)
            if left_id is not None:
                props = self.g.entities[left_id].properties
                if not self.greens_ok(None, br.chain, props, a2, None):
                    return []
            if br.next is None:
                return [a2]
            return self.match_next(br.next, left_id, a2)
        if isinstance(br, P.EntityNode):
            out = []
            for eid in sorted(self.g.entities):
                out.extend(self.match_entity(br, eid, asg))
            return out
        return self.match_quant(br, left_id, asg)

    def match_quant(self, q: P.Quantifier, left_id, asg) -> list:
        b = len(q.branches)
        subsets = []
        for mask in range(1, 1 << b):
            subsets.append([i for i in range(b) if mask & (1 << i)])
        subsets.sort(key=len)

        def combos(subset):
            acc = [asg]
            for i in subset:
                nxt = []
                for a in acc:
                    nxt.extend(self.match_branch(q.branches[i], left_id, a))
                acc = nxt
            return acc

        if q.quant == "all":
            return combos(list(range(b)))
        if q.quant == "some":
            out = []
            for subset in subsets:
                out.extend(combos(subset))
            return _dedup(out)
        if q.quant == "none":
            for subset in subsets:
                if [a for a in combos(subset) if self.identity_ok(a)]:
                    return []
            return [asg]
        raise UnsupportedFeature(q.quant)

    def base_assignments(self) -> list:
        start = self.pattern.start
        out = []
        if isinstance(start, P.EntityNode):
            for eid in sorted(self.g.entities):
                out.extend(self.match_entity(start, eid, {}))
        else:
            out.extend(self.match_quant(start, None, {}))
        return _dedup(out)

    # -- identity / nonidentity (steps 2 and 3) --------------------------------

    def identity_ok(self, asg: dict) -> bool:
        by_tag: dict[str, set] = {}
        for node in self.nodes:
            eid = asg.get(("ent", id(node)))
            if eid is not None:
                by_tag.setdefault(node.tag, set()).add(eid)
        for tag, ids in by_tag.items():
            if len(ids) > 1:
                return False
        for node in self.nodes:
            eid = asg.get(("ent", id(node)))
            if eid is None:
                continue
            for other in node.not_equal:
                if other in by_tag and eid in by_tag[other]:
                    return False
        return True

    # -- counting aggregates ----------------------------------------------------

    def agg_stages(self) -> list:
        out = []
        for conn in self.conns:
            for st in conn.chain:
                if isinstance(st, P.AggStage):
                    out.append((st, conn))
        for q in _all_quants(self.pattern):
            for st in q.chain:
                if isinstance(st, P.AggStage):
                    out.append((st, q))
        out.sort(key=lambda pair: self.an.ctx[id(pair[0])].order)
        return out

    def tag_elems(self, spec) -> list:
        res = self.an.resolved.get(id(spec), {})
        return res

    def elem_value(self, asg, elem):
        if isinstance(elem, tuple) and elem[0] == "product":
            parts = []
            for t in elem[1]:
                v = self._tag_value(asg, t)
                if v is None:
                    return None
                parts.append(v)
            return tuple(parts)
        return self._tag_value(asg, elem)

    def _tag_value(self, asg, letter):
        for node in self.nodes:
            if node.tag == letter:
                v = asg.get(("ent", id(node)))
                if v is not None:
                    return v
        return None

    def run_agg(self, st: P.AggStage, host, assignments: list) -> list:
        res = self.an.resolved[id(st)]
        per = res.get("per") or []
        groups: dict = {}
        passthrough = []
        for asg in assignments:
            key = tuple(self.elem_value(asg, e) for e in per)
            if any(k is None for k in key):
                passthrough.append(asg)
                continue
            groups.setdefault(key, []).append(asg)
        kept = list(passthrough)
        for key in sorted(groups, key=lambda k: str(k)):
            cell = groups[key]
            if st.family == "L1":
                vals = set()
                for elem in res.get("count") or []:
                    for asg in cell:
                        v = self.elem_value(asg, elem)
                        if v is not None:
                            vals.add(v)
                at = len(vals)
            else:
                rel_keys = set()
                hosts = [host] if isinstance(host, P.Connection) else \
                    _quant_head_conns(host)
                for asg in cell:
                    for h in hosts:
                        v = asg.get(("conn", id(h)))
                        if v is not None:
                            rel_keys.add(v if isinstance(v, str) else v[1])
                at = len(rel_keys)
            ok = self._check_count(st, at)
            for asg in cell:
                asg[("tag", st.tag)] = V.ivl(at)
            if ok:
                kept.extend(cell)
        return kept

    def _check_count(self, st: P.AggStage, at: int) -> bool:
        if st.check is None:
            return True
        if at == 0 and st.check.op in ("ne", "lt", "le"):
            return False
        ctx = exprs.EvalContext(lambda n: EMPTY, lambda i: EMPTY,
                                lambda i: EMPTY, None, None)
        return exprs.eval_check(st.check, V.ivl(at), ctx)

    def zero_extend(self, assignments: list) -> list:
        """Left components kept alive by zero-admitting counts."""
        extended = list(assignments)
        for hid in self.an.zero_gated:
            host = None
            for conn in self.conns:
                if id(conn) == hid:
                    host = conn
            for q in _all_quants(self.pattern):
                if id(q) == hid:
                    host = q
            if host is None:
                continue
            cut = _cut_subtree(self.pattern, host)
            if cut is None:
                continue
            clone, node_map, conn_map = cut
            sub = _Oracle(clone, self.g)
            # implicit type constraints of the full pattern still apply to
            # the kept left component (the suppressed part is hypothetical)
            for cnode in P.iter_entity_nodes(clone):
                orig = node_map.get(id(cnode))
                if orig is not None:
                    sub.an.admissible[id(cnode)] = self.an.admissible.get(
                        id(orig), frozenset())
            for asg in sub.base_assignments():
                if sub.identity_ok(asg):
                    remapped = {}
                    for key, v in asg.items():
                        if key[0] == "ent":
                            remapped[("ent", id(node_map[key[1]]))] = v
                        elif key[0] == "conn":
                            remapped[("conn", id(conn_map[key[1]]))] = v
                        else:
                            remapped[key] = v
                    extended.append(remapped)
        return _dedup(extended)

    # -- full pipeline ------------------------------------------------------------

    def evaluate(self) -> ResultGraph:
        assignments = [a for a in self.base_assignments()
                       if self.identity_ok(a)]
        if self.an.zero_gated:
            assignments = [a for a in self.zero_extend(assignments)
                           if self.identity_ok(a)]
        for st, host in self.agg_stages():
            assignments = self.run_agg(st, host, assignments)
        return self.assemble(assignments)

    def assemble(self, assignments) -> ResultGraph:
        out = ResultGraph()
        tags: dict[str, set] = {}
        rels: set[str] = set()
        paths: dict = {}
        latent_nodes = {id(n) for n in self.nodes
                        if id(n) in self.an.latent
                        or n.tag in self.an.latent_tags}
        path_labels: dict[int, str] = {}
        for conn in self.conns:
            if conn.kind == "path":
                path_labels[id(conn)] = f"path-{len(path_labels)}"
        for asg in assignments:
            for node in self.nodes:
                eid = asg.get(("ent", id(node)))
                if eid is None or id(node) in latent_nodes:
                    continue
                tags.setdefault(eid, set()).add(node.tag)
            for conn in self.conns:
                v = asg.get(("conn", id(conn)))
                if v is None:
                    continue
                left = self.an.ctx[id(conn)].host_entity
                left_latent = left is not None and (
                    id(left) in self.an.latent or left.tag in self.an.latent_tags)
                tgt = conn.target
                tgt_nodes = tgt if isinstance(tgt, P.EntityNode) else None
                right_latent = tgt_nodes is not None and (
                    id(tgt_nodes) in self.an.latent
                    or tgt_nodes.tag in self.an.latent_tags)
                if left_latent or right_latent:
                    continue
                if conn.kind == "rel":
                    rels.add(v)
                else:
                    ents, rids = v
                    label = path_labels[id(conn)]
                    paths[(label, ents, rids)] = True
                    rels.update(rids)
                    for eid in ents:
                        tags.setdefault(eid, set()).add(label)
        for eid in sorted(tags):
            ent = self.g.entities[eid]
            props = {}
            if ent.type_name != NULL_TYPE:
                tdef = self.schema.entity_types[ent.type_name]
                leading = [p.name for p in tdef.properties if p.leading]
                props = {n: ent.properties.get(n, EMPTY)
                         for n in (leading or [p.name for p in tdef.properties])}
            out.entities.append(ResultEntity(
                eid, ent.type_name, tuple(sorted(tags[eid])), props))
        for rid in sorted(rels):
            r = self.g.relationships[rid]
            out.relationships.append(ResultRelationship(
                rid, r.type_name, r.source_id, r.target_id,
                dict(r.properties)))
        for (label, ents, rids) in sorted(paths):
            out.paths.append(ResultPath(label, ents, rids))
        # calculated: green tags per host entity, then count tags
        green_entries = set()
        for st in sorted((s for s in P.iter_all_stages(self.pattern)
                          if isinstance(s, P.GreenStage)),
                         key=lambda s: s.tag):
            host = self.an.ctx[id(st)].host
            for asg in assignments:
                val = asg.get(("tag", st.tag))
                if val is None:
                    continue
                if isinstance(host, P.EntityNode):
                    if id(host) in latent_nodes:
                        continue
                    eid = asg.get(("ent", id(host)))
                    if eid is None:
                        continue
                    key = (host.tag, eid)
                elif isinstance(host, P.Connection):
                    rid = asg.get(("conn", id(host)))
                    if rid is None or not isinstance(rid, str):
                        continue
                    key = ("rel", rid)
                else:
                    continue
                entry = (st.tag, key, V.order_key(val))
                if entry not in green_entries:
                    green_entries.add(entry)
                    out.calculated.append((st.tag, {key[0]: key[1]}, val))
        # aggregation tags: one entry per surviving group key
        for st, _host in self.agg_stages():
            if st.tag is None:
                continue
            res = self.an.resolved.get(id(st), {})
            per = res.get("per") or []
            seen2 = set()
            for asg in assignments:
                val = asg.get(("tag", st.tag))
                if val is None:
                    continue
                report = {}
                ok = True
                for elem in per:
                    v = self.elem_value(asg, elem)
                    if v is None:
                        ok = False
                        break
                    if isinstance(elem, tuple) and elem[0] == "product":
                        for t, x in zip(elem[1], v):
                            report[t] = x
                    else:
                        report[elem] = v
                if not ok:
                    continue
                ident = (st.tag, tuple(sorted(report.items())),
                         V.order_key(val))
                if ident in seen2:
                    continue
                seen2.add(ident)
                out.calculated.append((st.tag, report, val))
        return out


def _dedup(assignments: list) -> list:
    seen = set()
    out = []
    for a in assignments:
        key = tuple(sorted((k, _hashable(v)) for k, v in a.items()))
        if key not in seen:
            seen.add(key)
            out.append(a)
    return out


def _hashable(v):
    if isinstance(v, V.Value):
        return ("val",) + V.order_key(v)
    return v


def _all_quants(pattern) -> list:
    out = []

    def from_node(node):
        if isinstance(node, P.EntityNode):
            nxt = node.tail.next
            if isinstance(nxt, P.Connection):
                if isinstance(nxt.target, P.EntityNode):
                    from_node(nxt.target)
                elif isinstance(nxt.target, P.Quantifier):
                    from_node(nxt.target)
            elif isinstance(nxt, P.Quantifier):
                from_node(nxt)
        elif isinstance(node, P.Quantifier):
            out.append(node)
            for br in node.branches:
                if isinstance(br, P.Tail):
                    if isinstance(br.next, P.Connection):
                        tgt = br.next.target
                        if isinstance(tgt, (P.EntityNode, P.Quantifier)):
                            from_node(tgt)
                    elif isinstance(br.next, P.Quantifier):
                        from_node(br.next)
                else:
                    from_node(br)

    from_node(pattern.start)
    return out


def _quant_head_conns(q: P.Quantifier) -> list:
    out = []
    for br in q.branches:
        nxt = br.next if isinstance(br, P.Tail) else None
        if isinstance(nxt, P.Connection) and nxt.wrapper == P.WRAPPER_NONE:
            out.append(nxt)
    return out


def _cut_subtree(pattern: P.Pattern, host):
    """(clone without the gated connection, clone->original maps)."""
    import copy

    clone = copy.deepcopy(pattern)
    node_map = {id(c): o for c, o in zip(P.iter_entity_nodes(clone),
                                         P.iter_entity_nodes(pattern))}
    conn_map = {id(c): o for c, o in zip(P.iter_connections(clone),
                                         P.iter_connections(pattern))}
    target_clone = None
    for c in P.iter_connections(clone):
        if conn_map[id(c)] is host:
            target_clone = c
    if target_clone is None:
        return None
    for node in P.iter_entity_nodes(clone):
        if node.tail.next is target_clone:
            node.tail.next = None
            return clone, node_map, conn_map
        nxt = node.tail.next
        if isinstance(nxt, P.Quantifier):
            for br in nxt.branches:
                if isinstance(br, P.Tail) and br.next is target_clone:
                    br.next = None
                    return clone, node_map, conn_map
    return clone, node_map, conn_map


def oracle_evaluate(pattern: P.Pattern, graph: PropertyGraph) -> ResultGraph:
    """Reference answer for patterns in the restricted differential class."""
    _check_class(pattern)
    return _Oracle(pattern, graph).evaluate()


# ---------------------------------------------------------------------------
# Random instances

_TYPES = ("Alpha", "Beta", "Gamma")
_COLORS = ("red", "green", "blue", "amber")


def generate_instance(seed: int, entities: int = 16, relationships: int = 30,
                      pattern_depth: int = 3):
    """Deterministic (schema, graph, pattern) triple for one seed."""
    rng = random.Random(seed)
    schema_doc = _random_schema(rng)
    schema = parse_schema(schema_doc)
    graph_doc = _random_graph(rng, schema_doc, entities, relationships)
    graph = load_graph(graph_doc, schema)
    for attempt in range(60):
        pattern_doc = _random_pattern(
            random.Random(seed * 1000 + attempt), schema_doc, graph_doc,
            pattern_depth)
        ast = parse_pattern(json.dumps(pattern_doc))
        an = analyze(ast, schema)
        if not [d for d in an.diagnostics if d.severity == "error"]:
            return schema, graph, ast, (schema_doc, graph_doc, pattern_doc)
    raise RuntimeError(f"seed {seed}: no clean pattern found")


def _random_schema(rng: random.Random) -> dict:
    ets = []
    for name in _TYPES:
        props = [{"name": "k", "type": "int"},
                 {"name": "s", "type": "string"}]
        if rng.random() < 0.5:
            props.append({"name": "d", "type": "date"})
        ets.append({"name": name, "properties": props})
    rels = []
    for i in range(1, 5):
        pairs = set()
        for _ in range(rng.randint(1, 2)):
            pairs.add((rng.choice(_TYPES), rng.choice(_TYPES)))
        rels.append({
            "name": f"r{i}",
            "directional": rng.random() < 0.75,
            "endpoints": [list(p) for p in sorted(pairs)],
            "properties": [{"name": "n", "type": "int"}]})
    return {"entityTypes": ets, "relationshipTypes": rels}


def _random_graph(rng: random.Random, schema_doc, n_entities,
                  n_rels) -> dict:
    entities = []
    for i in range(n_entities):
        t = rng.choice(_TYPES)
        props = {"k": rng.randint(0, 9), "s": rng.choice(_COLORS)}
        for p in schema_doc["entityTypes"]:
            if p["name"] == t and any(q["name"] == "d"
                                      for q in p["properties"]):
                props["d"] = (f"{rng.randint(990, 1011):04d}-"
                              f"{rng.randint(1, 12):02d}-"
                              f"{rng.randint(1, 28):02d}")
        entities.append({"id": f"e{i:02d}", "type": t, "props": props})
    by_type: dict[str, list] = {}
    for e in entities:
        by_type.setdefault(e["type"], []).append(e["id"])
    rels = []
    rel_defs = schema_doc["relationshipTypes"]
    attempts = 0
    while len(rels) < n_rels and attempts < n_rels * 20:
        attempts += 1
        rd = rng.choice(rel_defs)
        src_t, dst_t = rng.choice(rd["endpoints"])
        if not by_type.get(src_t) or not by_type.get(dst_t):
            continue
        src = rng.choice(by_type[src_t])
        dst = rng.choice(by_type[dst_t])
        rels.append({"id": f"r{len(rels):03d}", "type": rd["name"],
                     "source": src, "target": dst,
                     "props": {"n": rng.randint(0, 9)}})
    return {"entities": entities, "relationships": rels}


class _PatternGen:
    def __init__(self, rng: random.Random, schema_doc, graph_doc, depth):
        self.rng = rng
        self.schema = schema_doc
        self.graph = graph_doc
        self.rels = schema_doc["relationshipTypes"]
        self.depth = depth
        self.next_tag = 0
        self.next_xt = 0
        self.tags_by_type: dict[str, list] = {}
        self.entity_budget = 4

    def tag(self) -> str:
        letter = "ABCDEFGH"[self.next_tag]
        self.next_tag += 1
        return letter

    def xt(self) -> int:
        self.next_xt += 1
        return self.next_xt

    def green_for(self, _type_name) -> Optional[dict]:
        r = self.rng.random()
        tag = self.xt()
        if r < 0.35:
            return {"kind": "expr", "tag": tag, "expr": "k",
                    "check": {"op": self.rng.choice(["ge", "lt"]),
                              "rhs": str(self.rng.randint(2, 7)),
                              "policy": self.rng.choice(["blue", "red"])}}
        if r < 0.6:
            return {"kind": "expr", "tag": tag, "expr": "s",
                    "check": {"op": "eq",
                              "rhs": f"'{self.rng.choice(_COLORS)}'"}}
        if r < 0.75:
            return {"kind": "expr", "tag": tag, "expr": "k",
                    "check": {"op": "in_range",
                              "rhs": {"range": {"lo": "1", "hi": "8"}}}}
        return None

    def entity(self, type_name: str, depth: int, force_plain=False,
               in_x: bool = False) -> dict:
        roll = self.rng.random()
        tag = self.tag()
        if roll < 0.12 and not force_plain:
            ids = [e["id"] for e in self.graph["entities"]
                   if e["type"] == type_name]
            if ids:
                node = {"kind": "entity", "tag": tag,
                        "entity": {"kind": "concrete",
                                   "id": self.rng.choice(ids),
                                   "type": type_name}}
                nxt = self.continuation(type_name, depth, in_x)
                if nxt:
                    node["next"] = nxt
                return node
        if roll < 0.25:
            spec = {"kind": "untyped"}
        else:
            spec = {"kind": "typed", "type": type_name}
            self.tags_by_type.setdefault(type_name, []).append(tag)
        node = {"kind": "entity", "tag": tag, "entity": spec}
        # occasional nonidentity against an earlier same-typed node
        peers = [t for t in self.tags_by_type.get(type_name, [])
                 if t != tag]
        if peers and self.rng.random() < 0.25 and spec["kind"] == "typed":
            node["notEqual"] = [self.rng.choice(peers)]
        chain = []
        if self.rng.random() < 0.5 and spec["kind"] == "typed":
            g = self.green_for(type_name)
            if g:
                chain.append(g)
        if chain:
            node["chain"] = chain
        nxt = self.continuation(type_name, depth, in_x)
        if nxt:
            node["next"] = nxt
        return node

    def rel_from(self, type_name: str):
        options = []
        for rd in self.rels:
            for src, dst in rd["endpoints"]:
                if src == type_name:
                    options.append((rd, "forward", dst))
                if dst == type_name and rd["directional"]:
                    options.append((rd, "backward", src))
                elif dst == type_name and not rd["directional"]:
                    options.append((rd, "either", src))
        return self.rng.choice(options) if options else None

    def connection(self, type_name: str, depth: int,
                   in_x: bool = False) -> Optional[dict]:
        picked = self.rel_from(type_name)
        if picked is None or self.entity_budget <= 0:
            return None
        rd, direction, far = picked
        self.entity_budget -= 1
        if not rd["directional"]:
            direction = "either"
        roll = self.rng.random()
        wrapper_x = roll < 0.18
        conn = {"kind": "rel", "type": rd["name"], "direction": direction,
                "target": self.entity(far, depth - 1,
                                      in_x=in_x or wrapper_x)}
        if wrapper_x:
            conn["wrapper"] = "X"
        chain = []
        if self.rng.random() < 0.30 and not wrapper_x and not in_x:
            left_tag = None   # filled by caller through per="left"
            which = self.rng.random()
            if which < 0.5:
                count_check = ({"op": "eq", "rhs": "0"}
                               if self.rng.random() < 0.4 else
                               {"op": "ge",
                                "rhs": str(self.rng.randint(1, 3))})
                chain.append({"kind": "agg", "family": "L1", "tag": self.xt(),
                              "per": "left", "count": "right",
                              "check": count_check})
            else:
                chain.append({"kind": "agg", "family": "L2", "tag": self.xt(),
                              "per": "left", "over": "relationships",
                              "check": {"op": "ge",
                                        "rhs": str(self.rng.randint(1, 3))}})
        elif self.rng.random() < 0.25:
            chain.append({"kind": "expr", "tag": self.xt(), "expr": "n",
                          "check": {"op": self.rng.choice(["ge", "le"]),
                                    "rhs": str(self.rng.randint(2, 7))}})
        if chain:
            conn["chain"] = chain
        return conn

    def pathconn(self, type_name: str, depth: int) -> Optional[dict]:
        if self.entity_budget <= 0:
            return None
        self.entity_budget -= 1
        far = self.rng.choice(_TYPES)
        conn = {"kind": "path",
                "length": {"op": "le", "n": self.rng.randint(2, 3)},
                "target": self.entity(far, 0, force_plain=True)}
        if self.rng.random() < 0.5:
            names = sorted({rd["name"] for rd in self.rels})
            conn["relConstraints"] = {
                "allowed": self.rng.sample(names,
                                           self.rng.randint(1, len(names)))}
        return conn

    def continuation(self, type_name: str, depth: int,
                     in_x: bool = False) -> Optional[dict]:
        if depth <= 0 or self.entity_budget <= 0:
            return None
        roll = self.rng.random()
        if roll < 0.35:
            return None
        if roll < 0.75:
            return self.connection(type_name, depth, in_x)
        if roll < 0.85:
            return self.pathconn(type_name, depth)
        branches = []
        quant = self.rng.choice(["all", "some", "none"])
        for _ in range(2):
            c = self.connection(type_name, max(depth - 1, 1),
                                in_x=in_x or quant == "none")
            if c is None:
                return None
            if quant in ("none", "some"):
                c.pop("wrapper", None)
            if quant == "none" and "chain" in c:
                del c["chain"]
            branches.append(c)
        return {"kind": "quantifier", "quant": quant, "branches": branches}


def _random_pattern(rng: random.Random, schema_doc, graph_doc, depth) -> dict:
    gen = _PatternGen(rng, schema_doc, graph_doc, depth)
    start_type = rng.choice(_TYPES)
    gen.entity_budget -= 1
    return {"start": gen.entity(start_type, depth)}
