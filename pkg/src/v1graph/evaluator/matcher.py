"""Skeleton matching: enumerate assignment rows over the compiled plan.

A row binds plan slots to graph elements (entity ids, relationship ids,
path tuples) plus value tags. Quantifiers materialize every matchable
branch subset allowed by their kind, with untaken branches left unbound;
X/no-connection/O wrappers implement anti-joins and left-joins. Stages
that depend on aggregation output are skipped here and run later by the
pipeline.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from .. import exprs
from .. import values as V
from ..graph import PropertyGraph, adjacent
from ..pattern import ast as P
from ..schema import NULL_TYPE, ensemble_member_ids, resolve_logical
from ..values import EMPTY, Value
from . import plan as PL

ENSEMBLE_PREFIX = "ensemble:"


class ResourceLimit(RuntimeError):
    pass


class UnsupportedFeature(RuntimeError):
    pass


@dataclass
class Caps:
    max_rows: int = 1_000_000
    max_paths: int = 100_000


@dataclass
class Row:
    bind: dict
    tags: dict

    def child(self) -> "Row":
        return Row(dict(self.bind), dict(self.tags))

    def key(self):
        return (tuple(sorted(self.bind.items(),
                             key=lambda kv: (kv[0],))),
                tuple(sorted(((k, V.order_key(v)) for k, v in self.tags.items()),
                             key=lambda kv: kv[0])))


def dedup_rows(rows: list[Row]) -> list[Row]:
    seen = set()
    out = []
    for r in rows:
        k = r.key()
        if k not in seen:
            seen.add(k)
            out.append(r)
    return out


def binding_sort_key(v):
    if v is None:
        return (0, "")
    if isinstance(v, tuple):
        return (2, v)
    if isinstance(v, Value):
        return (3, V.order_key(v))
    return (1, v)


class Matcher:
    def __init__(self, cp: PL.Compiled, graph: PropertyGraph,
                 now=None, caps: Optional[Caps] = None):
        self.cp = cp
        self.an = cp.analysis
        self.g = graph
        self.schema = graph.schema
        self.now = now
        self.caps = caps or Caps()
        self._ens_members: dict[str, set] = {}
        self._ens_props: dict[str, dict] = {}
        self._logical: dict[str, set] = {}
        self.pipeline_runner = None     # wired by the engine
        self._rows_seen = 0
        self._deferred_x = {id(ps.plan_conn)
                            for stages in cp.pipeline.values()
                            for ps in stages if ps.kind == "xcheck"}
        self._path_cache: dict = {}

    # -- caches ------------------------------------------------------------

    def ensemble_members(self, name: str) -> set:
        if name not in self._ens_members:
            self._ens_members[name] = ensemble_member_ids(
                self.schema, self.g, name)
        return self._ens_members[name]

    def ensemble_props(self, name: str) -> dict:
        if name not in self._ens_props:
            from ..schema import ensemble_members
            _, props = ensemble_members(self.schema, self.g, name)
            self._ens_props[name] = props
        return self._ens_props[name]

    def logical_members(self, name: str) -> set:
        if name not in self._logical:
            self._logical[name] = {
                eid for eid in sorted(self.g.entities)
                if resolve_logical(self.schema, name, self.g.entities[eid],
                                   self.g)}
        return self._logical[name]

    # -- bindings ----------------------------------------------------------

    def binding_type(self, binding) -> Optional[str]:
        if binding is None:
            return None
        if isinstance(binding, str) and binding.startswith(ENSEMBLE_PREFIX):
            return None
        return self.g.entities[binding].type_name

    def _budget(self, n=1):
        self._rows_seen += n
        if self._rows_seen > self.caps.max_rows:
            raise ResourceLimit(
                f"assignment budget exceeded ({self.caps.max_rows})")

    # -- expression contexts -------------------------------------------------

    def entity_props(self, binding) -> Callable[[str], Value]:
        if isinstance(binding, str) and binding.startswith(ENSEMBLE_PREFIX):
            props = self.ensemble_props(binding[len(ENSEMBLE_PREFIX):])
            return lambda name: props.get(name, EMPTY)
        ent = self.g.entities[binding]

        def get(name: str) -> Value:
            if name in ent.properties:
                return ent.properties[name]
            tdef = self.schema.entity_types.get(name)
            if tdef is not None:
                # typed view over a logical entity: Type.prop access
                if ent.type_name == name:
                    return V.compvl(name, dict(ent.properties))
                return V.compvl(name, {p.name: EMPTY for p in tdef.properties})
            return EMPTY
        return get

    def ctx(self, row: Row, props: Callable[[str], Value]) -> exprs.EvalContext:
        def tags(i: int) -> Value:
            return row.tags.get(i, EMPTY)

        def type_tags(i: int) -> Value:
            slot = self.cp.type_tag_slot.get(i)
            if slot is None:
                return EMPTY
            t = self.binding_type(row.bind.get(slot))
            return V.svl(t) if t else EMPTY
        return exprs.EvalContext(props, tags, type_tags, self.now,
                                 self.schema.opaque_registry)

    def rel_ctx(self, row: Row, rel_id: Optional[str]) -> exprs.EvalContext:
        if rel_id is None:
            return self.ctx(row, lambda name: EMPTY)
        props = self.g.relationships[rel_id].properties
        return self.ctx(row, lambda name: props.get(name, EMPTY))

    # -- entry point ---------------------------------------------------------

    def run(self) -> list[Row]:
        seed = Row({}, {})
        if isinstance(self.cp.root, PL.PlanEntity):
            rows = self.enter_entity([seed], self.cp.root)
        else:
            rows = self.resolve_quant_rows([seed], self.cp.root)
        for r in rows:
            for s in range(self.cp.slot_count):
                r.bind.setdefault(s, None)
        rows = dedup_rows(rows)
        rows.sort(key=lambda r: tuple(binding_sort_key(r.bind[s])
                                      for s in range(self.cp.slot_count)))
        return rows

    # -- entities ------------------------------------------------------------

    def entity_candidates(self, row: Row, pe: PL.PlanEntity) -> list:
        node = pe.node
        spec = node.spec
        # identity: another node with the same tag already bound
        for s in self.cp.tag_slots.get(node.tag, []):
            if s != pe.slot and row.bind.get(s) is not None:
                prior = row.bind[s]
                return [prior] if self._candidate_ok(row, pe, prior) else []
        if isinstance(spec, P.ConcreteSpec):
            ent = self.g.entities.get(spec.entity_id)
            if ent is None or ent.type_name != spec.type_name:
                return []
            cands = [spec.entity_id]
        elif isinstance(spec, P.EnsembleSpec):
            cands = [ENSEMBLE_PREFIX + spec.name]
        elif isinstance(spec, P.TypedSpec) and \
                spec.type_name in self.schema.logical_entity_types:
            cands = sorted(self.logical_members(spec.type_name))
        else:
            cands = []
            for t in sorted(pe.admissible):
                cands.extend(self.g.entities_of_type(t))
            cands.sort()
        return [c for c in cands if self._candidate_ok(row, pe, c)]

    def _candidate_ok(self, row: Row, pe: PL.PlanEntity, binding) -> bool:
        return self._spec_ok(pe, binding) and \
            self._row_constraints_ok(row, pe, binding)

    def _spec_ok(self, pe: PL.PlanEntity, binding) -> bool:
        node = pe.node
        spec = node.spec
        if isinstance(binding, str) and binding.startswith(ENSEMBLE_PREFIX):
            return isinstance(spec, P.EnsembleSpec) and \
                binding == ENSEMBLE_PREFIX + spec.name
        ent = self.g.entities.get(binding)
        if ent is None:
            return False
        if isinstance(spec, P.ConcreteSpec):
            if binding != spec.entity_id:
                return False
        elif isinstance(spec, P.TypedSpec):
            if spec.type_name in self.schema.logical_entity_types:
                if binding not in self.logical_members(spec.type_name):
                    return False
            elif ent.type_name != spec.type_name:
                return False
        elif isinstance(spec, P.EnsembleSpec):
            return False
        else:
            if ent.type_name not in pe.admissible:
                return False
        return True

    def _row_constraints_ok(self, row: Row, pe: PL.PlanEntity, binding) -> bool:
        node = pe.node
        spec = node.spec
        if isinstance(binding, str) and binding.startswith(ENSEMBLE_PREFIX):
            return True
        ent = self.g.entities.get(binding)
        # identity: every slot sharing this tag binds the same graph entity
        for s in self.cp.tag_slots.get(node.tag, []):
            if s != pe.slot:
                prior = row.bind.get(s)
                if prior is not None and prior != binding:
                    return False
        # nonidentity constraints, both directions
        for other_tag in node.not_equal:
            for s in self.cp.tag_slots.get(other_tag, []):
                if row.bind.get(s) == binding:
                    return False
        for other in self.an.entity_nodes:
            if node.tag in other.not_equal:
                for s in self.cp.tag_slots.get(other.tag, []):
                    if row.bind.get(s) == binding:
                        return False
        # entity-type tag constraints
        if isinstance(spec, P.UntypedSpec):
            if spec.type_equals is not None:
                ref = self.cp.type_tag_slot.get(spec.type_equals)
                if ref is not None and row.bind.get(ref) is not None:
                    if self.binding_type(row.bind[ref]) != ent.type_name:
                        return False
            for ett in spec.type_not_equals:
                ref = self.cp.type_tag_slot.get(ett)
                if ref is not None and row.bind.get(ref) is not None:
                    if self.binding_type(row.bind[ref]) == ent.type_name:
                        return False
        # reverse direction: nodes whose type constraints reference our tag
        if isinstance(spec, P.UntypedSpec) and spec.type_tag is not None:
            for other in self.an.entity_nodes:
                ospec = other.spec
                if not isinstance(ospec, P.UntypedSpec):
                    continue
                for s in [sl for t, sls in self.cp.tag_slots.items()
                          if t == other.tag for sl in sls]:
                    ob = row.bind.get(s)
                    if ob is None:
                        continue
                    if ospec.type_equals == spec.type_tag and \
                            self.binding_type(ob) != ent.type_name:
                        return False
                    if spec.type_tag in ospec.type_not_equals and \
                            self.binding_type(ob) == ent.type_name:
                        return False
        return True

    def enter_entity(self, rows: list[Row], pe: PL.PlanEntity) -> list[Row]:
        out = []
        for row in rows:
            for cand in self.entity_candidates(row, pe):
                r = row.child()
                r.bind[pe.slot] = cand
                out.append(r)
        self._budget(len(out))
        return self.after_entity(out, pe)

    def enter_entity_bound(self, row: Row, pe: PL.PlanEntity,
                           binding) -> list[Row]:
        prior = row.bind.get(pe.slot)
        if prior is not None:
            if prior != binding:
                return []
            return self.after_entity([row], pe, revisit=True)
        if not self._candidate_ok(row, pe, binding):
            return []
        r = row.child()
        r.bind[pe.slot] = binding
        self._budget()
        return self.after_entity([r], pe)

    def after_entity(self, rows: list[Row], pe: PL.PlanEntity,
                     revisit: bool = False) -> list[Row]:
        if revisit:
            # combiner target reached from another branch: the shared
            # continuation was already evaluated once
            return rows
        rows = self.run_chain(rows, pe.chain, ("entity", pe))
        return self.extend_next(rows, pe.next)

    def extend_next(self, rows: list[Row], nxt) -> list[Row]:
        if nxt is None or not rows:
            return rows
        if isinstance(nxt, PL.PlanConn):
            return self.extend_conn(rows, nxt)
        return self.resolve_quant_rows(rows, nxt)

    # -- chains (inline part) -------------------------------------------------

    def run_chain(self, rows: list[Row], chain: list, host) -> list[Row]:
        for st in chain:
            if not rows:
                return rows
            if PL.stage_is_deferred(self.cp, st):
                continue
            if isinstance(st, P.GreenStage):
                rows = self.run_green(rows, st, host)
            elif isinstance(st, P.HQuantStage):
                kept = []
                for r in rows:
                    child = r.child()   # branch greens bind tags on the copy
                    if self.hquant_satisfied(child, st, host):
                        kept.append(child)
                rows = kept
        return rows

    def _host_props(self, row: Row, host) -> Callable[[str], Value]:
        kind = host[0]
        if kind == "entity" and host[1] is not None:
            binding = row.bind.get(host[1].slot)
            if binding is None:
                return lambda name: EMPTY
            return self.entity_props(binding)
        if kind == "conn":
            pc = host[1]
            if pc.conn.kind != "rel":
                return lambda name: EMPTY
            rid = row.bind.get(pc.slot)
            if rid is None:
                return lambda name: EMPTY
            props = self.g.relationships[rid].properties
            return lambda name: props.get(name, EMPTY)
        return lambda name: EMPTY

    def run_green(self, rows: list[Row], st: P.GreenStage, host) -> list[Row]:
        out = []
        gated = self._one_value_gated(st, host)
        for row in rows:
            props = self._host_props(row, host)
            ctx = self.ctx(row, props)
            if st.one_value:
                val = exprs.evaluate(st.expr, ctx)
                elements = []
                if val.kind in ("list", "set"):
                    elements = sorted(val.data, key=V.order_key)
                if gated:
                    # the count stage downstream admits zero survivors, so
                    # the base row stays alive alongside the expansions
                    out.append(row)
                elif not elements:
                    continue
                for elem in elements:
                    r = row.child()
                    r.tags[st.tag] = elem
                    if st.check is None or exprs.eval_check(
                            st.check, elem, self.ctx(r, props)):
                        out.append(r)
                continue
            # a one-value tag this green constrains may be unbound (gated)
            deps = exprs.referenced_tags(st.expr)
            if any(self._tag_is_gated_one_value(t) and t not in row.tags
                   for t in deps):
                out.append(row)
                continue
            val = exprs.evaluate(st.expr, ctx)
            r = row.child()
            r.tags[st.tag] = val
            if st.check is None or exprs.eval_check(st.check, val,
                                                    self.ctx(r, props)):
                out.append(r)
        self._budget(len(out))
        return out

    def _one_value_gated(self, st: P.GreenStage, host) -> bool:
        if not st.one_value:
            return False
        chain = self._chain_of_host(host)
        for other in P.iter_stages(chain):
            if isinstance(other, P.AggStage) and other.family == "values" \
                    and other.of == st.tag:
                from ..validator import _zero_admitting
                if _zero_admitting(other):
                    return True
        return False

    def _tag_is_gated_one_value(self, tag: int) -> bool:
        st = self.an.tag_stage.get(tag)
        if not isinstance(st, P.GreenStage) or not st.one_value:
            return False
        hosts = self.cp.stage_hosts.get(id(st), [])
        return any(self._one_value_gated(st, h) for h in hosts)

    def _chain_of_host(self, host) -> list:
        kind, obj = host
        if kind == "entity" and obj is not None:
            return obj.chain
        if kind == "conn":
            return obj.chain
        return []

    def hquant_satisfied(self, row: Row, st: P.HQuantStage, host) -> bool:
        count = 0
        for br in st.branches:
            if self._hbranch_satisfied(row, br, host):
                count += 1
        b = len(st.branches)
        n, n2 = st.n, st.n2
        q = st.quant
        if q == "some":
            return count >= 1
        if q == "gt":
            return count > n
        if q == "ge":
            return count >= n
        if q == "notall":
            return 1 <= count < b
        if q == "none":
            return count == 0
        if q == "eq":
            return count == n
        if q == "lt":
            return 1 <= count < n
        if q == "le":
            return 1 <= count <= n
        if q == "ne":
            return count >= 1 and count != n
        if q == "range":
            return n <= count <= n2
        if q == "outside":
            return 1 <= count < n or count > n2
        return False

    def _hbranch_satisfied(self, row: Row, chain: list, host) -> bool:
        # tags bound by branch greens stay bound regardless of satisfaction
        ok = True
        for st in chain:
            if isinstance(st, P.GreenStage):
                props = self._host_props(row, host)
                ctx = self.ctx(row, props)
                try:
                    val = exprs.evaluate(st.expr, ctx)
                except V.V1TypeError:
                    val = EMPTY
                row.tags[st.tag] = val
                if st.check is not None and not exprs.eval_check(
                        st.check, val, self.ctx(row, props)):
                    ok = False
            elif isinstance(st, P.HQuantStage):
                if not self.hquant_satisfied(row, st, host):
                    ok = False
        return ok

    # -- connections ----------------------------------------------------------

    def left_slot_of(self, pc: PL.PlanConn):
        left = self.an.ctx[id(pc.conn)].host_entity
        if left is None:
            return None
        slots = [s for s in self.cp.tag_slots.get(left.tag, [])
                 if self.cp.slot_node[s] is left]
        return slots[0] if slots else None

    def extend_conn(self, rows: list[Row], pc: PL.PlanConn) -> list[Row]:
        wrapper = pc.conn.wrapper
        out = []
        deferred_x = wrapper == P.WRAPPER_X and id(pc) in self._deferred_x
        zero_gated = id(pc.conn) in self.an.zero_gated
        for row in rows:
            if wrapper == P.WRAPPER_NONE:
                ext = self.positive(row, pc)
                if zero_gated and not ext:
                    # a zero-admitting count keeps the left side alive
                    out.append(row)
                else:
                    out.extend(ext)
            elif wrapper == P.WRAPPER_O:
                ext = self.positive(row, pc)
                out.extend(ext if ext else [row])
            elif wrapper == P.WRAPPER_X:
                if deferred_x:
                    out.append(row)
                elif not self.fragment_matches(row, pc):
                    out.append(row)
            elif wrapper == P.WRAPPER_NC:
                ext = self.no_connection(row, pc)
                if zero_gated and not ext:
                    out.append(row)
                else:
                    out.extend(ext)
        self._budget(len(out))
        return out

    def positive(self, row: Row, pc: PL.PlanConn) -> list[Row]:
        left_slot = self.left_slot_of(pc)
        left_binding = row.bind.get(left_slot) if left_slot is not None else None
        if left_binding is None:
            return []
        if pc.conn.kind == "rel":
            pairs = self.rel_candidates(left_binding, pc)
            out = []
            for rel_id, neighbor in pairs:
                r = row.child()
                r.bind[pc.slot] = rel_id
                rows2 = self.run_chain([r], pc.chain, ("conn", pc))
                for r2 in rows2:
                    out.extend(self.enter_via_target(r2, pc, neighbor))
            return out
        # path
        out = []
        for path_binding, terminal in self.find_paths(row, left_binding, pc):
            r = row.child()
            r.bind[pc.slot] = path_binding
            rows2 = self.run_chain([r], pc.chain, ("conn", pc))
            for r2 in rows2:
                out.extend(self.enter_via_target(r2, pc, terminal))
        return out

    def enter_via_target(self, row: Row, pc: PL.PlanConn, neighbor) -> list[Row]:
        pe = pc.target
        if isinstance(pe.node.spec, P.EnsembleSpec):
            members = self.ensemble_members(pe.node.spec.name)
            if neighbor not in members:
                return []
            return self.enter_entity_bound(row, pe,
                                           ENSEMBLE_PREFIX + pe.node.spec.name)
        return self.enter_entity_bound(row, pe, neighbor)

    def rel_candidates(self, left_binding, pc: PL.PlanConn) -> list:
        spec = pc.conn.rel
        direction = {"forward": "out", "backward": "in", "either": "any"}[
            spec.direction]
        if isinstance(left_binding, str) and \
                left_binding.startswith(ENSEMBLE_PREFIX):
            anchors = sorted(self.ensemble_members(
                left_binding[len(ENSEMBLE_PREFIX):]))
        else:
            anchors = [left_binding]
        pairs = []
        seen = set()
        for anchor in anchors:
            for rel, neighbor in adjacent(self.g, anchor, spec.type_name,
                                          direction):
                if rel.id not in seen:
                    seen.add(rel.id)
                    pairs.append((rel.id, neighbor))
        pairs.sort()
        return pairs

    def fragment_matches(self, row: Row, pc: PL.PlanConn) -> bool:
        rows = self.positive(row, pc)
        scope = pc.scope + (id(pc.conn),)
        stages = self.cp.pipeline.get(scope, [])
        if rows and stages and self.pipeline_runner is not None:
            rows = self.pipeline_runner.run_scope(rows, scope)
        return bool(rows)

    def no_connection(self, row: Row, pc: PL.PlanConn) -> list[Row]:
        left_slot = self.left_slot_of(pc)
        left_binding = row.bind.get(left_slot) if left_slot is not None else None
        if left_binding is None:
            return []
        # candidates matching the target that the left side does NOT reach
        connected = set()
        if pc.conn.kind == "rel":
            for rel_id, neighbor in self.rel_candidates(left_binding, pc):
                connected.add(neighbor)
        else:
            for _, terminal in self.find_paths(row, left_binding, pc):
                connected.add(terminal)
        pe = pc.target
        out = []
        for cand in self.entity_candidates(row, pe):
            actual = cand
            if isinstance(cand, str) and cand.startswith(ENSEMBLE_PREFIX):
                members = self.ensemble_members(cand[len(ENSEMBLE_PREFIX):])
                if members & connected:
                    continue
            elif cand in connected:
                continue
            r = row.child()
            # the connecting relationship stays unbound; its property tags
            # evaluate as Empty
            for st in pc.chain:
                if isinstance(st, P.GreenStage):
                    r.tags[st.tag] = EMPTY
            out.extend(self.enter_entity_bound(r, pe, actual))
        return out

    # -- quantifiers ------------------------------------------------------------

    def resolve_quant_rows(self, rows: list[Row], pq: PL.PlanQuant) -> list[Row]:
        out = []
        zero_gated = id(pq.q) in self.an.zero_gated
        optional = pq.q.wrapper == P.WRAPPER_O
        for row in rows:
            ext = self.resolve_quant(row, pq)
            if (zero_gated or optional) and not ext:
                out.append(row)
            else:
                out.extend(ext)
        return dedup_rows(out)

    def extend_branch(self, row: Row, br: PL.PlanBranch) -> list[Row]:
        host = ("entity", None)
        rows = [row]
        if br.chain:
            # greens on the left entity: host is the branch owner's entity
            left = self._branch_left(br)
            rows = self.run_chain(rows, br.chain, ("entity", left))
        nxt = br.next
        if nxt is None:
            return rows
        if isinstance(nxt, PL.PlanConn):
            return self.extend_conn(rows, nxt)
        if isinstance(nxt, PL.PlanQuant):
            return self.resolve_quant_rows(rows, nxt)
        if isinstance(nxt, PL.PlanEntity):
            return self.enter_entity(rows, nxt)
        return rows

    def _branch_left(self, br: PL.PlanBranch) -> Optional[PL.PlanEntity]:
        # the entity a branch's green chain constrains: walk to the plan
        # entity hosting the first stage
        for st in br.chain:
            hosts = self.cp.stage_hosts.get(id(st), [])
            for kind, obj in hosts:
                if kind == "entity" and obj is not None:
                    return obj
        return None

    def resolve_quant(self, row: Row, pq: PL.PlanQuant) -> list[Row]:
        branches = pq.branches
        b = len(branches)
        order = pq.order if len(pq.order) == b else list(range(b))
        memo: dict[frozenset, list[Row]] = {}

        def combos(S: frozenset) -> list[Row]:
            if S in memo:
                return memo[S]
            acc = [row]
            for pos in order:
                if pos not in S:
                    continue
                nxt: list[Row] = []
                for r in acc:
                    nxt.extend(self.extend_branch(r, branches[pos]))
                acc = nxt
                if not acc:
                    break
            memo[S] = acc
            return acc

        if pq.q.quant == "all":
            # branches may reference each other's tags (TR3 ordering);
            # no witness machinery is needed
            result = dedup_rows(combos(frozenset(range(b))))
        else:
            matched = [i for i in range(b) if combos(frozenset([i]))]
            max_size = 0
            for size in range(len(matched), 0, -1):
                if any(combos(frozenset(c))
                       for c in itertools.combinations(matched, size)):
                    max_size = size
                    break
            window = _allowed_sizes(pq.q, b, max_size)
            if window is None:
                result: list[Row] = []
            else:
                result = []
                if 0 in window:
                    result.append(row)
                for size in (s for s in window if s > 0):
                    for S in itertools.combinations(matched, size):
                        result.extend(combos(frozenset(S)))
                result = dedup_rows(result)
        for obr in pq.optional:
            nxt = []
            for r in result:
                ext = self.extend_branch(r, obr)
                nxt.extend(ext if ext else [r])
            result = nxt
        self._budget(len(result))
        return result

    # -- paths -------------------------------------------------------------------

    def find_paths(self, row: Row, src, pc: PL.PlanConn) -> list:
        spec = pc.conn.path
        if isinstance(src, str) and src.startswith(ENSEMBLE_PREFIX):
            anchors = sorted(self.ensemble_members(src[len(ENSEMBLE_PREFIX):]))
        else:
            anchors = [src]
        found: list[tuple] = []
        for anchor in anchors:
            key = (anchor, id(pc))
            if key not in self._path_cache:
                if spec.patterns is not None:
                    paths = self._pattern_paths(anchor, pc)
                elif spec.shortest:
                    paths = self._shortest_paths(anchor, pc)
                else:
                    paths = self._plain_paths(anchor, pc)
                self._path_cache[key] = sorted(paths)
            found.extend(self._path_cache[key])
        # identity and nonidentity constraints are row-specific
        out = [(bnd, t) for bnd, t in found
               if self._row_constraints_ok(row, pc.target, t)
               or isinstance(pc.target.node.spec, P.EnsembleSpec)]
        if spec.shortest:
            best: dict[str, int] = {}
            for binding, terminal in out:
                n = len(binding[1])
                if terminal not in best or n < best[terminal]:
                    best[terminal] = n
            out = [(bnd, t) for bnd, t in out if len(bnd[1]) == best[t]]
        out.sort()
        return out

    def _accepts_terminal(self, pc: PL.PlanConn, eid: str) -> bool:
        pe = pc.target
        if isinstance(pe.node.spec, P.EnsembleSpec):
            return eid in self.ensemble_members(pe.node.spec.name)
        return self._spec_ok(pe, eid)

    def _bfs_reach(self, src, pc: PL.PlanConn) -> dict:
        """Unconstrained-hop lower bounds on distance under the rel filter."""
        spec = pc.conn.path
        allowed = spec.rels.allowed if spec.rels and spec.rels.allowed else None
        upper = spec.length.upper_bound()
        dist = {src: 0}
        frontier = [src]
        d = 0
        while frontier and d < upper:
            d += 1
            nxt = []
            for eid in frontier:
                for rel, neighbor in adjacent(self.g, eid, None, "any"):
                    if allowed is not None and rel.type_name not in allowed:
                        continue
                    if neighbor not in dist:
                        dist[neighbor] = d
                        nxt.append(neighbor)
            frontier = nxt
        return dist

    def _shortest_paths(self, src, pc: PL.PlanConn) -> list:
        """Iterative deepening: per terminal keep only minimal-length paths."""
        spec = pc.conn.path
        upper = spec.length.upper_bound()
        reach = self._bfs_reach(src, pc)
        waiting = {eid for eid in reach
                   if reach[eid] >= 1 and self._accepts_terminal(pc, eid)}
        if src in reach and self._accepts_terminal(pc, src):
            waiting.add(src)     # a cycle may close back into the source
        best: dict[str, int] = {}
        out: list[tuple] = []
        for depth in range(1, upper + 1):
            if not waiting:
                break
            found = self._plain_paths(src, pc, upper_override=depth)
            for binding, terminal in found:
                if len(binding[1]) != depth:
                    continue
                if terminal in best and best[terminal] < depth:
                    continue
                best.setdefault(terminal, depth)
                waiting.discard(terminal)
                out.append((binding, terminal))
        return out

    def _plain_paths(self, src, pc: PL.PlanConn, upper_override=None) -> list:
        """All simple paths from src: interior entities pairwise distinct,
        terminals may coincide; type filters constrain interior entities and
        all relationships."""
        spec = pc.conn.path
        upper = upper_override if upper_override is not None \
            else spec.length.upper_bound()
        rel_filter = spec.rels
        ent_filter = spec.entities
        results: list[tuple] = []
        budget = [0]

        def counts_ok(interior: list, rels: list, final: bool) -> bool:
            if rel_filter and rel_filter.counts:
                for c in rel_filter.counts:
                    n = sum(1 for (rtype, d) in rels
                            if rtype == c.type_name
                            and (c.direction is None or d == c.direction))
                    if final and not c.admits(n):
                        return False
                    if not final and c.op in ("eq", "le", "lt") and \
                            n > c.n - (1 if c.op == "lt" else 0):
                        return False
            if ent_filter and ent_filter.counts:
                for c in ent_filter.counts:
                    n = sum(1 for e in interior
                            if self.g.entities[e].type_name == c.type_name)
                    if final and not c.admits(n):
                        return False
                    if not final and c.op in ("eq", "le", "lt") and \
                            n > c.n - (1 if c.op == "lt" else 0):
                        return False
            return True

        def dfs(current, ents, rel_ids, rel_meta):
            if len(rel_ids) >= upper:
                return
            for rel, neighbor in adjacent(self.g, current, None, "any"):
                if rel_filter and rel_filter.allowed is not None and \
                        rel.type_name not in rel_filter.allowed:
                    continue
                if rel.id in rel_ids:
                    continue
                if neighbor in ents[1:]:
                    continue   # interior entities stay distinct
                budget[0] += 1
                if budget[0] > self.caps.max_paths:
                    raise ResourceLimit("path budget exceeded")
                meta = rel_meta + [(rel.type_name,
                                    "forward" if rel.source_id == current
                                    else "backward")]
                closing = neighbor == ents[0]
                # terminate at this neighbor
                admits = spec.length.admits(len(rel_ids) + 1) if \
                    upper_override is None else len(rel_ids) + 1 <= upper
                if admits and counts_ok(ents[1:], meta, final=True) and \
                        self._accepts_terminal(pc, neighbor):
                    results.append(((tuple(ents + [neighbor]),
                                     tuple(rel_ids + [rel.id])), neighbor))
                if closing:
                    continue   # may not pass through the source again
                nt = self.g.entities[neighbor].type_name
                if nt == NULL_TYPE:
                    continue
                if ent_filter and ent_filter.allowed is not None and \
                        nt not in ent_filter.allowed:
                    continue
                if not counts_ok(ents[1:] + [neighbor], meta, final=False):
                    continue
                dfs(neighbor, ents + [neighbor], rel_ids + [rel.id], meta)

        if src in self.g.entities:
            dfs(src, [src], [], [])
        return results

    def _pattern_paths(self, src, pc: PL.PlanConn) -> list:
        from .pathpattern import pattern_paths
        return pattern_paths(self, Row({}, {}), src, pc)


def _allowed_sizes(q: P.Quantifier, b: int, max_size: int):
    kind, n, n2 = q.quant, q.n, q.n2
    if kind == "all":
        return [b] if max_size == b else None
    if kind == "some":
        return list(range(1, max_size + 1)) if max_size >= 1 else None
    if kind == "gt":
        return list(range(n + 1, max_size + 1)) if max_size > n else None
    if kind == "ge":
        return list(range(n, max_size + 1)) if max_size >= n else None
    if kind == "notall":
        if 1 <= max_size < b:
            return list(range(1, max_size + 1))
        return None
    if kind == "none":
        return [0] if max_size == 0 else None
    if kind == "eq":
        return [n] if max_size == n else None
    if kind == "lt":
        return list(range(1, max_size + 1)) if 1 <= max_size < n else None
    if kind == "le":
        return list(range(1, max_size + 1)) if 1 <= max_size <= n else None
    if kind == "ne":
        if max_size == n or max_size == 0:
            return None
        if max_size < n:
            return list(range(1, max_size + 1))
        return list(range(n + 1, max_size + 1))
    if kind == "range":
        if n <= max_size <= n2:
            return list(range(n, max_size + 1))
        return None
    if kind == "outside":
        if 1 <= max_size < n:
            return list(range(1, max_size + 1))
        if max_size > n2:
            return list(range(n2 + 1, max_size + 1))
        return None
    return None
