"""Compilation of a validated pattern into an executable plan.

The plan normalizes the two quantifier attachment styles into one shape
(every connection ends at exactly one entity; a relationship followed by a
quantifier is instantiated once per branch), expands combiner references
into shared target plans, assigns binding slots, and groups pipeline
stages (aggregators, splits, deferred constraints) by negation scope.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .. import exprs
from ..pattern import ast as P
from ..validator import Analysis, StageCtx


@dataclass
class PlanEntity:
    node: P.EntityNode
    slot: int
    chain: list
    next: object = None            # PlanConn | PlanQuant | None
    admissible: frozenset = frozenset()


@dataclass
class PlanConn:
    conn: P.Connection
    slot: int
    chain: list
    target: PlanEntity = None
    scope: tuple = ()


@dataclass
class PlanBranch:
    chain: list
    next: object = None            # PlanConn | PlanQuant | None

    def head_conn(self) -> Optional[PlanConn]:
        return self.next if isinstance(self.next, PlanConn) else None


@dataclass
class PlanQuant:
    q: P.Quantifier
    chain: list
    branches: list = field(default_factory=list)     # non-optional branches
    optional: list = field(default_factory=list)     # O-wrapped branches
    order: list = field(default_factory=list)        # evaluation order


@dataclass
class PipelineStage:
    """One deferred evaluation step over the global row set."""

    kind: str          # agg | split | green | hquant | xcheck
    stage: object = None
    hosts: list = field(default_factory=list)
    plan_conn: PlanConn = None     # for xcheck
    scope: tuple = ()
    order: int = 0


@dataclass
class Compiled:
    analysis: Analysis
    root: object = None            # PlanEntity | PlanQuant
    start_chain: list = field(default_factory=list)
    slot_count: int = 0
    slot_kind: dict = field(default_factory=dict)     # slot -> entity|rel|path
    slot_node: dict = field(default_factory=dict)     # entity slot -> node
    tag_slots: dict = field(default_factory=dict)     # letter -> [slots]
    latent_slots: set = field(default_factory=set)
    stage_hosts: dict = field(default_factory=dict)   # id(stage) -> [host]
    pipeline: dict = field(default_factory=dict)      # scope -> [PipelineStage]
    deferred_tags: set = field(default_factory=set)   # tags bound in pipeline
    type_tag_slot: dict = field(default_factory=dict) # ett -> entity slot
    tag_support: dict = field(default_factory=dict)   # value tag -> slots
    conn_plans: dict = field(default_factory=dict)    # id(conn) -> [PlanConn]
    value_tag_host: dict = field(default_factory=dict)  # tag -> plan elem

    def new_slot(self, kind: str) -> int:
        s = self.slot_count
        self.slot_count += 1
        self.slot_kind[s] = kind
        return s


def compile_pattern(an: Analysis) -> Compiled:
    cp = Compiled(an)
    entity_plans: dict[int, PlanEntity] = {}
    combiner_plans: dict[str, PlanEntity] = {}

    def register_stage(stage, host, scope):
        # split bodies and hquant branches share their outer stage's host
        for st in P.iter_stages([stage]):
            cp.stage_hosts.setdefault(id(st), []).append(host)
            tag = getattr(st, "tag", None)
            if tag is not None and isinstance(st, P.AggStage):
                cp.deferred_tags.add(tag)

    def build_chain(chain, host, scope):
        for st in chain:
            register_stage(st, host, scope)
        return list(chain)

    def build_entity(node: P.EntityNode, scope) -> PlanEntity:
        if id(node) in entity_plans:          # combiner target reached again
            return entity_plans[id(node)]
        slot = cp.new_slot("entity")
        pe = PlanEntity(node, slot, [],
                        admissible=an.admissible.get(id(node), frozenset()))
        entity_plans[id(node)] = pe
        cp.slot_node[slot] = node
        cp.tag_slots.setdefault(node.tag, []).append(slot)
        if id(node) in an.latent:
            cp.latent_slots.add(slot)
        spec = node.spec
        if isinstance(spec, P.UntypedSpec) and spec.type_tag is not None:
            cp.type_tag_slot[spec.type_tag] = slot
        pe.chain = build_chain(node.tail.chain, ("entity", pe), scope)
        pe.next = build_next(node.tail.next, pe, scope)
        return pe

    def build_next(nxt, left: Optional[PlanEntity], scope):
        if nxt is None:
            return None
        if isinstance(nxt, P.Connection):
            return build_conn(nxt, left, scope)
        return build_quant(nxt, left, scope, placement="entity")

    def make_conn(conn: P.Connection, target_node, scope) -> PlanConn:
        inner_scope = scope + ((id(conn),) if conn.wrapper == P.WRAPPER_X
                               else ())
        slot = cp.new_slot("rel" if conn.kind == "rel" else "path")
        pc = PlanConn(conn, slot, [], scope=scope)
        cp.conn_plans.setdefault(id(conn), []).append(pc)
        pc.chain = build_chain(conn.chain, ("conn", pc), inner_scope)
        pc.target = build_entity(target_node, inner_scope)
        return pc

    def expand_rel_quant(conn: P.Connection, q: P.Quantifier, scope) -> PlanQuant:
        # a relationship (or path) feeding a quantifier binds once per branch
        inner_scope = scope + ((id(conn),) if conn.wrapper == P.WRAPPER_X
                               else ())
        pq = PlanQuant(q, build_chain(q.chain, ("quant", q), inner_scope))
        for br in q.branches:
            if isinstance(br, P.EntityNode):
                pq.branches.append(PlanBranch([], make_conn(conn, br, scope)))
            else:
                pq.branches.append(
                    PlanBranch([], expand_rel_quant(conn, br, scope)))
        pq.order = _branch_order(an, pq)
        return pq

    def build_conn(conn: P.Connection, left, scope) -> Union[PlanConn, PlanQuant]:
        tgt = conn.target
        if isinstance(tgt, P.Quantifier):
            return expand_rel_quant(conn, tgt, scope)
        if isinstance(tgt, P.CombinerRef):
            node = an.pattern.combiners[tgt.combiner_id]
        else:
            node = tgt
        return make_conn(conn, node, scope)

    def build_quant(q: P.Quantifier, left, scope, placement) -> PlanQuant:
        pq = PlanQuant(q, build_chain(q.chain, ("quant", q), scope))
        for br in q.branches:
            if isinstance(br, P.Tail):
                branch = PlanBranch(
                    build_chain(br.chain, ("entity", left), scope),
                    build_next(br.next, left, scope))
                opt = _tail_optional(br)
            else:
                sub = build_entity(br, scope) if isinstance(br, P.EntityNode) \
                    else build_quant(br, left, scope, placement)
                branch = PlanBranch([], sub)
                opt = False
            if opt:
                pq.optional.append(branch)
            else:
                pq.branches.append(branch)
        pq.order = _branch_order(an, pq)
        return pq

    cp.start_chain = build_chain(an.pattern.chain, ("start",), ())
    if isinstance(an.pattern.start, P.EntityNode):
        cp.root = build_entity(an.pattern.start, ())
    else:
        cp.root = build_quant(an.pattern.start, None, (), "start")

    _compute_deferred(cp)
    _build_pipeline(cp)
    _compute_tag_support(cp)
    return cp


def _branch_optional(br) -> bool:
    if isinstance(br, P.Tail):
        return _tail_optional(br)
    return False


def _tail_optional(br: P.Tail) -> bool:
    nxt = br.next
    return isinstance(nxt, (P.Connection, P.Quantifier)) and \
        nxt.wrapper == P.WRAPPER_O


def _branch_order(an: Analysis, pq: PlanQuant) -> list:
    """Evaluation order over plan branches honoring cross-branch tag refs."""
    q = pq.q
    # AST branch index carried by each non-optional plan branch
    ast_positions = [i for i, br in enumerate(q.branches)
                     if not (isinstance(br, P.Tail) and _tail_optional(br))]
    tag_branch: dict[int, int] = {}
    for tag, st in an.tag_stage.items():
        for frame in an.ctx[id(st)].frames:
            if frame[0] in ("branch", "none") and frame[1] is q:
                tag_branch[tag] = frame[2]
    deps: dict[int, set[int]] = {i: set() for i in range(len(q.branches))}
    for st in an.stages:
        st_branch = None
        for frame in an.ctx[id(st)].frames:
            if frame[0] in ("branch", "none") and frame[1] is q:
                st_branch = frame[2]
        if st_branch is None:
            continue
        for tag in an.stage_deps[id(st)]:
            other = tag_branch.get(tag)
            if other is not None and other != st_branch:
                deps[st_branch].add(other)
    order: list[int] = []
    done: set[int] = set()
    remaining = list(range(len(ast_positions)))
    for _ in range(len(remaining) + 1):
        progressed = False
        for pos in list(remaining):
            ast_i = ast_positions[pos]
            if not (deps[ast_i] - done):
                order.append(pos)
                done.add(ast_i)
                remaining.remove(pos)
                progressed = True
        if not progressed:
            break
    order.extend(remaining)
    return order


def _compute_deferred(cp: Compiled):
    """Tags produced only by the pipeline, transitively through greens."""
    an = cp.analysis
    changed = True
    while changed:
        changed = False
        for tag, st in an.tag_stage.items():
            if tag in cp.deferred_tags:
                continue
            if an.stage_deps[id(st)] & cp.deferred_tags:
                cp.deferred_tags.add(tag)
                changed = True


def stage_is_deferred(cp: Compiled, st) -> bool:
    if isinstance(st, (P.AggStage, P.SplitStage)):
        return True
    deps = cp.analysis.stage_deps[id(st)]
    if isinstance(st, P.GreenStage):
        return bool(deps & cp.deferred_tags) or st.tag in cp.deferred_tags
    if isinstance(st, P.HQuantStage):
        return bool(deps & cp.deferred_tags)
    return False


def _build_pipeline(cp: Compiled):
    an = cp.analysis
    entries: list[PipelineStage] = []
    seen: set[int] = set()
    for st in an.stages:
        ctx: StageCtx = an.ctx[id(st)]
        if ctx.splits or ctx.in_hquant:
            continue  # executed within their enclosing split / hquant stage
        if not stage_is_deferred(cp, st):
            continue
        if id(st) in seen:
            continue
        seen.add(id(st))
        hosts = cp.stage_hosts.get(id(st), [])
        scope = _stage_scope(cp, st, hosts)
        kind = ("green" if isinstance(st, P.GreenStage) else
                "hquant" if isinstance(st, P.HQuantStage) else
                "split" if isinstance(st, P.SplitStage) else "agg")
        entries.append(PipelineStage(kind, st, hosts, scope=scope,
                                     order=ctx.order))
    # X connections whose subtree references pipeline tags are re-checked
    # after those tags are bound
    for conn, plans in [(c, cp.conn_plans.get(id(c), []))
                        for c in an.connections]:
        if conn.wrapper != P.WRAPPER_X:
            continue
        if not _x_needs_deferral(cp, conn):
            continue
        for pc in plans:
            entries.append(PipelineStage(
                "xcheck", None, [], plan_conn=pc, scope=pc.scope,
                order=an.ctx[id(conn)].order))
    # dependency-ordered: a stage waits for the tags it references
    ordered = _topo_stages(cp, entries)
    for ps in ordered:
        cp.pipeline.setdefault(ps.scope, []).append(ps)


def _x_needs_deferral(cp: Compiled, conn) -> bool:
    an = cp.analysis
    inner_scope_tags: set[int] = set()
    for st in an.stages:
        for frame in an.ctx[id(st)].frames:
            if frame == ("x", conn):
                tag = getattr(st, "tag", None)
                if tag is not None:
                    inner_scope_tags.add(tag)
    for st in an.stages:
        frames = an.ctx[id(st)].frames
        if ("x", conn) in frames:
            deps = an.stage_deps[id(st)]
            if (deps - inner_scope_tags) & cp.deferred_tags:
                return True
    return False


def _topo_stages(cp: Compiled, entries: list) -> list:
    an = cp.analysis
    produced: set[int] = set()
    for ps in entries:
        if ps.stage is not None:
            for st in P.iter_stages([ps.stage]):
                tag = getattr(st, "tag", None)
                if tag is not None:
                    produced.add(tag)

    def needs(ps) -> set[int]:
        if ps.kind == "xcheck":
            conn = ps.plan_conn.conn
            out: set[int] = set()
            for st in an.stages:
                if ("x", conn) in an.ctx[id(st)].frames:
                    out |= an.stage_deps[id(st)]
            return out & produced
        out = set()
        for st in P.iter_stages([ps.stage]):
            out |= an.stage_deps[id(st)]
            tag = getattr(st, "tag", None)
            if tag is not None:
                out.discard(tag)
        inner = {getattr(s, "tag", None) for s in P.iter_stages([ps.stage])}
        return (out - inner) & produced

    ready: list = []
    pending = sorted(entries, key=lambda ps: ps.order)
    bound: set[int] = set()
    out: list = []
    for _ in range(len(pending) + 1):
        progressed = False
        for ps in list(pending):
            if needs(ps) <= bound:
                out.append(ps)
                pending.remove(ps)
                if ps.stage is not None:
                    for st in P.iter_stages([ps.stage]):
                        tag = getattr(st, "tag", None)
                        if tag is not None:
                            bound.add(tag)
                progressed = True
        if not progressed:
            break
    out.extend(pending)   # cycles were reported by the validator already
    return out


def _stage_scope(cp: Compiled, st, hosts) -> tuple:
    an = cp.analysis
    frames = an.ctx[id(st)].frames
    return tuple(id(f[1]) for f in frames if f[0] == "x")


def _compute_tag_support(cp: Compiled):
    """Slots whose binding determines each value tag (for dedup keys)."""
    an = cp.analysis
    for tag, st in an.tag_stage.items():
        slots: set[int] = set()
        hosts = cp.stage_hosts.get(id(st), [])
        for host in hosts:
            if host[0] == "conn":
                slots.add(host[1].slot)
            elif host[0] == "entity" and host[1] is not None:
                slots.add(host[1].slot)
        for dep in an.stage_deps[id(st)]:
            if dep in cp.tag_support:
                slots |= cp.tag_support[dep]
        if isinstance(st, P.GreenStage):
            for ett in exprs.referenced_type_tags(st.expr):
                if ett in cp.type_tag_slot:
                    slots.add(cp.type_tag_slot[ett])
        if isinstance(st, P.AggStage):
            res = an.resolved.get(id(st), {})
            for el in res.get("per") or []:
                for t in (el[1] if isinstance(el, tuple) else [el]):
                    slots |= set(cp.tag_slots.get(t, []))
        cp.tag_support[tag] = slots
