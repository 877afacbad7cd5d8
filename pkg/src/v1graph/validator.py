"""Static semantic validation of a pattern against a schema.

``validate`` returns diagnostics (empty means evaluable). ``analyze``
additionally exposes what the evaluator consumes: admissible entity types,
value-tag types, resolved per/select specs, latency and zero-count gating.

Diagnostic codes: TR1-TR6 (tag rules), AR1-AR4 (aggregation rules),
X_BEFORE_AGG, TYPE_NULLIFIED, plus engine codes documented in the README
(REL_ENDPOINT, CONCRETE_CONSTRAINT, EXPR_TYPE, NULL_PLACEMENT, ...).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from . import exprs
from . import values as V
from .pattern import ast as P
from .schema import NULL_TYPE, Schema


@dataclass
class Diagnostic:
    code: str
    severity: str       # error | warning
    node_ref: str
    message: str
    order: int = 0

    def text(self) -> str:
        return f"{self.code} [{self.severity}] at {self.node_ref}: {self.message}"


# a context frame is ("branch", quant, idx, kind) | ("x", conn) |
# ("none", quant, idx) | ("opt",) | ("nc", conn)
Frame = tuple


@dataclass
class ElemCtx:
    order: int
    frames: tuple
    host_entity: Optional[P.EntityNode]


@dataclass
class StageCtx(ElemCtx):
    host: object = None            # EntityNode | Connection | Quantifier | "start"
    chain_owner: object = None     # same, the element whose chain holds the stage
    splits: tuple = ()
    in_hquant: bool = False
    chain_before: tuple = ()       # earlier stages in the same chain


@dataclass
class Analysis:
    pattern: P.Pattern
    schema: Schema
    diagnostics: list = field(default_factory=list)
    entity_nodes: list = field(default_factory=list)
    connections: list = field(default_factory=list)
    quantifiers: list = field(default_factory=list)
    stages: list = field(default_factory=list)
    ctx: dict = field(default_factory=dict)            # id(obj) -> ElemCtx/StageCtx
    admissible: dict = field(default_factory=dict)     # id(node) -> frozenset[str]
    tag_stage: dict = field(default_factory=dict)      # value tag -> stage
    tag_types: dict = field(default_factory=dict)      # value tag -> type desc
    type_tags: dict = field(default_factory=dict)      # ett -> EntityNode
    entity_tags: dict = field(default_factory=dict)    # letter -> [EntityNode]
    latent: set = field(default_factory=set)           # id(node) latent nodes
    latent_tags: set = field(default_factory=set)      # latent tag letters
    zero_gated: set = field(default_factory=set)       # id(conn/quant) opt-joined
    resolved: dict = field(default_factory=dict)       # id(stage) -> resolved spec
    combiner_incoming: dict = field(default_factory=dict)  # cid -> [Connection]
    stage_deps: dict = field(default_factory=dict)     # id(stage) -> set[tag]

    def error(self, code, obj, message):
        ref = getattr(obj, "ref", "") or "pattern"
        order = self.ctx[id(obj)].order if id(obj) in self.ctx else 0
        self.diagnostics.append(Diagnostic(code, "error", ref, message, order))

    def node_of_tag(self, letter: str) -> Optional[P.EntityNode]:
        nodes = self.entity_tags.get(letter)
        return nodes[0] if nodes else None


def validate(pattern: P.Pattern, schema: Schema) -> list[Diagnostic]:
    """All diagnostics, deterministically ordered; empty iff evaluable."""
    return analyze(pattern, schema).diagnostics


def analyze(pattern: P.Pattern, schema: Schema) -> Analysis:
    an = Analysis(pattern, schema)
    _walk(an)
    _check_identity_groups(an)
    _infer_types(an)
    _resolve_stage_tags(an)
    _compute_latency(an)
    _check_structure(an)
    _check_tag_rules(an)
    _check_agg_rules(an)
    _type_check_expressions(an)
    an.diagnostics.sort(key=lambda d: (d.order, d.code, d.node_ref))
    seen = set()
    unique = []
    for d in an.diagnostics:
        key = (d.code, d.node_ref, d.message)
        if key not in seen:
            seen.add(key)
            unique.append(d)
    an.diagnostics = unique
    return an


# ---------------------------------------------------------------------------
# Context walk


def _walk(an: Analysis):
    counter = [0]

    def nxt() -> int:
        counter[0] += 1
        return counter[0]

    def walk_stage(st, frames, host_entity, host, owner, splits, in_hq, before):
        an.ctx[id(st)] = StageCtx(nxt(), frames, host_entity, host, owner,
                                  splits, in_hq, tuple(before))
        an.stages.append(st)
        if isinstance(st, P.SplitStage):
            inner_before = []
            for s in st.body:
                walk_stage(s, frames, host_entity, host, owner,
                           splits + (st,), in_hq, inner_before)
                inner_before.append(s)
        elif isinstance(st, P.HQuantStage):
            for br in st.branches:
                inner_before = []
                for s in br:
                    walk_stage(s, frames, host_entity, host, owner, splits,
                               True, inner_before)
                    inner_before.append(s)

    def walk_chain(chain, frames, host_entity, host, owner):
        before = []
        for st in chain:
            walk_stage(st, frames, host_entity, host, owner, (), False, before)
            before.append(st)

    def walk_entity(node: P.EntityNode, frames, via_combiner=False):
        an.ctx[id(node)] = ElemCtx(nxt(), frames, node)
        an.entity_nodes.append(node)
        an.entity_tags.setdefault(node.tag, []).append(node)
        spec = node.spec
        if isinstance(spec, P.UntypedSpec) and spec.type_tag is not None:
            if spec.type_tag in an.type_tags:
                an.error("TR1", node,
                         f"type tag <{spec.type_tag}> defined twice")
            else:
                an.type_tags[spec.type_tag] = node
        walk_tail(node.tail, frames, node, node)

    def walk_tail(tail: P.Tail, frames, host_entity, chain_owner):
        walk_chain(tail.chain, frames, host_entity, host_entity, chain_owner)
        if isinstance(tail.next, P.Connection):
            walk_conn(tail.next, frames, host_entity)
        elif isinstance(tail.next, P.Quantifier):
            walk_quant(tail.next, frames, host_entity, placement="entity")

    def walk_conn(conn: P.Connection, frames, host_entity):
        an.ctx[id(conn)] = ElemCtx(nxt(), frames, host_entity)
        an.connections.append(conn)
        inner = frames
        if conn.wrapper == P.WRAPPER_X:
            inner = frames + (("x", conn),)
        elif conn.wrapper == P.WRAPPER_O:
            inner = frames + (("opt", conn),)
        elif conn.wrapper == P.WRAPPER_NC:
            inner = frames + (("nc", conn),)
        walk_chain(conn.chain, inner, host_entity, conn, conn)
        tgt = conn.target
        if isinstance(tgt, P.CombinerRef):
            an.combiner_incoming.setdefault(tgt.combiner_id, []).append(conn)
        elif isinstance(tgt, P.EntityNode):
            walk_entity(tgt, inner)
        elif isinstance(tgt, P.Quantifier):
            walk_quant(tgt, inner, host_entity, placement="relationship",
                       via_conn=conn)

    def walk_quant(q: P.Quantifier, frames, host_entity, placement,
                   via_conn=None):
        an.ctx[id(q)] = ElemCtx(nxt(), frames, host_entity)
        an.quantifiers.append(q)
        inner = frames
        if q.wrapper == P.WRAPPER_O:
            inner = frames + (("opt", q),)
        walk_chain(q.chain, inner, host_entity, q, q)
        for i, br in enumerate(q.branches):
            bframes = inner + ((("none", q, i),) if q.quant == "none"
                               else (("branch", q, i, q.quant),))
            if isinstance(br, P.Tail):
                walk_tail(br, bframes, host_entity, ("branch", q, i))
            else:
                if placement == "relationship" and via_conn is not None:
                    # the shared relationship is instantiated per branch
                    pass
                if isinstance(br, P.EntityNode):
                    walk_entity(br, bframes)
                else:
                    walk_quant(br, bframes, host_entity, placement)

    walk_chain(an.pattern.chain, (), None, "start", "start")
    if isinstance(an.pattern.start, P.EntityNode):
        walk_entity(an.pattern.start, ())
    else:
        walk_quant(an.pattern.start, (), None, placement="start")

    # combiner targets: context is the common frame prefix of all incoming
    # branches; a quantifier frame is dropped when the combiner joins all of
    # that quantifier's branches (the TR6 exemption).
    for cid, node in an.pattern.combiners.items():
        incoming = an.combiner_incoming.get(cid, [])
        frames_list = [an.ctx[id(c)].frames for c in incoming if id(c) in an.ctx]
        common: tuple = ()
        if frames_list:
            prefix = frames_list[0]
            for fr in frames_list[1:]:
                k = 0
                while k < len(prefix) and k < len(fr) and prefix[k] == fr[k]:
                    k += 1
                prefix = prefix[:k]
            common = prefix
            # drop a fully-joined quantifier frame right below the prefix
            deeper = {fr[len(common)] for fr in frames_list
                      if len(fr) > len(common)}
            quants = {f[1] for f in deeper if f[0] in ("branch", "none")}
            if len(quants) == 1:
                q = quants.pop()
                joined = {f[2] for f in deeper if f[0] in ("branch", "none")}
                if len(joined) != len(q.branches):
                    common = common + (("branch", q, -1, q.quant),)
        host = incoming[0] if incoming else None
        walk_entity(node, common)


# ---------------------------------------------------------------------------
# Identity groups


def _spec_kind(spec) -> str:
    return {P.ConcreteSpec: "concrete", P.TypedSpec: "typed",
            P.UntypedSpec: "untyped", P.EnsembleSpec: "ensemble"}[type(spec)]


def _check_identity_groups(an: Analysis):
    for tag, nodes in an.entity_tags.items():
        if len(nodes) < 2:
            continue
        kinds = {_spec_kind(n.spec) for n in nodes}
        first = nodes[0].spec
        ok = True
        if kinds == {"concrete"}:
            ok = all(n.spec.entity_id == first.entity_id for n in nodes)
        elif kinds == {"typed"}:
            ok = all(n.spec.type_name == first.type_name for n in nodes)
        elif kinds == {"ensemble"}:
            ok = all(n.spec.name == first.name for n in nodes)
        elif kinds == {"untyped"}:
            ok = True
        else:
            ok = False
        if not ok:
            an.error("IDENTITY_SPEC", nodes[1],
                     f"entity tag {tag!r} is shared by incompatible nodes")
    for node in an.entity_nodes:
        for other in node.not_equal:
            if other not in an.entity_tags:
                an.error("TAG_UNKNOWN", node,
                         f"nonidentity references unknown tag {other!r}")
            if other == node.tag:
                an.error("IDENTITY_SPEC", node,
                         f"node is marked nonidentical to its own tag {other!r}")


# ---------------------------------------------------------------------------
# Type inference


def _initial_admissible(an: Analysis, node: P.EntityNode) -> set:
    schema = an.schema
    spec = node.spec
    all_types = set(schema.entity_types)
    if isinstance(spec, P.ConcreteSpec):
        if not schema.is_entity_type(spec.type_name) or spec.type_name == NULL_TYPE:
            an.error("REL_ENDPOINT", node,
                     f"concrete entity of unknown type {spec.type_name!r}")
            return set()
        return {spec.type_name}
    if isinstance(spec, P.TypedSpec):
        if spec.type_name == NULL_TYPE:
            return {NULL_TYPE}
        if spec.type_name in schema.entity_types:
            return {spec.type_name}
        if spec.type_name in schema.logical_entity_types:
            cases = schema.logical_case_types(spec.type_name)
            return set(cases) & all_types
        an.error("REL_ENDPOINT", node,
                 f"unknown entity type {spec.type_name!r}")
        return set()
    if isinstance(spec, P.EnsembleSpec):
        en = schema.ensembles.get(spec.name)
        if en is None:
            an.error("REL_ENDPOINT", node, f"unknown ensemble {spec.name!r}")
            return set()
        named = {m.type_name for m in en.members if m.type_name}
        open_members = any(m.type_name is None for m in en.members)
        return set(all_types) if open_members or not named else named
    # untyped
    out = set(all_types)
    if spec.allowed is not None:
        bad = [t for t in spec.allowed
               if t != NULL_TYPE and t not in schema.entity_types]
        for t in bad:
            an.error("REL_ENDPOINT", node, f"unknown entity type {t!r}")
        out = {t for t in spec.allowed if t in schema.entity_types}
        if NULL_TYPE in spec.allowed or spec.allow_null:
            out.add(NULL_TYPE)
    else:
        out.add(NULL_TYPE)
        if spec.disallowed is not None:
            bad = [t for t in spec.disallowed
                   if t != NULL_TYPE and t not in schema.entity_types]
            for t in bad:
                an.error("REL_ENDPOINT", node, f"unknown entity type {t!r}")
            out -= set(spec.disallowed)
        if spec.allow_null is False:
            out.discard(NULL_TYPE)
    return out


def _endpoint_sources(an: Analysis, rel, target_types, direction) -> set:
    """Types admissible on the near side given far-side candidates."""
    out = set()
    for (src, dst) in rel.endpoint_pairs:
        fwd_ok = direction in ("forward", "either") or not rel.directional
        back_ok = direction in ("backward", "either") or not rel.directional
        if fwd_ok and dst in target_types:
            out.add(src)
        if back_ok and src in target_types:
            out.add(dst)
    return out


def _first_entities(target) -> list:
    """Entity nodes that can directly bind a connection's far side."""
    if isinstance(target, P.EntityNode):
        return [target]
    if isinstance(target, P.Quantifier):
        out = []
        for br in target.branches:
            out.extend(_first_entities(br))
        return out
    return []


def _conn_endpoints(an: Analysis, conn: P.Connection):
    """(left entity node, [right entity nodes]) of a connection."""
    left = an.ctx[id(conn)].host_entity
    tgt = conn.target
    if isinstance(tgt, P.CombinerRef):
        rights = [an.pattern.combiners[tgt.combiner_id]]
    else:
        rights = _first_entities(tgt)
    return left, rights


def _rel_supports_null(an, conn: P.Connection, side: str) -> bool:
    if conn.kind == "path":
        return False  # paths may end at null only via an explicit rel; not modeled
    rel = an.schema.relationship_types.get(conn.rel.type_name)
    if rel is None:
        return False
    idx = 0 if side == "left" else 1
    for pair in rel.endpoint_pairs:
        if conn.rel.direction == "backward":
            pair = (pair[1], pair[0])
        if pair[idx] == NULL_TYPE:
            return True
        if not rel.directional and pair[1 - idx] == NULL_TYPE:
            return True
    return False


def _infer_types(an: Analysis):
    schema = an.schema
    adm: dict[int, set] = {}
    for node in an.entity_nodes:
        adm[id(node)] = _initial_admissible(an, node)

    # untyped nodes referencing a type tag share its admissible set
    eq_pairs = []
    for node in an.entity_nodes:
        spec = node.spec
        if isinstance(spec, P.UntypedSpec) and spec.type_equals is not None:
            ref = an.type_tags.get(spec.type_equals)
            if ref is None:
                an.error("TAG_UNKNOWN", node,
                         f"typeEquals references unknown type tag "
                         f"<{spec.type_equals}>")
            else:
                eq_pairs.append((node, ref))
        if isinstance(spec, P.UntypedSpec):
            for t in spec.type_not_equals:
                if t not in an.type_tags:
                    an.error("TAG_UNKNOWN", node,
                             f"typeNotEquals references unknown type tag <{t}>")

    changed = True
    iterations = 0
    while changed and iterations < 50:
        changed = False
        iterations += 1
        for conn in an.connections:
            if conn.kind != "rel":
                continue
            rel = schema.relationship_types.get(conn.rel.type_name)
            if rel is None:
                continue
            left, rights = _conn_endpoints(an, conn)
            if left is None:
                continue
            l_old = adm[id(left)]
            if not l_old:
                continue
            quant_target = isinstance(conn.target, P.Quantifier)
            per_branch_left = []
            for r in rights:
                r_old = adm[id(r)]
                if not r_old:
                    continue
                new_r = r_old & _endpoint_sources(
                    an, rel, l_old - {NULL_TYPE} or l_old,
                    _flip(conn.rel.direction))
                if NULL_TYPE in r_old and _rel_supports_null(an, conn, "right"):
                    new_r.add(NULL_TYPE)
                if new_r != r_old:
                    adm[id(r)] = new_r
                    changed = True
                if adm[id(r)]:
                    per_branch_left.append(_endpoint_sources(
                        an, rel, adm[id(r)] - {NULL_TYPE} or adm[id(r)],
                        conn.rel.direction))
            if per_branch_left:
                if quant_target and conn.target.quant != "all":
                    feed = set().union(*per_branch_left)
                else:
                    feed = per_branch_left[0]
                    for s in per_branch_left[1:]:
                        feed &= s
                new_l = l_old & feed
                if NULL_TYPE in l_old and _rel_supports_null(an, conn, "left"):
                    new_l.add(NULL_TYPE)
                if new_l != l_old:
                    adm[id(left)] = new_l
                    changed = True
        for tag, nodes in an.entity_tags.items():
            if len(nodes) > 1:
                inter = set.intersection(*[adm[id(n)] for n in nodes])
                for n in nodes:
                    if adm[id(n)] != inter:
                        adm[id(n)] = set(inter)
                        changed = True
        for node, ref in eq_pairs:
            inter = adm[id(node)] & adm[id(ref)]
            for n in (node, ref):
                if adm[id(n)] != inter:
                    adm[id(n)] = set(inter)
                    changed = True

    # null legality pass: drop Null where the placement conditions fail
    an.resolved_ready = False
    for node in an.entity_nodes:
        s = adm[id(node)]
        if NULL_TYPE in s and len(s) >= 1:
            explicit = (isinstance(node.spec, P.TypedSpec)
                        and node.spec.type_name == NULL_TYPE) or (
                isinstance(node.spec, P.UntypedSpec)
                and (node.spec.allow_null
                     or (node.spec.allowed and NULL_TYPE in node.spec.allowed)))
            has_prop_green = any(
                exprs.referenced_props(st.expr)
                for st in P.iter_stages(node.tail.chain)
                if isinstance(st, P.GreenStage))
            ok = _null_conditions_hold_basic(an, node) and not has_prop_green
            if not ok:
                if explicit:
                    an.error("NULL_PLACEMENT", node,
                             "null entities are not admissible at this position")
                s.discard(NULL_TYPE)

    for node in an.entity_nodes:
        explicit_list = (isinstance(node.spec, P.UntypedSpec)
                         and node.spec.allowed is not None)
        if not adm[id(node)]:
            an.error("TYPE_NULLIFIED", node,
                     f"no admissible entity type remains for tag {node.tag!r}")
        elif explicit_list:
            listed = {t for t in node.spec.allowed}
            lost = listed - adm[id(node)] - {NULL_TYPE}
            if lost:
                an.error("TYPE_NULLIFIED", node,
                         f"explicitly allowed types {sorted(lost)} are "
                         f"implicitly disallowed here")
        an.admissible[id(node)] = frozenset(adm[id(node)])


def _null_conditions_hold_basic(an: Analysis, node: P.EntityNode) -> bool:
    """Null entities bind only at positions with exactly one connection:
    a terminal node, or a node starting the pattern/branch."""
    if len(an.entity_tags.get(node.tag, [])) > 1 or node.not_equal:
        return False
    if any(node.tag in n.not_equal for n in an.entity_nodes):
        return False
    if any(cnode is node for cnode in an.pattern.combiners.values()):
        return False
    incoming = [c for c in an.connections if node in _conn_endpoints(an, c)[1]]
    if node.tail.next is None:
        return len(incoming) == 1 and \
            _rel_supports_null(an, incoming[0], "right")
    if incoming:
        return False
    nxt = node.tail.next
    if isinstance(nxt, P.Connection):
        return _rel_supports_null(an, nxt, "left")
    return False


def _flip(direction: str) -> str:
    return {"forward": "backward", "backward": "forward",
            "either": "either"}[direction]


# ---------------------------------------------------------------------------
# Stage tag resolution (left/right/pair shorthands, tag indexes)


def _zero_admitting(st: P.AggStage) -> bool:
    c = st.check
    if c is None:
        return False

    def is_zero(e):
        return isinstance(e, exprs.Const) and e.value.kind == "int" \
            and e.value.data == 0

    if c.op in ("eq", "ge") and is_zero(c.rhs):
        return True
    if c.op == "in_range" and isinstance(c.rhs, exprs.RangeRhs) \
            and is_zero(c.rhs.lo) and not c.rhs.lo_open:
        return True
    return False


def _right_tags_of(an: Analysis, host) -> list[str]:
    if isinstance(host, P.Connection):
        tgt = host.target
        if isinstance(tgt, P.CombinerRef):
            return [an.pattern.combiners[tgt.combiner_id].tag]
        return [n.tag for n in _first_entities(tgt)]
    if isinstance(host, P.Quantifier):
        out = []
        for br in host.branches:
            if isinstance(br, P.Tail):
                nxt = br.next
                if isinstance(nxt, P.Connection):
                    out.extend(_right_tags_of(an, nxt))
                elif isinstance(nxt, P.Quantifier):
                    out.extend(_right_tags_of(an, nxt))
            else:
                out.extend(n.tag for n in _first_entities(br))
        seen, uniq = set(), []
        for t in out:
            if t not in seen:
                seen.add(t)
                uniq.append(t)
        return uniq
    if host == "start":
        start = an.pattern.start
        return [n.tag for n in _first_entities(start)]
    return []


def _resolve_per(an: Analysis, st, spec, what, single=False):
    """Normalize left/right/pair into explicit tag elements."""
    ctx: StageCtx = an.ctx[id(st)]
    host = ctx.chain_owner if not isinstance(ctx.chain_owner, tuple) else ctx.host
    left_entity = ctx.host_entity
    if spec is None:
        return None
    if spec == "left":
        if left_entity is None:
            an.error("AGG_PLACEMENT", st, f"{what}: no entity left of here")
            return []
        elems = [left_entity.tag]
        return elems[0] if single else elems
    if spec == "right":
        tags = _right_tags_of(an, host if not isinstance(host, P.EntityNode)
                              else None)
        if not tags:
            an.error("AGG_PLACEMENT", st, f"{what}: no entity right of here")
            return [] if not single else None
        if single:
            if len(tags) > 1:
                an.error("AGG_PLACEMENT", st,
                         f"{what}: 'right' is ambiguous here")
            return tags[0]
        return list(tags)
    if spec == "pair":
        if left_entity is None:
            an.error("AGG_PLACEMENT", st, f"{what}: no entity left of here")
            return [] if not single else None
        rights = _right_tags_of(an, host if not isinstance(host, P.EntityNode)
                                else None)
        if len(rights) != 1:
            an.error("AGG_PLACEMENT", st,
                     f"{what}: 'pair' needs exactly one entity on the right")
            return [] if not single else None
        elem = ("product", (left_entity.tag, rights[0]))
        return elem if single else [elem]
    if single:
        return spec
    return list(spec)


def _stage_tag_refs(an: Analysis, st) -> set[int]:
    """Value tags a stage's evaluation depends on."""
    refs: set[int] = set()
    if isinstance(st, P.GreenStage):
        refs |= exprs.referenced_tags(st.expr)
        if st.check:
            for e in exprs.check_rhs_exprs(st.check):
                refs |= exprs.referenced_tags(e)
    elif isinstance(st, P.AggStage):
        if st.expr is not None:
            refs |= exprs.referenced_tags(st.expr)
        if st.check:
            for e in exprs.check_rhs_exprs(st.check):
                refs |= exprs.referenced_tags(e)
        if isinstance(st.of, int):
            refs.add(st.of)
    elif isinstance(st, P.SplitStage):
        if isinstance(st.by, tuple):
            if st.by[0] == "tag":
                refs.add(st.by[1])
        else:
            refs |= exprs.referenced_tags(st.by)
    elif isinstance(st, P.HQuantStage):
        for br in st.branches:
            for s in P.iter_stages(br):
                refs |= _stage_tag_refs(an, s)
    return refs


def is_continuation_green(st) -> bool:
    """A chained constraint on an existing tag ({n}: expr is just {n})."""
    return isinstance(st, P.GreenStage) and \
        isinstance(st.expr, exprs.TagRef) and st.expr.index == st.tag


def _resolve_stage_tags(an: Analysis):
    for st in an.stages:
        tag = getattr(st, "tag", None)
        if tag is not None:
            if is_continuation_green(st):
                continue
            if tag in an.tag_stage or tag in an.type_tags:
                an.error("TR1", st, f"tag {{{tag}}} is defined more than once")
            else:
                an.tag_stage[tag] = st
    for st in an.stages:
        an.stage_deps[id(st)] = _stage_tag_refs(an, st)
        if isinstance(st, P.AggStage):
            res = {}
            res["per"] = _resolve_per(an, st, st.per, "per")
            res["count"] = _resolve_per(an, st, st.count, "count")
            res["select"] = _resolve_per(an, st, st.select, "select", single=True)
            an.resolved[id(st)] = res
    # TR1: within one entity tag, one expression -> one expression tag
    # (one-value stages denote a single element each, so they are exempt)
    by_entity: dict[tuple, int] = {}
    for st in an.stages:
        if not isinstance(st, P.GreenStage) or st.one_value:
            continue
        ctx = an.ctx[id(st)]
        if isinstance(ctx.host, P.EntityNode):
            key = (ctx.host.tag, exprs.expr_text(st.expr))
            if key in by_entity and by_entity[key] != st.tag:
                an.error("TR1", st,
                         f"expression {key[1]!r} of entity {key[0]!r} already "
                         f"carries tag {{{by_entity[key]}}}")
            by_entity.setdefault(key, st.tag)
    _infer_tag_types(an)


def _agg_tag_type(an: Analysis, st: P.AggStage):
    if st.family in ("L1", "L2", "S1", "values"):
        return "int"
    if st.family in ("L3", "L4"):
        if st.aggop == "distinct":
            return "int"
        base = "unknown"
        if st.family == "L3" and st.expr is not None:
            base = _expr_type_for_stage(an, st, st.expr)
        elif st.family == "L4":
            if isinstance(st.of, tuple):
                base = "string"
            else:
                base = an.tag_types.get(st.of, "unknown")
        if st.aggop in ("min", "max"):
            return base
        if st.aggop == "avg":
            return "real" if base in ("int", "real") else base
        if st.aggop == "sum":
            return base
        if st.aggop == "list":
            return ("list", base)
        if st.aggop == "set":
            return ("set", base)
    return "unknown"


def _entity_prop_env(an: Analysis, node: P.EntityNode) -> dict:
    schema = an.schema
    spec = node.spec
    if isinstance(spec, P.EnsembleSpec) and spec.name in schema.ensembles:
        env: dict = {"count": "int"}
        for t in sorted(schema.entity_types):
            env[f"{t}.count"] = "int"
            for p in schema.entity_types[t].properties:
                env[f"{t}.{p.name}.distinct"] = "int"
                for agg in ("min", "max", "sum"):
                    env[f"{t}.{p.name}.{agg}"] = p.dtype
                env[f"{t}.{p.name}.avg"] = (
                    "real" if p.dtype in ("int", "real") else p.dtype)
        return env
    if isinstance(spec, P.TypedSpec) and \
            spec.type_name in schema.logical_entity_types:
        return schema.logical_properties(spec.type_name)
    types = an.admissible.get(id(node), frozenset())
    types = [t for t in types if t != NULL_TYPE]
    if not types:
        return {}
    envs = [schema.prop_types(t) for t in types]
    common = set(envs[0])
    for e in envs[1:]:
        common &= {k for k in e if e[k] == envs[0].get(k)}
    return {k: envs[0][k] for k in common
            if all(e.get(k) == envs[0][k] for e in envs)}


def _stage_prop_env(an: Analysis, st) -> dict:
    ctx: StageCtx = an.ctx[id(st)]
    host = ctx.host
    if isinstance(host, P.EntityNode):
        return _entity_prop_env(an, host)
    if isinstance(host, P.Connection) and host.kind == "rel":
        rel = an.schema.relationship_types.get(host.rel.type_name)
        return {p.name: p.dtype for p in rel.properties} if rel else {}
    return {}


def _expr_type_for_stage(an: Analysis, st, expr):
    env = exprs.TypeEnv(_stage_prop_env(an, st), dict(an.tag_types))
    # one-value greens earlier in the chain rebind their tag to the element
    ctx: StageCtx = an.ctx[id(st)]
    for prev in ctx.chain_before:
        if isinstance(prev, P.GreenStage) and prev.one_value:
            t = an.tag_types.get(prev.tag)
            if isinstance(t, tuple) and t[0] in ("list", "set"):
                env.tags[prev.tag] = t[1]
    try:
        return exprs.infer_type(expr, env)
    except V.V1TypeError:
        return "unknown"


def _infer_tag_types(an: Analysis):
    # dependency-ordered tag typing; unresolvable tags become "unknown"
    pending = dict(an.tag_stage)
    for _ in range(len(pending) + 1):
        progressed = False
        for tag, st in list(pending.items()):
            deps = an.stage_deps[id(st)] - set(an.tag_types)
            deps.discard(tag)
            if deps & set(pending):
                continue
            if isinstance(st, P.GreenStage):
                t = _expr_type_for_stage(an, st, st.expr)
                if st.one_value:
                    # the tag denotes one element of the multivalued value
                    t = t[1] if isinstance(t, tuple) and t[0] in ("list", "set") \
                        else "unknown"
                an.tag_types[tag] = t
            elif isinstance(st, P.AggStage):
                an.tag_types[tag] = _agg_tag_type(an, st)
            else:
                an.tag_types[tag] = "unknown"
            del pending[tag]
            progressed = True
        if not progressed:
            break
    for tag in pending:
        an.tag_types.setdefault(tag, "unknown")


# ---------------------------------------------------------------------------
# Latency


def _subtree_nodes(target) -> list:
    out = []
    if isinstance(target, P.EntityNode):
        out.append(target)
        nxt = target.tail.next
        if isinstance(nxt, P.Connection) and not isinstance(
                nxt.target, P.CombinerRef):
            out.extend(_subtree_nodes(nxt.target))
        elif isinstance(nxt, P.Quantifier):
            out.extend(_subtree_nodes(nxt))
    elif isinstance(target, P.Quantifier):
        for br in target.branches:
            if isinstance(br, P.Tail):
                if isinstance(br.next, P.Connection) and not isinstance(
                        br.next.target, P.CombinerRef):
                    out.extend(_subtree_nodes(br.next.target))
                elif isinstance(br.next, P.Quantifier):
                    out.extend(_subtree_nodes(br.next))
            else:
                out.extend(_subtree_nodes(br))
    return out


def _gated_subtree(an: Analysis, host) -> list:
    """Entity nodes right of a chain host (connection / quantifier input)."""
    if isinstance(host, P.Connection):
        if isinstance(host.target, P.CombinerRef):
            return [an.pattern.combiners[host.target.combiner_id]]
        return _subtree_nodes(host.target)
    if isinstance(host, P.Quantifier):
        return _subtree_nodes(host)
    return []


def _compute_latency(an: Analysis):
    latent_nodes: set[int] = set()

    # right of an X, right of a None-quantifier branch
    for node in an.entity_nodes:
        for frame in an.ctx[id(node)].frames:
            if frame[0] in ("x", "none"):
                latent_nodes.add(id(node))

    # zero-count L1/L2 with left-only T and right-only B
    for st in an.stages:
        if not isinstance(st, P.AggStage) or st.family not in ("L1", "L2"):
            continue
        if not _zero_admitting(st):
            continue
        ctx: StageCtx = an.ctx[id(st)]
        host = ctx.chain_owner
        if isinstance(host, tuple) or isinstance(host, P.EntityNode) \
                or host == "start":
            continue
        res = an.resolved.get(id(st), {})
        right_nodes = _gated_subtree(an, host)
        right_ids = {id(n) for n in right_nodes}
        host_order = an.ctx[id(host)].order

        def tag_elems(key):
            tags = set()
            for el in res.get(key) or []:
                tags.update(el[1] if isinstance(el, tuple) else [el])
            return tags

        per_left = all(
            (an.node_of_tag(t) is not None
             and an.ctx[id(an.node_of_tag(t))].order <= host_order)
            for t in tag_elems("per"))
        if st.family == "L1":
            b_right = all(
                all(id(n) in right_ids for n in an.entity_tags.get(t, []))
                for t in tag_elems("count"))
            if not b_right:
                an.error("ZERO_COUNT_SCOPE", st,
                         "a zero-admitting count requires every counted tag "
                         "to be defined right of the aggregator")
                continue
        if per_left:
            an.zero_gated.add(id(host))
            latent_nodes.update(right_ids)

    # explicit latency propagates through shared tags
    explicit = {node.tag for node in an.entity_nodes if node.latent}
    for node in an.entity_nodes:
        if node.tag in explicit:
            latent_nodes.add(id(node))

    an.latent = latent_nodes
    an.latent_tags = {n.tag for n in an.entity_nodes if id(n) in latent_nodes}
    non_latent = [n for n in an.entity_nodes if id(n) not in latent_nodes]
    if an.entity_nodes and not non_latent:
        an.error("ALL_LATENT", an.entity_nodes[0],
                 "at least one pattern entity must be non-latent")


# ---------------------------------------------------------------------------
# Structural checks


def _check_structure(an: Analysis):
    schema = an.schema
    pattern = an.pattern

    if isinstance(pattern.start, P.Quantifier) and pattern.start.quant == "none":
        an.error("NONE_AT_START", pattern.start,
                 "the None quantifier may not start a pattern")

    for q in an.quantifiers:
        non_o = 0
        for br in q.branches:
            nxt = br.next if isinstance(br, P.Tail) else None
            wrapped_o = (isinstance(nxt, (P.Connection, P.Quantifier))
                         and nxt.wrapper == P.WRAPPER_O)
            if not wrapped_o:
                non_o += 1
        if non_o == 0:
            an.error("O_LATENT", q,
                     "a quantifier needs at least one branch not wrapped by O")

    for conn in an.connections:
        left, rights = _conn_endpoints(an, conn)
        if conn.kind == "rel":
            rel = schema.relationship_types.get(conn.rel.type_name)
            if rel is None:
                an.error("REL_ENDPOINT", conn,
                         f"unknown relationship type {conn.rel.type_name!r}")
                continue
            if not rel.directional and conn.rel.direction != "either":
                an.error("REL_ENDPOINT", conn,
                         f"{rel.name!r} is bidirectional; use direction=either")
            if left is not None:
                for r in rights:
                    lt = an.admissible.get(id(left), frozenset())
                    rt = an.admissible.get(id(r), frozenset())
                    if lt and rt and not any(
                            _endpoint_sources(an, rel, rt, conn.rel.direction)
                            & lt):
                        an.error("REL_ENDPOINT", conn,
                                 f"{rel.name!r} admits no pair "
                                 f"({sorted(lt)}, {sorted(rt)})")
        else:
            p = conn.path
            if p.shortest and conn.wrapper in (P.WRAPPER_X, P.WRAPPER_NC):
                an.error("SHORTEST_AFTER_NEG", conn,
                         "shortest paths may not follow an X or a "
                         "no-connection box")
            for f in (p.rels, p.entities):
                if f and f.allowed and NULL_TYPE in f.allowed:
                    an.error("NULL_PLACEMENT", conn,
                             "path element filters may not name the null type")
                if f and f.counts and any(c.type_name == NULL_TYPE
                                          for c in f.counts):
                    an.error("NULL_PLACEMENT", conn,
                             "path element filters may not name the null type")
            if p.rels:
                names = p.rels.allowed or [c.type_name for c in p.rels.counts]
                for nm in names:
                    if nm not in schema.relationship_types:
                        an.error("REL_ENDPOINT", conn,
                                 f"unknown relationship type {nm!r} in path "
                                 f"constraints")
            if p.entities:
                names = p.entities.allowed or [c.type_name
                                               for c in p.entities.counts]
                for nm in names:
                    if nm not in schema.entity_types:
                        an.error("REL_ENDPOINT", conn,
                                 f"unknown entity type {nm!r} in path "
                                 f"constraints")
            if p.patterns:
                for row in p.patterns:
                    terms = [n for n in P.iter_entity_nodes(row.pattern)
                             if n.terminal]
                    lefts = [n for n in terms if n.terminal == "left"]
                    rights_t = [n for n in terms if n.terminal == "right"]
                    if len(lefts) != 1 or len(rights_t) != 1:
                        an.error("PATH_TERMINAL_LATENT", conn,
                                 "each path pattern marks exactly one left "
                                 "and one right terminal")
                    sub_an = analyze(row.pattern, schema)
                    for node in terms:
                        if id(node) in sub_an.latent or node.latent:
                            an.error("PATH_TERMINAL_LATENT", conn,
                                     "path pattern terminals may not be latent")
                    for d in sub_an.diagnostics:
                        an.diagnostics.append(Diagnostic(
                            d.code, d.severity, d.node_ref, d.message,
                            an.ctx[id(conn)].order))

        if conn.wrapper == P.WRAPPER_X:
            if any(isinstance(st, P.AggStage) for st in conn.chain):
                an.error("X_BEFORE_AGG", conn,
                         "an X may not directly precede a relationship or "
                         "path carrying an aggregation")
        if conn.wrapper == P.WRAPPER_NC:
            has_count = any(isinstance(st, P.AggStage)
                            and st.family in ("L1", "L2")
                            for st in P.iter_stages(conn.chain))
            if not has_count:
                an.error("NC_UNSUPPORTED", conn,
                         "a no-connection box is supported only with an "
                         "L1/L2 count on the same connection")

    # constraints on concrete/ensemble entities; O before only-latent subtree
    for node in an.entity_nodes:
        if isinstance(node.spec, (P.ConcreteSpec, P.EnsembleSpec)):
            for st in P.iter_stages(node.tail.chain):
                if isinstance(st, P.GreenStage) and st.check is not None:
                    an.error("CONCRETE_CONSTRAINT", st,
                             "constraints cannot be defined for concrete "
                             "entities or ensembles")

    for conn in an.connections:
        if conn.wrapper == P.WRAPPER_O:
            gated = _gated_subtree(an, conn)
            if gated and all(id(n) in an.latent or n.latent for n in gated):
                an.error("O_LATENT", conn,
                         "an O may not have only latent entities on its right")

    _check_stage_placement(an)


def _check_stage_placement(an: Analysis):
    for st in an.stages:
        ctx: StageCtx = an.ctx[id(st)]
        owner = ctx.chain_owner
        owner_kind = ("start" if owner == "start" else
                      "entity" if isinstance(owner, P.EntityNode) else
                      "branch" if isinstance(owner, tuple) else
                      "conn" if isinstance(owner, P.Connection) else "quant")
        if isinstance(st, P.GreenStage):
            if ctx.splits:
                an.error("CHAIN_ORDER", st,
                         "green stages may not appear inside a split scope")
            before = ctx.chain_before
            if any(isinstance(s, (P.AggStage, P.SplitStage)) for s in before):
                an.error("CHAIN_ORDER", st,
                         "green stages may not appear below aggregation stages")
            if st.one_value:
                t = _expr_type_for_stage(an, st, st.expr)
                if not (isinstance(t, tuple) and t[0] in ("list", "set")) \
                        and t != "unknown":
                    an.error("ONE_VALUE", st,
                             "one-value stages require a multivalued expression")
            continue
        if isinstance(st, P.HQuantStage):
            if owner_kind not in ("conn", "entity", "branch"):
                an.error("AGG_PLACEMENT", st,
                         "horizontal quantifiers belong on relationship or "
                         "entity chains")
            for br in st.branches:
                for s in P.iter_stages(br):
                    if isinstance(s, (P.AggStage, P.SplitStage)):
                        an.error("CHAIN_ORDER", s,
                                 "aggregations may not appear inside a "
                                 "horizontal quantifier branch")
            continue
        if isinstance(st, P.SplitStage):
            if owner_kind == "entity":
                an.error("AGG_PLACEMENT", st,
                         "splits belong below the query start, a "
                         "relationship, a path, or a quantifier input")
            continue
        if not isinstance(st, P.AggStage):
            continue
        fam = st.family
        in_split = bool(ctx.splits)
        if fam in ("S1", "P1", "P2", "P3", "P4"):
            if not in_split:
                an.error("AGG_PLACEMENT", st,
                         f"{fam} may appear only within a per-split scope")
            parent = ctx.splits[-1].body if ctx.splits else []
            if parent and parent[-1] is not st and st in parent:
                an.error("AGG_PLACEMENT", st,
                         f"{fam} terminates its per-split scope and must be "
                         f"the scope's last stage")
        if fam in ("L3", "M3", "R1", "P3"):
            host_conn = ctx.host if isinstance(ctx.host, P.Connection) else None
            if host_conn is None or host_conn.kind != "rel":
                an.error("AGG_PLACEMENT", st,
                         f"{fam} requires a relationship host")
        if fam in ("L1", "L2", "M1", "M2", "R1", "L3", "M3"):
            if owner_kind in ("entity",):
                an.error("AGG_PLACEMENT", st,
                         f"{fam} may not hang off an entity")
            if owner_kind == "start" and not in_split:
                an.error("AGG_PLACEMENT", st,
                         f"{fam} may not hang off the query start")
        if fam == "values":
            of = st.of
            defined = None
            for s in ctx.chain_before:
                if isinstance(s, P.GreenStage) and s.one_value and s.tag == of:
                    defined = s
            if defined is None:
                an.error("ONE_VALUE", st,
                         "a value-count stage must follow the one-value "
                         "stage it counts")
        if fam in ("L1", "L2") and isinstance(ctx.host, P.Quantifier):
            q = ctx.host
            ok = False
            for br in q.branches:
                nxt = br.next if isinstance(br, P.Tail) else None
                if isinstance(nxt, P.Connection) and nxt.wrapper not in (
                        P.WRAPPER_X, P.WRAPPER_NC):
                    ok = True
                if not isinstance(br, P.Tail):
                    ok = True
            if not ok:
                an.error("AGG_PLACEMENT", st,
                         f"{fam} before a quantifier needs a branch starting "
                         f"with a non-negated relationship or path")


# ---------------------------------------------------------------------------
# Tag rules


def _frames_of_tag_def(an: Analysis, tag: int):
    st = an.tag_stage.get(tag)
    if st is None:
        return None
    return an.ctx[id(st)].frames


def _strip(frames):
    return tuple(f[:3] if f[0] == "branch" else f for f in frames)


def _check_tag_rules(an: Analysis):
    # unknown tag references
    for st in an.stages:
        for tag in an.stage_deps[id(st)]:
            if tag not in an.tag_stage:
                an.error("TAG_UNKNOWN", st,
                         f"reference to undefined tag {{{tag}}}")
        if isinstance(st, P.AggStage):
            res = an.resolved.get(id(st), {})
            for key in ("per", "count"):
                elems = res.get(key)
                for el in elems or []:
                    tags = el[1] if isinstance(el, tuple) else [el]
                    for t in tags:
                        if t not in an.entity_tags:
                            an.error("TAG_UNKNOWN", st,
                                     f"unknown entity tag {t!r} in {key}")
            sel = res.get("select")
            if sel is not None:
                tags = sel[1] if isinstance(sel, tuple) else [sel]
                for t in tags:
                    if t not in an.entity_tags:
                        an.error("TAG_UNKNOWN", st,
                                 f"unknown entity tag {t!r} in select")
            if isinstance(st.of, tuple) and st.of[0] == "typetag":
                if st.of[1] not in an.type_tags:
                    an.error("TAG_UNKNOWN", st,
                             f"unknown type tag <{st.of[1]}>")
        if isinstance(st, P.SplitStage) and isinstance(st.by, tuple) \
                and st.by[0] == "typetag" and st.by[1] not in an.type_tags:
            an.error("TAG_UNKNOWN", st, f"unknown type tag <{st.by[1]}>")

    # TR2: no self or circular references among value tags; only the
    # value-defining expression counts (a constraint referencing another
    # tag is an ordering matter, covered by TR3)
    graph: dict[int, set[int]] = {}
    for tag, st in an.tag_stage.items():
        graph[tag] = _value_deps(an, st) & set(an.tag_stage)
    state: dict[int, int] = {}

    def dfs(node, stack) -> bool:
        state[node] = 1
        for dep in graph.get(node, ()):
            if state.get(dep) == 1:
                return True
            if state.get(dep) is None and dfs(dep, stack):
                return True
        state[node] = 2
        return False

    for tag in sorted(graph):
        if state.get(tag) is None and dfs(tag, []):
            an.error("TR2", an.tag_stage[tag],
                     f"tag {{{tag}}} participates in a circular reference")
            break

    # scope rules over references
    for st in an.stages:
        st_frames = an.ctx[id(st)].frames
        for tag in an.stage_deps[id(st)]:
            d_stage = an.tag_stage.get(tag)
            if d_stage is None:
                continue
            d_ctx: StageCtx = an.ctx[id(d_stage)]
            d_frames = d_ctx.frames
            # TR4: tag defined right of an X (or inside a zero-gated scope):
            # every x-frame of the definition must enclose the reference too
            for i, frame in enumerate(d_frames):
                if frame[0] == "x" and frame not in st_frames:
                    an.error("TR4", st,
                             f"tag {{{tag}}} is defined right of an X and "
                             f"cannot be referenced here")
                    break
                if frame[0] == "none" and frame not in st_frames:
                    an.error("TR4", st,
                             f"tag {{{tag}}} is defined under a None "
                             f"quantifier and cannot be referenced here")
                    break
            # TR4 continued: tags right of a zero-count aggregate stay inside
            for host in _zero_hosts_of(an, d_stage):
                if not _stage_under_host(an, st, host) and st is not d_stage \
                        and not _stage_in_zero_scope(an, st, host):
                    an.error("TR4", st,
                             f"tag {{{tag}}} is defined right of a zero-count "
                             f"aggregate and cannot be referenced here")
                    break
            # TR5: property tags of a relationship directly right of a NC
            if isinstance(d_ctx.host, P.Connection) \
                    and d_ctx.host.wrapper == P.WRAPPER_NC \
                    and isinstance(d_stage, P.GreenStage) \
                    and exprs.referenced_props(d_stage.expr) \
                    and st is not d_stage:
                an.error("TR5", st,
                         f"tag {{{tag}}} holds a relationship property right "
                         f"of a no-connection box and cannot be referenced")
            # TR6: tags in a non-all branch: no cross-branch or leftward refs
            for i, frame in enumerate(d_frames):
                if frame[0] == "branch" and frame[3] != "all":
                    if i < len(st_frames) and st_frames[i] == frame:
                        continue
                    d_order = an.ctx[id(d_stage)].order
                    st_order = an.ctx[id(st)].order
                    cross = i >= len(st_frames) or st_frames[i] != frame
                    leftward = st_order < d_order
                    in_other_branch = (
                        i < len(st_frames) and st_frames[i][0] == "branch"
                        and st_frames[i][1] is frame[1]
                        and st_frames[i][2] != frame[2])
                    if in_other_branch or (cross and leftward):
                        an.error("TR6", st,
                                 f"tag {{{tag}}} is defined in a quantifier "
                                 f"branch and cannot be referenced here")
                        break

    # TR3: All-quantifier branch evaluation order
    for q in an.quantifiers:
        if q.quant != "all":
            continue
        deps_between: dict[int, set[int]] = {}
        for i, br in enumerate(q.branches):
            deps_between[i] = set()
        tag_branch: dict[int, int] = {}
        for tag, st in an.tag_stage.items():
            for frame in an.ctx[id(st)].frames:
                if frame[0] == "branch" and frame[1] is q:
                    tag_branch[tag] = frame[2]
        for st in an.stages:
            st_branch = None
            for frame in an.ctx[id(st)].frames:
                if frame[0] == "branch" and frame[1] is q:
                    st_branch = frame[2]
            if st_branch is None:
                continue
            for tag in an.stage_deps[id(st)]:
                other = tag_branch.get(tag)
                if other is not None and other != st_branch:
                    deps_between[st_branch].add(other)
        # cycle check over branch dependencies
        color: dict[int, int] = {}

        def visit(i) -> bool:
            color[i] = 1
            for j in deps_between.get(i, ()):
                if color.get(j) == 1:
                    return True
                if color.get(j) is None and visit(j):
                    return True
            color[i] = 2
            return False

        if any(color.get(i) is None and visit(i) for i in deps_between):
            an.error("TR3", q,
                     "branches of an All quantifier reference each other's "
                     "tags circularly; no evaluation order exists")


def _value_deps(an: Analysis, st) -> set[int]:
    """Tags the stage's VALUE depends on (constraint operands excluded)."""
    refs: set[int] = set()
    if isinstance(st, P.GreenStage):
        refs |= exprs.referenced_tags(st.expr)
        if isinstance(st.expr, exprs.TagRef) and st.expr.index == st.tag:
            refs.discard(st.tag)
    elif isinstance(st, P.AggStage):
        if st.expr is not None:
            refs |= exprs.referenced_tags(st.expr)
        if isinstance(st.of, int):
            refs.add(st.of)
    elif isinstance(st, P.SplitStage):
        if isinstance(st.by, tuple):
            if st.by[0] == "tag":
                refs.add(st.by[1])
        else:
            refs |= exprs.referenced_tags(st.by)
    return refs


def _stage_in_zero_scope(an: Analysis, st, host) -> bool:
    scope = {id(n) for n in _gated_subtree(an, host)}
    ctx = an.ctx[id(st)]
    if isinstance(ctx.host, P.EntityNode) and id(ctx.host) in scope:
        return True
    if isinstance(ctx.host, P.Connection) and \
            id(ctx.host_entity) in scope:
        return True
    if ctx.chain_owner is host:
        zero_orders = [an.ctx[id(s)].order for s in an.stages
                       if isinstance(s, P.AggStage) and s.family in ("L1", "L2")
                       and _zero_admitting(s)
                       and an.ctx[id(s)].chain_owner is host]
        return bool(zero_orders) and ctx.order > min(zero_orders)
    return False


def _zero_hosts_of(an: Analysis, d_stage) -> list:
    """Zero-gated hosts whose scope contains the tag-defining stage."""
    out = []
    for hid in an.zero_gated:
        host = next((c for c in an.connections if id(c) == hid),
                    None) or next((q for q in an.quantifiers if id(q) == hid),
                                  None)
        if host is not None and _stage_in_zero_scope(an, d_stage, host):
            out.append(host)
    return out


def _stage_under_host(an: Analysis, st, host) -> bool:
    ctx = an.ctx[id(st)]
    if ctx.chain_owner is host or ctx.host is host:
        return True
    for frame in ctx.frames:
        if frame[0] in ("x", "opt", "nc") and frame[1] is host:
            return True
    return False


# ---------------------------------------------------------------------------
# Aggregation rules


def _elems_tags(elems) -> list[str]:
    out = []
    for el in elems or []:
        out.extend(el[1] if isinstance(el, tuple) else [el])
    return out


def _min_selection(quant: str, n, n2, b: int) -> int:
    """Smallest allowed number of taken branches (1+ unless none)."""
    return {"all": b, "some": 1, "gt": (n or 0) + 1, "ge": n or 1,
            "notall": 1, "none": 0, "eq": n or 1, "lt": 1, "le": 1,
            "ne": 0 if n != 0 else 1, "range": n or 1,
            "outside": 1}[quant]


def _check_agg_rules(an: Analysis):
    for st in an.stages:
        if not isinstance(st, P.AggStage):
            continue
        res = an.resolved.get(id(st), {})
        per_tags = set(_elems_tags(res.get("per")))
        fam = st.family

        # T/B/M disjointness
        if fam == "L1" or fam in ("M1", "P1"):
            other = set(_elems_tags(res.get("count")))
            if per_tags & other:
                an.error("AR1", st, "per and counted tags may not intersect")
        sel = res.get("select")
        if sel is not None:
            sel_tags = set(sel[1] if isinstance(sel, tuple) else [sel])
            if per_tags & sel_tags:
                an.error("AR1", st, "per and selected tags may not intersect")
            if fam == "M1":
                m_tags = set(_elems_tags(res.get("count")))
                if sel_tags & m_tags:
                    an.error("AR1", st,
                             "selected and measured tags may not intersect")

        # AR1 proper: B must hold a non-concrete entity in every assignment
        if fam in ("L1", "M1", "M2", "M3", "M4"):
            if fam == "L1":
                b_tags = _elems_tags(res.get("count"))
            else:
                b_tags = (sel[1] if isinstance(sel, tuple) else [sel]) \
                    if sel is not None else []
            if not _zero_admitting(st) or fam != "L1":
                if not _ar1_holds(an, st, b_tags):
                    an.error("AR1", st,
                             "the counted/selected combination must contain "
                             "a non-concrete entity in every possible "
                             "assignment")

        # AR2: checks may not reference per-element tags of aggregated parts
        aggregated_nodes = _aggregated_nodes(an, st)
        check_refs: set[int] = set()
        if st.check:
            for e in exprs.check_rhs_exprs(st.check):
                check_refs |= exprs.referenced_tags(e)
        for tag in check_refs:
            host = _tag_host_entity(an, tag)
            if host is not None and id(host) in aggregated_nodes:
                an.error("AR2", st,
                         f"the aggregation constraint references {{{tag}}}, "
                         f"a per-element property of an aggregated entity")

        # AR4: aggregating a tag per the same or a superset group key; a
        # per-split inner value carries the split in its key, so selecting
        # across splits (S1/P*) or aggregating it globally stays legal
        if fam == "L4" and isinstance(st.of, int):
            inner = an.tag_stage.get(st.of)
            if isinstance(inner, P.AggStage):
                inner_ctx = an.ctx[id(inner)]
                st_ctx = an.ctx[id(st)]
                inner_res = an.resolved.get(id(inner), {})
                inner_per = set(_elems_tags(inner_res.get("per")))
                same_scope = len(inner_ctx.splits) <= len(st_ctx.splits)
                if inner_per and per_tags >= inner_per and same_scope:
                    an.error("AR4", st,
                             f"{{{st.of}}} is calculated per "
                             f"{sorted(inner_per)} and cannot be aggregated "
                             f"per a superset of that key")

    # AR3: a green filtering stage upstream of an aggregator cannot
    # reference that aggregator's tag
    for st in an.stages:
        if not isinstance(st, P.GreenStage) or st.check is None:
            continue
        refs = set()
        for e in exprs.check_rhs_exprs(st.check):
            refs |= exprs.referenced_tags(e)
        refs |= exprs.referenced_tags(st.expr)
        ctx: StageCtx = an.ctx[id(st)]
        for tag in refs:
            d_stage = an.tag_stage.get(tag)
            if not isinstance(d_stage, P.AggStage):
                continue
            d_ctx: StageCtx = an.ctx[id(d_stage)]
            if d_ctx.chain_owner is ctx.chain_owner and \
                    an.ctx[id(st)].order < d_ctx.order:
                an.error("AR3", st,
                         f"a filtering stage above the aggregation defining "
                         f"{{{tag}}} cannot reference it")


def _tag_host_entity(an: Analysis, tag: int):
    st = an.tag_stage.get(tag)
    if st is None:
        return None
    host = an.ctx[id(st)].host
    return host if isinstance(host, P.EntityNode) else None


def _aggregated_nodes(an: Analysis, st: P.AggStage) -> set[int]:
    """Entity nodes whose assignments the aggregator ranges over."""
    res = an.resolved.get(id(st), {})
    out: set[int] = set()
    tags = set(_elems_tags(res.get("count")))
    sel = res.get("select")
    if sel is not None:
        tags |= set(sel[1] if isinstance(sel, tuple) else [sel])
    if isinstance(st.of, int):
        host = _tag_host_entity(an, st.of)
        if host is not None:
            out.add(id(host))
    for t in tags:
        for n in an.entity_tags.get(t, []):
            out.add(id(n))
    # everything right of the host also feeds L2/L4-style aggregation
    ctx: StageCtx = an.ctx[id(st)]
    owner = ctx.chain_owner
    if st.family in ("L2", "M2", "P2") and isinstance(
            owner, (P.Connection, P.Quantifier)):
        for n in _gated_subtree(an, owner):
            out.add(id(n))
    return out


def _ar1_holds(an: Analysis, st: P.AggStage, b_tags: list[str]) -> bool:
    if st.family in ("M2", "M3", "M4") and not b_tags:
        return True  # their B defaults are positional and checked elsewhere
    nodes = []
    for t in b_tags:
        nodes.extend(an.entity_tags.get(t, []))
    non_concrete = [n for n in nodes
                    if not isinstance(n.spec, (P.ConcreteSpec, P.EnsembleSpec))]
    if not non_concrete:
        return False
    st_frames = an.ctx[id(st)].frames
    stable = []
    avoidance: dict[int, set[int]] = {}
    quant_by_id: dict[int, P.Quantifier] = {}
    for n in non_concrete:
        frames = an.ctx[id(n)].frames
        extra = frames[len(_common_prefix(frames, st_frames)):]
        choice = [f for f in extra if f[0] == "branch" and f[3] != "all"]
        optional = [f for f in extra if f[0] == "opt"]
        negated = [f for f in extra if f[0] in ("x", "none")]
        if negated:
            continue  # never bound here
        if not choice and not optional:
            stable.append(n)
        elif choice:
            f = choice[0]
            quant_by_id[id(f[1])] = f[1]
            avoidance.setdefault(id(f[1]), set()).add(f[2])
    if stable:
        return True
    if not avoidance:
        return False  # only optional/negated candidates remain
    for qid, branch_set in avoidance.items():
        q = quant_by_id[qid]
        b = len(q.branches)
        min_sel = _min_selection(q.quant, q.n, q.n2, b)
        if min_sel == 0 or b - len(branch_set) >= min_sel > 0:
            return False
    return True


def _common_prefix(a, b):
    out = []
    for x, y in zip(a, b):
        if x == y:
            out.append(x)
        else:
            break
    return tuple(out)


# ---------------------------------------------------------------------------
# Expression type checking


_ORDERED = {"int", "real", "date", "datetime", "duration", "unknown"}


def _check_cmp_types(an, st, op, lt, rhs_types):
    if lt == "unknown" or "unknown" in rhs_types:
        return
    if op in ("is_empty", "not_empty"):
        return
    if op in ("eq", "ne", "in_set", "not_in_set"):
        return
    if op in ("lt", "le", "gt", "ge", "in_range", "not_in_range"):
        if lt in _ORDERED:
            return
        an.error("EXPR_TYPE", st, f"ordering comparison over {lt}")
        return
    is_frame = isinstance(lt, tuple) and lt[0] == "composite" \
        and lt[1] in ("dateframe", "datetimeframe")
    if op in ("starts_during", "not_starts_during", "ends_during",
              "not_ends_during"):
        if not is_frame:
            an.error("EXPR_TYPE", st, f"{op} requires a time frame")
        return
    if op in ("contains", "not_contains"):
        if lt == "string" or is_frame or isinstance(lt, tuple) and \
                lt[0] in ("list", "set", "opaque"):
            return
        an.error("EXPR_TYPE", st, f"contains over {lt}")
        return
    if op in ("contained_in", "not_contained_in"):
        if lt in ("date", "datetime", "string") or is_frame or (
                isinstance(lt, tuple) and lt[0] in ("list", "set")):
            return
        an.error("EXPR_TYPE", st, f"contained in over {lt}")
        return
    if op in ("starts_with", "not_starts_with", "ends_with", "not_ends_with"):
        if lt == "string" or (isinstance(lt, tuple) and lt[0] == "list"):
            return
        an.error("EXPR_TYPE", st, f"{op} over {lt}")
        return
    if op in ("matches", "not_matches"):
        if lt != "string":
            an.error("EXPR_TYPE", st, "matches requires a string")
        elif rhs_types and rhs_types[0] == "string":
            return
        return
    if op in ("within", "not_within"):
        if not (isinstance(lt, tuple) and lt[0] == "opaque"):
            an.error("EXPR_TYPE", st, "within requires an opaque type")
        return


def _type_check_expressions(an: Analysis):
    for st in an.stages:
        env_props = _stage_prop_env(an, st)
        env = exprs.TypeEnv(env_props, dict(an.tag_types))
        ctx: StageCtx = an.ctx[id(st)]
        for prev in ctx.chain_before:
            if isinstance(prev, P.GreenStage) and prev.one_value:
                t = an.tag_types.get(prev.tag)
                if isinstance(t, tuple) and t[0] in ("list", "set"):
                    env.tags[prev.tag] = t[1]

        def check_expr(e, what="expression"):
            try:
                return exprs.infer_type(e, env)
            except V.V1TypeError as exc:
                an.error("EXPR_TYPE", st, f"{what}: {exc}")
                return "unknown"

        if isinstance(st, P.GreenStage):
            lt = check_expr(st.expr)
            if st.one_value and isinstance(lt, tuple) and lt[0] in ("list", "set"):
                lt = lt[1]
            if st.check:
                rhs_types = [check_expr(e, "constraint operand")
                             for e in exprs.check_rhs_exprs(st.check)]
                _check_cmp_types(an, st, st.check.op, lt, rhs_types)
        elif isinstance(st, P.AggStage):
            if st.expr is not None:
                et = check_expr(st.expr, "relationship expression")
                if isinstance(ctx.host, P.Connection) and ctx.host.kind == "rel":
                    if not (exprs.referenced_props(st.expr)):
                        an.error("EXPR_TYPE", st,
                                 "the relationship expression must reference "
                                 "at least one property of the relationship")
                if st.aggop in ("min", "max", "avg", "sum") and \
                        et not in ("int", "real", "duration", "date",
                                   "datetime", "unknown"):
                    an.error("EXPR_TYPE", st, f"{st.aggop} over {et}")
            if st.check:
                lt = an.tag_types.get(st.tag, "int") \
                    if st.tag is not None else "int"
                rhs_types = [check_expr(e, "constraint operand")
                             for e in exprs.check_rhs_exprs(st.check)]
                _check_cmp_types(an, st, st.check.op, lt, rhs_types)
        elif isinstance(st, P.SplitStage):
            if not isinstance(st.by, tuple):
                check_expr(st.by, "split criterion")
                if isinstance(ctx.host, P.Connection) and ctx.host.kind == "rel":
                    if not exprs.referenced_props(st.by):
                        an.error("EXPR_TYPE", st,
                                 "a split-by expression must reference a "
                                 "property of its relationship")
