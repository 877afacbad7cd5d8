"""Paths constrained by chained sub-pattern segments.

A path-pattern row holds a linear sub-pattern with a left and a right
terminal. A path assignment decomposes into consecutive segment
assignments (each an assignment to one row's pattern), with successive
segments overlapping on their shared terminal entity. Rows carry count
constraints; a final flag decides whether free relationships may appear
between segments.
"""

from __future__ import annotations

from .. import exprs
from .. import values as V
from ..graph import adjacent
from ..pattern import ast as P
from ..schema import NULL_TYPE


class PathPatternError(ValueError):
    pass


def _linear_chain(pattern: P.Pattern):
    """[(entity, conn), ..., last entity] for a straight-line pattern."""
    out = []
    node = pattern.start
    if not isinstance(node, P.EntityNode):
        raise PathPatternError("path patterns must be linear")
    while True:
        nxt = node.tail.next
        if nxt is None:
            out.append((node, None))
            return out
        if not isinstance(nxt, P.Connection) or nxt.kind != "rel" or \
                isinstance(nxt.target, (P.Quantifier, P.CombinerRef)) or \
                nxt.wrapper != P.WRAPPER_NONE:
            raise PathPatternError("path patterns must be linear")
        out.append((node, nxt))
        node = nxt.target


def _entity_ok(matcher, node: P.EntityNode, eid: str) -> bool:
    ent = matcher.g.entities.get(eid)
    if ent is None or ent.type_name == NULL_TYPE:
        return False
    spec = node.spec
    if isinstance(spec, P.ConcreteSpec):
        return eid == spec.entity_id
    if isinstance(spec, P.TypedSpec):
        if spec.type_name in matcher.schema.logical_entity_types:
            return eid in matcher.logical_members(spec.type_name)
        return ent.type_name == spec.type_name
    if isinstance(spec, P.EnsembleSpec):
        return eid in matcher.ensemble_members(spec.name)
    if spec.allowed is not None:
        return ent.type_name in spec.allowed
    if spec.disallowed is not None:
        return ent.type_name not in spec.disallowed
    return True


def _greens_ok(matcher, row, node: P.EntityNode, eid: str) -> bool:
    for st in node.tail.chain:
        if not isinstance(st, P.GreenStage) or st.check is None:
            continue
        ctx = matcher.ctx(row, matcher.entity_props(eid))
        try:
            val = exprs.evaluate(st.expr, ctx)
        except V.V1TypeError:
            return False
        if not exprs.eval_check(st.check, val, ctx):
            return False
    return True


def _segments_from(matcher, row, chain, start: str):
    """Segment assignments of one linear sub-pattern anchored at start."""
    first = chain[0][0]
    if not (_entity_ok(matcher, first, start)
            and _greens_ok(matcher, row, first, start)):
        return []
    results = []

    def walk(idx, current, ents, rels):
        node, conn = chain[idx]
        if conn is None:
            results.append((tuple(ents), tuple(rels)))
            return
        spec = conn.rel
        direction = {"forward": "out", "backward": "in",
                     "either": "any"}[spec.direction]
        for rel, neighbor in adjacent(matcher.g, current, spec.type_name,
                                      direction):
            if rel.id in rels or neighbor in ents:
                continue
            target = conn.target
            if not (_entity_ok(matcher, target, neighbor)
                    and _greens_ok(matcher, row, target, neighbor)):
                continue
            if conn.chain and not _rel_greens_ok(matcher, row, conn, rel):
                continue
            walk(idx + 1, neighbor, ents + [neighbor], rels + [rel.id])

    walk(0, start, [start], [])
    return results


def _rel_greens_ok(matcher, row, conn: P.Connection, rel) -> bool:
    for st in conn.chain:
        if not isinstance(st, P.GreenStage) or st.check is None:
            continue
        props = rel.properties
        ctx = matcher.ctx(row, lambda name: props.get(name, V.EMPTY))
        try:
            val = exprs.evaluate(st.expr, ctx)
        except V.V1TypeError:
            return False
        if not exprs.eval_check(st.check, val, ctx):
            return False
    return True


def pattern_paths(matcher, row, src: str, pc) -> list:
    """(path binding, terminal) pairs decomposable into pattern segments."""
    spec = pc.conn.path
    upper = spec.length.upper_bound()
    rows = spec.patterns
    chains = []
    for prow in rows:
        chains.append(_linear_chain(prow.pattern))
    results = []
    budget = [0]

    def counts_final(counts) -> bool:
        return all(prow.count.admits(counts[i])
                   for i, prow in enumerate(rows))

    def counts_partial(counts) -> bool:
        for i, prow in enumerate(rows):
            c = prow.count
            if c.op in ("eq", "le") and counts[i] > c.n:
                return False
            if c.op == "lt" and counts[i] >= c.n:
                return False
        return True

    def try_finish(current, ents, rels, counts):
        if len(rels) >= 1 and spec.length.admits(len(rels)) and \
                counts_final(counts) and \
                matcher._accepts_terminal(pc, current):
            results.append(((tuple(ents), tuple(rels)), current))

    def dfs(current, ents, rels, counts):
        budget[0] += 1
        if budget[0] > matcher.caps.max_paths:
            from .matcher import ResourceLimit
            raise ResourceLimit("path budget exceeded")
        try_finish(current, ents, rels, counts)
        if len(rels) >= upper:
            return
        for i, chain in enumerate(chains):
            for seg_ents, seg_rels in _segments_from(matcher, row, chain,
                                                     current):
                new_ents = list(seg_ents[1:])
                if any(e in ents[1:] for e in new_ents) or \
                        any(r in rels for r in seg_rels):
                    continue
                if seg_ents[-1] == ents[0] and len(rels) + len(seg_rels) >= 1:
                    # closing back into the source ends the path
                    nc = list(counts)
                    nc[i] += 1
                    if len(rels) + len(seg_rels) <= upper:
                        try_finish(seg_ents[-1], ents + new_ents,
                                   rels + list(seg_rels), nc)
                    continue
                if ents[0] in new_ents[:-1]:
                    continue
                nc = list(counts)
                nc[i] += 1
                if not counts_partial(nc):
                    continue
                if len(rels) + len(seg_rels) > upper:
                    continue
                dfs(seg_ents[-1], ents + new_ents, rels + list(seg_rels), nc)
        if spec.others_allowed:
            for rel, neighbor in adjacent(matcher.g, current, None, "any"):
                if rel.id in rels or neighbor in ents[1:]:
                    continue
                if neighbor == ents[0]:
                    try_finish(neighbor, ents + [neighbor],
                               rels + [rel.id], counts)
                    continue
                if matcher.g.entities[neighbor].type_name == NULL_TYPE:
                    continue
                if len(rels) + 1 <= upper:
                    dfs(neighbor, ents + [neighbor], rels + [rel.id], counts)

    if src in matcher.g.entities:
        dfs(src, [src], [], [0] * len(rows))
    # a path assignment is its element sequence; drop duplicates
    seen = set()
    out = []
    for binding, terminal in sorted(results):
        if binding not in seen:
            seen.add(binding)
            out.append((binding, terminal))
    return out
