"""Canonical pattern serialization (inverse of parse)."""

from __future__ import annotations

import json

from .. import exprs
from . import ast as P


def _per_elem_json(elem):
    if isinstance(elem, tuple) and elem[0] == "product":
        return {"product": list(elem[1])}
    return elem


def _per_spec_json(spec):
    if spec is None:
        return None
    if isinstance(spec, str):
        return spec
    return [_per_elem_json(e) for e in spec]


def _of_json(of):
    if isinstance(of, tuple) and of[0] == "typetag":
        return {"typeTag": of[1]}
    return of


def _agg_json(st: P.AggStage) -> dict:
    out = {"kind": "agg", "family": st.family}
    if st.tag is not None:
        out["tag"] = st.tag
    per = _per_spec_json(st.per)
    if per is not None and per != []:
        out["per"] = per
    if st.family == "L1":
        out["count"] = _per_spec_json(st.count)
    if st.family in ("M1", "P1"):
        out["measure"] = _per_spec_json(st.count)
    if st.over is not None:
        out["over"] = st.over
    if st.aggop is not None:
        out["aggop"] = st.aggop
    if st.expr is not None:
        out["expr"] = exprs.expr_text(st.expr)
    if st.of is not None:
        out["of"] = _of_json(st.of)
    if st.select is not None:
        out["select"] = _per_elem_json(st.select) \
            if not isinstance(st.select, str) else st.select
    if st.minmax is not None:
        out["minmax"] = st.minmax
    if st.k is not None:
        out["k"] = st.k
    if st.all_but:
        out["allBut"] = True
    if st.check is not None:
        out["check"] = exprs.check_to_json(st.check)
    return out


def _stage_json(st: P.Stage) -> dict:
    if isinstance(st, P.GreenStage):
        out = {"kind": "expr", "tag": st.tag, "expr": exprs.expr_text(st.expr)}
        if st.one_value:
            out["oneValue"] = True
        if st.check is not None:
            out["check"] = exprs.check_to_json(st.check)
        return out
    if isinstance(st, P.AggStage):
        return _agg_json(st)
    if isinstance(st, P.SplitStage):
        if isinstance(st.by, tuple) and st.by[0] == "tag":
            by = {"tag": st.by[1]}
        elif isinstance(st.by, tuple) and st.by[0] == "typetag":
            by = {"typeTag": st.by[1]}
        else:
            by = exprs.expr_text(st.by)
        return {"kind": "split", "by": by,
                "body": [_stage_json(s) for s in st.body]}
    if isinstance(st, P.HQuantStage):
        out = {"kind": "hquant", "quant": st.quant}
        if st.n is not None:
            out["n"] = st.n
        if st.n2 is not None:
            out["n2"] = st.n2
        out["branches"] = [[_stage_json(s) for s in br] for br in st.branches]
        return out
    raise TypeError(st)


def _chain_json(chain) -> list:
    return [_stage_json(s) for s in chain]


def _entity_spec_json(spec: P.EntitySpec) -> dict:
    if isinstance(spec, P.ConcreteSpec):
        return {"kind": "concrete", "id": spec.entity_id, "type": spec.type_name}
    if isinstance(spec, P.TypedSpec):
        return {"kind": "typed", "type": spec.type_name}
    if isinstance(spec, P.EnsembleSpec):
        return {"kind": "ensemble", "name": spec.name}
    out: dict = {"kind": "untyped"}
    if spec.allowed is not None:
        out["allowedTypes"] = list(spec.allowed)
    if spec.disallowed is not None:
        out["disallowedTypes"] = list(spec.disallowed)
    if spec.allow_null is not None:
        out["allowNull"] = spec.allow_null
    if spec.type_tag is not None:
        out["typeTag"] = spec.type_tag
    if spec.type_equals is not None:
        out["typeEquals"] = spec.type_equals
    if spec.type_not_equals:
        out["typeNotEquals"] = list(spec.type_not_equals)
    return out


def _entity_json(node: P.EntityNode) -> dict:
    out = {"kind": "entity", "tag": node.tag,
           "entity": _entity_spec_json(node.spec)}
    if node.latent:
        out["latent"] = True
    if node.not_equal:
        out["notEqual"] = list(node.not_equal)
    if node.terminal:
        out["terminal"] = node.terminal
    if node.tail.chain:
        out["chain"] = _chain_json(node.tail.chain)
    if node.tail.next is not None:
        out["next"] = _next_json(node.tail.next)
    return out


def _length_json(spec: P.LengthSpec) -> dict:
    if spec.op in ("eq", "lt", "le"):
        return {"op": spec.op, "n": spec.n}
    if spec.op == "between":
        return {"op": "between", "n1": spec.n1, "n2": spec.n2}
    return {"op": "in", "values": list(spec.values)}


def _filter_json(f: P.ElementFilter) -> dict:
    if f.allowed is not None:
        return {"allowed": list(f.allowed)}
    out = []
    for c in f.counts:
        d = {"type": c.type_name, "op": c.op, "n": c.n}
        if c.direction:
            d["direction"] = c.direction
        out.append(d)
    return {"counts": out}


def _connection_json(conn: P.Connection) -> dict:
    out: dict = {"kind": conn.kind}
    if conn.kind == "rel":
        out["type"] = conn.rel.type_name
        out["direction"] = conn.rel.direction
    else:
        p = conn.path
        out["length"] = _length_json(p.length)
        if p.shortest:
            out["shortest"] = True
        if p.rels is not None:
            out["relConstraints"] = _filter_json(p.rels)
        if p.entities is not None:
            out["entityConstraints"] = _filter_json(p.entities)
        if p.patterns is not None:
            out["patterns"] = {
                "rows": [{"count": {"op": row.count.op, "n": row.count.n},
                          "pattern": pattern_to_json(row.pattern)}
                         for row in p.patterns],
                "othersAllowed": p.others_allowed}
    if conn.wrapper != P.WRAPPER_NONE:
        out["wrapper"] = conn.wrapper
    if conn.chain:
        out["chain"] = _chain_json(conn.chain)
    tgt = conn.target
    if isinstance(tgt, P.CombinerRef):
        out["target"] = {"kind": "combinerRef", "id": tgt.combiner_id}
    elif isinstance(tgt, P.EntityNode):
        out["target"] = _entity_json(tgt)
    elif isinstance(tgt, P.Quantifier):
        out["target"] = _quantifier_json(tgt)
    return out


def _next_json(nxt) -> dict:
    if isinstance(nxt, P.Connection):
        return _connection_json(nxt)
    return _quantifier_json(nxt)


def _branch_json(br) -> dict:
    if isinstance(br, P.Tail):
        if not br.chain and isinstance(br.next, (P.Connection, P.Quantifier)):
            return _next_json(br.next)
        out: dict = {"kind": "tail"}
        if br.chain:
            out["chain"] = _chain_json(br.chain)
        if br.next is not None:
            out["next"] = _next_json(br.next)
        return out
    if isinstance(br, P.EntityNode):
        return _entity_json(br)
    return _quantifier_json(br)


def _quantifier_json(q: P.Quantifier) -> dict:
    out: dict = {"kind": "quantifier", "quant": q.quant}
    if q.n is not None:
        out["n"] = q.n
    if q.n2 is not None:
        out["n2"] = q.n2
    if q.wrapper != P.WRAPPER_NONE:
        out["wrapper"] = q.wrapper
    if q.chain:
        out["chain"] = _chain_json(q.chain)
    out["branches"] = [_branch_json(br) for br in q.branches]
    return out


def pattern_to_json(pattern: P.Pattern) -> dict:
    out: dict = {}
    if pattern.chain:
        out["chain"] = _chain_json(pattern.chain)
    if isinstance(pattern.start, P.EntityNode):
        out["start"] = _entity_json(pattern.start)
    else:
        out["start"] = _quantifier_json(pattern.start)
    if pattern.combiners:
        out["combiners"] = {cid: _entity_json(node)
                            for cid, node in sorted(pattern.combiners.items())}
    return out


def serialize_pattern(pattern: P.Pattern) -> str:
    """Canonical document; parse(serialize(p)) rebuilds p."""
    return json.dumps(pattern_to_json(pattern), indent=2, sort_keys=False) + "\n"
