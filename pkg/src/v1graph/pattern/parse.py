"""Pattern document parser: JSON tree -> AST.

Structural (local) invariants are enforced here; whole-pattern semantic
rules live in the validator. The format is documented in
docs/pattern-format.md.
"""

from __future__ import annotations

import json
from typing import Optional, Union

from .. import exprs
from . import ast as P


class PatternSyntaxError(ValueError):
    code = "SyntaxError"


class UnknownNodeKind(PatternSyntaxError):
    code = "UnknownNodeKind"


class BadQuantifierParam(PatternSyntaxError):
    code = "BadQuantifierParam"


class MissingPathUpperBound(PatternSyntaxError):
    code = "MissingPathUpperBound"


def _err(cls, msg, ref):
    return cls(f"{msg} (at {ref})")


def _expr(text, ref) -> exprs.Expr:
    if not isinstance(text, str):
        raise _err(PatternSyntaxError, f"expected an expression string, got {text!r}", ref)
    try:
        return exprs.parse_expr(text)
    except exprs.ExprSyntaxError as exc:
        raise _err(PatternSyntaxError, str(exc), ref) from None


def _check(doc, ref) -> Optional[exprs.Check]:
    if doc is None:
        return None
    try:
        return exprs.parse_check(doc)
    except (exprs.ExprSyntaxError, KeyError, TypeError) as exc:
        raise _err(PatternSyntaxError, f"bad constraint: {exc}", ref) from None


def _int(doc, key, ref, required=True) -> Optional[int]:
    v = doc.get(key)
    if v is None:
        if required:
            raise _err(PatternSyntaxError, f"missing {key!r}", ref)
        return None
    if isinstance(v, bool) or not isinstance(v, int):
        raise _err(PatternSyntaxError, f"{key!r} must be an integer", ref)
    return v


# ---------------------------------------------------------------------------
# per / count / select / measure specs


def _per_elem(doc, ref):
    if isinstance(doc, str):
        return doc
    if isinstance(doc, dict) and "product" in doc:
        tags = doc["product"]
        if not isinstance(tags, list) or len(tags) < 2 or \
                not all(isinstance(t, str) for t in tags):
            raise _err(PatternSyntaxError, "bad product element", ref)
        return ("product", tuple(tags))
    raise _err(PatternSyntaxError, f"bad tag element {doc!r}", ref)


def _per_spec(doc, ref, single=False):
    if doc is None:
        return None
    if doc in ("left", "right", "pair"):
        return doc
    if single:
        return _per_elem(doc, ref)
    if isinstance(doc, list):
        if not doc:
            raise _err(PatternSyntaxError, "empty tag list", ref)
        return [_per_elem(e, ref) for e in doc]
    return [_per_elem(doc, ref)]


def _of_spec(doc, ref):
    if isinstance(doc, int) and not isinstance(doc, bool):
        return doc
    if isinstance(doc, dict) and "typeTag" in doc:
        return ("typetag", doc["typeTag"])
    raise _err(PatternSyntaxError, f"bad tag reference {doc!r}", ref)


# ---------------------------------------------------------------------------
# Stages

_L_FAMS = ("L1", "L2", "L3", "L4")
_M_FAMS = ("M1", "M2", "M3", "M4")
_P_FAMS = ("P1", "P2", "P3", "P4")


def _agg_stage(doc, ref) -> P.AggStage:
    fam = doc.get("family")
    if fam not in P.AGG_FAMILIES:
        raise _err(UnknownNodeKind, f"unknown aggregator family {fam!r}", ref)
    st = P.AggStage(family=fam, ref=ref)
    st.per = _per_spec(doc.get("per"), ref)
    st.check = _check(doc.get("check"), ref)
    if fam in _L_FAMS and st.per is None:
        # a missing top part on an L aggregator means the global T
        st.per = []
    if fam in _L_FAMS or fam == "S1" or fam == "values":
        st.tag = _int(doc, "tag", ref)
    if fam in _M_FAMS or fam == "R1" or fam in _P_FAMS:
        st.k = _int(doc, "k", ref)
        if st.k is None or st.k < 1:
            raise _err(PatternSyntaxError, "k must be a positive integer", ref)
        st.all_but = bool(doc.get("allBut", False))
        st.minmax = doc.get("minmax")
        if st.minmax not in ("min", "max"):
            raise _err(PatternSyntaxError, "minmax must be min or max", ref)
    if fam in ("M1", "M2", "M3", "M4"):
        st.select = _per_spec(doc.get("select"), ref, single=True)
        if st.select is None:
            raise _err(PatternSyntaxError, f"{fam} requires select", ref)
    if fam == "L1":
        st.count = _per_spec(doc.get("count"), ref)
        if st.count is None:
            raise _err(PatternSyntaxError, "L1 requires count", ref)
    if fam in ("M1", "P1"):
        st.count = _per_spec(doc.get("measure"), ref)
        if st.count is None:
            raise _err(PatternSyntaxError, f"{fam} requires measure", ref)
    if fam in ("L2", "M2"):
        st.over = doc.get("over")
        if st.over not in ("relationships", "paths"):
            raise _err(PatternSyntaxError,
                       f"{fam} over must be relationships or paths", ref)
    if fam in ("L3", "M3", "P3", "R1"):
        st.expr = _expr(doc.get("expr"), ref)
    if fam in ("L3", "L4", "M3", "P3"):
        st.aggop = doc.get("aggop")
        if fam in ("L3", "L4") and st.aggop not in P.AGG_OPS:
            raise _err(PatternSyntaxError, f"bad aggop {st.aggop!r}", ref)
        if fam in ("M3", "P3") and st.aggop not in ("min", "max", "avg", "sum",
                                                    "distinct"):
            raise _err(PatternSyntaxError, f"bad aggop {st.aggop!r}", ref)
    if fam in ("L4", "M4", "P4", "values"):
        st.of = _of_spec(doc.get("of"), ref)
    if fam in ("L3", "L4") and st.aggop in ("list", "set") and st.check:
        raise _err(PatternSyntaxError,
                   f"{st.aggop} aggregation takes no constraint", ref)
    return st


def _stage(doc, ref) -> P.Stage:
    if not isinstance(doc, dict):
        raise _err(PatternSyntaxError, "stage must be an object", ref)
    kind = doc.get("kind")
    if kind == "expr":
        tag = _int(doc, "tag", ref)
        return P.GreenStage(tag, _expr(doc.get("expr"), ref),
                            _check(doc.get("check"), ref),
                            bool(doc.get("oneValue", False)), ref)
    if kind == "agg":
        return _agg_stage(doc, ref)
    if kind == "split":
        by = doc.get("by")
        if isinstance(by, str):
            crit = _expr(by, ref)
        elif isinstance(by, dict) and "tag" in by:
            crit = ("tag", by["tag"])
        elif isinstance(by, dict) and "typeTag" in by:
            crit = ("typetag", by["typeTag"])
        else:
            raise _err(PatternSyntaxError, f"bad split criterion {by!r}", ref)
        body = _chain(doc.get("body"), f"{ref}.body")
        return P.SplitStage(crit, body, ref)
    if kind == "hquant":
        quant = doc.get("quant")
        if quant not in P.QUANT_KINDS or quant == "all":
            raise _err(BadQuantifierParam,
                       f"bad horizontal quantifier {quant!r}", ref)
        branches = doc.get("branches")
        if not isinstance(branches, list) or len(branches) < 2:
            raise _err(PatternSyntaxError,
                       "horizontal quantifier needs 2+ branches", ref)
        chains = [_chain(br, f"{ref}.branches[{i}]")
                  for i, br in enumerate(branches)]
        st = P.HQuantStage(quant, doc.get("n"), doc.get("n2"), chains, ref)
        _check_quant_params(quant, st.n, st.n2, len(chains), ref)
        return st
    raise _err(UnknownNodeKind, f"unknown stage kind {kind!r}", ref)


def _chain(doc, ref) -> list:
    if doc is None:
        return []
    if not isinstance(doc, list):
        raise _err(PatternSyntaxError, "chain must be an array", ref)
    return [_stage(s, f"{ref}[{i}]") for i, s in enumerate(doc)]


# ---------------------------------------------------------------------------
# Entities, connections, quantifiers


def _entity_spec(doc, ref) -> P.EntitySpec:
    if not isinstance(doc, dict):
        raise _err(PatternSyntaxError, "entity spec must be an object", ref)
    kind = doc.get("kind")
    if kind == "concrete":
        if not doc.get("id") or not doc.get("type"):
            raise _err(PatternSyntaxError,
                       "concrete entity requires id and type", ref)
        return P.ConcreteSpec(doc["id"], doc["type"])
    if kind == "typed":
        if not doc.get("type"):
            raise _err(PatternSyntaxError, "typed entity requires type", ref)
        return P.TypedSpec(doc["type"])
    if kind == "ensemble":
        if not doc.get("name"):
            raise _err(PatternSyntaxError, "ensemble entity requires name", ref)
        return P.EnsembleSpec(doc["name"])
    if kind == "untyped":
        allowed = doc.get("allowedTypes")
        disallowed = doc.get("disallowedTypes")
        if allowed is not None and disallowed is not None:
            raise _err(PatternSyntaxError,
                       "allowedTypes and disallowedTypes are exclusive", ref)
        tne = doc.get("typeNotEquals", ())
        return P.UntypedSpec(
            tuple(allowed) if allowed is not None else None,
            tuple(disallowed) if disallowed is not None else None,
            doc.get("allowNull"),
            doc.get("typeTag"),
            doc.get("typeEquals"),
            tuple(tne) if tne else ())
    raise _err(UnknownNodeKind, f"unknown entity kind {kind!r}", ref)


_TAG_OK = set("ABCDEFGHIJKLMNOPQRSTUVWXYZ")


def _entity(doc, ref) -> P.EntityNode:
    tag = doc.get("tag")
    if not isinstance(tag, str) or not tag or not set(tag) <= _TAG_OK:
        raise _err(PatternSyntaxError, f"bad entity tag {tag!r}", ref)
    spec = _entity_spec(doc.get("entity"), f"{ref}.entity")
    node = P.EntityNode(
        tag=tag, spec=spec, latent=bool(doc.get("latent", False)),
        not_equal=tuple(doc.get("notEqual", ())),
        terminal=doc.get("terminal"), ref=ref)
    if node.terminal not in (None, "left", "right"):
        raise _err(PatternSyntaxError, f"bad terminal {node.terminal!r}", ref)
    node.tail = _tail(doc, ref)
    return node


def _tail(doc, ref) -> P.Tail:
    chain = _chain(doc.get("chain"), f"{ref}.chain")
    nxt_doc = doc.get("next")
    nxt = None
    if nxt_doc is not None:
        nxt = _connection_or_quant(nxt_doc, f"{ref}.next")
    return P.Tail(chain, nxt)


def _length_spec(doc, ref) -> P.LengthSpec:
    if not isinstance(doc, dict):
        raise _err(MissingPathUpperBound, "path requires a length constraint", ref)
    op = doc.get("op")
    if op in ("eq", "lt", "le"):
        n = _int(doc, "n", ref)
        if n < 1 or (op == "lt" and n < 2):
            raise _err(PatternSyntaxError, "bad path length bound", ref)
        return P.LengthSpec(op, n=n)
    if op == "between":
        n1, n2 = _int(doc, "n1", ref), _int(doc, "n2", ref)
        if not (1 <= n1 <= n2):
            raise _err(PatternSyntaxError, "bad path length range", ref)
        return P.LengthSpec(op, n1=n1, n2=n2)
    if op == "in":
        vals = doc.get("values")
        if not isinstance(vals, list) or not vals or \
                not all(isinstance(v, int) and v >= 1 for v in vals):
            raise _err(PatternSyntaxError, "bad path length set", ref)
        return P.LengthSpec(op, values=tuple(sorted(set(vals))))
    raise _err(MissingPathUpperBound,
               "path length constraint must bound the length above", ref)


def _element_filter(doc, ref, with_direction) -> Optional[P.ElementFilter]:
    if doc is None:
        return None
    if "allowed" in doc:
        allowed = doc["allowed"]
        if not isinstance(allowed, list) or not allowed:
            raise _err(PatternSyntaxError, "bad allowed list", ref)
        return P.ElementFilter(allowed=tuple(allowed))
    if "counts" in doc:
        counts = []
        for i, c in enumerate(doc["counts"]):
            op = c.get("op")
            if op not in ("eq", "ne", "lt", "le", "gt", "ge"):
                raise _err(PatternSyntaxError, f"bad count op {op!r}", ref)
            direction = c.get("direction")
            if direction is not None and (not with_direction or direction not in
                                          ("forward", "backward")):
                raise _err(PatternSyntaxError, "bad count direction", ref)
            counts.append(P.CountConstraint(c["type"], op,
                                            _int(c, "n", f"{ref}[{i}]"), direction))
        return P.ElementFilter(counts=tuple(counts))
    raise _err(PatternSyntaxError, "element filter needs allowed or counts", ref)


def _path_spec(doc, ref) -> P.PathSpec:
    spec = P.PathSpec(
        length=_length_spec(doc.get("length"), ref),
        shortest=bool(doc.get("shortest", False)),
        rels=_element_filter(doc.get("relConstraints"), f"{ref}.relConstraints",
                             with_direction=True),
        entities=_element_filter(doc.get("entityConstraints"),
                                 f"{ref}.entityConstraints", with_direction=False))
    pats = doc.get("patterns")
    if pats is not None:
        rows = []
        for i, row in enumerate(pats.get("rows", ())):
            cnt = row.get("count", {})
            op = cnt.get("op", "ge")
            rowref = f"{ref}.patterns[{i}]"
            if op not in ("eq", "ne", "lt", "le", "gt", "ge"):
                raise _err(PatternSyntaxError, f"bad count op {op!r}", rowref)
            count = P.CountConstraint(f"row{i}", op, _int(cnt, "n", rowref))
            sub = parse_pattern_doc(row.get("pattern"), f"{rowref}.pattern")
            rows.append(P.PathPatternRow(count, sub))
        if not rows:
            raise _err(PatternSyntaxError, "patterns table has no rows", ref)
        spec.patterns = tuple(rows)
        spec.others_allowed = bool(pats.get("othersAllowed", False))
    return spec


def _connection_or_quant(doc, ref):
    kind = doc.get("kind") if isinstance(doc, dict) else None
    if kind == "quantifier":
        return _quantifier(doc, ref, placement="entity")
    if kind in ("rel", "path"):
        return _connection(doc, ref)
    raise _err(UnknownNodeKind, f"expected rel/path/quantifier, got {kind!r}", ref)


def _connection(doc, ref) -> P.Connection:
    kind = doc["kind"]
    wrapper = doc.get("wrapper", P.WRAPPER_NONE)
    if wrapper not in (P.WRAPPER_NONE, P.WRAPPER_X, P.WRAPPER_NC, P.WRAPPER_O):
        raise _err(PatternSyntaxError, f"bad wrapper {wrapper!r}", ref)
    conn = P.Connection(kind=kind, wrapper=wrapper, ref=ref)
    if kind == "rel":
        direction = doc.get("direction", "forward")
        if direction not in ("forward", "backward", "either"):
            raise _err(PatternSyntaxError, f"bad direction {direction!r}", ref)
        if not doc.get("type"):
            raise _err(PatternSyntaxError, "relationship requires type", ref)
        conn.rel = P.RelSpec(doc["type"], direction)
    else:
        conn.path = _path_spec(doc, ref)
    conn.chain = _chain(doc.get("chain"), f"{ref}.chain")
    tgt = doc.get("target")
    if tgt is None:
        raise _err(PatternSyntaxError, "connection requires a target", ref)
    tref = f"{ref}.target"
    tkind = tgt.get("kind") if isinstance(tgt, dict) else None
    if tkind == "combinerRef":
        conn.target = P.CombinerRef(tgt["id"])
    elif tkind == "entity":
        conn.target = _entity(tgt, tref)
    elif tkind == "quantifier":
        conn.target = _quantifier(tgt, tref, placement="relationship")
    else:
        raise _err(UnknownNodeKind, f"bad connection target {tkind!r}", tref)
    return conn


def _check_quant_params(quant, n, n2, b, ref):
    def need(cond, what):
        if not cond:
            raise _err(BadQuantifierParam, f"{quant}: {what} (b={b})", ref)

    if quant in ("all", "some", "notall", "none"):
        need(n is None and n2 is None, "takes no parameter")
    elif quant == "gt":
        need(isinstance(n, int) and 0 <= n <= b - 1, "requires n in [0, b-1]")
    elif quant in ("ge", "eq", "le"):
        need(isinstance(n, int) and 1 <= n <= b, "requires n in [1, b]")
    elif quant == "lt":
        need(isinstance(n, int) and 2 <= n <= b, "requires n in [2, b]")
    elif quant == "ne":
        need(isinstance(n, int) and 0 <= n <= b, "requires n in [0, b]")
    elif quant == "range":
        need(isinstance(n, int) and isinstance(n2, int) and 1 <= n <= b
             and 2 <= n2 <= b and n < n2, "requires 1<=n1<n2<=b")
    elif quant == "outside":
        need(isinstance(n, int) and isinstance(n2, int) and 2 <= n <= b - 1
             and 3 <= n2 <= b and n < n2, "requires 2<=n1<n2 within b")


def _quantifier(doc, ref, placement) -> P.Quantifier:
    quant = doc.get("quant")
    if quant not in P.QUANT_KINDS:
        raise _err(BadQuantifierParam, f"unknown quantifier {quant!r}", ref)
    wrapper = doc.get("wrapper", P.WRAPPER_NONE)
    if wrapper not in (P.WRAPPER_NONE, P.WRAPPER_O):
        raise _err(PatternSyntaxError,
                   "only O may wrap a quantifier", ref)
    if wrapper == P.WRAPPER_O and placement != "entity":
        raise _err(PatternSyntaxError,
                   "O wraps a quantifier only after an entity", ref)
    branches_doc = doc.get("branches")
    if not isinstance(branches_doc, list) or len(branches_doc) < 2:
        raise _err(PatternSyntaxError, "quantifier needs 2+ branches", ref)
    q = P.Quantifier(quant, doc.get("n"), doc.get("n2"), wrapper,
                     _chain(doc.get("chain"), f"{ref}.chain"), [], ref)
    for i, br in enumerate(branches_doc):
        bref = f"{ref}.branches[{i}]"
        bkind = br.get("kind") if isinstance(br, dict) else None
        if placement == "entity":
            if bkind in ("rel", "path"):
                q.branches.append(P.Tail([], _connection(br, bref)))
            elif bkind == "quantifier":
                q.branches.append(P.Tail([], _quantifier(br, bref, "entity")))
            elif bkind == "tail" or (bkind is None and isinstance(br, dict)):
                q.branches.append(_tail(br, bref))
            else:
                raise _err(UnknownNodeKind, f"bad branch start {bkind!r}", bref)
        else:  # after a relationship / at the pattern start
            if bkind == "entity":
                q.branches.append(_entity(br, bref))
            elif bkind == "quantifier":
                q.branches.append(_quantifier(br, bref, placement))
            else:
                raise _err(UnknownNodeKind,
                           f"branch must start with an entity or quantifier "
                           f"here, got {bkind!r}", bref)
    # O-wrapped branches do not count toward the quantifier arity
    b_eff = 0
    for br in q.branches:
        nxt = br.next if isinstance(br, P.Tail) else None
        if isinstance(br, P.Tail) and isinstance(nxt, P.Connection) \
                and nxt.wrapper == P.WRAPPER_O:
            continue
        if isinstance(br, P.Tail) and isinstance(nxt, P.Quantifier) \
                and nxt.wrapper == P.WRAPPER_O:
            continue
        b_eff += 1
    _check_quant_params(quant, q.n, q.n2, b_eff, ref)
    return q


def parse_pattern_doc(doc, ref="pattern") -> P.Pattern:
    if not isinstance(doc, dict):
        raise _err(PatternSyntaxError, "pattern must be a JSON object", ref)
    start_doc = doc.get("start")
    if not isinstance(start_doc, dict):
        raise _err(PatternSyntaxError, "pattern requires a start node", ref)
    combiners = {}
    for cid, cdoc in (doc.get("combiners") or {}).items():
        combiners[cid] = _entity(cdoc, f"{ref}.combiners[{cid}]")
    kind = start_doc.get("kind")
    if kind == "entity":
        start = _entity(start_doc, f"{ref}.start")
    elif kind == "quantifier":
        start = _quantifier(start_doc, f"{ref}.start", placement="start")
    else:
        raise _err(UnknownNodeKind,
                   f"pattern must start with an entity or quantifier, "
                   f"got {kind!r}", f"{ref}.start")
    pattern = P.Pattern(start=start,
                        chain=_chain(doc.get("chain"), f"{ref}.chain"),
                        combiners=combiners)
    _resolve_combiner_refs(pattern, ref)
    return pattern


def _resolve_combiner_refs(pattern: P.Pattern, ref):
    used: dict[str, int] = {}
    for conn in P.iter_connections(pattern):
        if isinstance(conn.target, P.CombinerRef):
            cid = conn.target.combiner_id
            if cid not in pattern.combiners:
                raise _err(PatternSyntaxError,
                           f"unknown combiner id {cid!r}", conn.ref)
            used[cid] = used.get(cid, 0) + 1
    for cid in pattern.combiners:
        if used.get(cid, 0) < 2:
            raise _err(PatternSyntaxError,
                       f"combiner {cid!r} must join 2+ branches", ref)


def parse_pattern(document: bytes | str | dict, schema=None) -> P.Pattern:
    """Parse a pattern document; schema-aware checks live in the validator."""
    if isinstance(document, (bytes, str)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise PatternSyntaxError(f"invalid JSON: {exc}") from None
    else:
        doc = document
    return parse_pattern_doc(doc)
