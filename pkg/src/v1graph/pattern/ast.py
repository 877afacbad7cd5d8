"""Pattern abstract syntax.

A pattern is a DAG read left to right: it starts with an entity (or a
quantifier fanning out to entities), and continues through relationships
and paths, quantifiers, and negation/optional wrappers. Constraint and
aggregation stages hang off entities, relationships, quantifier inputs, or
the query start in ordered chains.

Positions: every node and stage gets a dotted ``ref`` string assigned at
parse time (e.g. ``start.next.target.chain[0]``). Refs are stable across
parse/serialize round-trips and order diagnostics deterministically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .. import exprs

WRAPPER_NONE = "none"
WRAPPER_X = "X"           # no-existence
WRAPPER_NC = "NC"         # no-connection
WRAPPER_O = "O"           # optional

QUANT_KINDS = ("all", "some", "gt", "ge", "notall", "none", "eq", "lt", "le",
               "ne", "range", "outside")
AGG_FAMILIES = ("L1", "L2", "L3", "L4", "M1", "M2", "M3", "M4", "R1",
                "S1", "P1", "P2", "P3", "P4", "values")
AGG_OPS = ("min", "max", "avg", "sum", "distinct", "list", "set")


# ---------------------------------------------------------------------------
# Entity specs


@dataclass(eq=False)
class ConcreteSpec:
    entity_id: str
    type_name: str


@dataclass(eq=False)
class TypedSpec:
    type_name: str        # an entity type, a logical entity type, or "Null"


@dataclass(eq=False)
class UntypedSpec:
    allowed: Optional[tuple[str, ...]] = None
    disallowed: Optional[tuple[str, ...]] = None
    allow_null: Optional[bool] = None
    type_tag: Optional[int] = None          # <ett> defined on this node
    type_equals: Optional[int] = None       # type must equal <ett>'s type
    type_not_equals: tuple[int, ...] = ()   # type must differ from these


@dataclass(eq=False)
class EnsembleSpec:
    name: str


EntitySpec = Union[ConcreteSpec, TypedSpec, UntypedSpec, EnsembleSpec]


# ---------------------------------------------------------------------------
# Chain stages


@dataclass(eq=False)
class GreenStage:
    """Expression tag definition with an optional constraint."""

    tag: int
    expr: exprs.Expr
    check: Optional[exprs.Check] = None
    one_value: bool = False
    ref: str = ""


# per/count/measure element: an entity tag or a Cartesian product of tags
PerElem = Union[str, tuple]      # "A" or ("product", ("A", "B"))
# a per/select/measure spec: positional shorthand or explicit element list
PerSpec = Union[str, list, None]  # "left" | "right" | "pair" | [PerElem...]


@dataclass(eq=False)
class AggStage:
    family: str
    tag: Optional[int] = None               # {at}/{st} for L*/S1/values
    per: PerSpec = None                     # T
    count: PerSpec = None                   # L1's B
    over: Optional[str] = None              # L2/M2: relationships|paths
    aggop: Optional[str] = None             # L3/L4/M3/P3
    expr: Optional[exprs.Expr] = None       # relExpr for L3/M3/R1/P3
    of: Optional[object] = None             # tag int or ("typetag", i)
    select: PerSpec = None                  # M*'s B
    minmax: Optional[str] = None
    k: Optional[int] = None
    all_but: bool = False
    check: Optional[exprs.Check] = None
    ref: str = ""


@dataclass(eq=False)
class SplitStage:
    by: object                   # exprs.Expr | ("tag", i) | ("typetag", i)
    body: list = field(default_factory=list)
    ref: str = ""


@dataclass(eq=False)
class HQuantStage:
    quant: str
    n: Optional[int] = None
    n2: Optional[int] = None
    branches: list = field(default_factory=list)   # list of stage chains
    ref: str = ""


Stage = Union[GreenStage, AggStage, SplitStage, HQuantStage]


# ---------------------------------------------------------------------------
# Structure


@dataclass(eq=False)
class LengthSpec:
    op: str                      # eq | lt | le | between | in
    n: Optional[int] = None
    n1: Optional[int] = None
    n2: Optional[int] = None
    values: Optional[tuple[int, ...]] = None

    def upper_bound(self) -> int:
        if self.op == "eq":
            return self.n
        if self.op == "lt":
            return self.n - 1
        if self.op == "le":
            return self.n
        if self.op == "between":
            return self.n2
        return max(self.values)

    def admits(self, length: int) -> bool:
        if self.op == "eq":
            return length == self.n
        if self.op == "lt":
            return 1 <= length < self.n
        if self.op == "le":
            return 1 <= length <= self.n
        if self.op == "between":
            return self.n1 <= length <= self.n2
        return length in self.values


@dataclass(eq=False)
class CountConstraint:
    type_name: str
    op: str                      # eq | ne | lt | le | gt | ge
    n: int
    direction: Optional[str] = None    # relationship counts may be directed

    def admits(self, count: int) -> bool:
        return {"eq": count == self.n, "ne": count != self.n,
                "lt": count < self.n, "le": count <= self.n,
                "gt": count > self.n, "ge": count >= self.n}[self.op]


@dataclass(eq=False)
class ElementFilter:
    """Allowed type list, or per-type count constraints."""

    allowed: Optional[tuple[str, ...]] = None
    counts: Optional[tuple[CountConstraint, ...]] = None


@dataclass(eq=False)
class PathPatternRow:
    count: CountConstraint       # type_name unused; bound to the row index
    pattern: "Pattern"           # with left/right terminals marked


@dataclass(eq=False)
class RelSpec:
    type_name: str
    direction: str               # forward | backward | either


@dataclass(eq=False)
class PathSpec:
    length: LengthSpec
    shortest: bool = False
    rels: Optional[ElementFilter] = None
    entities: Optional[ElementFilter] = None
    patterns: Optional[tuple[PathPatternRow, ...]] = None
    others_allowed: bool = True


@dataclass(eq=False)
class CombinerRef:
    combiner_id: str


@dataclass(eq=False)
class Connection:
    kind: str                    # rel | path
    rel: Optional[RelSpec] = None
    path: Optional[PathSpec] = None
    wrapper: str = WRAPPER_NONE
    chain: list = field(default_factory=list)
    target: Union["EntityNode", "Quantifier", CombinerRef, None] = None
    ref: str = ""


@dataclass(eq=False)
class Tail:
    """Continuation on an entity: green chain plus what follows."""

    chain: list = field(default_factory=list)
    next: Union[Connection, "Quantifier", None] = None


@dataclass(eq=False)
class EntityNode:
    tag: str
    spec: EntitySpec
    latent: bool = False                    # explicit latent mark
    not_equal: tuple[str, ...] = ()
    tail: Tail = field(default_factory=Tail)
    terminal: Optional[str] = None          # left | right, inside path patterns
    ref: str = ""


@dataclass(eq=False)
class Quantifier:
    quant: str
    n: Optional[int] = None
    n2: Optional[int] = None
    wrapper: str = WRAPPER_NONE             # O only, after an entity
    chain: list = field(default_factory=list)   # stages on the quantifier input
    branches: list = field(default_factory=list)
    # branch contents: Tail (after an entity) or EntityNode/Quantifier
    # (after a relationship or at the pattern start)
    ref: str = ""


@dataclass(eq=False)
class Pattern:
    start: Union[EntityNode, Quantifier]
    chain: list = field(default_factory=list)    # stages below the query start
    combiners: dict[str, EntityNode] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Traversal helpers


def iter_entity_nodes(p: Pattern):
    """All entity nodes in document order, combiner targets once."""
    seen: set[int] = set()

    def from_target(t):
        if t is None or isinstance(t, CombinerRef):
            return
        yield from from_node(t)

    def from_node(node):
        if isinstance(node, EntityNode):
            if id(node) in seen:
                return
            seen.add(id(node))
            yield node
            yield from from_tail(node.tail)
        elif isinstance(node, Quantifier):
            for br in node.branches:
                if isinstance(br, Tail):
                    yield from from_tail(br)
                else:
                    yield from from_node(br)

    def from_tail(tail: Tail):
        nxt = tail.next
        if isinstance(nxt, Connection):
            yield from from_target(nxt.target)
        elif isinstance(nxt, Quantifier):
            yield from from_node(nxt)

    yield from from_node(p.start)
    for node in p.combiners.values():
        yield from from_node(node)


def iter_connections(p: Pattern):
    """All relationship/path connections in document order."""
    for conn, _host in iter_connections_with_host(p):
        yield conn


def iter_connections_with_host(p: Pattern):
    """(connection, entity node left of it); the host is None when the
    connection follows a relationship-side quantifier branch."""

    def from_node(node, host):
        if isinstance(node, EntityNode):
            yield from from_tail(node.tail, node)
        elif isinstance(node, Quantifier):
            for br in node.branches:
                if isinstance(br, Tail):
                    yield from from_tail(br, host)
                else:
                    yield from from_node(br, host)

    def from_tail(tail, host):
        nxt = tail.next
        if isinstance(nxt, Connection):
            yield nxt, host
            tgt = nxt.target
            if tgt is not None and not isinstance(tgt, CombinerRef):
                yield from from_node(tgt, tgt if isinstance(tgt, EntityNode) else host)
        elif isinstance(nxt, Quantifier):
            yield from from_node(nxt, host)

    yield from from_node(p.start, None)
    for node in p.combiners.values():
        yield from from_node(node, node)


def iter_stages(chain):
    """All stages under a chain, including split bodies and hquant branches."""
    for stage in chain:
        yield stage
        if isinstance(stage, SplitStage):
            yield from iter_stages(stage.body)
        elif isinstance(stage, HQuantStage):
            for br in stage.branches:
                yield from iter_stages(br)


def iter_all_chains(p: Pattern):
    """(chain, host) pairs: host is 'start', an EntityNode, a Connection or
    a Quantifier."""
    yield p.chain, "start"

    def from_node(node):
        if isinstance(node, EntityNode):
            yield node.tail.chain, node
            yield from from_next(node.tail.next)
        elif isinstance(node, Quantifier):
            yield node.chain, node
            for br in node.branches:
                if isinstance(br, Tail):
                    yield br.chain, br
                    yield from from_next(br.next)
                else:
                    yield from from_node(br)

    def from_next(nxt):
        if isinstance(nxt, Connection):
            yield nxt.chain, nxt
            tgt = nxt.target
            if tgt is not None and not isinstance(tgt, CombinerRef):
                yield from from_node(tgt)
        elif isinstance(nxt, Quantifier):
            yield from from_node(nxt)

    yield from from_node(p.start)
    for node in p.combiners.values():
        yield from from_node(node)


def iter_all_stages(p: Pattern):
    for chain, _host in iter_all_chains(p):
        yield from iter_stages(chain)


def value_tag_stages(p: Pattern) -> dict[int, Stage]:
    """{xt}/{at}/{st} and values-count indexes -> defining stage."""
    out: dict[int, Stage] = {}
    for stage in iter_all_stages(p):
        tag = getattr(stage, "tag", None)
        if tag is not None and tag not in out:
            out[tag] = stage
    return out


def entity_tag_nodes(p: Pattern) -> dict[str, list[EntityNode]]:
    out: dict[str, list[EntityNode]] = {}
    for node in iter_entity_nodes(p):
        out.setdefault(node.tag, []).append(node)
    return out


def type_tag_nodes(p: Pattern) -> dict[int, EntityNode]:
    out: dict[int, EntityNode] = {}
    for node in iter_entity_nodes(p):
        spec = node.spec
        if isinstance(spec, UntypedSpec) and spec.type_tag is not None:
            if spec.type_tag not in out:
                out[spec.type_tag] = node
    return out
