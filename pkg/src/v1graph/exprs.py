"""Expression text syntax: parsing, type inference, and evaluation.

Grammar (precedence low to high; comparisons are not expressions here --
they live in the constraint structure around an expression):

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | postfix
    postfix := primary ('.' NAME ( '(' args ')' )? )*
    primary := NUMBER | STRING | DATE | DATETIME | TAG | TYPETAG
             | NAME ( '(' args ')' )? | BACKTICK_NAME | '(' expr ')'

Tokens: DATE is ``YYYY-MM-DD``, DATETIME is ``YYYY-MM-DDThh:mm:ss``, TAG is
``{n}``, TYPETAG is ``<n>``, strings take single or double quotes, and
property names containing spaces are backtick-quoted.
"""

from __future__ import annotations

import datetime as _dt
import re
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

from . import values as V
from .values import Value, V1TypeError


class ExprSyntaxError(ValueError):
    pass


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Const:
    value: Value


@dataclass(frozen=True)
class Prop:
    name: str


@dataclass(frozen=True)
class TagRef:
    index: int


@dataclass(frozen=True)
class TypeTagRef:
    index: int


@dataclass(frozen=True)
class Member:
    base: "Expr"
    name: str


@dataclass(frozen=True)
class Call:
    base: Optional["Expr"]  # None for global functions
    name: str
    args: tuple


@dataclass(frozen=True)
class Bin:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


Expr = Union[Const, Prop, TagRef, TypeTagRef, Member, Call, Bin, Neg]


# ---------------------------------------------------------------------------
# Lexer / parser

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<datetime>\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2})
  | (?P<date>\d{4}-\d{2}-\d{2})
  | (?P<real>\d+\.\d+)
  | (?P<int>\d+)
  | (?P<string>'[^']*'|"[^"]*")
  | (?P<tag>\{\d+\})
  | (?P<typetag><\d+>)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<quoted>`[^`]+`)
  | (?P<punct>[-+*/().,])
""", re.VERBOSE)


def _tokenize(text: str) -> list[tuple[str, str]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ExprSyntaxError(f"bad character at {pos} in {text!r}")
        pos = m.end()
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group()))
    out.append(("eof", ""))
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None, text=None):
        k, t = self.toks[self.i]
        if (kind and k != kind) or (text and t != text):
            raise ExprSyntaxError(f"expected {kind or text} at token {t!r} in {self.text!r}")
        self.i += 1
        return t

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek()[0] != "eof":
            raise ExprSyntaxError(f"trailing input in {self.text!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek() == ("punct", "+") or self.peek() == ("punct", "-"):
            op = self.take()[0]
            e = Bin(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek() == ("punct", "*") or self.peek() == ("punct", "/"):
            op = self.take()[0]
            e = Bin(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.peek() == ("punct", "-"):
            self.take()
            return Neg(self.unary())
        return self.postfix()

    def postfix(self) -> Expr:
        e = self.primary()
        while self.peek() == ("punct", "."):
            self.take()
            name = self.take("name")
            if self.peek() == ("punct", "("):
                e = Call(e, name, tuple(self.args()))
            else:
                e = Member(e, name)
        return e

    def args(self) -> list[Expr]:
        self.take(text="(")
        out = []
        if self.peek() != ("punct", ")"):
            out.append(self.expr())
            while self.peek() == ("punct", ","):
                self.take()
                out.append(self.expr())
        self.take(text=")")
        return out

    def primary(self) -> Expr:
        kind, text = self.peek()
        if kind == "int":
            self.take()
            return Const(V.ivl(int(text)))
        if kind == "real":
            self.take()
            return Const(V.rvl(float(text)))
        if kind == "string":
            self.take()
            return Const(V.svl(text[1:-1]))
        if kind == "date":
            self.take()
            return Const(V.dvl(V.parse_date_text(text)))
        if kind == "datetime":
            self.take()
            return Const(V.dtvl(V.parse_datetime_text(text)))
        if kind == "tag":
            self.take()
            return TagRef(int(text[1:-1]))
        if kind == "typetag":
            self.take()
            return TypeTagRef(int(text[1:-1]))
        if kind == "quoted":
            self.take()
            return Prop(text[1:-1])
        if kind == "name":
            self.take()
            if self.peek() == ("punct", "("):
                return Call(None, text, tuple(self.args()))
            return Prop(text)
        if kind == "punct" and text == "(":
            self.take()
            e = self.expr()
            self.take(text=")")
            return e
        raise ExprSyntaxError(f"unexpected token {text!r} in {self.text!r}")


def parse_expr(text: str) -> Expr:
    return _Parser(text).parse()


_BARE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")


def _prop_text(name: str) -> str:
    return name if _BARE.match(name) else f"`{name}`"


def expr_text(e: Expr) -> str:
    """Canonical text of an expression (inverse of parse_expr)."""
    if isinstance(e, Const):
        v = e.value
        if v.kind == "int":
            return str(v.data)
        if v.kind == "real":
            return repr(v.data)
        if v.kind == "string":
            return "'" + v.data + "'"
        if v.kind == "date":
            return V.date_text(v.data)
        if v.kind == "datetime":
            return V.datetime_text(v.data)
        raise V1TypeError(f"unprintable constant kind {v.kind}")
    if isinstance(e, Prop):
        return _prop_text(e.name)
    if isinstance(e, TagRef):
        return "{%d}" % e.index
    if isinstance(e, TypeTagRef):
        return "<%d>" % e.index
    if isinstance(e, Member):
        return f"{_wrap(e.base)}.{e.name}"
    if isinstance(e, Call):
        args = ", ".join(expr_text(a) for a in e.args)
        if e.base is None:
            return f"{e.name}({args})"
        return f"{_wrap(e.base)}.{e.name}({args})"
    if isinstance(e, Bin):
        return f"{_wrap_bin(e.left, e.op, False)} {e.op} {_wrap_bin(e.right, e.op, True)}"
    if isinstance(e, Neg):
        return f"-{_wrap(e.arg)}"
    raise TypeError(e)


def _wrap(e: Expr) -> str:
    if isinstance(e, (Bin, Neg)):
        return f"({expr_text(e)})"
    return expr_text(e)


def _wrap_bin(e: Expr, parent_op: str, right: bool) -> str:
    if isinstance(e, Bin):
        tighter = parent_op in "+-" and e.op in "*/"
        if not tighter:
            return f"({expr_text(e)})"
    return expr_text(e)


def walk(e: Expr):
    yield e
    if isinstance(e, Member):
        yield from walk(e.base)
    elif isinstance(e, Call):
        if e.base is not None:
            yield from walk(e.base)
        for a in e.args:
            yield from walk(a)
    elif isinstance(e, Bin):
        yield from walk(e.left)
        yield from walk(e.right)
    elif isinstance(e, Neg):
        yield from walk(e.arg)


def referenced_tags(e: Expr) -> set[int]:
    return {n.index for n in walk(e) if isinstance(n, TagRef)}


def referenced_type_tags(e: Expr) -> set[int]:
    return {n.index for n in walk(e) if isinstance(n, TypeTagRef)}


def referenced_props(e: Expr) -> set[str]:
    return {n.name for n in walk(e) if isinstance(n, Prop)}


# ---------------------------------------------------------------------------
# Static typing

# A type descriptor is one of:
#   "int" | "real" | "string" | "date" | "datetime" | "duration"
#   ("list", elem) | ("set", elem)
#   ("composite", name, {sub: desc})
#   ("opaque", name)
# "unknown" is used for tags whose type cannot be pinned statically.

SCALARS = {"int", "real", "string", "date", "datetime", "duration"}


def is_numeric(t) -> bool:
    return t in ("int", "real", "unknown")


def is_ordered(t) -> bool:
    return t in ("int", "real", "date", "datetime", "duration", "unknown")


class TypeEnv:
    """Name resolution for one expression site.

    props maps property name -> type descriptor of the attached element;
    tags maps tag index -> type descriptor; type tags evaluate to strings.
    """

    def __init__(self, props: dict, tags: dict, has_now: bool = True):
        self.props = props
        self.tags = tags
        self.has_now = has_now


_FIELD_FUNCS = {
    "year": "int", "month": "int", "day": "int", "dayofweek": "int",
    "dayofyear": "int", "weekofyear": "int",
}
_EPOCH_FUNCS_DT = (
    "yearsSinceEpoch", "monthsSinceEpoch", "weeksSinceEpoch", "daysSinceEpoch",
    "hoursSinceEpoch", "minsSinceEpoch", "secsSinceEpoch",
    "hoursSinceMidnight", "minsSinceMidnight", "secsSinceMidnight",
)
_EPOCH_FUNCS_D = ("yearsSinceEpoch", "monthsSinceEpoch", "weeksSinceEpoch",
                  "daysSinceEpoch")


def infer_type(e: Expr, env: TypeEnv):
    """Static type of an expression, or raise V1TypeError."""
    if isinstance(e, Const):
        return e.value.kind
    if isinstance(e, Prop):
        if e.name not in env.props:
            raise V1TypeError(f"unknown property {e.name!r}")
        return env.props[e.name]
    if isinstance(e, TagRef):
        if e.index not in env.tags:
            raise V1TypeError(f"unknown tag {{{e.index}}}")
        return env.tags[e.index]
    if isinstance(e, TypeTagRef):
        return "string"
    if isinstance(e, Neg):
        t = infer_type(e.arg, env)
        if t not in ("int", "real", "duration", "unknown"):
            raise V1TypeError(f"cannot negate {t}")
        return t
    if isinstance(e, Bin):
        lt = infer_type(e.left, env)
        rt = infer_type(e.right, env)
        return _bin_type(e.op, lt, rt)
    if isinstance(e, Member):
        bt = infer_type(e.base, env)
        if isinstance(bt, tuple) and bt[0] == "composite" and e.name in bt[2]:
            return bt[2][e.name]
        return _fn_type(bt, e.name, (), env)
    if isinstance(e, Call):
        arg_types = tuple(infer_type(a, env) for a in e.args)
        if e.base is None:
            return _global_fn_type(e.name, arg_types, env)
        return _fn_type(infer_type(e.base, env), e.name, arg_types, env)
    raise TypeError(e)


def _bin_type(op, lt, rt):
    if lt == "unknown" or rt == "unknown":
        return "unknown"
    if op in ("+", "-", "*", "/") and is_numeric(lt) and is_numeric(rt):
        if op == "/":
            return "real"
        return "real" if "real" in (lt, rt) else "int"
    if op in ("+", "-") and lt in ("date", "datetime") and rt == "duration":
        return lt
    if op == "-" and lt == rt and lt in ("date", "datetime"):
        return "duration"
    if op in ("+", "-") and lt == rt == "duration":
        return "duration"
    if op == "+" and isinstance(lt, tuple) and lt[0] == "list" and lt == rt:
        return lt
    if op in ("union", "intersect", "minus") and isinstance(lt, tuple) \
            and lt[0] == "set" and lt == rt:
        return lt
    raise V1TypeError(f"no operator {op}({lt}, {rt})")


def _elem(t):
    return t[1] if isinstance(t, tuple) else "unknown"


def _fn_type(bt, name, arg_types, env):
    if bt == "unknown":
        return "unknown"
    if bt == "real" and name in ("floor", "ceil", "trunc", "round"):
        return "int"
    if bt in ("int", "real") and name == "mRound" and len(arg_types) == 1:
        if bt == "int" and arg_types[0] != "int":
            raise V1TypeError("int.mRound expects an int")
        return "real" if (bt == "real" and arg_types[0] == "real") else "int"
    if bt == "string":
        if name == "length":
            return "int"
        if name in ("toLower", "toUpper"):
            return "string"
    if bt == "datetime":
        if name == "date":
            return "date"
        if name in _FIELD_FUNCS or name in ("hour", "min", "sec"):
            return "int"
        if name in _EPOCH_FUNCS_DT:
            return "real"
    if bt == "date":
        if name in _FIELD_FUNCS:
            return "int"
        if name in _EPOCH_FUNCS_D:
            return "real"
    if bt == "duration" and name in ("seconds", "minutes", "hours", "days",
                                     "weeks", "months", "years"):
        return "real"
    if isinstance(bt, tuple) and bt[0] == "composite":
        comp = bt[1]
        if comp in ("dateframe", "datetimeframe"):
            if name == "duration":
                return "duration"
            if name == "overlap" and len(arg_types) == 1:
                return "duration"
            if name == "dates" and comp == "dateframe":
                return ("list", "date")
    if isinstance(bt, tuple) and bt[0] in ("list", "set"):
        if name in ("count", "distinct"):
            return "int"
        if name == "set" and bt[0] == "list":
            return ("set", bt[1])
        if name in ("min", "max"):
            if arg_types:
                return bt if bt[0] == "set" else ("list", bt[1])
            return _elem(bt)
        if name == "avg":
            el = _elem(bt)
            return "real" if el in ("int", "real") else el
        if name == "sum":
            el = _elem(bt)
            if el not in ("int", "real", "duration", "unknown"):
                raise V1TypeError(f"sum over {el}")
            return el
    if isinstance(bt, tuple) and bt[0] == "opaque":
        if bt[1] == "location" and name == "dist" and len(arg_types) == 1:
            return "real"
    raise V1TypeError(f"unknown function {bt}.{name}/{len(arg_types)}")


def _global_fn_type(name, arg_types, env):
    if name == "now" and not arg_types:
        return "datetime"
    if name in V._GLOBAL_DURATION and len(arg_types) == 1:
        if not is_numeric(arg_types[0]):
            raise V1TypeError(f"{name}() expects a number")
        return "duration"
    if name in ("min", "max") and arg_types:
        known = [t for t in arg_types if t != "unknown"]
        if not known:
            return "unknown"
        if all(is_numeric(t) for t in known):
            return "real" if "real" in known else "int"
        if len(set(known)) == 1 and is_ordered(known[0]):
            return known[0]
        raise V1TypeError(f"min/max over mixed types {arg_types}")
    raise V1TypeError(f"unknown global function {name}")


# ---------------------------------------------------------------------------
# Evaluation


# ---------------------------------------------------------------------------
# Constraint checks (an expression plus one comparison form)

_NO_RHS_OPS = {"is_empty", "not_empty"}
_RANGE_OPS = {"in_range", "not_in_range"}
_SET_OPS = {"in_set", "not_in_set"}
COMPARISON_OPS = {
    "eq", "ne", "lt", "le", "gt", "ge", "in_range", "not_in_range",
    "in_set", "not_in_set", "contains", "not_contains", "contained_in",
    "not_contained_in", "starts_with", "not_starts_with", "ends_with",
    "not_ends_with", "matches", "not_matches", "starts_during",
    "not_starts_during", "ends_during", "not_ends_during", "within",
    "not_within", "is_empty", "not_empty",
}


@dataclass(frozen=True)
class RangeRhs:
    lo: Expr
    hi: Expr
    lo_open: bool = False
    hi_open: bool = False


@dataclass(frozen=True)
class Check:
    """One comparison against an expression's value."""

    op: str
    rhs: Union[Expr, RangeRhs, tuple, None] = None
    policy: str = "blue"


def parse_check(doc: dict) -> Check:
    op = doc.get("op")
    if op not in COMPARISON_OPS:
        raise ExprSyntaxError(f"unknown comparison op {op!r}")
    policy = doc.get("policy", "blue")
    if policy not in ("blue", "red"):
        raise ExprSyntaxError(f"bad policy {policy!r}")
    rhs_doc = doc.get("rhs")
    if op in _NO_RHS_OPS:
        rhs = None
    elif op in _RANGE_OPS:
        r = rhs_doc["range"]
        rhs = RangeRhs(parse_expr(r["lo"]), parse_expr(r["hi"]),
                       bool(r.get("loOpen", False)), bool(r.get("hiOpen", False)))
    elif op in _SET_OPS:
        rhs = tuple(parse_expr(e) for e in rhs_doc["set"])
    else:
        if not isinstance(rhs_doc, str):
            raise ExprSyntaxError(f"comparison {op} expects an expression rhs")
        rhs = parse_expr(rhs_doc)
    return Check(op, rhs, policy)


def check_to_json(check: Check) -> dict:
    out: dict = {"op": check.op}
    if check.policy != "blue":
        out["policy"] = check.policy
    if check.op in _NO_RHS_OPS:
        return out
    if isinstance(check.rhs, RangeRhs):
        r = {"lo": expr_text(check.rhs.lo), "hi": expr_text(check.rhs.hi)}
        if check.rhs.lo_open:
            r["loOpen"] = True
        if check.rhs.hi_open:
            r["hiOpen"] = True
        out["rhs"] = {"range": r}
    elif isinstance(check.rhs, tuple):
        out["rhs"] = {"set": [expr_text(e) for e in check.rhs]}
    else:
        out["rhs"] = expr_text(check.rhs)
    return out


def check_rhs_exprs(check: Check) -> list[Expr]:
    if check.rhs is None:
        return []
    if isinstance(check.rhs, RangeRhs):
        return [check.rhs.lo, check.rhs.hi]
    if isinstance(check.rhs, tuple):
        return list(check.rhs)
    return [check.rhs]


def eval_check(check: Check, lhs: Value, ctx: "EvalContext") -> bool:
    if check.op in _NO_RHS_OPS:
        return V.check_constraint(check.policy, check.op, lhs)
    if isinstance(check.rhs, RangeRhs):
        operand = V.RangeOperand(evaluate(check.rhs.lo, ctx),
                                 evaluate(check.rhs.hi, ctx),
                                 check.rhs.lo_open, check.rhs.hi_open)
    elif isinstance(check.rhs, tuple):
        operand = tuple(evaluate(e, ctx) for e in check.rhs)
    else:
        operand = evaluate(check.rhs, ctx)
    return V.check_constraint(check.policy, check.op, lhs, operand,
                              ctx.opaque_registry)


class EvalContext:
    """Bindings available while evaluating one expression site."""

    def __init__(self, props: Callable[[str], Value], tags: Callable[[int], Value],
                 type_tags: Callable[[int], Value], now: Optional[_dt.datetime],
                 opaque_registry=None):
        self.props = props
        self.tags = tags
        self.type_tags = type_tags
        self.now = now
        self.opaque_registry = opaque_registry


def evaluate(e: Expr, ctx: EvalContext) -> Value:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Prop):
        return ctx.props(e.name)
    if isinstance(e, TagRef):
        return ctx.tags(e.index)
    if isinstance(e, TypeTagRef):
        return ctx.type_tags(e.index)
    if isinstance(e, Neg):
        return V.negate(evaluate(e.arg, ctx))
    if isinstance(e, Bin):
        return V.apply_binary(e.op, evaluate(e.left, ctx), evaluate(e.right, ctx))
    if isinstance(e, Member):
        base = evaluate(e.base, ctx)
        if base.kind == "composite" and V.composite_has(base, e.name):
            return V.composite_get(base, e.name)
        return V.apply_function(e.name, base, (), now=ctx.now,
                                opaque_registry=ctx.opaque_registry)
    if isinstance(e, Call):
        args = [evaluate(a, ctx) for a in e.args]
        base = evaluate(e.base, ctx) if e.base is not None else None
        return V.apply_function(e.name, base, args, now=ctx.now,
                                opaque_registry=ctx.opaque_registry)
    raise TypeError(e)
