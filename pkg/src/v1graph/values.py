"""Runtime value system: data types, operators, functions, constraints, units.

Every value the engine touches is a :class:`Value`. Temporal conventions:

* dates are proleptic-Gregorian calendar days,
* datetimes are naive (no zone) with second resolution,
* durations are signed 64-bit millisecond counts; fractional accessors
  (``.days``, ``.weeks``, ...) return reals,
* one week = 7 days, one month = 30.4375 days, one year = 365.25 days,
* the epoch for the ``*SinceEpoch`` accessors is 0001-01-01,
* ``dayofweek`` is ISO (1=Monday..7=Sunday), ``weekofyear`` is the ISO week,
* ``round``/``mRound`` break ties away from zero,
* ``date +- duration`` truncates the duration to whole days first (a date
  has day resolution); ``datetime +- duration`` truncates to whole seconds.

Empty propagation: operators over non-multivalued operands yield Empty when
either side is Empty; multivalued operators treat an Empty operand as the
empty collection (so ``s UNION empty = s``). Aggregating functions skip
Empty inputs and return Empty on empty input collections.
"""

from __future__ import annotations

import datetime as _dt
import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Union

MS_PER_SECOND = 1_000
MS_PER_MINUTE = 60 * MS_PER_SECOND
MS_PER_HOUR = 60 * MS_PER_MINUTE
MS_PER_DAY = 24 * MS_PER_HOUR
DAYS_PER_WEEK = 7.0
DAYS_PER_MONTH = 30.4375
DAYS_PER_YEAR = 365.25
EPOCH_DATE = _dt.date(1, 1, 1)


class V1TypeError(TypeError):
    """Operator/function/constraint applied outside the type catalog."""


class V1DomainError(ValueError):
    """Argument outside a function's domain (e.g. mRound with multiple <= 0)."""


class DimensionMismatch(ValueError):
    """Unit conversion across different dimensions."""


# ---------------------------------------------------------------------------
# Value


@dataclass(frozen=True, slots=True)
class Value:
    """Tagged runtime value.

    kind is one of: int, real, string, date, datetime, duration, composite,
    list, set, opaque, empty. ``data`` holds the payload:

    * int -> int, real -> float, string -> str
    * date -> datetime.date, datetime -> datetime.datetime
    * duration -> int (milliseconds)
    * composite -> (type_name, ((sub_name, Value), ...)) sorted by sub_name
    * list -> tuple[Value, ...], set -> frozenset[Value]
    * opaque -> (type_name, payload) with a hashable payload
    * empty -> None
    """

    kind: str
    data: object

    def is_empty(self) -> bool:
        return self.kind == "empty"

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Value({self.kind}, {self.data!r})"


EMPTY = Value("empty", None)
TRUE = Value("int", 1)


def ivl(n: int) -> Value:
    return Value("int", int(n))


def rvl(x: float) -> Value:
    return Value("real", float(x))


def svl(s: str) -> Value:
    return Value("string", s)


def dvl(d: _dt.date) -> Value:
    return Value("date", d)


def dtvl(d: _dt.datetime) -> Value:
    return Value("datetime", d.replace(microsecond=0))


def durvl(ms: int) -> Value:
    return Value("duration", int(ms))


def lvl(items: Iterable[Value]) -> Value:
    return Value("list", tuple(items))


def setvl(items: Iterable[Value]) -> Value:
    return Value("set", frozenset(items))


def compvl(type_name: str, subs: dict[str, Value]) -> Value:
    return Value("composite", (type_name, tuple(sorted(subs.items()))))


def opaquevl(type_name: str, payload: object) -> Value:
    return Value("opaque", (type_name, payload))


def composite_get(v: Value, name: str) -> Value:
    if v.kind != "composite":
        raise V1TypeError(f"sub-property access on {v.kind}")
    for key, sub in v.data[1]:
        if key == name:
            return sub
    return EMPTY


def composite_has(v: Value, name: str) -> bool:
    return v.kind == "composite" and any(k == name for k, _ in v.data[1])


def composite_type(v: Value) -> str:
    return v.data[0]


_KIND_ORDER = {
    "empty": 0, "int": 1, "real": 1, "string": 2, "date": 3, "datetime": 4,
    "duration": 5, "composite": 6, "list": 7, "set": 8, "opaque": 9,
}


def order_key(v: Value):
    """Total order over values, used for canonical output and tie-breaks."""
    rank = _KIND_ORDER[v.kind]
    if v.kind == "empty":
        return (rank,)
    if v.kind in ("int", "real"):
        return (rank, float(v.data))
    if v.kind in ("string",):
        return (rank, v.data)
    if v.kind == "date":
        return (rank, v.data.toordinal())
    if v.kind == "datetime":
        return (rank, v.data.toordinal() if isinstance(v.data, _dt.date) else 0,
                (v.data - _dt.datetime(1, 1, 1)).total_seconds())
    if v.kind == "duration":
        return (rank, v.data)
    if v.kind == "composite":
        return (rank, v.data[0], tuple((k, order_key(s)) for k, s in v.data[1]))
    if v.kind == "list":
        return (rank, tuple(order_key(e) for e in v.data))
    if v.kind == "set":
        return (rank, tuple(sorted(order_key(e) for e in v.data)))
    return (rank, v.data[0], str(v.data[1]))


# ---------------------------------------------------------------------------
# Units


@dataclass(frozen=True, slots=True)
class UnitSpec:
    """One display unit: a named multiplier over a dimension's base unit."""

    dimension: str  # mass | length | time-duration | distance
    name: str
    factor: float   # multiplier to base unit; > 0

    def __post_init__(self):
        if self.factor <= 0:
            raise V1DomainError("unit factor must be positive")


BASE_UNITS = {
    "mass": UnitSpec("mass", "Kg", 1.0),
    "length": UnitSpec("length", "cm", 1.0),
    "time-duration": UnitSpec("time-duration", "sec", 1.0),
    "distance": UnitSpec("distance", "Km", 1.0),
}

KNOWN_UNITS = {
    "Kg": BASE_UNITS["mass"],
    "lbs": UnitSpec("mass", "lbs", 0.45359237),
    "cm": BASE_UNITS["length"],
    "ft": UnitSpec("length", "ft", 30.48),
    "sec": BASE_UNITS["time-duration"],
    "min": UnitSpec("time-duration", "min", 60.0),
    "Km": BASE_UNITS["distance"],
}


def convert_units(magnitude: float, from_unit: UnitSpec, to_unit: UnitSpec) -> float:
    if from_unit.dimension != to_unit.dimension:
        raise DimensionMismatch(
            f"cannot convert {from_unit.dimension} to {to_unit.dimension}")
    return magnitude * from_unit.factor / to_unit.factor


# ---------------------------------------------------------------------------
# Binary operators

MULTIVALUED_OPS = {("+", "list"), ("union", "set"), ("intersect", "set"), ("minus", "set")}


def _num(v: Value) -> float:
    return float(v.data)


def _dur_to_whole_days(ms: int) -> int:
    return int(ms / MS_PER_DAY) if ms >= 0 else -int(-ms / MS_PER_DAY)


def _dur_to_whole_seconds(ms: int) -> int:
    return int(ms / MS_PER_SECOND) if ms >= 0 else -int(-ms / MS_PER_SECOND)


_BINARY: dict[tuple[str, str, str], Callable[[Value, Value], Value]] = {}


def _binop(op: str, kl: str, kr: str):
    def reg(fn):
        _BINARY[(op, kl, kr)] = fn
        return fn
    return reg


for _op, _fn in (("+", lambda a, b: a + b), ("-", lambda a, b: a - b),
                 ("*", lambda a, b: a * b)):
    _BINARY[(_op, "int", "int")] = (
        lambda l, r, f=_fn: ivl(f(l.data, r.data)))
    _BINARY[(_op, "real", "real")] = (
        lambda l, r, f=_fn: rvl(f(l.data, r.data)))
_BINARY[("/", "int", "int")] = lambda l, r: rvl(l.data / r.data)
_BINARY[("/", "real", "real")] = lambda l, r: rvl(l.data / r.data)

_BINARY[("+", "date", "duration")] = lambda l, r: dvl(
    l.data + _dt.timedelta(days=_dur_to_whole_days(r.data)))
_BINARY[("-", "date", "duration")] = lambda l, r: dvl(
    l.data - _dt.timedelta(days=_dur_to_whole_days(r.data)))
_BINARY[("-", "date", "date")] = lambda l, r: durvl(
    (l.data - r.data).days * MS_PER_DAY)
_BINARY[("+", "datetime", "duration")] = lambda l, r: dtvl(
    l.data + _dt.timedelta(seconds=_dur_to_whole_seconds(r.data)))
_BINARY[("-", "datetime", "duration")] = lambda l, r: dtvl(
    l.data - _dt.timedelta(seconds=_dur_to_whole_seconds(r.data)))
_BINARY[("-", "datetime", "datetime")] = lambda l, r: durvl(
    round((l.data - r.data).total_seconds()) * MS_PER_SECOND)
_BINARY[("+", "duration", "duration")] = lambda l, r: durvl(l.data + r.data)
_BINARY[("-", "duration", "duration")] = lambda l, r: durvl(l.data - r.data)

_BINARY[("+", "list", "list")] = lambda l, r: lvl(l.data + r.data)
_BINARY[("union", "set", "set")] = lambda l, r: Value("set", l.data | r.data)
_BINARY[("intersect", "set", "set")] = lambda l, r: Value("set", l.data & r.data)
_BINARY[("minus", "set", "set")] = lambda l, r: Value("set", l.data - r.data)


def apply_binary(op: str, lhs: Value, rhs: Value) -> Value:
    """Apply a catalog operator. Unknown (op, types) raises V1TypeError."""
    kl, kr = lhs.kind, rhs.kind
    if op in ("union", "intersect", "minus") or (op == "+" and "list" in (kl, kr)):
        # multivalued operators: Empty acts as the empty collection
        if kl == "empty" and kr == "empty":
            return EMPTY
        if op == "+" and (kl == "list" or kr == "list"):
            if kl == "empty":
                lhs, kl = lvl(()), "list"
            if kr == "empty":
                rhs, kr = lvl(()), "list"
        elif op in ("union", "intersect", "minus"):
            if kl == "empty" and kr == "set":
                lhs, kl = setvl(()), "set"
            if kr == "empty" and kl == "set":
                rhs, kr = setvl(()), "set"
    if kl == "empty" or kr == "empty":
        return EMPTY
    fn = _BINARY.get((op, kl, kr))
    if fn is None and "int" in (kl, kr) and "real" in (kl, kr):
        # auto int -> real cast
        lhs = rvl(lhs.data) if kl == "int" else lhs
        rhs = rvl(rhs.data) if kr == "int" else rhs
        fn = _BINARY.get((op, "real", "real"))
    if fn is None:
        raise V1TypeError(f"no operator {op}({kl}, {kr}) in the catalog")
    return fn(lhs, rhs)


def negate(v: Value) -> Value:
    if v.is_empty():
        return EMPTY
    if v.kind == "int":
        return ivl(-v.data)
    if v.kind == "real":
        return rvl(-v.data)
    if v.kind == "duration":
        return durvl(-v.data)
    raise V1TypeError(f"cannot negate {v.kind}")


# ---------------------------------------------------------------------------
# Functions


def _round_half_away(x: float) -> int:
    return math.floor(x + 0.5) if x >= 0 else math.ceil(x - 0.5)


def _mround(x: float, m: float) -> float:
    if m <= 0:
        raise V1DomainError("mRound multiple must be positive")
    return _round_half_away(x / m) * m


def _frame_bounds(v: Value) -> tuple[Value, Value]:
    return composite_get(v, "since"), composite_get(v, "till")


def _cmp_key(v: Value):
    if v.kind == "date":
        return _dt.datetime.combine(v.data, _dt.time())
    if v.kind == "datetime":
        return v.data
    return v.data


def _frame_duration(v: Value) -> Value:
    since, till = _frame_bounds(v)
    if since.is_empty() or till.is_empty():
        return EMPTY
    return apply_binary("-", till, since)


def _overlap(l: Value, r: Value) -> Value:
    lb, rb = _frame_bounds(l), _frame_bounds(r)
    if any(b.is_empty() for b in (*lb, *rb)):
        return durvl(0)
    lo = max(_cmp_key(lb[0]), _cmp_key(rb[0]))
    hi = min(_cmp_key(lb[1]), _cmp_key(rb[1]))
    if hi <= lo:
        return durvl(0)
    return durvl(round((hi - lo).total_seconds()) * MS_PER_SECOND)


def _dates_of_frame(v: Value) -> Value:
    since, till = _frame_bounds(v)
    if since.is_empty() or till.is_empty():
        return EMPTY
    d0, d1 = since.data, till.data
    if d1 < d0:
        return lvl(())
    return lvl(dvl(d0 + _dt.timedelta(days=k)) for k in range((d1 - d0).days + 1))


def _agg_items(v: Value) -> list[Value]:
    return [e for e in v.data if not e.is_empty()]


def _coll_min(v: Value, n: Optional[Value] = None) -> Value:
    items = sorted(_agg_items(v), key=order_key)
    if not items:
        return EMPTY
    if n is None:
        return items[0]
    picked = items[: n.data]
    return setvl(picked) if v.kind == "set" else lvl(picked)


def _coll_max(v: Value, n: Optional[Value] = None) -> Value:
    items = sorted(_agg_items(v), key=order_key, reverse=True)
    if not items:
        return EMPTY
    if n is None:
        return items[0]
    picked = items[: n.data]
    return setvl(picked) if v.kind == "set" else lvl(picked)


def _coll_sum(items: list[Value]) -> Value:
    if not items:
        return EMPTY
    kind = items[0].kind
    if any(i.kind not in ("int", "real", "duration") for i in items):
        raise V1TypeError("sum over non-summable element type")
    if all(i.kind == "int" for i in items):
        return ivl(sum(i.data for i in items))
    if any(i.kind == "duration" for i in items):
        if not all(i.kind == "duration" for i in items):
            raise V1TypeError("sum over mixed duration/number elements")
        return durvl(sum(i.data for i in items))
    return rvl(sum(float(i.data) for i in items))


def _coll_avg(items: list[Value]) -> Value:
    if not items:
        return EMPTY
    kinds = {i.kind for i in items}
    if kinds <= {"int", "real"}:
        return rvl(sum(float(i.data) for i in items) / len(items))
    if kinds == {"duration"}:
        return durvl(_round_half_away(sum(i.data for i in items) / len(items)))
    if kinds == {"date"}:
        mean = sum(i.data.toordinal() for i in items) / len(items)
        return dvl(_dt.date.fromordinal(_round_half_away(mean)))
    if kinds == {"datetime"}:
        base = _dt.datetime(1, 1, 1)
        mean = sum((i.data - base).total_seconds() for i in items) / len(items)
        return dtvl(base + _dt.timedelta(seconds=_round_half_away(mean)))
    raise V1TypeError("avg over unsupported element types")


def _since_epoch_days(v: Value) -> float:
    if v.kind == "date":
        return float((v.data - EPOCH_DATE).days)
    return (v.data - _dt.datetime(1, 1, 1)).total_seconds() / 86400.0


_GLOBAL_DURATION = {
    "seconds": MS_PER_SECOND, "minutes": MS_PER_MINUTE, "hours": MS_PER_HOUR,
    "days": MS_PER_DAY, "weeks": DAYS_PER_WEEK * MS_PER_DAY,
    "months": DAYS_PER_MONTH * MS_PER_DAY, "years": DAYS_PER_YEAR * MS_PER_DAY,
}

_DT_FIELD = {
    "year": lambda d: d.year, "month": lambda d: d.month, "day": lambda d: d.day,
    "dayofweek": lambda d: d.isoweekday(),
    "dayofyear": lambda d: d.timetuple().tm_yday,
    "weekofyear": lambda d: d.isocalendar()[1],
}


def apply_function(name: str, receiver: Optional[Value], args: Sequence[Value],
                   now: Optional[_dt.datetime] = None,
                   opaque_registry: Optional["OpaqueTypeRegistry"] = None) -> Value:
    """Apply a catalog function; receiver None means a global function."""
    args = list(args)
    if receiver is None:
        if name == "now":
            if now is None:
                raise V1DomainError("now() requires an evaluation timestamp")
            return dtvl(now)
        if name in _GLOBAL_DURATION:
            (x,) = args
            if x.is_empty():
                return EMPTY
            if x.kind not in ("int", "real"):
                raise V1TypeError(f"{name}() expects a number")
            return durvl(_round_half_away(float(x.data) * _GLOBAL_DURATION[name]))
        if name in ("min", "max"):
            live = [a for a in args if not a.is_empty()]
            if not live:
                return EMPTY
            picked = sorted(live, key=order_key)
            return picked[0] if name == "min" else picked[-1]
        raise V1TypeError(f"unknown global function {name}")

    r = receiver
    if r.is_empty():
        # .length of an empty string value is 0; anything else absorbs
        return ivl(0) if name == "length" else EMPTY
    if any(a.is_empty() for a in args) and not (r.kind in ("list", "set")):
        return EMPTY

    if r.kind == "real":
        if name == "floor":
            return ivl(math.floor(r.data))
        if name == "ceil":
            return ivl(math.ceil(r.data))
        if name == "trunc":
            return ivl(math.trunc(r.data))
        if name == "round":
            return ivl(_round_half_away(r.data))
        if name == "mRound":
            (m,) = args
            out = _mround(r.data, float(m.data))
            return ivl(int(out)) if m.kind == "int" else rvl(out)
    if r.kind == "int" and name == "mRound":
        (m,) = args
        if m.kind != "int":
            raise V1TypeError("int.mRound expects an int multiple")
        return ivl(int(_mround(float(r.data), float(m.data))))
    if r.kind == "string":
        if name == "length":
            return ivl(len(r.data))
        if name == "toLower":
            return svl(r.data.lower())
        if name == "toUpper":
            return svl(r.data.upper())
    if r.kind == "datetime":
        if name == "date":
            return dvl(r.data.date())
        if name in _DT_FIELD:
            return ivl(_DT_FIELD[name](r.data))
        if name == "hour":
            return ivl(r.data.hour)
        if name == "min" and not args:
            return ivl(r.data.minute)
        if name == "sec":
            return ivl(r.data.second)
        days = _since_epoch_days(r)
        if name == "yearsSinceEpoch":
            return rvl(days / DAYS_PER_YEAR)
        if name == "monthsSinceEpoch":
            return rvl(days / DAYS_PER_MONTH)
        if name == "weeksSinceEpoch":
            return rvl(days / DAYS_PER_WEEK)
        if name == "daysSinceEpoch":
            return rvl(days)
        if name == "hoursSinceEpoch":
            return rvl(days * 24.0)
        if name == "minsSinceEpoch":
            return rvl(days * 24.0 * 60.0)
        if name == "secsSinceEpoch":
            return rvl(days * 86400.0)
        midnight = (r.data - _dt.datetime.combine(r.data.date(), _dt.time())
                    ).total_seconds()
        if name == "hoursSinceMidnight":
            return rvl(midnight / 3600.0)
        if name == "minsSinceMidnight":
            return rvl(midnight / 60.0)
        if name == "secsSinceMidnight":
            return rvl(midnight)
    if r.kind == "date":
        if name in _DT_FIELD:
            return ivl(_DT_FIELD[name](r.data))
        days = _since_epoch_days(r)
        if name == "yearsSinceEpoch":
            return rvl(days / DAYS_PER_YEAR)
        if name == "monthsSinceEpoch":
            return rvl(days / DAYS_PER_MONTH)
        if name == "weeksSinceEpoch":
            return rvl(days / DAYS_PER_WEEK)
        if name == "daysSinceEpoch":
            return rvl(days)
    if r.kind == "duration":
        scale = {"seconds": MS_PER_SECOND, "minutes": MS_PER_MINUTE,
                 "hours": MS_PER_HOUR, "days": MS_PER_DAY,
                 "weeks": DAYS_PER_WEEK * MS_PER_DAY,
                 "months": DAYS_PER_MONTH * MS_PER_DAY,
                 "years": DAYS_PER_YEAR * MS_PER_DAY}.get(name)
        if scale is not None:
            return rvl(r.data / scale)
    if r.kind == "composite":
        ctype = composite_type(r)
        if ctype in ("dateframe", "datetimeframe"):
            if name == "duration":
                return _frame_duration(r)
            if name == "overlap":
                (other,) = args
                if other.kind != "composite":
                    raise V1TypeError("overlap expects a time frame")
                return _overlap(r, other)
            if name == "dates" and ctype == "dateframe":
                return _dates_of_frame(r)
    if r.kind in ("list", "set"):
        if name == "count":
            return ivl(len(r.data))
        if name == "distinct":
            return ivl(len({order_key(e) for e in _agg_items(r)}))
        if name == "set" and r.kind == "list":
            return setvl(r.data)
        if name == "min":
            return _coll_min(r, args[0] if args else None)
        if name == "max":
            return _coll_max(r, args[0] if args else None)
        if name == "avg":
            return _coll_avg(_agg_items(r))
        if name == "sum":
            return _coll_sum(_agg_items(r))
    if r.kind == "opaque" and opaque_registry is not None:
        fn = opaque_registry.function(r.data[0], name)
        if fn is not None:
            return fn(r, args)
    raise V1TypeError(f"unknown function {r.kind}.{name}/{len(args)}")


# ---------------------------------------------------------------------------
# Constraints


@dataclass(frozen=True, slots=True)
class RangeOperand:
    lo: Value
    hi: Value
    lo_open: bool = False
    hi_open: bool = False


ConstraintOperand = Union[Value, RangeOperand, tuple]

_ORDERED_KINDS = {"int", "real", "date", "datetime", "duration"}


def _same_scalar(l: Value, r: Value) -> bool:
    if l.kind in ("int", "real") and r.kind in ("int", "real"):
        return float(l.data) == float(r.data)
    if {l.kind, r.kind} == {"date", "datetime"}:
        return _cmp_key(l) == _cmp_key(r)
    return l.kind == r.kind and order_key(l) == order_key(r)


def _ordered_pair(l: Value, r: Value):
    if l.kind in ("int", "real") and r.kind in ("int", "real"):
        return float(l.data), float(r.data)
    if {l.kind, r.kind} <= {"date", "datetime"}:
        return _cmp_key(l), _cmp_key(r)
    if l.kind == r.kind and l.kind in _ORDERED_KINDS:
        return l.data, r.data
    if l.kind == r.kind == "string":
        return l.data, r.data
    raise V1TypeError(f"cannot order {l.kind} against {r.kind}")


def _contains_empty(operand: ConstraintOperand) -> bool:
    if isinstance(operand, Value):
        return operand.is_empty()
    if isinstance(operand, RangeOperand):
        return operand.lo.is_empty() or operand.hi.is_empty()
    return any(v.is_empty() for v in operand)


def _in_range(v: Value, r: RangeOperand) -> bool:
    x, lo = _ordered_pair(v, r.lo)
    _, hi = _ordered_pair(v, r.hi)
    if r.lo_open:
        if not x > lo:
            return False
    elif not x >= lo:
        return False
    if r.hi_open:
        return x < hi
    return x <= hi


def _point_in_frame(v: Value, frame: Value) -> Optional[bool]:
    since, till = _frame_bounds(frame)
    if since.is_empty() or till.is_empty():
        return None
    x = _cmp_key(v)
    return _cmp_key(since) <= x <= _cmp_key(till)


def _frame_in_frame(inner: Value, outer: Value) -> Optional[bool]:
    isince, itill = _frame_bounds(inner)
    osince, otill = _frame_bounds(outer)
    if any(b.is_empty() for b in (isince, itill, osince, otill)):
        return None
    return (_cmp_key(osince) <= _cmp_key(isince)
            and _cmp_key(itill) <= _cmp_key(otill))


def _is_frame(v: Value) -> bool:
    return v.kind == "composite" and composite_type(v) in ("dateframe", "datetimeframe")


def _sublist(haystack: tuple, needle: tuple) -> bool:
    if not needle:
        return True
    n = len(needle)
    keys = [order_key(e) for e in haystack]
    want = [order_key(e) for e in needle]
    return any(keys[i:i + n] == want for i in range(len(keys) - n + 1))


def _base_check(cmp: str, lhs: Value, rhs: ConstraintOperand,
                opaque_registry: Optional["OpaqueTypeRegistry"] = None) -> Optional[bool]:
    """Catalog comparison; None signals an Empty was hit mid-comparison."""
    if cmp in ("eq", "ne"):
        res = _same_scalar(lhs, rhs)
        return res if cmp == "eq" else not res
    if cmp in ("lt", "le", "gt", "ge"):
        if isinstance(rhs, Value) and rhs.is_empty():
            return None
        x, y = _ordered_pair(lhs, rhs)
        return {"lt": x < y, "le": x <= y, "gt": x > y, "ge": x >= y}[cmp]
    if cmp in ("in_range", "not_in_range"):
        if _contains_empty(rhs):
            return None
        res = _in_range(lhs, rhs)
        return res if cmp == "in_range" else not res
    if cmp in ("in_set", "not_in_set"):
        if _contains_empty(rhs):
            return None
        res = any(_same_scalar(lhs, v) for v in rhs)
        return res if cmp == "in_set" else not res
    neg = cmp.startswith("not_")
    base = cmp[4:] if neg else cmp
    res: Optional[bool] = None
    if base == "contains":
        if lhs.kind == "string":
            res = rhs.data in lhs.data
        elif _is_frame(lhs):
            if _is_frame(rhs):
                res = _frame_in_frame(rhs, lhs)
            else:
                res = _point_in_frame(rhs, lhs)
        elif lhs.kind == "list":
            if rhs.kind == "list":
                res = _sublist(lhs.data, rhs.data)
            elif rhs.kind == "set":
                have = {order_key(e) for e in lhs.data}
                res = all(order_key(e) in have for e in rhs.data)
            else:
                res = any(_same_scalar(e, rhs) for e in lhs.data)
        elif lhs.kind == "set":
            if rhs.kind == "set":
                res = rhs.data <= lhs.data
            else:
                res = any(_same_scalar(e, rhs) for e in lhs.data)
        elif lhs.kind == "opaque" and opaque_registry is not None:
            fn = opaque_registry.comparison(lhs.data[0], "contains")
            res = fn(lhs, rhs) if fn else None
            if fn is None:
                raise V1TypeError("no contains over this opaque type")
    elif base == "within":
        if lhs.kind == "opaque" and opaque_registry is not None:
            fn = opaque_registry.comparison(lhs.data[0], "within")
            if fn is None:
                raise V1TypeError("no within over this opaque type")
            res = fn(lhs, rhs)
    elif base == "contained_in":
        if lhs.kind == "string":
            res = lhs.data in rhs.data
        elif lhs.kind in ("date", "datetime"):
            res = _point_in_frame(lhs, rhs)
        elif _is_frame(lhs):
            res = _frame_in_frame(lhs, rhs)
        elif lhs.kind == "list":
            res = _sublist(rhs.data, lhs.data)
        elif lhs.kind == "set":
            res = lhs.data <= rhs.data
    elif base == "starts_with":
        if lhs.kind == "string":
            res = lhs.data.startswith(rhs.data)
        elif lhs.kind == "list":
            n = len(rhs.data)
            res = [order_key(e) for e in lhs.data[:n]] == [order_key(e) for e in rhs.data]
    elif base == "ends_with":
        if lhs.kind == "string":
            res = lhs.data.endswith(rhs.data)
        elif lhs.kind == "list":
            n = len(rhs.data)
            res = n == 0 or [order_key(e) for e in lhs.data[-n:]] == \
                [order_key(e) for e in rhs.data]
    elif base == "matches":
        if lhs.kind == "string":
            res = re.fullmatch(rhs.data, lhs.data) is not None
    elif base == "starts_during":
        since, _ = _frame_bounds(lhs)
        res = None if since.is_empty() else _point_in_frame(since, rhs)
    elif base == "ends_during":
        _, till = _frame_bounds(lhs)
        res = None if till.is_empty() else _point_in_frame(till, rhs)
    if res is None and not neg:
        return None
    if res is None:
        return None
    return (not res) if neg else res


def check_constraint(policy: str, cmp: str, lhs: Value, rhs: ConstraintOperand = EMPTY,
                     opaque_registry: Optional["OpaqueTypeRegistry"] = None) -> bool:
    """Evaluate one comparison form under the blue/red empty policy."""
    if cmp == "is_empty":
        return lhs.is_empty()
    if cmp == "not_empty":
        return not lhs.is_empty()
    if lhs.is_empty():
        return policy == "red"
    out = _base_check(cmp, lhs, rhs, opaque_registry)
    if out is None:
        # an Empty somewhere in the operand: fall back to the policy default
        return policy == "red"
    return out


# ---------------------------------------------------------------------------
# Opaque extension hook + the built-in location type


class OpaqueTypeRegistry:
    """Registered opaque data types with their functions and comparisons."""

    def __init__(self):
        self._functions: dict[tuple[str, str], Callable] = {}
        self._comparisons: dict[tuple[str, str], Callable] = {}
        self._parsers: dict[str, Callable] = {}

    def register_function(self, type_name: str, fn_name: str, fn: Callable) -> None:
        self._functions[(type_name, fn_name)] = fn

    def register_comparison(self, type_name: str, cmp: str, fn: Callable) -> None:
        self._comparisons[(type_name, cmp)] = fn

    def register_parser(self, type_name: str, fn: Callable) -> None:
        self._parsers[type_name] = fn

    def function(self, type_name: str, fn_name: str):
        return self._functions.get((type_name, fn_name))

    def comparison(self, type_name: str, cmp: str):
        return self._comparisons.get((type_name, cmp))

    def parser(self, type_name: str):
        return self._parsers.get(type_name)


EARTH_RADIUS_KM = 6371.0088


def _loc_parts(v: Value) -> tuple[float, float, float]:
    lat, lon, radius = v.data[1]
    return lat, lon, radius


def location_point(lat: float, lon: float) -> Value:
    return opaquevl("location", (float(lat), float(lon), 0.0))


def location_circle(lat: float, lon: float, radius_km: float) -> Value:
    return opaquevl("location", (float(lat), float(lon), float(radius_km)))


def _haversine_km(a: Value, b: Value) -> float:
    lat1, lon1, _ = _loc_parts(a)
    lat2, lon2, _ = _loc_parts(b)
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = math.radians(lat2 - lat1)
    dl = math.radians(lon2 - lon1)
    h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(math.sqrt(h))


def _loc_dist(receiver: Value, args: Sequence[Value]) -> Value:
    (other,) = args
    if other.kind != "opaque" or other.data[0] != "location":
        raise V1TypeError("dist expects a location")
    return rvl(_haversine_km(receiver, other))


def _loc_contains(lhs: Value, rhs: Value) -> bool:
    # centers distance + contained radius within the container radius
    _, _, r_out = _loc_parts(lhs)
    _, _, r_in = _loc_parts(rhs)
    return _haversine_km(lhs, rhs) + r_in <= r_out + 1e-9


def _parse_location(doc: object) -> Value:
    if not isinstance(doc, dict) or "lat" not in doc or "lon" not in doc:
        raise V1TypeError("location literal must carry lat and lon")
    return location_circle(doc["lat"], doc["lon"], doc.get("radiusKm", 0.0))


def register_location(registry: OpaqueTypeRegistry) -> None:
    registry.register_function("location", "dist", _loc_dist)
    registry.register_comparison("location", "contains", _loc_contains)
    registry.register_comparison(
        "location", "within", lambda l, r: _loc_contains(r, l))
    registry.register_parser("location", _parse_location)


def default_registry() -> OpaqueTypeRegistry:
    reg = OpaqueTypeRegistry()
    register_location(reg)
    return reg


# ---------------------------------------------------------------------------
# Text round-trips (used by the schema/graph/results document formats)


def parse_date_text(text: str) -> _dt.date:
    y, m, d = text.split("-")
    return _dt.date(int(y), int(m), int(d))


def parse_datetime_text(text: str) -> _dt.datetime:
    day, clock = text.split("T")
    h, mi, s = clock.split(":")
    d = parse_date_text(day)
    return _dt.datetime(d.year, d.month, d.day, int(h), int(mi), int(s))


def date_text(d: _dt.date) -> str:
    return f"{d.year:04d}-{d.month:02d}-{d.day:02d}"


def datetime_text(d: _dt.datetime) -> str:
    return (f"{d.year:04d}-{d.month:02d}-{d.day:02d}"
            f"T{d.hour:02d}:{d.minute:02d}:{d.second:02d}")


def value_to_json(v: Value) -> object:
    """Self-describing JSON form, used for calculated results."""
    if v.is_empty():
        return None
    if v.kind in ("int", "real", "string"):
        return v.data
    if v.kind == "date":
        return {"type": "date", "value": date_text(v.data)}
    if v.kind == "datetime":
        return {"type": "datetime", "value": datetime_text(v.data)}
    if v.kind == "duration":
        return {"type": "duration", "ms": v.data}
    if v.kind == "composite":
        return {"type": "composite", "name": v.data[0],
                "subs": {k: value_to_json(s) for k, s in v.data[1]}}
    if v.kind == "list":
        return {"type": "list", "items": [value_to_json(e) for e in v.data]}
    if v.kind == "set":
        items = sorted(v.data, key=order_key)
        return {"type": "set", "items": [value_to_json(e) for e in items]}
    if v.kind == "opaque":
        if v.data[0] == "location":
            lat, lon, r = v.data[1]
            return {"type": "location", "lat": lat, "lon": lon, "radiusKm": r}
        return {"type": "opaque", "name": v.data[0], "value": str(v.data[1])}
    raise V1TypeError(f"cannot serialize {v.kind}")
