import datetime as dt

import pytest

from v1graph import exprs
from v1graph import values as V
from v1graph.values import dvl, dtvl, ivl, rvl, svl


def ctx(props=None, tags=None, now=None):
    props = props or {}
    tags = tags or {}
    return exprs.EvalContext(lambda n: props.get(n, V.EMPTY),
                             lambda i: tags.get(i, V.EMPTY),
                             lambda i: V.EMPTY, now)


def test_parse_and_eval_arithmetic():
    e = exprs.parse_expr("1 + 2 * 3")
    assert exprs.evaluate(e, ctx()) == ivl(7)
    e = exprs.parse_expr("(1 + 2) * 3")
    assert exprs.evaluate(e, ctx()) == ivl(9)
    e = exprs.parse_expr("-2 + 5")
    assert exprs.evaluate(e, ctx()) == ivl(3)


def test_literals():
    assert exprs.evaluate(exprs.parse_expr("1.5"), ctx()) == rvl(1.5)
    assert exprs.evaluate(exprs.parse_expr("'abc'"), ctx()) == svl("abc")
    assert exprs.evaluate(exprs.parse_expr("0970-03-15"), ctx()) == \
        dvl(dt.date(970, 3, 15))
    assert exprs.evaluate(exprs.parse_expr("1010-01-01T10:20:30"), ctx()) == \
        dtvl(dt.datetime(1010, 1, 1, 10, 20, 30))


def test_quoted_property_names():
    e = exprs.parse_expr("`birth date`.year")
    got = exprs.evaluate(e, ctx({"birth date": dvl(dt.date(970, 3, 15))}))
    assert got == ivl(970)


def test_member_prefers_subproperty_then_function():
    tf = V.compvl("dateframe", {"since": dvl(dt.date(1010, 1, 1)),
                                "till": dvl(dt.date(1010, 1, 4))})
    c = ctx({"tf": tf})
    assert exprs.evaluate(exprs.parse_expr("tf.since"), c) == \
        dvl(dt.date(1010, 1, 1))
    dur = exprs.evaluate(exprs.parse_expr("tf.duration"), c)
    assert dur == V.durvl(3 * V.MS_PER_DAY)
    assert exprs.evaluate(exprs.parse_expr("tf.duration.days"), c) == rvl(3.0)


def test_tag_references_and_globals():
    c = ctx(tags={1: ivl(5), 2: ivl(9)})
    assert exprs.evaluate(exprs.parse_expr("max({1}, {2}) - 1"), c) == ivl(8)
    assert exprs.evaluate(exprs.parse_expr("days(2).hours"), ctx()) == rvl(48.0)


def test_now_function():
    t = dt.datetime(1012, 1, 1)
    assert exprs.evaluate(exprs.parse_expr("now()"), ctx(now=t)) == dtvl(t)


def test_canonical_text_roundtrip():
    for text in ("1 + 2 * 3", "(1 + 2) * 3", "`birth date` + days(2)",
                 "max({1}, {2})", "tf.overlap({1}).seconds", "-x + 3",
                 "'lit'", "0970-01-01"):
        e = exprs.parse_expr(text)
        canon = exprs.expr_text(e)
        assert exprs.expr_text(exprs.parse_expr(canon)) == canon


def test_syntax_errors():
    for bad in ("1 +", "foo(", "{x}", "`unterminated", "1 ** 2"):
        with pytest.raises(exprs.ExprSyntaxError):
            exprs.parse_expr(bad)


def test_type_inference():
    env = exprs.TypeEnv(
        {"k": "int", "s": "string",
         "tf": ("composite", "dateframe", {"since": "date", "till": "date"})},
        {1: "int"})
    assert exprs.infer_type(exprs.parse_expr("k + 1"), env) == "int"
    assert exprs.infer_type(exprs.parse_expr("k / 2"), env) == "real"
    assert exprs.infer_type(exprs.parse_expr("tf.since"), env) == "date"
    assert exprs.infer_type(exprs.parse_expr("tf.duration"), env) == "duration"
    assert exprs.infer_type(exprs.parse_expr("tf.dates"), env) == \
        ("list", "date")
    assert exprs.infer_type(exprs.parse_expr("s.length"), env) == "int"
    with pytest.raises(V.V1TypeError):
        exprs.infer_type(exprs.parse_expr("s + 1"), env)
    with pytest.raises(V.V1TypeError):
        exprs.infer_type(exprs.parse_expr("nope"), env)


def test_check_roundtrip_and_eval():
    doc = {"op": "in_range", "policy": "red",
           "rhs": {"range": {"lo": "1", "hi": "{1} + 1", "hiOpen": True}}}
    check = exprs.parse_check(doc)
    assert exprs.check_to_json(check) == doc
    c = ctx(tags={1: ivl(4)})
    assert exprs.eval_check(check, ivl(3), c) is True
    assert exprs.eval_check(check, ivl(5), c) is False  # 5 not in [1, 5)
    assert exprs.eval_check(check, V.EMPTY, c) is True  # red policy


def test_check_set_form():
    check = exprs.parse_check({"op": "in_set", "rhs": {"set": ["1", "2"]}})
    assert exprs.eval_check(check, ivl(2), ctx()) is True
    assert exprs.eval_check(check, ivl(3), ctx()) is False
