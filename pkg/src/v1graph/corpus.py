"""The committed query corpus: pattern documents keyed by query name.

Positive entries must validate clean against the fixture schemas (names
starting with ``g`` use the spatial schema). Negative entries each trigger
exactly one diagnostic code. Thresholds marked ``desk`` are scaled down
from the original statements so the bundled fixture graph can exercise
them meaningfully.
"""

from __future__ import annotations


def ent(tag, type_name, **kw):
    d = {"kind": "entity", "tag": tag,
         "entity": {"kind": "typed", "type": type_name}}
    d.update(kw)
    return d


def concrete(tag, eid, type_name, **kw):
    d = {"kind": "entity", "tag": tag,
         "entity": {"kind": "concrete", "id": eid, "type": type_name}}
    d.update(kw)
    return d


def untyped(tag, **kw):
    spec = {"kind": "untyped"}
    for key in ("allowedTypes", "disallowedTypes", "typeTag", "typeEquals",
                "typeNotEquals", "allowNull"):
        if key in kw:
            spec[key] = kw.pop(key)
    d = {"kind": "entity", "tag": tag, "entity": spec}
    d.update(kw)
    return d


def ensemble(tag, name, **kw):
    d = {"kind": "entity", "tag": tag,
         "entity": {"kind": "ensemble", "name": name}}
    d.update(kw)
    return d


def rel(type_name, target, direction="forward", **kw):
    d = {"kind": "rel", "type": type_name, "direction": direction,
         "target": target}
    d.update(kw)
    return d


def path(target, upper=4, **kw):
    d = {"kind": "path", "length": {"op": "le", "n": upper}, "target": target}
    d.update(kw)
    return d


def quant(kind, *branches, **kw):
    d = {"kind": "quantifier", "quant": kind, "branches": list(branches)}
    d.update(kw)
    return d


def green(tag, expr, op=None, rhs=None, policy=None, one_value=False):
    d = {"kind": "expr", "tag": tag, "expr": expr}
    if one_value:
        d["oneValue"] = True
    if op is not None:
        check = {"op": op}
        if rhs is not None:
            check["rhs"] = rhs
        if policy:
            check["policy"] = policy
        d["check"] = check
    return d


def agg(family, **kw):
    d = {"kind": "agg", "family": family}
    check = {}
    for key in ("op", "rhs", "policy"):
        if key in kw:
            check[key] = kw.pop(key)
    if check:
        d["check"] = check
    if kw.get("per") == []:
        del kw["per"]      # an absent top part means the global key
    d.update(kw)
    return d


def split(by, *body):
    return {"kind": "split", "by": by, "body": list(body)}


def rng(lo, hi, lo_open=False, hi_open=False):
    r = {"lo": lo, "hi": hi}
    if lo_open:
        r["loOpen"] = True
    if hi_open:
        r["hiOpen"] = True
    return {"range": r}


BRANDON = ("p-brandon-stark", "Person")
ROGAR = ("p-rogar-bolton", "Person")
ROBIN = ("p-robin-arryn", "Person")
BALERION = ("d-balerion", "Dragon")
VHAGAR = ("d-vhagar", "Dragon")
SWEETFOOT = ("h-sweetfoot", "Horse")


def build_corpus() -> dict[str, dict]:
    c: dict[str, dict] = {}

    # ---- basics ----------------------------------------------------------
    c["q001"] = {"start": concrete("A", *BRANDON,
                                   next=rel("owns", ent("B", "Dragon")))}
    c["q001v2"] = {"start": ent("B", "Dragon",
                                next=rel("owns", concrete("A", *BRANDON),
                                         direction="backward"))}
    c["q002"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon",
                       next=rel("owns", concrete("C", *BRANDON),
                                direction="backward")),
        direction="backward"))}
    c["q184"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon",
                       next=rel("owns", concrete("C", *BRANDON),
                                direction="backward")),
        direction="either"))}
    c["q003v1"] = {"start": ent(
        "A", "Person",
        chain=[green(1, "name.first", "eq", "'Brandon'")],
        next=rel("owns", ent("B", "Dragon")))}
    c["q003v2"] = {"start": ent("A", "Person", next=quant(
        "all",
        {"kind": "tail", "chain": [green(1, "name.first", "eq", "'Brandon'")]},
        rel("owns", ent("B", "Dragon"))))}
    c["q190"] = {"start": ent("A", "Person", next=rel(
        "owns", ent("B", "Dragon"),
        chain=[green(1, "tf.since", "ge", "1011-01-01")]))}

    # ---- quantifiers ------------------------------------------------------
    c["q008"] = {"start": ent("A", "Person", next=quant(
        "some",
        {"kind": "tail", "chain": [
            green(1, "`birth date`", "lt", "0970-01-01"),
            green(2, "`death date`", "not_empty")]},
        rel("offspring of", ent("B", "Person", chain=[
            green(3, "`birth date`", "le", "0950-01-01")]))))}
    c["q304"] = {"start": ent("A", "Person", next=quant(
        "all",
        rel("owns", ent("B", "Horse",
                        chain=[green(1, "color", "eq", "'white'")])),
        rel("owns", ent("C", "Horse",
                        chain=[green(2, "weight", "gt", "200")]))))}
    c["q011"] = {"start": ent("A", "Person", next=quant(
        "all",
        rel("member of", concrete("B", "g-masons", "Guild"),
            chain=[green(1, "tf.till", "is_empty")]),
        rel("knows", quant(
            "some",
            concrete("C", "g-saddlers", "Guild"),
            concrete("D", "g-blacksmiths", "Guild")),
            direction="either",
            chain=[green(2, "since", "ge", "1005-01-01")])))}
    # the relationship-then-quantifier attachment needs Guild targets; the
    # original walks through 'member of'; encoded via an intermediate person
    c["q011"] = {"start": ent("A", "Person", next=quant(
        "all",
        rel("member of", concrete("B", "g-masons", "Guild"),
            chain=[green(1, "tf.till", "is_empty")]),
        rel("knows", ent("C", "Person", next=rel(
            "member of", quant("some",
                               concrete("D", "g-saddlers", "Guild"),
                               concrete("E", "g-blacksmiths", "Guild")),
            chain=[green(2, "tf.till", "not_empty")])),
            direction="either")))}

    # ---- entity tags: identity and nonidentity ----------------------------
    c["q004"] = {"start": ent("A", "Person", next=quant(
        "all",
        rel("owns", ent("B", "Dragon")),
        rel("offspring of", ent("C", "Person", next=rel(
            "owns", ent("D", "Dragon", next=rel(
                "freezes", ent("B", "Dragon"))))))))}
    c["q009"] = {"start": ent("A", "Dragon", next=quant(
        "all",
        rel("freezes", ent("B", "Dragon"), chain=[
            green(1, "tf.since.year", "eq", "1010")]),
        rel("freezes", ent("B", "Dragon"), chain=[
            green(2, "tf.since.year", "eq", "0998")])))}
    c["q005"] = {"start": ent("A", "Person", next=quant(
        "all",
        rel("owns", ent("B", "Dragon")),
        rel("offspring of", ent("C", "Person", next=rel(
            "owns", ent("D", "Dragon", next=rel(
                "freezes", ent("B", "Dragon")))))),
        rel("offspring of", ent("E", "Person", notEqual=["C"], next=rel(
            "owns", ent("D", "Dragon"))))))}
    c["q024"] = {"start": ent("A", "Person", next=quant(
        "all",
        rel("offspring of", ent("C", "Person")),
        rel("offspring of", ent("D", "Person", notEqual=["C"])),
        rel("owns", ent("B", "Dragon", next=rel(
            "freezes", ent("E", "Dragon", next=quant(
                "all",
                rel("owns", ent("C", "Person"), direction="backward",
                    wrapper="X"),
                rel("owns", ent("D", "Person"), direction="backward",
                    wrapper="X"))),
            direction="backward")))))}

    # ---- no-existence -----------------------------------------------------
    c["q012"] = {"start": ent("A", "Person", next=rel(
        "owns", ent("B", "Horse"), wrapper="X"))}
    c["q013"] = {"start": ent("A", "Horse", next=rel(
        "owns", ent("B", "Person"), direction="backward", wrapper="X"))}
    c["q014"] = {"start": concrete("A", *SWEETFOOT, next=rel(
        "owns", ent("B", "Person"), direction="backward", wrapper="X"))}
    c["q016"] = {"start": ent("A", "Person", next=rel(
        "owns", concrete("B", *SWEETFOOT), wrapper="X"))}
    c["q020v1"] = {"start": ent("A", "Horse", next=quant(
        "all",
        rel("owns", concrete("B", *ROGAR), direction="backward", wrapper="X"),
        rel("owns", concrete("C", *ROBIN), direction="backward", wrapper="X")))}
    c["q020v2"] = {"start": ent("A", "Horse", next=quant(
        "none",
        rel("owns", concrete("B", *ROGAR), direction="backward"),
        rel("owns", concrete("C", *ROBIN), direction="backward")))}
    c["q022"] = {"start": ent("A", "Horse", next=rel(
        "owns", ent("B", "Person", next=rel("owns", ent("C", "Dragon"))),
        direction="backward", wrapper="X"))}
    c["q023"] = {"start": ent("A", "Horse", next=rel(
        "owns",
        ent("B", "Person", next=rel("owns", ent("C", "Dragon"), wrapper="X")),
        direction="backward", wrapper="X"))}
    c["q256"] = {"start": ent("A", "Person", next=rel(
        "owns", ent("B", "Horse", chain=[
            green(1, "color", "eq", "'white'")]), wrapper="X"))}
    c["q333"] = {"start": ent("A", "Person", next=rel(
        "owns", ent("B", "Dragon", next=quant(
            "all",
            rel("fires at", ent("C", "Dragon")),
            rel("freezes", ent("C", "Dragon")))),
        wrapper="X"))}

    # ---- no-connection ----------------------------------------------------
    c["q063"] = {"start": ent("A", "Person", next=quant(
        "all",
        rel("member of", concrete("B", "g-masons", "Guild")),
        rel("knows", ent("C", "Person", next=rel(
            "member of", concrete("D", "g-masons", "Guild"))),
            direction="either", wrapper="NC",
            chain=[agg("L1", tag=1, per=["A"], count=["C"],
                       op="gt", rhs="1")])))}
    c["q126"] = {"start": ent("A", "Dragon", next=quant(
        "all",
        rel("freezes", ent("B", "Dragon"),
            chain=[agg("L1", tag=1, per=["A"], count=["B"])]),
        rel("freezes", ent("C", "Dragon"), wrapper="NC",
            chain=[agg("L1", tag=2, per=["A"], count=["C"],
                       op="lt", rhs="{1}")])))}

    # ---- combiners ---------------------------------------------------------
    c["q030v1"] = {
        "start": ent("A", "Dragon", next=quant(
            "all",
            rel("freezes", {"kind": "combinerRef", "id": "c1"}),
            rel("fires at", {"kind": "combinerRef", "id": "c1"}))),
        "combiners": {"c1": ent("B", "Dragon")}}
    c["q030v2"] = {"start": ent("A", "Dragon", next=quant(
        "all",
        rel("freezes", ent("B", "Dragon")),
        rel("fires at", ent("B", "Dragon"))))}
    c["q029"] = {"start": ent("A", "Dragon", next=quant(
        "some",
        rel("freezes", {"kind": "combinerRef", "id": "c1"}),
        rel("fires at", {"kind": "combinerRef", "id": "c1"}))),
        "combiners": {"c1": ent("B", "Dragon")}}

    # ---- chains and horizontal quantifiers ---------------------------------
    c["q188"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", concrete("B", *BALERION), direction="backward",
        chain=[green(1, "tf.since", "ge", "1010-01-01T00:00:00"),
               green(2, "tf.duration", "lt", "minutes(10)")]))}
    c["q300"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon"),
        chain=[{"kind": "hquant", "quant": "ge", "n": 2, "branches": [
            [green(1, "tf.duration", "gt", "minutes(10)")],
            [green(2, "tf.since", "gt", "0980-01-01T00:00:00")],
            [green(3, "tf.till", "lt", "0980-02-01T00:00:00")]]}]))}
    c["q301"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon"),
        chain=[green(1, "tf.duration", "gt", "minutes(10)"),
               {"kind": "hquant", "quant": "some", "branches": [
                   [green(2, "tf.since", "gt", "0980-01-01T00:00:00")],
                   [green(3, "tf.till", "lt", "0980-02-01T00:00:00")]]}]))}
    c["q096"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", concrete("B", *BALERION), direction="backward",
        chain=[green(1, "tf.since", "ge", "1010-01-01T00:00:00"),
               green(2, "tf.duration", "lt", "minutes(10)"),
               agg("L2", tag=3, per="pair", over="relationships",
                   op="gt", rhs="2")]))}

    # ---- latent and optional ------------------------------------------------
    c["q142"] = {"start": ent("A", "Person", next=quant(
        "all",
        rel("owns", ent("B", "Horse",
                        chain=[green(1, "color", "eq", "'white'")])),
        rel("offspring of", ent("C", "Person", latent=True, next=rel(
            "owns", ent("D", "Horse", latent=True))))))}
    c["q143"] = {"start": ent("A", "Person", next=quant(
        "all",
        rel("owns", ent("B", "Horse",
                        chain=[green(1, "color", "eq", "'white'")])),
        rel("offspring of", ent("C", "Person", latent=True, next=rel(
            "owns", ent("D", "Horse"), wrapper="X")))))}
    c["q144"] = {"start": ent("A", "Person", next=quant(
        "all",
        rel("owns", ent("B", "Horse",
                        chain=[green(1, "color", "eq", "'white'")])),
        rel("offspring of", ent("C", "Person", next=rel(
            "owns", ent("D", "Horse"))), wrapper="O")))}
    c["q147"] = {"start": ent("A", "Person", next=quant(
        "all", rel("owns", ent("B", "Horse")),
        rel("owns", ent("C", "Dragon")), wrapper="O"))}
    c["q149"] = {"start": ent("A", "Person", next=quant(
        "all",
        rel("owns", ent("B", "Horse"), wrapper="O"),
        rel("owns", ent("C", "Dragon"), wrapper="O"),
        {"kind": "tail", "chain": [green(1, "height", "not_empty")]}))}
    c["q317"] = {"start": ent("A", "Dragon", next=quant(
        "all",
        rel("freezes", ent("B", "Dragon"), wrapper="O", chain=[
            agg("L3", tag=1, per=["A"], aggop="min", expr="tf.since"),
            agg("L3", tag=2, per=["A"], aggop="max", expr="tf.since")]),
        rel("fires at", ent("C", "Dragon"), wrapper="O", chain=[
            agg("L3", tag=3, per=["A"], aggop="min", expr="time"),
            agg("L3", tag=4, per=["A"], aggop="max", expr="time")]),
        {"kind": "tail", "chain": [
            green(5, "max({2}, {4}) - min({1}, {3})", "ge", "years(1)")]}))}

    # ---- untyped entities ----------------------------------------------------
    c["q049"] = {"start": ent("A", "Dragon", next=quant(
        "all",
        rel("freezes", ent("B", "Dragon", next=rel(
            "freezes", ent("C", "Dragon", next=rel(
                "freezes", ent("A", "Dragon")))))),
        rel("owns", untyped("D"), direction="backward", wrapper="O")))}
    c["q146"] = {"start": ent("A", "Person", next=quant(
        "all",
        rel("owns", ent("B", "Horse",
                        chain=[green(1, "color", "eq", "'white'")])),
        rel("offspring of", ent("C", "Person", next=rel(
            "owns", ent("D", "Horse"), wrapper="O")), wrapper="O")))}
    c["q036"] = {"start": ent("A", "Person", next=rel("owns", untyped("B")))}
    c["q037"] = {"start": ent("A", "Person", next=rel(
        "owns", untyped("B", allowedTypes=["Horse", "Dragon"])))}
    c["q039"] = {"start": untyped("A", next=rel(
        "owns", ent("B", "Dragon"), wrapper="X"))}
    c["q040"] = {"start": ent("A", "Dragon", next=rel(
        "owns", untyped("B"), direction="backward", wrapper="X"))}
    c["q041"] = {"start": untyped("A", next=rel(
        "owns", untyped("B"), direction="backward", wrapper="X"))}
    c["q042"] = {"start": untyped("A", next=rel(
        "owns", untyped("B"), wrapper="X"))}
    c["q043"] = {"start": ent("A", "Dragon", next=rel(
        "owns", untyped("B", disallowedTypes=["Person"], allowNull=False),
        direction="backward", wrapper="X"))}
    c["q291"] = {"start": ent("A", "Person", next=rel(
        "owns", untyped("B", allowedTypes=["Horse", "Dragon"], chain=[
            green(1, "name", "starts_with", "'M'")])))}

    # ---- entity type tags -------------------------------------------------------
    c["q050"] = {"start": ent("A", "Person", next=quant(
        "all",
        rel("owns", untyped("B", typeTag=1)),
        rel("owns", untyped("C", typeEquals=1, notEqual=["B"]))))}
    c["q051"] = {"start": ent("A", "Person", next=quant(
        "all",
        rel("owns", untyped("B", typeTag=1)),
        rel("owns", untyped("C", typeNotEquals=[1]))))}
    c["q052"] = {"start": ent("A", "Person", next=quant(
        "all",
        rel("owns", untyped("B", typeTag=1, disallowedTypes=["Horse"])),
        rel("owns", untyped("C", typeNotEquals=[1],
                            disallowedTypes=["Horse"]))))}

    # ---- paths --------------------------------------------------------------
    c["q044"] = {"start": concrete("A", *VHAGAR, next=path(
        concrete("B", *BALERION), upper=4,
        relConstraints={"allowed": ["freezes"]}))}
    c["q045"] = {"start": concrete("A", *VHAGAR, next=path(
        concrete("B", *BALERION), upper=4,
        relConstraints={"allowed": ["freezes", "fires at"]}))}
    c["q046"] = {"start": concrete("C", *ROGAR, next=rel(
        "owns", ent("A", "Dragon", next=path(
            ent("B", "Dragon", next=rel("owns", concrete("D", *ROBIN),
                                        direction="backward")),
            upper=4,
            relConstraints={"counts": [
                {"type": "freezes", "op": "le", "n": 2}]},
            entityConstraints={"allowed": ["Dragon"]}))))}
    c["q053"] = {"start": ent("A", "Person", next=path(
        concrete("B", *ROGAR), upper=4))}
    c["q047"] = {"start": concrete("A", *VHAGAR, next={
        "kind": "path", "length": {"op": "le", "n": 6}, "shortest": True,
        "target": concrete("B", *BALERION)})}
    c["q048"] = {"start": concrete("A", *VHAGAR, next={
        "kind": "path", "length": {"op": "le", "n": 6}, "shortest": True,
        "relConstraints": {"counts": [{"type": "freezes", "op": "eq", "n": 0}]},
        "entityConstraints": {"counts": [{"type": "Dragon", "op": "eq", "n": 0}]},
        "target": concrete("B", *BALERION)})}
    c["q058desk"] = {"start": ent("A", "Person", next={
        "kind": "path", "length": {"op": "le", "n": 4},
        "patterns": {"othersAllowed": True, "rows": [
            {"count": {"op": "eq", "n": 1}, "pattern": {
                "start": untyped("A", terminal="left", next=rel(
                    "knows", concrete("B", *ROGAR, next=rel(
                        "knows", untyped("C", terminal="right"),
                        direction="either")),
                    direction="either"))}}]},
        "target": ent("B", "Person")})}

    # ---- expression tags ------------------------------------------------------
    c["q108"] = {"start": quant(
        "all",
        concrete("A", *BRANDON, chain=[green(1, "`birth date`")]),
        ent("B", "Person", chain=[
            green(2, "`birth date`", "eq", "{1}")]))}
    c["q109"] = {"start": ent("A", "Person", chain=[
        green(1, "`birth date`")], next=rel(
        "offspring of", ent("B", "Person", next=rel(
            "owns", untyped("C", allowedTypes=["Horse", "Dragon"]),
            chain=[green(2, "tf.since", "lt", "{1}")]))))}
    c["q111"] = {"start": ent("A", "Person", chain=[
        green(1, "`birth date`")], next=rel(
        "knows", ent("B", "Person", chain=[
            green(2, "`birth date`", "in_range",
                  rng("{1} - days(365)", "{1} + days(365)"))]),
        direction="either", wrapper="X"))}
    c["q112"] = {"start": ent("A", "Person", next=quant(
        "all",
        rel("owns", ent("B", "Horse"), chain=[green(1, "tf")]),
        rel("owns", ent("C", "Dragon"), chain=[
            green(2, "tf", "eq", "{1}")])))}
    c["q266"] = {"start": ent("A", "Person", chain=[green(1, "name")],
                 next=rel("offspring of", ent("B", "Person", chain=[
                     green(2, "name", "eq", "{1}")])))}
    c["q267"] = {"start": ent("A", "Person", next=quant(
        "all",
        rel("member of", ent("B", "Guild"), chain=[green(1, "tf")]),
        rel("member of", ent("C", "Guild", notEqual=["B"]), chain=[
            green(2, "tf", "starts_during", "{1}", policy="red")])))}
    c["q267v2"] = {"start": ent("A", "Person", next=quant(
        "all",
        rel("member of", ent("B", "Guild"), chain=[green(1, "tf")]),
        rel("member of", ent("C", "Guild", notEqual=["B"]), chain=[
            green(2, "tf.overlap({1}).seconds", "gt", "0")])))}

    # ---- L1 ----------------------------------------------------------------
    c["q059"] = {"start": ent("A", "Person", next=rel(
        "offspring of", ent("B", "Person"),
        chain=[agg("L1", tag=1, per=["A"], count=["B"],
                   op="gt", rhs="2")]))}
    c["q060"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon"), direction="backward",
        chain=[agg("L1", tag=1, per="left", count="right",
                   op="eq", rhs="2")]))}
    c["q061"] = {"start": untyped("A", next=rel(
        "owns", untyped("B"),
        chain=[agg("L1", tag=1, per="left", count="right",
                   op="gt", rhs="2")]))}
    c["q081"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon"),
        chain=[agg("L1", tag=1, per="left", count="right",
                   op="eq", rhs="0")]))}
    c["q082"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon"), direction="backward",
        chain=[agg("L1", tag=1, per="left", count="right",
                   op="eq", rhs="0")]))}
    c["q101"] = {"start": ent("A", "Person", next=rel(
        "owns", ent("B", "Horse", chain=[
            green(1, "color", "eq", "'white'")]),
        chain=[agg("L1", tag=2, per=["A"], count=["B"],
                   op="ge", rhs="2")]))}
    c["q125"] = {"start": ent("A", "Dragon", next=quant(
        "all",
        rel("freezes", ent("B", "Dragon"),
            chain=[agg("L1", tag=1, per=["A"], count=["B"])]),
        rel("freezes", ent("C", "Dragon"), direction="backward",
            chain=[agg("L1", tag=2, per=["A"], count=["C"],
                       op="lt", rhs="{1}")])))}
    c["q305"] = {"start": ent("A", "Person", next=quant(
        "all",
        rel("owns", ent("B", "Horse"),
            chain=[agg("L1", tag=1, per=["A"], count=["B"])]),
        rel("owns", ent("C", "Dragon"),
            chain=[agg("L1", tag=2, per=["A"], count=["C"])]),
        {"kind": "tail", "chain": [
            green(3, "{1} + {2}", "ge", "7")]}))}
    c["q248"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon", next=rel(
            "freezes", ent("C", "Dragon"))),
        chain=[agg("L1", tag=1,
                   per=[{"product": ["A", "C"]}], count=["B"],
                   op="ge", rhs="1")]))}

    # ---- L2 ----------------------------------------------------------------
    c["q071"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon"),
        chain=[agg("L2", tag=1, per="left", over="relationships",
                   op="gt", rhs="10")]))}
    c["q072"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon"), direction="backward",
        chain=[agg("L2", tag=1, per="left", over="relationships",
                   op="eq", rhs="2")]))}
    c["q074"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon"), direction="backward",
        chain=[agg("L2", tag=1, per="left", over="relationships",
                   op="ne", rhs="2")]))}
    c["q083"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon"),
        chain=[agg("L2", tag=1, per="left", over="relationships",
                   op="eq", rhs="0")]))}
    c["q104"] = {"start": ent("A", "Person", next=rel(
        "owns", ent("B", "Horse", chain=[
            green(1, "color", "eq", "'white'")]),
        chain=[agg("L2", tag=2, per=["A"], over="relationships",
                   op="ge", rhs="1")]))}

    # ---- L3 / L4 -------------------------------------------------------------
    c["q086"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon"),
        chain=[agg("L3", tag=1, per="pair", aggop="sum", expr="tf.duration",
                   op="gt", rhs="minutes(20)")]))}
    c["q087"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon"), direction="backward",
        chain=[agg("L3", tag=1, per=["A"], aggop="sum", expr="tf.duration",
                   op="lt", rhs="minutes(100)")]))}
    c["q089"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon"),
        chain=[agg("L3", tag=1, per=["A"], aggop="distinct",
                   expr="tf.duration", op="gt", rhs="3")]))}
    c["q116"] = {"start": ent("A", "Person", next=rel(
        "owns", ent("B", "Horse", chain=[green(1, "color")]),
        chain=[agg("L4", tag=2, per=["A"], aggop="distinct", of=1,
                   op="in_range", rhs=rng("1", "3"))]))}
    c["q117"] = {"start": ent("A", "Person", next=rel(
        "owns", ent("B", "Horse", chain=[green(1, "weight")]),
        chain=[agg("L4", tag=2, per=["A"], aggop="avg", of=1,
                   op="gt", rhs="450")]))}
    c["q134"] = {"start": ent("A", "Person", next=rel(
        "knows", ent("B", "Person", next=rel(
            "owns", ent("C", "Horse", chain=[green(1, "color")]))),
        direction="either",
        chain=[agg("L4", tag=2, per=["A"], aggop="distinct", of=1,
                   op="in_range", rhs=rng("1", "3"))]))}
    c["q167"] = {"start": ent("A", "Person", next=rel(
        "owns", untyped("B", typeTag=1),
        chain=[agg("L4", tag=2, per=["A"], aggop="distinct",
                   of={"typeTag": 1}, op="ge", rhs="2")]))}

    # ---- M family and R1 -------------------------------------------------------
    c["q067"] = {"start": ent("A", "Person", next=rel(
        "offspring of", ent("B", "Person"),
        chain=[agg("M1", k=3, minmax="max", select="left",
                   measure="right")]))}
    c["q068"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon"), direction="backward",
        chain=[agg("M1", k=2, minmax="max", select="left",
                   measure="right")]))}
    c["q069"] = {"start": untyped("A", next=rel(
        "owns", untyped("B"),
        chain=[agg("M1", k=2, minmax="max", select="left",
                   measure="right")]))}
    c["q196"] = {"start": concrete("A", *BRANDON, next=rel(
        "owns", ent("B", "Dragon", next=rel(
            "freezes", ent("C", "Dragon", next=rel(
                "freezes", ent("D", "Dragon"),
                chain=[agg("M1", k=3, minmax="max", select="C",
                           measure=["D"], per=["B"])]))))))}
    c["q078"] = {"start": concrete("A", *BALERION, next=rel(
        "freezes", ent("B", "Dragon"),
        chain=[agg("M2", k=2, minmax="max", select="right",
                   over="relationships", per=["A"])]))}
    c["q171"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon"), direction="backward",
        chain=[agg("M2", k=2, minmax="max", select="left",
                   over="relationships")]))}
    c["q090"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon"),
        chain=[agg("M3", k=2, minmax="max", select="pair", aggop="sum",
                   expr="tf.duration")]))}
    c["q182"] = {"start": concrete("A", *BRANDON, next=rel(
        "owns", ent("B", "Dragon", next=rel(
            "freezes", ent("C", "Dragon"),
            chain=[agg("M3", k=3, minmax="max", select="right",
                       aggop="sum", expr="tf.duration", per=["B"])]))))}
    c["q130"] = {
        "chain": [agg("M4", k=4, minmax="min", select="A", of=1)],
        "start": ent("A", "Person", chain=[green(1, "`birth date`")])}
    c["q131"] = {
        "chain": [agg("M4", k=4, minmax="min", select="A", of=1)],
        "start": ent("A", "Person", chain=[
            green(2, "gender", "eq", "'male'"),
            green(1, "`birth date`")])}
    c["q118"] = {"start": ent("A", "Person", next=rel(
        "offspring of", ent("B", "Person", chain=[green(1, "`birth date`")]),
        direction="backward",
        chain=[agg("M4", k=3, minmax="min", select="right", of=1,
                   per=["A"])]))}
    c["q241"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon"),
        chain=[agg("R1", k=4, minmax="max", expr="tf.duration")]))}
    c["q161"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon"),
        chain=[agg("R1", k=4, minmax="max", expr="tf.duration",
                   per="left")]))}

    # ---- chains and sequences ----------------------------------------------------
    c["q093"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon"),
        chain=[green(1, "tf.duration", "gt", "minutes(5)"),
               agg("L1", tag=2, per=["A"], count=["B"], op="ge", rhs="2"),
               agg("L2", tag=3, per="pair", over="relationships",
                   op="ge", rhs="3")]))}
    c["q094"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon"),
        chain=[green(1, "tf.duration", "gt", "minutes(5)"),
               agg("L2", tag=3, per="pair", over="relationships",
                   op="ge", rhs="3"),
               agg("L1", tag=2, per=["A"], count=["B"], op="ge", rhs="2")]))}
    c["q259"] = {"start": ent("A", "Person", next=rel(
        "owns", ent("B", "Horse"),
        chain=[green(1, "tf.since", "ge", "1011-01-01"),
               agg("L1", tag=2, per=["A"], count=["B"],
                   op="in_range", rhs=rng("0", "4"))]))}

    # ---- splits -------------------------------------------------------------------
    c["q115v1"] = {"start": ent("A", "Person", next=quant(
        "all",
        rel("owns", ent("B", "Horse"), chain=[green(1, "tf.since")]),
        rel("owns", ent("C", "Horse"), chain=[
            green(2, "tf.since", "eq", "{1}"),
            agg("L1", tag=3, per=[{"product": ["A", "B"]}], count=["C"],
                op="gt", rhs="5")])))}
    c["q115v2"] = {"start": ent("A", "Person", next=rel(
        "owns", ent("B", "Horse"),
        chain=[split("tf.since",
                     agg("L1", tag=1, per=["A"], count=["B"],
                         op="gt", rhs="5"))]))}
    c["q217"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon"),
        chain=[split("tf.since.date",
                     agg("L1", tag=1, per=["A"], count=["B"],
                         op="in_range", rhs=rng("1", "5")))]))}
    c["q219"] = {"start": ent("A", "Person", next=rel(
        "owns", ent("B", "Horse", chain=[green(1, "color")]),
        chain=[split({"tag": 1},
                     agg("L1", tag=2, per=["A"], count=["B"],
                         op="ge", rhs="3"))]))}
    c["q218"] = {"start": ent("A", "Person", next=rel(
        "owns", untyped("B", typeTag=1),
        chain=[split({"typeTag": 1},
                     agg("L1", tag=2, per=["A"], count=["B"],
                         op="ge", rhs="2"))]))}
    c["q028"] = {"chain": [split({"tag": 1},
                                 agg("L1", tag=2, per=[], count=["B"],
                                     op="lt", rhs="4"))],
                 "start": ent("A", "Person", next=rel(
                     "owns", ent("B", "Horse", chain=[green(1, "color")])))}
    c["q330"] = {"start": ent("A", "Person", next=rel(
        "owns", ent("B", "Horse"),
        chain=[split("tf.since",
                     agg("L2", tag=1, per=[], over="relationships",
                         op="gt", rhs="5"))]))}
    c["q261"] = {"chain": [split({"tag": 1},
                                 agg("L1", tag=2, per=[], count=["A"],
                                     op="ge", rhs="3"))],
                 "start": ent("A", "Horse", chain=[green(1, "color")])}

    # ---- S1 ---------------------------------------------------------------------
    c["q153"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon"),
        chain=[split("tf.since.date",
                     agg("L1", tag=1, per=["A"], count=["B"],
                         op="in_range", rhs=rng("1", "5")),
                     agg("S1", tag=2, per=["A"], op="ge", rhs="11"))]))}
    c["q153desk"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon"),
        chain=[split("tf.since.date",
                     agg("L1", tag=1, per=["A"], count=["B"],
                         op="in_range", rhs=rng("1", "5")),
                     agg("S1", tag=2, per=["A"], op="ge", rhs="2"))]))}
    c["q154desk"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon"),
        chain=[split("tf.since.year",
                     split("tf.since.dayofyear",
                           agg("L1", tag=1, per=["A"], count=["B"],
                               op="in_range", rhs=rng("1", "5")),
                           agg("S1", tag=2, per=["A"], op="ge", rhs="2")),
                     agg("S1", tag=3, per=["A"], op="ge", rhs="1"))]))}
    c["q157desk"] = {"start": ent("A", "Person", next=rel(
        "owns", ent("B", "Horse", chain=[green(1, "color")]),
        chain=[split({"tag": 1},
                     agg("L1", tag=2, per=["A"], count=["B"],
                         op="in_range", rhs=rng("1", "3")),
                     agg("S1", tag=3, per=["A"], op="ge", rhs="2"))]))}
    c["q214desk"] = {"start": ent("A", "Person", next=rel(
        "owns", untyped("B", typeTag=1),
        chain=[split({"typeTag": 1},
                     agg("L1", tag=2, per=["A"], count=["B"],
                         op="ge", rhs="2"),
                     agg("S1", tag=3, per=["A"], op="ge", rhs="2"))]))}
    c["q212desk"] = {"start": ensemble("A", "Old People", next=rel(
        "owns", ensemble("B", "Black Things"),
        chain=[split("tf.since",
                     agg("L2", tag=1, per=[], over="relationships",
                         op="ge", rhs="1"),
                     agg("S1", tag=2, per=[], op="gt", rhs="0"))]))}

    # ---- P family ----------------------------------------------------------------
    c["q262"] = {"chain": [split({"tag": 1},
                                 agg("P1", k=3, minmax="max",
                                     measure=["A"]))],
                 "start": ent("A", "Horse", chain=[green(1, "color")])}
    c["q220"] = {"start": ent("A", "Person", next=rel(
        "owns", ent("B", "Horse", chain=[green(1, "color")]),
        chain=[split({"tag": 1},
                     agg("P1", k=3, minmax="max", measure=["B"],
                         per=["A"]))]))}
    c["q225"] = {"start": ent("A", "Person", next=rel(
        "owns", ent("B", "Horse", chain=[green(1, "color")]),
        chain=[split({"tag": 1},
                     agg("P2", k=3, minmax="min", per=["A"]))]))}
    c["q269"] = {"start": ent("A", "Person", next=rel(
        "owns", ent("B", "Horse", chain=[green(1, "color")]),
        chain=[split({"tag": 1},
                     agg("P3", k=3, minmax="max", aggop="avg",
                         expr="tf.since.daysSinceEpoch", per=["A"]))]))}
    c["q264"] = {"chain": [split({"tag": 1},
                                 agg("L4", tag=2, per=[], aggop="avg", of=3),
                                 agg("P4", k=3, minmax="max", of=2))],
                 "start": ent("A", "Horse", chain=[
                     green(1, "color"), green(3, "weight")])}
    c["q223"] = {"start": ent("A", "Person", next=rel(
        "owns", ent("B", "Horse", chain=[
            green(1, "color"), green(2, "weight")]),
        chain=[split({"tag": 1},
                     agg("L4", tag=3, per=["A"], aggop="sum", of=2),
                     agg("P4", k=3, minmax="max", of=3, per=["A"]))]))}

    # ---- multivalued properties ------------------------------------------------------
    c["q307"] = {"start": ent("A", "Person", chain=[
        green(1, "nicknames", one_value=True),
        green(1, "{1}", "contains", "'a'")])}
    c["q308"] = {"start": ent("A", "Person", chain=[
        green(1, "nicknames", one_value=True),
        green(1, "{1}", "contains", "'a'"),
        green(1, "{1}", "contains", "'b'")])}
    c["q309v1"] = {"start": ent("A", "Person", chain=[
        green(1, "nicknames.count", "ge", "2")])}
    c["q309v2"] = {"start": ent("A", "Person", chain=[
        green(1, "nicknames", one_value=True),
        agg("values", tag=2, of=1, op="ge", rhs="2")])}
    c["q310"] = {"start": ent("A", "Person", chain=[
        green(1, "nicknames", one_value=True),
        green(1, "{1}", "contains", "'a'"),
        agg("values", tag=2, of=1, op="ge", rhs="2")])}
    c["q312"] = {"start": ent("A", "Person", next=quant(
        "all",
        {"kind": "tail", "chain": [
            green(1, "nicknames", one_value=True),
            {"kind": "hquant", "quant": "some", "branches": [
                [green(1, "{1}", "contains", "'b'")],
                [green(1, "{1}", "contains", "'B'")]]},
            agg("values", tag=3, of=1)]},
        {"kind": "tail", "chain": [
            green(4, "nicknames", one_value=True),
            {"kind": "hquant", "quant": "some", "branches": [
                [green(4, "{4}", "contains", "'a'")],
                [green(4, "{4}", "contains", "'A'")]]},
            agg("values", tag=6, of=4)]},
        {"kind": "tail", "chain": [green(7, "{3}", "gt", "{6}")]}))}
    c["q313"] = {"start": ent("A", "Person", chain=[
        green(1, "nicknames", one_value=True),
        green(1, "{1}", "not_contains", "'a'"),
        agg("values", tag=2, of=1, op="eq", rhs="0")])}
    c["q314"] = {"start": ent("A", "Person", chain=[
        green(1, "nicknames", one_value=True),
        green(1, "{1}", "contains", "'a'"),
        agg("values", tag=2, of=1, op="eq", rhs="0")])}

    # ---- ensembles and logical entity types ----------------------------------------------
    c["q208"] = {"start": ensemble("A", "Kings", next=rel(
        "owns", ent("B", "Dragon"),
        chain=[green(1, "tf.since", "ge", "0998-01-01")]))}
    c["q209desk"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon", next=rel(
            "owns", ensemble("C", "Kings"), direction="backward")),
        chain=[agg("L1", tag=1, per=["A"], count=["B"],
                   op="ge", rhs="2")]))}
    c["q203"] = {"start": ent("A", "King", next=rel(
        "owns", ent("B", "Dragon"),
        chain=[green(1, "tf.since", "ge", "0995-01-01")]))}
    c["q204desk"] = {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon", next=rel(
            "owns", ent("C", "Old Person"), direction="backward")),
        chain=[agg("L1", tag=1, per=["A"], count=["B"],
                   op="ge", rhs="1")]))}
    c["q205desk"] = {"start": ent("A", "Person", next=rel(
        "owns", ent("B", "Black Thing"),
        chain=[agg("L2", tag=1, per=["A"], over="relationships",
                   op="ge", rhs="2")]))}

    # ---- spatial (the g-names run on the spatial fixture) -----------------------------------
    c["g001"] = {"start": quant(
        "all",
        concrete("A", "lm-dragonmont", "Landmark", chain=[green(1, "loc")]),
        untyped("B", next=rel(
            "spotted", ent("C", "Dragon"),
            chain=[green(2, "loc.dist({1})", "eq", "0.0")])))}
    c["g002"] = {"start": quant(
        "all",
        concrete("A", "lm-dragonmont", "Landmark", chain=[green(1, "loc")]),
        untyped("B", next=rel(
            "spotted", ent("C", "Dragon"),
            chain=[green(2, "loc.dist({1})", "le", "5.0")])))}
    c["g015desk"] = {"start": quant(
        "all",
        ent("A", "Landmark", chain=[green(1, "loc")]),
        untyped("B", next=rel(
            "spotted", ent("C", "Dragon"),
            chain=[green(2, "loc.dist({1})", "le", "5.0"),
                   agg("L1", tag=3, per=["A"], count=["C"],
                       op="ge", rhs="2")])))}
    c["g018desk"] = {"start": quant(
        "all",
        ent("A", "City", chain=[green(1, "loc")]),
        untyped("B", next=rel(
            "spotted", ent("C", "Dragon"),
            chain=[green(2, "loc", "within", "{1}"),
                   agg("L1", tag=3, per=["C"], count=["A"],
                       op="ge", rhs="1")])))}

    return c


def negative_corpus() -> dict[str, tuple[str, dict]]:
    """name -> (expected diagnostic code, pattern document)."""
    n: dict[str, tuple[str, dict]] = {}
    n["tr1"] = ("TR1", {"start": ent("A", "Person", chain=[
        green(1, "height"), green(2, "height")])})
    n["tr2"] = ("TR2", {"start": ent("A", "Person", chain=[
        green(1, "height + {2}"), green(2, "height + {1}")])})
    n["tr3"] = ("TR3", {"start": ent("A", "Person", next=quant(
        "all",
        rel("owns", ent("B", "Horse", chain=[
            green(1, "weight", "gt", "{2}")])),
        rel("owns", ent("C", "Horse", chain=[
            green(2, "weight", "gt", "{1}")]))))})
    n["tr4"] = ("TR4", {"start": ent("A", "Person", next=quant(
        "all",
        rel("owns", ent("B", "Horse", chain=[green(1, "weight")]),
            wrapper="X"),
        {"kind": "tail", "chain": [green(2, "height", "gt", "{1}")]}))})
    n["tr5"] = ("TR5", {"start": ent("A", "Dragon", next=quant(
        "all",
        rel("freezes", ent("B", "Dragon"), wrapper="NC", chain=[
            green(1, "tf.duration"),
            agg("L1", tag=2, per=["A"], count=["B"],
                op="in_range", rhs=rng("0", "4"))]),
        {"kind": "tail", "chain": [
            green(3, "{1}.minutes", "gt", "1")]}))})
    n["tr6"] = ("TR6", {"start": ent("A", "Person", next=quant(
        "some",
        rel("owns", ent("B", "Horse", chain=[green(1, "weight")])),
        rel("owns", ent("C", "Horse", chain=[
            green(2, "weight", "gt", "{1}")]))))})
    n["ar1"] = ("AR1", {"start": ent("A", "Person", next=rel(
        "owns", concrete("B", *SWEETFOOT),
        chain=[agg("L1", tag=1, per=["A"], count=["B"],
                   op="gt", rhs="0")]))})
    n["ar2"] = ("AR2", {"start": ent("A", "Person", next=rel(
        "owns", ent("B", "Horse", chain=[green(1, "weight")]),
        chain=[agg("L1", tag=2, per=["A"], count=["B"],
                   op="gt", rhs="{1}")]))})
    n["ar3"] = ("AR3", {"start": ent("A", "Dragon", next=rel(
        "freezes", ent("B", "Dragon"),
        chain=[green(1, "tf.duration", "gt", "{2}"),
               agg("L3", tag=2, per=["A"], aggop="avg",
                   expr="tf.duration")]))})
    n["ar4"] = ("AR4", {"start": ent("A", "Person", next=rel(
        "owns", ent("B", "Horse", chain=[green(1, "weight")]),
        chain=[agg("L4", tag=2, per=["A"], aggop="sum", of=1),
               agg("L4", tag=3, per=["A"], aggop="avg", of=2)]))})
    n["x_before_agg"] = ("X_BEFORE_AGG", {"start": ent(
        "A", "Dragon", next=rel(
            "freezes", ent("B", "Dragon"), wrapper="X",
            chain=[agg("L1", tag=1, per=["A"], count=["B"],
                       op="eq", rhs="0")]))})
    n["type_nullified"] = ("TYPE_NULLIFIED", {"start": ent(
        "A", "Person", next=rel(
            "owns", untyped("B", disallowedTypes=["Horse", "Dragon"])))})
    n["missing_path_upper_bound"] = ("MissingPathUpperBound", {
        "start": concrete("A", *VHAGAR, next={
            "kind": "path", "length": {"op": "ge", "n": 1},
            "target": concrete("B", *BALERION)})})
    return n


NEGATIVE_GRAPH = {
    # two relationships touch one null entity: its degree must be 1
    "null_degree": ("NullDegreeViolation", {
        "entities": [
            {"id": "d1", "type": "Dragon", "props": {"name": "D1"}},
            {"id": "d2", "type": "Dragon", "props": {"name": "D2"}},
            {"id": "n1", "type": "Null"},
        ],
        "relationships": [
            {"id": "r1", "type": "owns", "source": "n1", "target": "d1",
             "props": {}},
            {"id": "r2", "type": "owns", "source": "n1", "target": "d2",
             "props": {}},
        ]}),
}
