"""Deterministic Westeros-flavored fixture: schema and property graph.

The base schema follows the sample world (people, dragons, horses, guilds,
kingdoms and their nine relationship types). The spatial variant adds
landmarks, cities, and `spotted` observations with locations. A fixed
narrative spine makes the interesting queries non-trivial (multi-parent
people, same-day ownership bursts, unowned dragons, nickname sets, ...);
a seeded filler adds bulk edges that deliberately avoid the spine's
dragons so path and count answers stay stable under any seed.
"""

from __future__ import annotations

import random

BASE_SCHEMA = {
    "entityTypes": [
        {"name": "Person", "properties": [
            {"name": "name", "type": "composite", "leading": True,
             "subProperties": [{"name": "first", "type": "string"},
                               {"name": "last", "type": "string"}]},
            {"name": "gender", "type": "string", "values": ["male", "female"]},
            {"name": "birth date", "type": "date"},
            {"name": "death date", "type": "date"},
            {"name": "height", "type": "int", "unit": "cm"},
            {"name": "nicknames", "type": "set<string>"},
        ]},
        {"name": "Dragon", "properties": [
            {"name": "name", "type": "string", "leading": True},
        ]},
        {"name": "Horse", "properties": [
            {"name": "name", "type": "string", "leading": True},
            {"name": "color", "type": "string",
             "values": ["black", "white", "brown", "gray", "chestnut"]},
            {"name": "weight", "type": "int", "unit": "Kg"},
        ]},
        {"name": "Guild", "properties": [
            {"name": "name", "type": "string", "leading": True},
        ]},
        {"name": "Kingdom", "properties": [
            {"name": "name", "type": "string", "leading": True},
        ]},
    ],
    "relationshipTypes": [
        {"name": "owns", "directional": True,
         "endpoints": [["Person", "Horse"], ["Person", "Dragon"],
                       ["Guild", "Horse"], ["Guild", "Dragon"],
                       ["Null", "Dragon"]],
         "properties": [{"name": "tf", "type": "dateframe"}]},
        {"name": "fires at", "directional": True,
         "endpoints": [["Dragon", "Dragon"]],
         "properties": [{"name": "time", "type": "datetime"}]},
        {"name": "freezes", "directional": True,
         "endpoints": [["Dragon", "Dragon"]],
         "properties": [{"name": "tf", "type": "datetimeframe"}]},
        {"name": "offspring of", "directional": True,
         "endpoints": [["Person", "Person"]], "properties": []},
        {"name": "knows", "directional": False,
         "endpoints": [["Person", "Person"]],
         "properties": [{"name": "since", "type": "date"}]},
        {"name": "member of", "directional": True,
         "endpoints": [["Person", "Guild"]],
         "properties": [{"name": "tf", "type": "dateframe"}]},
        {"name": "subject of", "directional": True,
         "endpoints": [["Person", "Kingdom"]], "properties": []},
        {"name": "registered in", "directional": True,
         "endpoints": [["Guild", "Kingdom"]], "properties": []},
        {"name": "originated in", "directional": True,
         "endpoints": [["Horse", "Kingdom"], ["Dragon", "Kingdom"]],
         "properties": []},
    ],
    "ensembles": [
        {"name": "Kings", "members": [
            {"id": "p-rogar-bolton"}, {"id": "p-robin-arryn"},
            {"id": "p-arrec-durrandon"}, {"id": "p-torrhen-karstark"}]},
        {"name": "Old People", "members": [
            {"type": "Person",
             "where": {"expr": "`birth date`", "op": "lt",
                       "rhs": "0920-01-01"}}]},
        {"name": "Black Things", "members": [
            {"where": {"expr": "color", "op": "eq", "rhs": "'black'"}}]},
    ],
    "logicalEntityTypes": [
        {"name": "King", "cases": [
            {"id": "p-rogar-bolton"}, {"id": "p-robin-arryn"},
            {"id": "p-arrec-durrandon"}, {"id": "p-torrhen-karstark"}]},
        {"name": "Old Person", "cases": [
            {"type": "Person",
             "where": {"expr": "`birth date`", "op": "lt",
                       "rhs": "0920-01-01"}}]},
        {"name": "Black Thing", "cases": [
            {"where": {"expr": "color", "op": "eq", "rhs": "'black'"}}]},
    ],
}


def spatial_schema() -> dict:
    doc = {k: [list_item for list_item in v] if isinstance(v, list) else v
           for k, v in BASE_SCHEMA.items()}
    doc["entityTypes"] = BASE_SCHEMA["entityTypes"] + [
        {"name": "Landmark", "properties": [
            {"name": "name", "type": "string", "leading": True},
            {"name": "loc", "type": "location"},
        ]},
        {"name": "City", "properties": [
            {"name": "name", "type": "string", "leading": True},
            {"name": "loc", "type": "location"},
        ]},
    ]
    doc["relationshipTypes"] = BASE_SCHEMA["relationshipTypes"] + [
        {"name": "spotted", "directional": True,
         "endpoints": [["Person", "Dragon"], ["Null", "Dragon"]],
         "properties": [{"name": "time", "type": "datetime"},
                        {"name": "loc", "type": "location"}]},
    ]
    return doc


def _person(eid, first, last, gender, birth, height, nicknames=(), death=None):
    props = {"name": {"first": first, "last": last}, "gender": gender,
             "birth date": birth, "height": height}
    if death:
        props["death date"] = death
    if nicknames:
        props["nicknames"] = sorted(nicknames)
    return {"id": eid, "type": "Person", "props": props}


PEOPLE = [
    _person("p-brandon-stark", "Brandon", "Stark", "male", "0970-03-15", 180,
            ["Bran", "Wolf"]),
    _person("p-rogar-bolton", "Rogar", "Bolton", "male", "0940-01-10", 190,
            ["Red King", "Flayer"]),
    _person("p-robin-arryn", "Robin", "Arryn", "male", "0945-06-01", 175),
    _person("p-arrec-durrandon", "Arrec", "Durrandon", "male", "0942-09-09",
            185, ["Storm King"]),
    _person("p-sansa-stark", "Sansa", "Stark", "female", "0972-05-20", 165,
            ["Minnow"]),
    _person("p-elyas-willum", "Elyas", "Willum", "male", "0915-02-02", 170,
            death="0999-10-05"),
    _person("p-mara-willum", "Mara", "Willum", "female", "0918-11-30", 160),
    _person("p-torrhen-karstark", "Torrhen", "Karstark", "male", "0919-12-31",
            178),
    _person("p-lyra-snow", "Lyra", "Snow", "female", "0970-03-15", 162,
            ["Shadowcat"]),
    _person("p-quentyn-blackwood", "Quentyn", "Blackwood", "male",
            "0990-04-04", 183, ["Bramblefoot"]),
]

DRAGONS = [
    {"id": f"d-{n.lower()}", "type": "Dragon", "props": {"name": n}}
    for n in ["Balerion", "Vhagar", "Eldrax", "Morgul", "Syrax", "Meraxes",
              "Caraxes", "Silverwing"]]

_HORSES = [
    ("h-sweetfoot", "Sweetfoot", "white", 150),
    ("h-midnight", "Midnight", "black", 450),
    ("h-storm", "Storm", "gray", 520),
    ("h-duchess", "Duchess", "white", 380),
    ("h-copper", "Copper", "chestnut", 290),
    ("h-bramble", "Bramble", "brown", 210),
    ("h-shadow", "Shadow", "black", 460),
    ("h-ember", "Ember", "brown", 275),
    ("h-frost", "Frost", "white", 505),
    ("h-willow", "Willow", "brown", 330),
    ("h-onyx", "Onyx", "black", 415),
    ("h-pearl", "Pearl", "white", 360),
]

HORSES = [{"id": i, "type": "Horse",
           "props": {"name": n, "color": c, "weight": w}}
          for i, n, c, w in _HORSES]

GUILDS = [{"id": f"g-{n.lower()}", "type": "Guild", "props": {"name": n}}
          for n in ["Masons", "Saddlers", "Blacksmiths"]]

KINGDOMS = [{"id": f"k-{n.lower()}", "type": "Kingdom", "props": {"name": n}}
            for n in ["Sarnor", "Omber"]]


def _rel(rid, rtype, src, dst, props=None):
    return {"id": rid, "type": rtype, "source": src, "target": dst,
            "props": props or {}}


def _dframe(since, till=None):
    out = {}
    if since:
        out["since"] = since
    if till:
        out["till"] = till
    return {"tf": out}


def _freeze(rid, src, dst, day, start, minutes):
    h, m = divmod(start, 60)
    end = start + minutes
    eh, em = divmod(end, 60)
    return _rel(rid, "freezes", src, dst, {
        "tf": {"since": f"{day}T{h:02d}:{m:02d}:00",
               "till": f"{day}T{eh:02d}:{em:02d}:00"}})


def _spine_relationships() -> list[dict]:
    rels = []
    # dragon ownership
    rels += [
        _rel("o-d1", "owns", "p-brandon-stark", "d-eldrax",
             _dframe("1009-01-01")),
        _rel("o-d2", "owns", "p-brandon-stark", "d-syrax",
             _dframe("1010-02-01")),
        _rel("o-d3", "owns", "p-rogar-bolton", "d-balerion",
             _dframe("0995-05-05")),
        _rel("o-d4", "owns", "p-robin-arryn", "d-vhagar",
             _dframe("0998-03-03")),
        _rel("o-d5", "owns", "p-elyas-willum", "d-morgul",
             _dframe("0980-01-01", "0999-10-05")),
        _rel("o-d6", "owns", "p-mara-willum", "d-morgul",
             _dframe("0999-10-06")),
        _rel("o-d7", "owns", "p-arrec-durrandon", "d-meraxes",
             _dframe("1000-07-07")),
        _rel("o-d8", "owns", "g-masons", "d-caraxes", _dframe("1005-01-01")),
        _rel("o-d9", "owns", {"null": True}, "d-caraxes",
             _dframe("0990-01-01", "1004-12-31")),
    ]
    # horse ownership; Rogar's six ownerships start on one day
    for i, horse in enumerate(["h-midnight", "h-storm", "h-duchess",
                               "h-copper", "h-bramble", "h-shadow"], 1):
        rels.append(_rel(f"o-h{i}", "owns", "p-rogar-bolton", horse,
                         _dframe("1011-02-01")))
    rels += [
        _rel("o-h7", "owns", "p-elyas-willum", "h-frost",
             _dframe("0985-04-01", "0999-10-05")),
        _rel("o-h8", "owns", "p-mara-willum", "h-willow", _dframe("0999-11-01")),
        _rel("o-h9", "owns", "p-robin-arryn", "h-onyx", _dframe("1003-06-15")),
        _rel("o-h10", "owns", "p-robin-arryn", "h-pearl", _dframe("1007-08-20")),
        _rel("o-h11", "owns", "p-arrec-durrandon", "h-ember",
             _dframe("1001-09-09")),
        _rel("o-h12", "owns", "g-masons", "h-sweetfoot", _dframe("1010-12-01")),
    ]
    # freezes: the Vhagar..Balerion path structure plus Balerion's sprees
    rels += [
        _freeze("f-1", "d-vhagar", "d-meraxes", "1010-05-01", 600, 7),
        _freeze("f-2", "d-meraxes", "d-balerion", "1010-05-02", 660, 5),
        _freeze("f-3", "d-vhagar", "d-syrax", "1010-05-01", 720, 9),
        _freeze("f-4", "d-syrax", "d-caraxes", "1010-05-03", 540, 12),
        _freeze("f-5", "d-caraxes", "d-balerion", "1010-05-04", 480, 3),
        _freeze("f-6", "d-morgul", "d-eldrax", "0998-02-10", 840, 45),
    ]
    spree = [
        ("1010-07-01", ["d-syrax", "d-syrax", "d-caraxes", "d-syrax"]),
        ("1010-07-02", ["d-syrax", "d-meraxes", "d-meraxes", "d-syrax"]),
        ("1010-07-03", ["d-caraxes", "d-caraxes", "d-meraxes", "d-caraxes"]),
    ]
    n = 0
    for day, targets in spree:
        for j, tgt in enumerate(targets):
            n += 1
            rels.append(_freeze(f"f-b{n}", "d-balerion", tgt, day,
                                9 * 60 + j * 25, 4 + ((n * 3) % 7)))
    # fires at
    fires = [
        ("fa-1", "d-balerion", "d-syrax", "1010-07-01T12:00:00"),
        ("fa-2", "d-vhagar", "d-silverwing", "1010-05-06T15:30:00"),
        ("fa-3", "d-silverwing", "d-balerion", "1010-05-07T16:00:00"),
        ("fa-4", "d-caraxes", "d-morgul", "1009-03-03T10:10:10"),
        ("fa-5", "d-eldrax", "d-syrax", "1009-04-04T11:11:11"),
        ("fa-6", "d-meraxes", "d-caraxes", "1010-01-20T09:45:00"),
    ]
    rels += [_rel(rid, "fires at", s, t, {"time": tm})
             for rid, s, t, tm in fires]
    # parentage: Brandon has three recorded parents
    offspring = [
        ("p-brandon-stark", "p-elyas-willum"),
        ("p-brandon-stark", "p-mara-willum"),
        ("p-brandon-stark", "p-torrhen-karstark"),
        ("p-sansa-stark", "p-elyas-willum"),
        ("p-sansa-stark", "p-mara-willum"),
        ("p-quentyn-blackwood", "p-torrhen-karstark"),
    ]
    rels += [_rel(f"off-{i}", "offspring of", a, b)
             for i, (a, b) in enumerate(offspring, 1)]
    knows = [
        ("p-brandon-stark", "p-sansa-stark", "0980-01-01"),
        ("p-brandon-stark", "p-lyra-snow", "0995-06-06"),
        ("p-rogar-bolton", "p-robin-arryn", "0960-02-02"),
        ("p-elyas-willum", "p-mara-willum", "0935-03-03"),
        ("p-sansa-stark", "p-quentyn-blackwood", "1005-04-04"),
        ("p-lyra-snow", "p-sansa-stark", "0998-05-05"),
    ]
    rels += [_rel(f"kn-{i}", "knows", a, b, {"since": s})
             for i, (a, b, s) in enumerate(knows, 1)]
    member = [
        ("p-brandon-stark", "g-masons", "1008-01-01", None),
        ("p-rogar-bolton", "g-masons", "0990-01-01", "1000-12-31"),
        ("p-sansa-stark", "g-saddlers", "1009-05-01", None),
        ("p-quentyn-blackwood", "g-blacksmiths", "1010-06-01", None),
        ("p-elyas-willum", "g-masons", "0930-01-01", "0960-01-01"),
    ]
    rels += [_rel(f"mb-{i}", "member of", a, g, _dframe(s, t))
             for i, (a, g, s, t) in enumerate(member, 1)]
    subject = [
        ("p-brandon-stark", "k-sarnor"), ("p-sansa-stark", "k-sarnor"),
        ("p-elyas-willum", "k-sarnor"), ("p-mara-willum", "k-sarnor"),
        ("p-lyra-snow", "k-sarnor"), ("p-rogar-bolton", "k-sarnor"),
        ("p-robin-arryn", "k-omber"), ("p-arrec-durrandon", "k-omber"),
        ("p-quentyn-blackwood", "k-omber"), ("p-torrhen-karstark", "k-omber"),
    ]
    rels += [_rel(f"sb-{i}", "subject of", a, k)
             for i, (a, k) in enumerate(subject, 1)]
    rels += [
        _rel("rg-1", "registered in", "g-masons", "k-sarnor"),
        _rel("rg-2", "registered in", "g-saddlers", "k-sarnor"),
        _rel("rg-3", "registered in", "g-blacksmiths", "k-omber"),
    ]
    origin = [
        ("d-balerion", "k-omber"), ("d-vhagar", "k-sarnor"),
        ("d-eldrax", "k-sarnor"), ("h-sweetfoot", "k-sarnor"),
        ("h-midnight", "k-omber"), ("h-frost", "k-sarnor"),
    ]
    rels += [_rel(f"or-{i}", "originated in", a, k)
             for i, (a, k) in enumerate(origin, 1)]
    return rels


# dragons kept clear of filler edges so path/count answers stay put
_PROTECTED = {"d-balerion", "d-vhagar", "d-morgul", "d-eldrax", "d-silverwing"}
_FILLER_DRAGONS = ["d-syrax", "d-meraxes", "d-caraxes"]


def _filler_relationships(seed: int) -> list[dict]:
    rng = random.Random(seed)
    rels = []
    people = [p["id"] for p in PEOPLE]
    existing = {("p-brandon-stark", "p-sansa-stark"),
                ("p-brandon-stark", "p-lyra-snow"),
                ("p-rogar-bolton", "p-robin-arryn"),
                ("p-elyas-willum", "p-mara-willum"),
                ("p-sansa-stark", "p-quentyn-blackwood"),
                ("p-lyra-snow", "p-sansa-stark")}
    n = 0
    attempts = 0
    while n < 14 and attempts < 300:
        attempts += 1
        a, b = rng.sample(people, 2)
        if (a, b) in existing or (b, a) in existing:
            continue
        existing.add((a, b))
        n += 1
        year = rng.randint(980, 1010)
        rels.append(_rel(f"kn-x{n}", "knows", a, b,
                         {"since": f"{year:04d}-{rng.randint(1, 12):02d}-"
                                   f"{rng.randint(1, 28):02d}"}))
    for i in range(1, 15):
        a = rng.choice(_FILLER_DRAGONS)
        b = rng.choice([d for d in _FILLER_DRAGONS if d != a])
        t = (f"{rng.randint(1000, 1011):04d}-{rng.randint(1, 12):02d}-"
             f"{rng.randint(1, 28):02d}T{rng.randint(0, 23):02d}:"
             f"{rng.randint(0, 59):02d}:00")
        rels.append(_rel(f"fa-x{i}", "fires at", a, b, {"time": t}))
    fill_origin = [("h-storm", "k-omber"), ("h-duchess", "k-sarnor"),
                   ("h-copper", "k-omber"), ("h-shadow", "k-sarnor"),
                   ("h-onyx", "k-omber"), ("h-pearl", "k-sarnor"),
                   ("d-syrax", "k-sarnor")]
    rels += [_rel(f"or-x{i}", "originated in", a, k)
             for i, (a, k) in enumerate(fill_origin, 1)]
    return rels


def base_graph(seed: int = 7) -> dict:
    entities = PEOPLE + DRAGONS + HORSES + GUILDS + KINGDOMS
    rels = _spine_relationships() + _filler_relationships(seed)
    return {"entities": entities, "relationships": rels}


def spatial_graph(seed: int = 7) -> dict:
    doc = base_graph(seed)
    entities = doc["entities"] + [
        {"id": "lm-dragonmont", "type": "Landmark",
         "props": {"name": "Dragonmont Peak",
                   "loc": {"lat": 25.0, "lon": 40.0}}},
        {"id": "c-sarnath", "type": "City",
         "props": {"name": "Sarnath",
                   "loc": {"lat": 25.5, "lon": 40.5, "radiusKm": 8.0}}},
    ]
    spotted = [
        ("sp-1", "p-brandon-stark", "d-eldrax", "1010-08-01T06:00:00",
         {"lat": 25.01, "lon": 40.01}),
        ("sp-2", {"null": True}, "d-balerion", "1010-08-02T07:30:00",
         {"lat": 25.3, "lon": 40.3}),
        ("sp-3", "p-sansa-stark", "d-vhagar", "1010-08-03T05:15:00",
         {"lat": 24.99, "lon": 40.02}),
        ("sp-4", {"null": True}, "d-silverwing", "1010-08-04T18:45:00",
         {"lat": 25.0, "lon": 40.04}),
        ("sp-5", "p-rogar-bolton", "d-eldrax", "1010-08-05T12:00:00",
         {"lat": 26.0, "lon": 41.0}),
        ("sp-6", "p-lyra-snow", "d-caraxes", "1010-09-01T14:00:00",
         {"lat": 25.45, "lon": 40.52}),
    ]
    rels = doc["relationships"] + [
        _rel(rid, "spotted", src, dst, {"time": t, "loc": loc})
        for rid, src, dst, t, loc in spotted]
    return {"entities": entities, "relationships": rels}
