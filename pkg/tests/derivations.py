"""Independent golden derivations.

Each function recomputes the expected answer for one fixture query by a
direct scan of the graph document, with none of the engine's machinery.
The acceptance suite checks these facts against the committed golden files,
so a regression in either the engine or the goldens is caught.
"""

from collections import Counter, defaultdict
from datetime import datetime


def _entities(doc, type_name):
    return [e for e in doc["entities"] if e["type"] == type_name]


def _rels(doc, type_name):
    # half-edges carry {"null": true} endpoints; these scans want ids only
    return [r for r in doc["relationships"] if r["type"] == type_name
            and isinstance(r["source"], str) and isinstance(r["target"], str)]


def _freeze_ms(rel):
    tf = rel["props"]["tf"]
    t0 = datetime.fromisoformat(tf["since"])
    t1 = datetime.fromisoformat(tf["till"])
    return int((t1 - t0).total_seconds() * 1000)


def q001_dragons_of_brandon(doc):
    return sorted(r["target"] for r in _rels(doc, "owns")
                  if r["source"] == "p-brandon-stark"
                  and any(e["id"] == r["target"] and e["type"] == "Dragon"
                          for e in doc["entities"]))


def q012_horseless_persons(doc):
    horses = {e["id"] for e in _entities(doc, "Horse")}
    owners_of_horses = {r["source"] for r in _rels(doc, "owns")
                        if r["target"] in horses}
    return sorted(p["id"] for p in _entities(doc, "Person")
                  if p["id"] not in owners_of_horses)


def q004_q005_families(doc):
    """(q004 winners, q005 winners): people whose dragon was frozen by a
    dragon owned by one parent / by two distinct parents."""
    types = {e["id"]: e["type"] for e in doc["entities"]}
    owns = defaultdict(set)
    for r in _rels(doc, "owns"):
        owns[r["source"]].add(r["target"])
    parents = defaultdict(set)
    for r in _rels(doc, "offspring of"):
        parents[r["source"]].add(r["target"])
    froze = defaultdict(set)
    for r in _rels(doc, "freezes"):
        froze[r["target"]].add(r["source"])
    one_parent, two_parents = [], []
    for p in _entities(doc, "Person"):
        pid = p["id"]
        hit1 = hit2 = False
        for b in owns[pid]:
            if types.get(b) != "Dragon":
                continue
            for freezer in froze[b]:
                owning_parents = {c for c in parents[pid]
                                  if freezer in owns[c]}
                if owning_parents:
                    hit1 = True
                if len(owning_parents) >= 2:
                    hit2 = True
        if hit1:
            one_parent.append(pid)
        if hit2:
            two_parents.append(pid)
    return sorted(one_parent), sorted(two_parents)


def q020_unroyal_horses(doc):
    royal = {r["target"] for r in _rels(doc, "owns")
             if r["source"] in ("p-rogar-bolton", "p-robin-arryn")}
    return sorted(h["id"] for h in _entities(doc, "Horse")
                  if h["id"] not in royal)


def q047_shortest_vhagar_balerion(doc):
    """Breadth-first over undirected edges; returns (length, path count)."""
    adj = defaultdict(list)
    for r in doc["relationships"]:
        if isinstance(r["source"], dict) or isinstance(r["target"], dict):
            continue
        adj[r["source"]].append((r["id"], r["target"]))
        adj[r["target"]].append((r["id"], r["source"]))
    src, dst = "d-vhagar", "d-balerion"
    paths = []
    best = [99]

    def dfs(cur, ents, rels):
        if len(rels) > best[0]:
            return
        if cur == dst and rels:
            if len(rels) < best[0]:
                best[0] = len(rels)
                paths.clear()
            if len(rels) == best[0]:
                paths.append(tuple(rels))
            return
        for rid, far in adj[cur]:
            if rid in rels or far in ents[1:]:
                continue
            if far == src:
                continue
            dfs(far, ents + [far], rels + [rid])

    dfs(src, [src], [])
    return best[0], len(set(paths))


def q059_multi_parent_people(doc):
    parents = Counter(r["source"] for r in _rels(doc, "offspring of"))
    return sorted(p for p, n in parents.items() if n > 2)


def q071_prolific_freezers(doc):
    counts = Counter(r["source"] for r in _rels(doc, "freezes"))
    return sorted(d for d, n in counts.items() if n > 10)


def q081_non_freezers(doc):
    freezers = {r["source"] for r in _rels(doc, "freezes")}
    return sorted(d["id"] for d in _entities(doc, "Dragon")
                  if d["id"] not in freezers)


def q108_birth_date_peers(doc):
    anchor = next(e for e in doc["entities"]
                  if e["id"] == "p-brandon-stark")
    date = anchor["props"]["birth date"]
    return sorted(p["id"] for p in _entities(doc, "Person")
                  if p["props"].get("birth date") == date)


def q115_same_day_owner(doc):
    horses = {e["id"] for e in _entities(doc, "Horse")}
    per_day = defaultdict(set)
    for r in _rels(doc, "owns"):
        if r["target"] in horses and r["props"].get("tf", {}).get("since"):
            per_day[(r["source"], r["props"]["tf"]["since"])].add(r["target"])
    return sorted({owner for (owner, day), hs in per_day.items()
                   if len(hs) > 5})


def q130_oldest(doc, k=4):
    birth = {p["id"]: p["props"]["birth date"]
             for p in _entities(doc, "Person")}
    return sorted(sorted(birth, key=lambda p: (birth[p], p))[:k])


def q153_daily_freeze_spree(doc, min_days=2):
    per = defaultdict(set)
    for r in _rels(doc, "freezes"):
        day = r["props"]["tf"]["since"][:10]
        per[(r["source"], day)].add(r["target"])
    days_ok = Counter()
    for (src, day), targets in per.items():
        if 1 <= len(targets) <= 5:
            days_ok[src] += 1
    return sorted(d for d, n in days_ok.items() if n >= min_days)


def q241_longest_freezes(doc, k=4):
    durs = sorted(((_freeze_ms(r), r["id"]) for r in _rels(doc, "freezes")),
                  key=lambda x: (-x[0], x[1]))
    return sorted(rid for _, rid in durs[:k])


def q262_top_colors(doc, k=3):
    colors = Counter(h["props"]["color"] for h in _entities(doc, "Horse"))
    top = {c for c, _ in sorted(colors.items(),
                                key=lambda kv: (-kv[1], kv[0]))[:k]}
    return sorted(h["id"] for h in _entities(doc, "Horse")
                  if h["props"]["color"] in top)


def nicknames(doc):
    return {p["id"]: p["props"].get("nicknames", [])
            for p in _entities(doc, "Person")}


def q307_contains_a(doc):
    return sorted(p for p, ns in nicknames(doc).items()
                  if any("a" in n for n in ns))


def q308_contains_a_and_b(doc):
    return sorted(p for p, ns in nicknames(doc).items()
                  if any("a" in n and "b" in n for n in ns))


def q309_two_nicknames(doc):
    return sorted(p for p, ns in nicknames(doc).items() if len(ns) >= 2)


def g002_dragons_near_peak(doc, radius_km=5.0):
    import math
    lm = next(e for e in doc["entities"] if e["id"] == "lm-dragonmont")
    lat0, lon0 = lm["props"]["loc"]["lat"], lm["props"]["loc"]["lon"]

    def dist(lat, lon):
        r = 6371.0088
        p1, p2 = math.radians(lat0), math.radians(lat)
        dp = math.radians(lat - lat0)
        dl = math.radians(lon - lon0)
        h = math.sin(dp / 2) ** 2 + \
            math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
        return 2 * r * math.asin(math.sqrt(h))

    out = set()
    for r in doc["relationships"]:
        if r["type"] != "spotted":
            continue   # a half-edge spotter still counts as an observation
        loc = r["props"]["loc"]
        if dist(loc["lat"], loc["lon"]) <= radius_km:
            out.add(r["target"])
    return sorted(out)
