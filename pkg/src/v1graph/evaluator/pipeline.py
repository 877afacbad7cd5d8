"""The aggregation pipeline: group, count, select, and split over rows.

Aggregators run over the full row set of their scope, in dependency order.
L-family stages compute a calculated value per group and filter groups by
their constraint; M-family and R1 keep the k extremal members per group;
splits partition a scope by a criterion value and evaluate their body per
partition, with S1/P-family stages closing the per-split scope.
"""

from __future__ import annotations

from typing import Optional

from .. import exprs
from .. import values as V
from ..pattern import ast as P
from ..validator import _zero_admitting
from ..values import EMPTY, Value
from . import plan as PL
from .matcher import Matcher, Row, binding_sort_key, dedup_rows


class PipelineRunner:
    def __init__(self, matcher: Matcher):
        self.m = matcher
        self.cp = matcher.cp
        self.an = matcher.cp.analysis
        self._entity_slots = sorted(
            s for s, k in self.cp.slot_kind.items() if k == "entity")

    # -- entry points --------------------------------------------------------

    def run_root(self, rows: list[Row]) -> list[Row]:
        return self.run_scope(rows, ())

    def run_scope(self, rows: list[Row], scope: tuple) -> list[Row]:
        for ps in self.cp.pipeline.get(scope, []):
            if not rows:
                break
            rows = self.run_stage(rows, ps)
        return rows

    def run_stage(self, rows, ps: PL.PipelineStage):
        if ps.kind == "xcheck":
            return [r for r in rows
                    if not self.m.fragment_matches(r, ps.plan_conn)]
        if ps.kind == "green":
            return self._deferred_green(rows, ps.stage)
        if ps.kind == "hquant":
            return self._deferred_hquant(rows, ps.stage)
        if ps.kind == "split":
            return self.run_split(rows, ps.stage)
        return self.run_agg(rows, ps.stage)

    # -- shared helpers --------------------------------------------------------

    def _hosts(self, stage) -> list:
        return self.cp.stage_hosts.get(id(stage), [])

    def _host_props_for_row(self, stage, row: Row):
        for kind, obj in self._hosts(stage):
            if kind == "entity" and obj is not None:
                b = row.bind.get(obj.slot)
                if b is not None:
                    return self.m.entity_props(b)
            elif kind == "conn":
                rid = row.bind.get(obj.slot)
                if rid is not None and obj.conn.kind == "rel":
                    props = self.m.g.relationships[rid].properties
                    return lambda name, _p=props: _p.get(name, EMPTY)
        return None

    def _deferred_green(self, rows, st: P.GreenStage):
        out = []
        for row in rows:
            props = self._host_props_for_row(st, row)
            if props is None:
                out.append(row)
                continue
            ctx = self.m.ctx(row, props)
            try:
                val = exprs.evaluate(st.expr, ctx)
            except V.V1TypeError:
                val = EMPTY
            row.tags[st.tag] = val
            if st.check is None or exprs.eval_check(st.check, val, ctx):
                out.append(row)
        return out

    def _deferred_hquant(self, rows, st: P.HQuantStage):
        out = []
        for row in rows:
            props = self._host_props_for_row(st, row)
            if props is None:
                out.append(row)
                continue
            hosts = self._hosts(st)
            if self.m.hquant_satisfied(row, st, hosts[0]):
                out.append(row)
        return out

    def elem_binding(self, row: Row, elem):
        """Binding of one per/count element: entity id or product tuple."""
        if isinstance(elem, tuple) and elem[0] == "product":
            parts = []
            for t in elem[1]:
                b = self._tag_binding(row, t)
                if b is None:
                    return None
                parts.append(b)
            return tuple(parts)
        return self._tag_binding(row, elem)

    def _tag_binding(self, row: Row, letter: str):
        for s in self.cp.tag_slots.get(letter, []):
            b = row.bind.get(s)
            if b is not None:
                return b
        return None

    def group_key(self, row: Row, per: list):
        """(hashable key, report map) or None when a T element is unbound."""
        key = []
        report = {}
        for elem in per:
            b = self.elem_binding(row, elem)
            if b is None:
                return None
            key.append(b)
            if isinstance(elem, tuple) and elem[0] == "product":
                for t, v in zip(elem[1], b):
                    report[t] = v
            else:
                report[elem] = b
        return tuple(key), report

    def _grouped(self, rows, stage):
        res = self.an.resolved.get(id(stage), {})
        per = res.get("per") or []
        groups: dict = {}
        reports: dict = {}
        passthrough: list[Row] = []
        for row in rows:
            gk = self.group_key(row, per)
            if gk is None:
                passthrough.append(row)
                continue
            key, report = gk
            groups.setdefault(key, []).append(row)
            reports[key] = report
        ordered = sorted(groups, key=lambda k: tuple(binding_sort_key(x)
                                                     for x in k))
        return ordered, groups, reports, passthrough

    def _check_value(self, st: P.AggStage, at: Value, row: Optional[Row]) -> bool:
        if st.check is None:
            return True
        if at.kind == "int" and at.data == 0 and \
                st.check.op in ("ne", "lt", "le"):
            return False    # these forms require a positive count
        ctx = self.m.ctx(row if row is not None else Row({}, {}),
                         lambda name: EMPTY)
        return exprs.eval_check(st.check, at, ctx)

    # -- R-slot discovery -------------------------------------------------------

    def _conn_slots(self, stage) -> list[int]:
        """Relationship/path slots an aggregator ranges over."""
        slots = []
        for kind, obj in self._hosts(stage):
            if kind == "conn":
                slots.append(obj.slot)
            elif kind == "quant":
                # quantifier input: branch head connections, skipping X/NC
                slots.extend(self._quant_head_slots(obj))
        return sorted(set(slots))

    def _quant_head_slots(self, q) -> list[int]:
        out = []
        for pq in self._plan_quants(q):
            for br in list(pq.branches) + list(pq.optional):
                head = br.next
                if isinstance(head, PL.PlanConn):
                    if head.conn.wrapper in (P.WRAPPER_X, P.WRAPPER_NC):
                        continue
                    out.append(head.slot)
                elif isinstance(head, PL.PlanQuant):
                    out.extend(self._quant_head_slots(head.q))
        return out

    def _plan_quants(self, q) -> list:
        # locate plan quantifiers built from this AST quantifier
        found = []

        def visit(obj):
            if isinstance(obj, PL.PlanQuant):
                if obj.q is q:
                    found.append(obj)
                for br in list(obj.branches) + list(obj.optional):
                    visit(br.next)
            elif isinstance(obj, PL.PlanBranch):
                visit(obj.next)
            elif isinstance(obj, PL.PlanConn):
                visit(obj.target)
            elif isinstance(obj, PL.PlanEntity):
                visit(obj.next)

        visit(self.cp.root)
        return found

    # -- aggregators -------------------------------------------------------------

    def run_agg(self, rows, st: P.AggStage):
        fam = st.family
        if fam == "L1":
            return self._run_L1(rows, st)
        if fam == "L2":
            return self._run_L2(rows, st)
        if fam == "L3":
            return self._run_L3(rows, st)
        if fam == "L4":
            return self._run_L4(rows, st)
        if fam == "values":
            return self._run_values(rows, st)
        if fam in ("M1", "M2", "M3", "M4"):
            return self._run_M(rows, st)
        if fam == "R1":
            return self._run_R1(rows, st)
        raise NotImplementedError(fam)

    def _run_L1(self, rows, st):
        res = self.an.resolved[id(st)]
        ordered, groups, reports, passthrough = self._grouped(rows, st)
        out = list(passthrough)
        for key in ordered:
            grows = groups[key]
            vals = set()
            for elem in res.get("count") or []:
                for row in grows:
                    b = self.elem_binding(row, elem)
                    if b is not None:
                        vals.add(b)
            at = V.ivl(len(vals))
            for r in grows:
                r.tags[st.tag] = at
            if self._check_value(st, at, grows[0]):
                out.extend(grows)
        return out

    def _run_L2(self, rows, st):
        slots = self._conn_slots(st)
        ordered, groups, reports, passthrough = self._grouped(rows, st)
        out = list(passthrough)
        for key in ordered:
            grows = groups[key]
            vals = {row.bind.get(s) for row in grows for s in slots}
            vals.discard(None)
            at = V.ivl(len(vals))
            for r in grows:
                r.tags[st.tag] = at
            if self._check_value(st, at, grows[0]):
                out.extend(grows)
        return out

    def _rel_values(self, st, grows) -> list[Value]:
        """relExpr per distinct relationship assignment, Empty skipped."""
        slots = self._conn_slots(st)
        seen = {}
        for row in grows:
            for s in slots:
                rid = row.bind.get(s)
                if rid is not None and rid not in seen:
                    seen[rid] = row
        vals = []
        for rid in sorted(seen):
            row = seen[rid]
            props = self.m.g.relationships[rid].properties
            ctx = self.m.ctx(row, lambda name, _p=props: _p.get(name, EMPTY))
            try:
                v = exprs.evaluate(st.expr, ctx)
            except V.V1TypeError:
                v = EMPTY
            if not v.is_empty():
                vals.append(v)
        return vals

    def _aggop(self, aggop: str, vals: list[Value]) -> Value:
        if aggop == "distinct":
            return V.ivl(len({V.order_key(v) for v in vals}))
        if aggop == "list":
            return V.lvl(vals)
        if aggop == "set":
            return V.setvl(vals)
        coll = V.lvl(vals)
        return V.apply_function(aggop, coll, ())

    def _run_L3(self, rows, st):
        ordered, groups, reports, passthrough = self._grouped(rows, st)
        out = list(passthrough)
        for key in ordered:
            grows = groups[key]
            at = self._aggop(st.aggop, self._rel_values(st, grows))
            for r in grows:
                r.tags[st.tag] = at
            if self._check_value(st, at, grows[0]):
                out.extend(grows)
        return out

    def _of_value(self, st, row: Row) -> Value:
        if isinstance(st.of, tuple) and st.of[0] == "typetag":
            slot = self.cp.type_tag_slot.get(st.of[1])
            if slot is None:
                return EMPTY
            t = self.m.binding_type(row.bind.get(slot))
            return V.svl(t) if t else EMPTY
        return row.tags.get(st.of, EMPTY)

    def _l4_values(self, st, grows) -> list[Value]:
        support = self.cp.tag_support.get(st.of, set()) \
            if isinstance(st.of, int) else set()
        if isinstance(st.of, tuple) and st.of[0] == "typetag":
            slot = self.cp.type_tag_slot.get(st.of[1])
            support = {slot} if slot is not None else set()
        support_rel = sorted(s for s in support
                             if self.cp.slot_kind.get(s) in ("rel", "path"))
        seen = {}
        for row in grows:
            key = (tuple(row.bind.get(s) for s in self._entity_slots),
                   tuple(row.bind.get(s) for s in support_rel))
            if key not in seen:
                seen[key] = row
        vals = []
        for key in sorted(seen, key=lambda k: str(k)):
            v = self._of_value(st, seen[key])
            if not v.is_empty():
                vals.append(v)
        return vals

    def _run_L4(self, rows, st):
        ordered, groups, reports, passthrough = self._grouped(rows, st)
        out = list(passthrough)
        for key in ordered:
            grows = groups[key]
            at = self._aggop(st.aggop, self._l4_values(st, grows))
            for r in grows:
                r.tags[st.tag] = at
            if self._check_value(st, at, grows[0]):
                out.extend(grows)
        return out

    def _run_values(self, rows, st):
        all_slots = sorted(self.cp.slot_kind)
        groups: dict = {}
        for row in rows:
            key = tuple(row.bind.get(s) for s in all_slots)
            groups.setdefault(key, []).append(row)
        out = []
        for key in sorted(groups, key=lambda k: tuple(binding_sort_key(x)
                                                      for x in k)):
            grows = groups[key]
            vals = {V.order_key(r.tags[st.of]) for r in grows
                    if st.of in r.tags and not r.tags[st.of].is_empty()}
            at = V.ivl(len(vals))
            for r in grows:
                r.tags[st.tag] = at
            if self._check_value(st, at, grows[0]):
                out.extend(grows)
        return out

    def _measure_key(self, v):
        return V.order_key(v)

    def _run_M(self, rows, st):
        res = self.an.resolved[id(st)]
        sel = res.get("select")
        ordered, groups, reports, passthrough = self._grouped(rows, st)
        out = list(passthrough)
        for key in ordered:
            grows = groups[key]
            by_o: dict = {}
            for row in grows:
                b = self.elem_binding(row, sel)
                if b is not None:
                    by_o.setdefault(b, []).append(row)
            candidates = []
            for o in sorted(by_o, key=binding_sort_key):
                rows_o = by_o[o]
                measure = self._m_measure(st, res, rows_o)
                if measure is None:
                    continue
                candidates.append((measure, o))
            reverse = st.minmax == "max"
            candidates.sort(key=lambda mo: (mo[0], binding_sort_key(mo[1]))
                            if not reverse else (_neg_key(mo[0]),
                                                 binding_sort_key(mo[1])))
            extremal = {o for _, o in candidates[:st.k]}
            if st.all_but:
                keep = {o for o in by_o} - extremal
            else:
                keep = extremal
            for row in grows:
                b = self.elem_binding(row, sel)
                if b is None or b in keep:
                    out.append(row)
        return out

    def _m_measure(self, st, res, rows_o):
        if st.family == "M1":
            vals = set()
            for elem in res.get("count") or []:
                for row in rows_o:
                    b = self.elem_binding(row, elem)
                    if b is not None:
                        vals.add(b)
            return len(vals) if vals else None
        if st.family == "M2":
            slots = self._conn_slots(st)
            vals = {row.bind.get(s) for row in rows_o for s in slots}
            vals.discard(None)
            return len(vals) if vals else None
        if st.family == "M3":
            v = self._aggop(st.aggop, self._rel_values(st, rows_o))
            return None if v.is_empty() else self._measure_key(v)
        # M4
        for row in rows_o:
            v = self._of_value(st, row)
            if not v.is_empty():
                return self._measure_key(v)
        return None

    def _run_R1(self, rows, st):
        slots = self._conn_slots(st)
        ordered, groups, reports, passthrough = self._grouped(rows, st)
        out = list(passthrough)
        for key in ordered:
            grows = groups[key]
            seen: dict = {}
            for row in grows:
                for s in slots:
                    rid = row.bind.get(s)
                    if rid is not None and rid not in seen:
                        seen[rid] = row
            candidates = []
            for rid in sorted(seen):
                row = seen[rid]
                props = self.m.g.relationships[rid].properties
                ctx = self.m.ctx(row,
                                 lambda name, _p=props: _p.get(name, EMPTY))
                try:
                    v = exprs.evaluate(st.expr, ctx)
                except V.V1TypeError:
                    v = EMPTY
                if not v.is_empty():
                    candidates.append((self._measure_key(v), rid))
            reverse = st.minmax == "max"
            candidates.sort(key=lambda mo: (mo[0], mo[1]) if not reverse
                            else (_neg_key(mo[0]), mo[1]))
            extremal = {rid for _, rid in candidates[:st.k]}
            if st.all_but:
                keep = set(seen) - extremal
            else:
                keep = extremal
            for row in grows:
                rids = {row.bind.get(s) for s in slots} - {None}
                if not rids or rids & keep:
                    out.append(row)
        return out

    # -- splits ---------------------------------------------------------------

    def _split_value(self, st: P.SplitStage, row: Row) -> Optional[Value]:
        if isinstance(st.by, tuple):
            if st.by[0] == "tag":
                v = row.tags.get(st.by[1], EMPTY)
            else:
                slot = self.cp.type_tag_slot.get(st.by[1])
                t = self.m.binding_type(row.bind.get(slot)) if slot else None
                v = V.svl(t) if t else EMPTY
            return None if v.is_empty() else v
        props = self._host_props_for_row(st, row)
        if props is None:
            return None
        ctx = self.m.ctx(row, props)
        try:
            v = exprs.evaluate(st.by, ctx)
        except V.V1TypeError:
            return None
        return None if v.is_empty() else v

    def run_split(self, rows, st: P.SplitStage):
        groups: dict = {}
        for row in rows:
            v = self._split_value(st, row)
            if v is None:
                continue   # Empty criterion values join no group
            groups.setdefault(V.order_key(v), (v, []))[1].append(row)

        body = list(st.body)
        terminators = []
        while body and isinstance(body[-1], P.AggStage) and \
                body[-1].family in ("S1", "P1", "P2", "P3", "P4"):
            terminators.insert(0, body.pop())

        survivors: dict = {}
        for gk in sorted(groups):
            val, grows = groups[gk]
            for stage in body:
                if not grows:
                    break
                if isinstance(stage, P.SplitStage):
                    grows = self.run_split(grows, stage)
                else:
                    grows = self.run_agg(grows, stage)
            if grows:
                survivors[gk] = (val, grows)

        for term in terminators:
            survivors = self._run_terminator(term, survivors)
        out = []
        for gk in sorted(survivors):
            out.extend(survivors[gk][1])
        return dedup_rows(out)

    def _run_terminator(self, st: P.AggStage, survivors: dict):
        res = self.an.resolved.get(id(st), {})
        per = res.get("per") or []
        if st.family == "S1":
            combo_groups: dict = {}
            combo_report: dict = {}
            for gk, (val, grows) in survivors.items():
                for row in grows:
                    key = self.group_key(row, per)
                    if key is None:
                        continue
                    combo_groups.setdefault(key[0], set()).add(gk)
                    combo_report[key[0]] = key[1]
            keep_combos = set()
            for ck in sorted(combo_groups, key=lambda k: str(k)):
                stv = V.ivl(len(combo_groups[ck]))
                if self._check_value(st, stv, None):
                    keep_combos.add(ck)
            out: dict = {}
            for gk, (val, grows) in survivors.items():
                kept = []
                for row in grows:
                    key = self.group_key(row, per)
                    if key is None or key[0] in keep_combos:
                        if key is not None:
                            row.tags[st.tag] = V.ivl(
                                len(combo_groups.get(key[0], ())))
                        kept.append(row)
                if kept:
                    out[gk] = (val, kept)
            return out

        # P1..P4: per T-combination, keep the k extremal groups
        combo_rows: dict = {}
        for gk, (val, grows) in survivors.items():
            for row in grows:
                key = self.group_key(row, per)
                ck = key[0] if key is not None else ()
                combo_rows.setdefault(ck, {}).setdefault(gk, []).append(row)
        kept_pairs = set()
        for ck in sorted(combo_rows, key=lambda k: str(k)):
            by_group = combo_rows[ck]
            candidates = []
            for gk in sorted(by_group):
                measure = self._p_measure(st, res, by_group[gk])
                if measure is None:
                    continue
                candidates.append((measure, gk))
            reverse = st.minmax == "max"
            candidates.sort(key=lambda mg: (mg[0], str(mg[1])) if not reverse
                            else (_neg_key(mg[0]), str(mg[1])))
            extremal = {gk for _, gk in candidates[:st.k]}
            if st.all_but:
                keep = set(by_group) - extremal
            else:
                keep = extremal
            for gk in keep:
                kept_pairs.add((ck, gk))
        out = {}
        for gk, (val, grows) in survivors.items():
            kept = []
            for row in grows:
                key = self.group_key(row, per)
                ck = key[0] if key is not None else ()
                if (ck, gk) in kept_pairs:
                    kept.append(row)
            if kept:
                out[gk] = (val, kept)
        return out

    def _p_measure(self, st, res, grows):
        if st.family == "P1":
            vals = set()
            for elem in res.get("count") or []:
                for row in grows:
                    b = self.elem_binding(row, elem)
                    if b is not None:
                        vals.add(b)
            return len(vals) if vals else None
        if st.family == "P2":
            slots = self._conn_slots(st)
            vals = {row.bind.get(s) for row in grows for s in slots}
            vals.discard(None)
            return len(vals) if vals else None
        if st.family == "P3":
            v = self._aggop(st.aggop, self._rel_values(st, grows))
            return None if v.is_empty() else self._measure_key(v)
        # P4
        for row in grows:
            v = self._of_value(st, row)
            if not v.is_empty():
                return self._measure_key(v)
        return None


def _neg_key(measure):
    """Descending order for max selection with stable canonical ties."""
    if isinstance(measure, (int, float)):
        return -measure
    return _NegWrap(measure)


class _NegWrap:
    __slots__ = ("v",)

    def __init__(self, v):
        self.v = v

    def __lt__(self, other):
        return other.v < self.v

    def __eq__(self, other):
        return self.v == other.v


