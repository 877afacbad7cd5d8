/** Canvas reconstructions of committed corpus queries, used by the
 * round-trip tests: each builder must serialize to a document the engine
 * validates clean and that matches the corpus file structurally. */

import {
  CanvasModel, concrete, typed, untyped,
} from "../src/model.js"

export const BUILDERS: Record<string, () => CanvasModel> = {
  q001() {
    const m = new CanvasModel()
    m.start(concrete("A", "p-brandon-stark", "Person"))
      .rel("owns", typed("B", "Dragon"))
    return m
  },

  q003v2() {
    const m = new CanvasModel()
    const q = m.start(typed("A", "Person")).quantifier("all")
    q.branchGreens({ kind: "expr", tag: 1, expr: "name.first",
                     check: { op: "eq", rhs: "'Brandon'" } })
    q.branchRel("owns", typed("B", "Dragon"))
    return m
  },

  q004() {
    const m = new CanvasModel()
    const q = m.start(typed("A", "Person")).quantifier("all")
    q.branchRel("owns", typed("B", "Dragon"))
    const d = typed("D", "Dragon")
    d.rel("freezes", typed("B", "Dragon"))
    const c = typed("C", "Person")
    c.rel("owns", d)
    q.branchRel("offspring of", c)
    return m
  },

  q012() {
    const m = new CanvasModel()
    m.start(typed("A", "Person"))
      .rel("owns", typed("B", "Horse"), { wrapper: "X" })
    return m
  },

  q020v2() {
    const m = new CanvasModel()
    const q = m.start(typed("A", "Horse")).quantifier("none")
    q.branchRel("owns", concrete("B", "p-rogar-bolton", "Person"),
                { direction: "backward" })
    q.branchRel("owns", concrete("C", "p-robin-arryn", "Person"),
                { direction: "backward" })
    return m
  },

  q030v1() {
    const m = new CanvasModel()
    const b = m.combiner("c1", typed("B", "Dragon"))
    const q = m.start(typed("A", "Dragon")).quantifier("all")
    q.branchRel("freezes", b)
    q.branchRel("fires at", b)
    return m
  },

  q047() {
    const m = new CanvasModel()
    m.start(concrete("A", "d-vhagar", "Dragon"))
      .path(concrete("B", "d-balerion", "Dragon"),
            { length: { op: "le", n: 6 }, shortest: true })
    return m
  },

  q059() {
    const m = new CanvasModel()
    m.start(typed("A", "Person")).rel("offspring of", typed("B", "Person"), {
      chain: [{ kind: "agg", family: "L1", tag: 1, per: ["A"],
                count: ["B"], check: { op: "gt", rhs: "2" } }],
    })
    return m
  },

  q115v2() {
    const m = new CanvasModel()
    m.start(typed("A", "Person")).rel("owns", typed("B", "Horse"), {
      chain: [{ kind: "split", by: "tf.since", body: [
        { kind: "agg", family: "L1", tag: 1, per: ["A"], count: ["B"],
          check: { op: "gt", rhs: "5" } }] }],
    })
    return m
  },

  q262() {
    const m = new CanvasModel()
    m.stage({ kind: "split", by: { tag: 1 }, body: [
      { kind: "agg", family: "P1", k: 3, minmax: "max", measure: ["A"] }] })
    m.start(typed("A", "Horse").green(1, "color"))
    return m
  },

  q307() {
    const m = new CanvasModel()
    m.start(typed("A", "Person")
      .green(1, "nicknames", undefined, true)
      .green(1, "{1}", { op: "contains", rhs: "'a'" }))
    return m
  },

  q317() {
    const m = new CanvasModel()
    const q = m.start(typed("A", "Dragon")).quantifier("all")
    q.branchRel("freezes", typed("B", "Dragon"), {
      wrapper: "O",
      chain: [
        { kind: "agg", family: "L3", tag: 1, per: ["A"], aggop: "min",
          expr: "tf.since" },
        { kind: "agg", family: "L3", tag: 2, per: ["A"], aggop: "max",
          expr: "tf.since" }],
    })
    q.branchRel("fires at", typed("C", "Dragon"), {
      wrapper: "O",
      chain: [
        { kind: "agg", family: "L3", tag: 3, per: ["A"], aggop: "min",
          expr: "time" },
        { kind: "agg", family: "L3", tag: 4, per: ["A"], aggop: "max",
          expr: "time" }],
    })
    q.branchGreens({ kind: "expr", tag: 5,
                     expr: "max({2}, {4}) - min({1}, {3})",
                     check: { op: "ge", rhs: "years(1)" } })
    return m
  },
}
