import { readFileSync, existsSync } from "node:fs"
import { join, resolve } from "node:path"
import { describe, expect, it } from "vitest"

import { EngineClient } from "../src/api.js"
import { typed, CanvasModel, concrete } from "../src/model.js"
import { renderDiagnostics, renderResults, resultCounts,
         } from "../src/results.js"
import { BUILDERS } from "./builders.js"
import { BASE_URL } from "./setup.js"

function repoRoot(): string {
  let dir = resolve(".")
  for (let i = 0; i < 4; i++) {
    if (existsSync(join(dir, "corpus"))) return dir
    dir = resolve(dir, "..")
  }
  throw new Error("corpus not found")
}

const client = new EngineClient(BASE_URL)

function golden(name: string) {
  return JSON.parse(readFileSync(
    join(repoRoot(), "tests", "goldens", `${name}.results.json`), "utf-8"))
}

describe("running queries", () => {
  it("q001 renders the golden counts", async () => {
    const outcome = await client.query(BUILDERS.q001().serialize())
    expect(outcome.ok).toBe(true)
    if (!outcome.ok) return
    const want = golden("q001")
    expect(outcome.results).toEqual(want)
    const counts = resultCounts(outcome.results)
    expect(counts).toEqual({ A: 1, B: 2 })
    const html = renderResults(outcome.results)
    expect(html).toContain("d-eldrax")
    expect(html).toContain("d-syrax")
    expect(html).toContain('data-tag="B"')
  })

  it("q059 calculated table reaches the view", async () => {
    const outcome = await client.query(BUILDERS.q059().serialize())
    expect(outcome.ok).toBe(true)
    if (!outcome.ok) return
    expect(outcome.results).toEqual(golden("q059"))
    const html = renderResults(outcome.results)
    expect(html).toContain("{1}")
    expect(html).toContain("p-brandon-stark")
  })

  it("an invalid draft surfaces diagnostic codes inline", async () => {
    const m = new CanvasModel()
    // a count over a concrete entity breaks the aggregation rules
    m.start(typed("A", "Person"))
      .rel("owns", concrete("B", "h-sweetfoot", "Horse"), {
        chain: [{ kind: "agg", family: "L1", tag: 1, per: ["A"],
                  count: ["B"], check: { op: "gt", rhs: "0" } }],
      })
    const outcome = await client.query(m.serialize())
    expect(outcome.ok).toBe(false)
    if (outcome.ok) return
    expect(outcome.diagnostics.map(d => d.code)).toContain("AR1")
    const html = renderDiagnostics(outcome.diagnostics)
    expect(html).toContain("AR1")
  })

  it("an empty answer renders the explicit no-assignments state", async () => {
    const m = new CanvasModel()
    m.start(typed("A", "Person").green(1, "height",
                                       { op: "gt", rhs: "10000" }))
    const outcome = await client.query(m.serialize())
    expect(outcome.ok).toBe(true)
    if (!outcome.ok) return
    expect(renderResults(outcome.results)).toContain("no assignments")
  })
})
