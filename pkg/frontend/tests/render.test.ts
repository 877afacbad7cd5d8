import { describe, expect, it } from "vitest"

import { layoutPattern } from "../src/layout.js"
import { renderScene } from "../src/render.js"
import { concrete, typed, untyped, CanvasModel } from "../src/model.js"
import { BUILDERS } from "./builders.js"

function svgFor(name: keyof typeof BUILDERS): string {
  return renderScene(layoutPattern(BUILDERS[name]().serialize()))
}

describe("visual notation", () => {
  it("colors concrete entities yellow and typed blue", () => {
    const svg = svgFor("q001")
    expect(svg).toContain('entity-concrete')
    expect(svg).toContain("#f5c542")
    expect(svg).toContain('entity-typed')
    expect(svg).toContain("#6baed6")
  })

  it("colors untyped entities red", () => {
    const m = new CanvasModel()
    m.start(typed("A", "Person")).rel("owns", untyped("B"))
    const svg = renderScene(layoutPattern(m.serialize()))
    expect(svg).toContain('entity-untyped')
    expect(svg).toContain("#e26a5a")
  })

  it("renders constraint stages green and aggregations orange", () => {
    const svg = svgFor("q059")
    expect(svg).toContain("#f09a3e")        // the L1 box
    const svg2 = svgFor("q003v2")
    expect(svg2).toContain("#6fbf73")       // the green rectangle
  })

  it("fans a quantifier out over rows", () => {
    const svg = svgFor("q020v2")
    const scene = layoutPattern(BUILDERS.q020v2().serialize())
    const entityRows = new Set(
      scene.elements.filter(e => e.kind === "entity").map(e => e.y))
    expect(entityRows.size).toBeGreaterThanOrEqual(2)
    expect(svg).toContain("quantifier")
  })

  it("draws X and O markers in pink and flags latency", () => {
    const svgX = svgFor("q012")
    expect(svgX).toContain("marker-X")
    expect(svgX).toContain("#e8659b")
    expect(svgX).toContain("latent-implicit")   // right of an X: gray icon
    const svgO = svgFor("q317")
    expect(svgO).toContain("marker-O")
    const m = new CanvasModel()
    m.start(typed("A", "Person"))
      .rel("offspring of", typed("B", "Person").latent())
    const svgL = renderScene(layoutPattern(m.serialize()))
    expect(svgL).toContain("latent-explicit")
  })

  it("draws the no-connection box", () => {
    const m = new CanvasModel()
    m.start(typed("A", "Dragon")).rel("freezes", typed("B", "Dragon"), {
      wrapper: "NC",
      chain: [{ kind: "agg", family: "L1", tag: 1, per: ["A"],
                count: ["B"], check: { op: "ge", rhs: "1" } }],
    })
    const svg = renderScene(layoutPattern(m.serialize()))
    expect(svg).toContain("marker-NC")
    expect(svg).toContain("↔")
  })

  it("renders paths as red lines with their length constraint", () => {
    const svg = svgFor("q047")
    expect(svg).toContain('class="path"')
    expect(svg).toContain("shortest")
  })

  it("renders split and one-value chains", () => {
    expect(svgFor("q115v2")).toContain("split")
    expect(svgFor("q307")).toContain("one value")
  })

  it("layout is deterministic", () => {
    expect(svgFor("q004")).toEqual(svgFor("q004"))
  })
})
