import { beforeAll, describe, expect, it } from "vitest"

import { EngineClient } from "../src/api.js"
import { paletteChoices, propertyChoices } from "../src/palette.js"
import { SchemaDoc } from "../src/pattern.js"
import { BASE_URL } from "./setup.js"

let schema: SchemaDoc

beforeAll(async () => {
  schema = await new EngineClient(BASE_URL).schema()
})

describe("schema palette", () => {
  it("offers every entity type at the query start", () => {
    const choices = paletteChoices(schema, null)
    expect(choices.startTypes).toEqual(
      ["Person", "Dragon", "Horse", "Guild", "Kingdom"])
    expect(choices.ensembles).toContain("Kings")
    expect(choices.logicalTypes).toContain("Old Person")
  })

  it("offers only schema-legal relationships from a Person", () => {
    const rels = paletteChoices(schema, "Person").relationships
    const names = new Set(rels.map(r => r.relType))
    expect(names).toEqual(new Set(
      ["owns", "knows", "offspring of", "member of", "subject of"]))
    const owns = rels.find(r => r.relType === "owns")!
    expect(owns.direction).toBe("forward")
    expect(owns.targetTypes).toEqual(["Dragon", "Horse"])
    const knows = rels.find(r => r.relType === "knows")!
    expect(knows.direction).toBe("either")
  })

  it("offers dragon relationships in both directions", () => {
    const rels = paletteChoices(schema, "Dragon").relationships
    const byKey = new Map(rels.map(r => [`${r.relType}/${r.direction}`, r]))
    expect(byKey.has("freezes/forward")).toBe(true)
    expect(byKey.has("freezes/backward")).toBe(true)
    expect(byKey.has("fires at/forward")).toBe(true)
    expect(byKey.has("owns/backward")).toBe(true)
    expect(byKey.has("originated in/forward")).toBe(true)
    expect(byKey.has("owns/forward")).toBe(false)
  })

  it("flags half-edge placeholders only where the schema allows them", () => {
    const rels = paletteChoices(schema, "Dragon").relationships
    const ownedBy = rels.find(r => r.relType === "owns")!
    expect(ownedBy.nullLegal).toBe(true)        // owns(Null, Dragon)
    const froze = rels.find(
      r => r.relType === "freezes" && r.direction === "forward")!
    expect(froze.nullLegal).toBe(false)
  })

  it("lists properties for green rectangles", () => {
    expect(propertyChoices(schema, "Horse")).toEqual(
      ["name", "color", "weight"])
  })
})
