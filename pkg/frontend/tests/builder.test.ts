import { readFileSync, existsSync } from "node:fs"
import { join, resolve } from "node:path"
import { describe, expect, it } from "vitest"

import { EngineClient } from "../src/api.js"
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

describe("canvas round-trips", () => {
  it("covers at least ten corpus queries", () => {
    expect(Object.keys(BUILDERS).length).toBeGreaterThanOrEqual(10)
  })

  for (const [name, build] of Object.entries(BUILDERS)) {
    it(`${name} serializes to the committed document`, () => {
      const doc = build().serialize()
      const committed = JSON.parse(readFileSync(
        join(repoRoot(), "corpus", `${name}.json`), "utf-8"))
      expect(doc).toEqual(committed)
    })

    it(`${name} validates clean through the service`, async () => {
      const diags = await client.validate(build().serialize())
      expect(diags.filter(d => d.severity === "error")).toEqual([])
    })
  }
})
