/** Browser entry: a minimal builder loop over the canvas model.
 *
 * The page offers the schema palette, keeps one canvas, renders the
 * pattern to SVG on every edit, and runs it against the engine.
 */

import { EngineClient } from "./api.js"
import { layoutPattern } from "./layout.js"
import { CanvasModel, EntityHandle, typed } from "./model.js"
import { paletteChoices } from "./palette.js"
import { SchemaDoc } from "./pattern.js"
import { renderScene } from "./render.js"
import { renderDiagnostics, renderResults } from "./results.js"

const client = new EngineClient("")
let schema: SchemaDoc
const canvas = new CanvasModel()
let cursor: EntityHandle | null = null
let nextTag = 0

function tag(): string {
  return "ABCDEFGHIJKLMNOPQRSTUVWXYZ"[nextTag++ % 26]
}

function el<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T
}

function refresh() {
  try {
    const doc = canvas.serialize()
    el("canvas").innerHTML = renderScene(layoutPattern(doc))
    el("pattern-json").textContent = JSON.stringify(doc, null, 2)
  } catch {
    el("canvas").innerHTML = "<p>empty canvas</p>"
  }
  renderPalette()
}

function renderPalette() {
  const anchorType = cursor && cursor.node.entity.kind === "typed"
    ? cursor.node.entity.type : null
  const choices = paletteChoices(schema, anchorType)
  const box = el("palette")
  box.innerHTML = ""
  if (!cursor) {
    for (const t of choices.startTypes) {
      const btn = document.createElement("button")
      btn.textContent = t
      btn.onclick = () => {
        cursor = canvas.start(typed(tag(), t))
        refresh()
      }
      box.appendChild(btn)
    }
    return
  }
  for (const choice of choices.relationships) {
    for (const far of choice.targetTypes) {
      const btn = document.createElement("button")
      const arrow = { forward: "→", backward: "←",
                      either: "—" }[choice.direction]
      btn.textContent = `${choice.relType} ${arrow} ${far}`
      btn.onclick = () => {
        const target = typed(tag(), far)
        cursor!.rel(choice.relType, target, { direction: choice.direction })
        cursor = target
        refresh()
      }
      box.appendChild(btn)
    }
  }
}

async function runQuery() {
  const doc = canvas.serialize()
  const diags = await client.validate(doc)
  canvas.lastDiagnostics = diags
  if (diags.some(d => d.severity === "error")) {
    el("results").innerHTML = renderDiagnostics(diags)
    return
  }
  const outcome = await client.query(doc)
  if (outcome.ok) {
    canvas.lastResults = outcome.results
    el("results").innerHTML = renderResults(outcome.results)
  } else {
    el("results").innerHTML = renderDiagnostics(outcome.diagnostics)
  }
}

async function boot() {
  schema = await client.schema()
  el("run").onclick = () => { void runQuery() }
  el("clear").onclick = () => { window.location.reload() }
  refresh()
}

if (typeof document !== "undefined") {
  void boot()
}
