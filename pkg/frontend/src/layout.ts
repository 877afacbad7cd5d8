/** Deterministic left-to-right layered layout of a pattern document.
 *
 * Columns advance along the reading order; quantifier branches fan out
 * over rows. Constraint and aggregation stages stack under their host.
 * Layout is computed, never user-dragged, so a canvas always serializes
 * to the same document.
 */

import {
  Branch, Connection, EntityNode, PatternDoc, Quantifier, Stage,
} from "./pattern.js"

export const COL_W = 190
export const ROW_H = 96
export const STAGE_H = 26

export type ElementKind =
  | "entity" | "rel" | "path" | "quantifier" | "stage" | "marker" | "start"

export interface SceneElement {
  kind: ElementKind
  x: number
  y: number
  w: number
  h: number
  color: string
  label: string
  sublabel?: string
  /** entity fill class: concrete | typed | untyped | ensemble */
  entityKind?: string
  tag?: string
  latent?: "implicit" | "explicit"
  marker?: "X" | "NC" | "O"
  from?: { x: number; y: number }
  to?: { x: number; y: number }
}

export interface Scene {
  width: number
  height: number
  elements: SceneElement[]
}

const ENTITY_COLORS: Record<string, string> = {
  concrete: "#f5c542",   // yellow
  ensemble: "#f5c542",
  typed: "#6baed6",      // blue
  untyped: "#e26a5a",    // red
}
const GREEN = "#6fbf73"
const ORANGE = "#f09a3e"
const PINK = "#e8659b"
const DIAMOND = "#222222"

function entityLabel(node: EntityNode): { label: string; sub: string } {
  const spec = node.entity
  switch (spec.kind) {
    case "concrete":
      return { label: spec.type, sub: spec.id }
    case "typed":
      return { label: spec.type, sub: "" }
    case "ensemble":
      return { label: spec.name, sub: "ensemble" }
    default: {
      const allow = spec.allowedTypes?.join("/")
      const deny = spec.disallowedTypes?.map(t => `!${t}`).join("/")
      const tt = spec.typeTag !== undefined ? `<${spec.typeTag}>` : ""
      return { label: allow ?? deny ?? "any", sub: tt }
    }
  }
}

function stageLabel(stage: Stage): { label: string; color: string } {
  switch (stage.kind) {
    case "expr": {
      const cons = stage.check ? ` ${stage.check.op} ...` : ""
      const one = stage.oneValue ? "one value: " : ""
      return { label: `{${stage.tag}} ${one}${stage.expr}${cons}`,
               color: GREEN }
    }
    case "agg": {
      const tag = stage.tag !== undefined ? `{${stage.tag}} ` : ""
      return { label: `${tag}${stage.family}`, color: ORANGE }
    }
    case "split":
      return { label: "split", color: ORANGE }
    case "hquant":
      return { label: `h:${stage.quant}`, color: GREEN }
  }
}

class Layouter {
  elements: SceneElement[] = []
  maxCol = 0
  maxRow = 0

  place(kind: ElementKind, col: number, row: number,
        extra: Partial<SceneElement>): SceneElement {
    const el: SceneElement = {
      kind, x: col * COL_W + 40, y: row * ROW_H + 30,
      w: kind === "entity" ? 130 : 90, h: kind === "entity" ? 46 : 30,
      color: "#ccc", label: "", ...extra,
    }
    this.elements.push(el)
    this.maxCol = Math.max(this.maxCol, col)
    this.maxRow = Math.max(this.maxRow, row)
    return el
  }

  stages(chain: Stage[] | undefined, col: number, row: number,
         baseY: number): void {
    let y = baseY
    for (const stage of chain ?? []) {
      const { label, color } = stageLabel(stage)
      this.elements.push({
        kind: "stage", x: col * COL_W + 40, y, w: 150, h: STAGE_H,
        color, label,
      })
      y += STAGE_H + 4
      if (stage.kind === "split") {
        for (const inner of stage.body) {
          const s = stageLabel(inner)
          this.elements.push({
            kind: "stage", x: col * COL_W + 56, y, w: 134, h: STAGE_H,
            color: s.color, label: s.label,
          })
          y += STAGE_H + 4
        }
      }
      if (stage.kind === "hquant") {
        for (const branch of stage.branches) {
          for (const inner of branch) {
            const s = stageLabel(inner)
            this.elements.push({
              kind: "stage", x: col * COL_W + 56, y, w: 134, h: STAGE_H,
              color: s.color, label: s.label,
            })
            y += STAGE_H + 4
          }
        }
      }
      this.maxRow = Math.max(this.maxRow, Math.ceil(y / ROW_H))
    }
  }

  entity(node: EntityNode, col: number, row: number,
         negated: boolean): number {
    const { label, sub } = entityLabel(node)
    const el = this.place("entity", col, row, {
      color: ENTITY_COLORS[node.entity.kind],
      entityKind: node.entity.kind,
      label, sublabel: sub, tag: node.tag,
    })
    if (node.latent) el.latent = "explicit"
    else if (negated) el.latent = "implicit"
    this.stages(node.chain, col, row, el.y + el.h + 6)
    if (node.next) {
      return this.next(node.next, col, row, el, negated)
    }
    return row
  }

  connection(conn: Connection, col: number, row: number,
             fromEl: SceneElement | null, negated: boolean): number {
    const isPath = conn.kind === "path"
    const label = isPath
      ? `path ${fmtLength(conn)}${conn.shortest ? " shortest" : ""}`
      : conn.type
    const sub = conn.kind === "rel"
      ? { forward: "→", backward: "←", either: "—" }[
          conn.direction]
      : ""
    const el = this.place(isPath ? "path" : "rel", col, row, {
      color: isPath ? "#e26a5a" : "#444444", label, sublabel: sub,
    })
    if (fromEl) {
      el.from = { x: fromEl.x + fromEl.w, y: fromEl.y + fromEl.h / 2 }
      el.to = { x: el.x, y: el.y + el.h / 2 }
    }
    if (conn.wrapper) {
      this.elements.push({
        kind: "marker", x: el.x - 26, y: el.y, w: 22, h: 22, color: PINK,
        label: conn.wrapper === "NC" ? "↔" : conn.wrapper,
        marker: conn.wrapper,
      })
    }
    this.stages(conn.chain, col, row, el.y + el.h + 6)
    const innerNeg = negated || conn.wrapper === "X"
    const target = conn.target
    if ((target as EntityNode).kind === "entity") {
      return this.entity(target as EntityNode, col + 1, row, innerNeg)
    }
    if ((target as Quantifier).kind === "quantifier") {
      return this.quantifier(target as Quantifier, col + 1, row, el,
                             innerNeg, "relationship")
    }
    // combiner reference: draw a junction marker
    this.place("marker", col + 1, row, {
      color: "#888", label: `→ ${(target as { id: string }).id}`,
    })
    return row
  }

  quantifier(q: Quantifier, col: number, row: number,
             fromEl: SceneElement | null, negated: boolean,
             placement: "entity" | "relationship" | "start"): number {
    const label = quantLabel(q)
    const el = this.place("quantifier", col, row, {
      color: "#9a7fd1", label,
    })
    if (q.wrapper === "O") {
      this.elements.push({
        kind: "marker", x: el.x - 26, y: el.y, w: 22, h: 22, color: PINK,
        label: "O", marker: "O",
      })
    }
    this.stages(q.chain, col, row, el.y + el.h + 6)
    let r = row
    const branchNeg = negated || q.quant === "none"
    for (const branch of q.branches) {
      r = this.branch(branch, col + 1, r, el, branchNeg)
      r += 1
    }
    return Math.max(row, r - 1)
  }

  branch(branch: Branch, col: number, row: number,
         fromEl: SceneElement, negated: boolean): number {
    if ((branch as Connection).kind === "rel" ||
        (branch as Connection).kind === "path") {
      return this.connection(branch as Connection, col, row, fromEl, negated)
    }
    if ((branch as Quantifier).kind === "quantifier") {
      return this.quantifier(branch as Quantifier, col, row, fromEl, negated,
                             "entity")
    }
    if ((branch as EntityNode).kind === "entity") {
      return this.entity(branch as EntityNode, col, row, negated)
    }
    const tail = branch as { chain?: Stage[]; next?: Connection | Quantifier }
    this.stages(tail.chain, col, row, row * ROW_H + 30)
    if (tail.next) {
      return this.next(tail.next, col - 1, row, fromEl, negated)
    }
    return row
  }

  next(nxt: Connection | Quantifier, col: number, row: number,
       fromEl: SceneElement, negated: boolean): number {
    if (nxt.kind === "quantifier") {
      return this.quantifier(nxt, col + 1, row, fromEl, negated, "entity")
    }
    return this.connection(nxt, col + 1, row, fromEl, negated)
  }
}

function fmtLength(conn: Connection & { kind: "path" }): string {
  const l = conn.length
  if (l.op === "between") return `${l.n1}..${l.n2}`
  if (l.op === "in") return `in {${(l.values ?? []).join(",")}}`
  const sym: Record<string, string> = { eq: "=", lt: "<", le: "≤" }
  return `${sym[l.op] ?? l.op}${l.n}`
}

function quantLabel(q: Quantifier): string {
  const sym: Record<string, string> = {
    all: "&", some: "|", none: "0", notall: "≠&", gt: `>${q.n}`,
    ge: `≥${q.n}`, eq: `=${q.n}`, lt: `<${q.n}`, le: `≤${q.n}`,
    ne: `≠${q.n}`, range: `${q.n}..${q.n2}`,
    outside: `∉${q.n}..${q.n2}`,
  }
  return sym[q.quant] ?? q.quant
}

/** Lay a pattern out into a renderable scene. */
export function layoutPattern(doc: PatternDoc): Scene {
  const ly = new Layouter()
  ly.place("start", 0, 0, { color: DIAMOND, label: "◆", w: 24, h: 24 })
  ly.stages(doc.chain, 0, 0, 90)
  const start = doc.start
  if ((start as Quantifier).kind === "quantifier") {
    ly.quantifier(start as Quantifier, 1, 0, null, false, "start")
  } else {
    ly.entity(start as EntityNode, 1, 0, false)
  }
  for (const [id, node] of Object.entries(doc.combiners ?? {})) {
    const r = ly.maxRow + 1
    ly.place("marker", 0, r, { color: "#888", label: `combiner ${id}` })
    ly.entity(node, 1, r, false)
  }
  return {
    width: (ly.maxCol + 2) * COL_W,
    height: (ly.maxRow + 2) * ROW_H,
    elements: ly.elements,
  }
}
