/** The canvas model: a pattern under construction.
 *
 * Handles form a fluent builder over the engine's pattern document format;
 * serialize() emits exactly the JSON the service validates and runs, so a
 * canvas round-trips with no client-side reinterpretation.
 */

import {
  Branch, Check, Connection, EntityNode, EntitySpec, PatternDoc, Quantifier,
  Stage, Tail, Diagnostic, ResultsDoc,
} from "./pattern.js"

export class EntityHandle {
  node: EntityNode

  constructor(node: EntityNode) {
    this.node = node
  }

  /** Attach a green stage (expression tag, optional constraint). */
  green(tag: number, expr: string, check?: Check, oneValue?: boolean): this {
    const stage: Stage = { kind: "expr", tag, expr }
    if (oneValue) stage.oneValue = true
    if (check) stage.check = check
    this.node.chain = [...(this.node.chain ?? []), stage]
    return this
  }

  stage(stage: Stage): this {
    this.node.chain = [...(this.node.chain ?? []), stage]
    return this
  }

  notEqual(...tags: string[]): this {
    this.node.notEqual = tags
    return this
  }

  latent(): this {
    this.node.latent = true
    return this
  }

  /** Continue with a relationship to a new entity. */
  rel(type: string, target: EntityHandle | CombinerRef, opts: {
    direction?: "forward" | "backward" | "either"
    wrapper?: "X" | "NC" | "O"
    chain?: Stage[]
  } = {}): ConnectionHandle {
    const conn: Connection = {
      kind: "rel", type, direction: opts.direction ?? "forward",
      target: target instanceof EntityHandle ? target.node
        : { kind: "combinerRef", id: target.id },
    }
    if (opts.wrapper) conn.wrapper = opts.wrapper
    if (opts.chain && opts.chain.length) conn.chain = opts.chain
    this.node.next = conn
    return new ConnectionHandle(conn)
  }

  path(target: EntityHandle, opts: {
    length?: { op: string; n?: number; n1?: number; n2?: number }
    shortest?: boolean
    wrapper?: "X" | "NC" | "O"
    relConstraints?: unknown
    entityConstraints?: unknown
    chain?: Stage[]
  } = {}): ConnectionHandle {
    const conn: Connection = {
      kind: "path", length: opts.length ?? { op: "le", n: 4 },
      target: target.node,
    }
    if (opts.shortest) conn.shortest = true
    if (opts.wrapper) conn.wrapper = opts.wrapper
    if (opts.relConstraints) conn.relConstraints = opts.relConstraints
    if (opts.entityConstraints) conn.entityConstraints = opts.entityConstraints
    if (opts.chain && opts.chain.length) conn.chain = opts.chain
    this.node.next = conn
    return new ConnectionHandle(conn)
  }

  /** Fan out into a quantifier with branch builders. */
  quantifier(quant: string, opts: { n?: number; n2?: number; wrapper?: "O";
                                    chain?: Stage[] } = {}): QuantifierHandle {
    const q: Quantifier = { kind: "quantifier", quant, branches: [] }
    if (opts.n !== undefined) q.n = opts.n
    if (opts.n2 !== undefined) q.n2 = opts.n2
    if (opts.wrapper) q.wrapper = opts.wrapper
    if (opts.chain && opts.chain.length) q.chain = opts.chain
    this.node.next = q
    return new QuantifierHandle(q, "entity")
  }
}

export class ConnectionHandle {
  conn: Connection

  constructor(conn: Connection) {
    this.conn = conn
  }

  get target(): EntityHandle {
    const t = this.conn.target
    if ((t as EntityNode).kind === "entity") {
      return new EntityHandle(t as EntityNode)
    }
    throw new Error("connection does not target a plain entity")
  }
}

export class QuantifierHandle {
  q: Quantifier
  placement: "entity" | "relationship" | "start"

  constructor(q: Quantifier, placement: "entity" | "relationship" | "start") {
    this.q = q
    this.placement = placement
  }

  /** Branch starting with a relationship (entity placement). */
  branchRel(type: string, target: EntityHandle | CombinerRef, opts: {
    direction?: "forward" | "backward" | "either"
    wrapper?: "X" | "NC" | "O"
    chain?: Stage[]
  } = {}): ConnectionHandle {
    const conn: Connection = {
      kind: "rel", type, direction: opts.direction ?? "forward",
      target: target instanceof EntityHandle ? target.node
        : { kind: "combinerRef", id: target.id },
    }
    if (opts.wrapper) conn.wrapper = opts.wrapper
    if (opts.chain && opts.chain.length) conn.chain = opts.chain
    this.q.branches.push(conn)
    return new ConnectionHandle(conn)
  }

  /** Branch of green stages constraining the left entity. */
  branchGreens(...stages: Stage[]): this {
    const tail: Tail = { kind: "tail", chain: stages }
    this.q.branches.push(tail)
    return this
  }

  /** Branch starting with an entity (relationship/start placement). */
  branchEntity(handle: EntityHandle): EntityHandle {
    this.q.branches.push(handle.node)
    return handle
  }

  branch(branch: Branch): this {
    this.q.branches.push(branch)
    return this
  }
}

export class CombinerRef {
  constructor(readonly id: string) {}
}

export function entity(tag: string, spec: EntitySpec): EntityHandle {
  return new EntityHandle({ kind: "entity", tag, entity: spec })
}

export function typed(tag: string, type: string): EntityHandle {
  return entity(tag, { kind: "typed", type })
}

export function concrete(tag: string, id: string, type: string): EntityHandle {
  return entity(tag, { kind: "concrete", id, type })
}

export function untyped(tag: string, opts: Omit<Extract<EntitySpec,
    { kind: "untyped" }>, "kind"> = {}): EntityHandle {
  return entity(tag, { kind: "untyped", ...opts })
}

export class CanvasModel {
  private startNode?: EntityNode | Quantifier
  private startChain: Stage[] = []
  private combinerNodes: Record<string, EntityNode> = {}
  dirty = true
  lastDiagnostics: Diagnostic[] | null = null
  lastResults: ResultsDoc | null = null

  start(handle: EntityHandle): EntityHandle {
    this.startNode = handle.node
    this.dirty = true
    return handle
  }

  startQuantifier(quant: string, opts: { n?: number; n2?: number } = {}):
      QuantifierHandle {
    const q: Quantifier = { kind: "quantifier", quant, branches: [] }
    if (opts.n !== undefined) q.n = opts.n
    if (opts.n2 !== undefined) q.n2 = opts.n2
    this.startNode = q
    this.dirty = true
    return new QuantifierHandle(q, "start")
  }

  /** A stage below the query start (top-k selections, splits). */
  stage(stage: Stage): this {
    this.startChain.push(stage)
    this.dirty = true
    return this
  }

  combiner(id: string, handle: EntityHandle): CombinerRef {
    this.combinerNodes[id] = handle.node
    this.dirty = true
    return new CombinerRef(id)
  }

  serialize(): PatternDoc {
    if (!this.startNode) throw new Error("the canvas is empty")
    const doc: PatternDoc = { start: prune(this.startNode) }
    if (this.startChain.length) {
      doc.chain = this.startChain.map(pruneStage)
    }
    if (Object.keys(this.combinerNodes).length) {
      doc.combiners = {}
      for (const [id, node] of Object.entries(this.combinerNodes)) {
        doc.combiners[id] = prune(node) as EntityNode
      }
    }
    return reorder(doc) as PatternDoc
  }
}

function prune<T extends object>(node: T): T {
  return JSON.parse(JSON.stringify(node, (_k, v) => {
    if (v === undefined) return undefined
    if (Array.isArray(v) && v.length === 0) return undefined
    return v
  }))
}

function pruneStage(stage: Stage): Stage {
  return prune(stage)
}

/** Deep key reorder into the engine's canonical field order, so that a
 * serialized canvas is byte-comparable with committed corpus files. */
const FIELD_ORDER = [
  "kind", "family", "quant", "tag", "entity", "id", "type", "name",
  "latent", "notEqual", "terminal", "allowedTypes", "disallowedTypes",
  "allowNull", "typeTag", "typeEquals", "typeNotEquals", "direction",
  "length", "op", "n", "n1", "n2", "values", "shortest", "relConstraints",
  "entityConstraints", "patterns", "wrapper", "per", "count", "measure",
  "over", "aggop", "expr", "of", "select", "minmax", "k", "allBut",
  "oneValue", "by", "body", "branches", "check", "policy", "rhs", "range",
  "lo", "hi", "loOpen", "hiOpen", "set", "chain", "next", "target",
  "start", "combiners", "allowed", "counts", "othersAllowed", "rows",
  "pattern",
]

function reorder(value: unknown): unknown {
  if (Array.isArray(value)) return value.map(reorder)
  if (value && typeof value === "object") {
    const entries = Object.entries(value as Record<string, unknown>)
    entries.sort((a, b) => {
      const ia = FIELD_ORDER.indexOf(a[0])
      const ib = FIELD_ORDER.indexOf(b[0])
      return (ia < 0 ? 999 : ia) - (ib < 0 ? 999 : ib)
    })
    const out: Record<string, unknown> = {}
    for (const [k, v] of entries) out[k] = reorder(v)
    return out
  }
  return value
}
