/** Pattern document types mirroring the engine's JSON syntax. */

export type EntitySpec =
  | { kind: "concrete"; id: string; type: string }
  | { kind: "typed"; type: string }
  | { kind: "ensemble"; name: string }
  | { kind: "untyped"; allowedTypes?: string[]; disallowedTypes?: string[];
      allowNull?: boolean; typeTag?: number; typeEquals?: number;
      typeNotEquals?: number[] }

export interface Check {
  op: string
  rhs?: string | { range: { lo: string; hi: string; loOpen?: boolean;
                            hiOpen?: boolean } } | { set: string[] }
  policy?: "blue" | "red"
}

export interface GreenStage {
  kind: "expr"
  tag: number
  expr: string
  oneValue?: boolean
  check?: Check
}

export type PerElem = string | { product: string[] }
export type PerSpec = "left" | "right" | "pair" | PerElem[]

export interface AggStage {
  kind: "agg"
  family: string
  tag?: number
  per?: PerSpec
  count?: PerSpec
  measure?: PerSpec
  over?: "relationships" | "paths"
  aggop?: string
  expr?: string
  of?: number | { typeTag: number }
  select?: PerElem | "left" | "right" | "pair"
  minmax?: "min" | "max"
  k?: number
  allBut?: boolean
  check?: Check
}

export interface SplitStage {
  kind: "split"
  by: string | { tag: number } | { typeTag: number }
  body: Stage[]
}

export interface HQuantStage {
  kind: "hquant"
  quant: string
  n?: number
  n2?: number
  branches: Stage[][]
}

export type Stage = GreenStage | AggStage | SplitStage | HQuantStage

export interface EntityNode {
  kind: "entity"
  tag: string
  entity: EntitySpec
  latent?: boolean
  notEqual?: string[]
  terminal?: "left" | "right"
  chain?: Stage[]
  next?: Connection | Quantifier
}

export interface RelConnection {
  kind: "rel"
  type: string
  direction: "forward" | "backward" | "either"
  wrapper?: "X" | "NC" | "O"
  chain?: Stage[]
  target: EntityNode | Quantifier | { kind: "combinerRef"; id: string }
}

export interface PathConnection {
  kind: "path"
  length: { op: string; n?: number; n1?: number; n2?: number;
            values?: number[] }
  shortest?: boolean
  wrapper?: "X" | "NC" | "O"
  relConstraints?: unknown
  entityConstraints?: unknown
  patterns?: unknown
  chain?: Stage[]
  target: EntityNode | Quantifier | { kind: "combinerRef"; id: string }
}

export type Connection = RelConnection | PathConnection

export interface Tail {
  kind: "tail"
  chain?: Stage[]
  next?: Connection | Quantifier
}

export type Branch = Connection | Quantifier | Tail | EntityNode

export interface Quantifier {
  kind: "quantifier"
  quant: string
  n?: number
  n2?: number
  wrapper?: "O"
  chain?: Stage[]
  branches: Branch[]
}

export interface PatternDoc {
  chain?: Stage[]
  start: EntityNode | Quantifier
  combiners?: Record<string, EntityNode>
}

export interface Diagnostic {
  code: string
  severity: string
  at: string
  message: string
}

export interface ResultsDoc {
  entities: { id: string; type: string; tags: string[];
              props: Record<string, unknown> }[]
  relationships: { id: string; type: string; source: string; target: string;
                   props: Record<string, unknown> }[]
  paths: { label: string; entities: string[]; relationships: string[] }[]
  calculated: { tag: number; key: Record<string, unknown>;
                value: unknown }[]
}

export interface SchemaDoc {
  entityTypes: { name: string; properties: { name: string; type: string;
                                             values?: string[] }[] }[]
  relationshipTypes: { name: string; directional: boolean;
                       endpoints: [string, string][];
                       properties: { name: string; type: string }[] }[]
  ensembles?: { name: string }[]
  logicalEntityTypes?: { name: string }[]
}
