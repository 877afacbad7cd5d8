/** Client for the engine's HTTP facade. */

import { Diagnostic, PatternDoc, ResultsDoc, SchemaDoc } from "./pattern.js"

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message)
  }
}

export class EngineClient {
  constructor(readonly baseUrl: string) {}

  async health(): Promise<boolean> {
    try {
      const res = await fetch(`${this.baseUrl}/healthz`)
      return res.ok && (await res.text()) === "ok"
    } catch {
      return false
    }
  }

  async schema(): Promise<SchemaDoc> {
    const res = await fetch(`${this.baseUrl}/api/schema`)
    if (!res.ok) throw new ApiError(res.status, await res.text())
    return res.json()
  }

  async validate(pattern: PatternDoc): Promise<Diagnostic[]> {
    const res = await fetch(`${this.baseUrl}/api/validate`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(pattern),
    })
    if (res.status === 200 || res.status === 422) return res.json()
    throw new ApiError(res.status, await res.text())
  }

  /** Run a pattern; diagnostics come back as a structured failure. */
  async query(pattern: PatternDoc): Promise<
      { ok: true; results: ResultsDoc } |
      { ok: false; diagnostics: Diagnostic[] }> {
    const res = await fetch(`${this.baseUrl}/api/query`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(pattern),
    })
    if (res.ok) {
      return { ok: true, results: await res.json() }
    }
    if (res.status === 400) {
      const body = await res.json()
      if (body.diagnostics) {
        return { ok: false, diagnostics: body.diagnostics }
      }
      throw new ApiError(400, JSON.stringify(body))
    }
    throw new ApiError(res.status, await res.text())
  }
}
