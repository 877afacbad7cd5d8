/** Results explorer: entity cards grouped by tag, calculated-property
 * table, and path traces, rendered to an HTML string. */

import { Diagnostic, ResultsDoc } from "./pattern.js"

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
}

function fmtValue(v: unknown): string {
  if (v === null || v === undefined) return "empty"
  if (typeof v === "object") {
    const o = v as Record<string, unknown>
    if (o.type === "date" || o.type === "datetime") return String(o.value)
    if (o.type === "duration") {
      const ms = Number(o.ms)
      if (ms % 60000 === 0) return `${ms / 60000} min`
      return `${ms} ms`
    }
    if (o.type === "composite") {
      const subs = o.subs as Record<string, unknown>
      return Object.entries(subs)
        .map(([k, s]) => `${k}: ${fmtValue(s)}`).join(", ")
    }
    if (o.type === "list" || o.type === "set") {
      return `{${(o.items as unknown[]).map(fmtValue).join(", ")}}`
    }
    if (o.type === "location") return `(${o.lat}, ${o.lon})`
    return JSON.stringify(o)
  }
  return String(v)
}

export function renderDiagnostics(diags: Diagnostic[]): string {
  const rows = diags.map(d =>
    `<li class="diagnostic diagnostic-${esc(d.severity)}">` +
    `<code>${esc(d.code)}</code> at <code>${esc(d.at)}</code>: ` +
    `${esc(d.message)}</li>`).join("\n")
  return `<ul class="diagnostics">\n${rows}\n</ul>`
}

export function renderResults(results: ResultsDoc): string {
  if (!results.entities.length && !results.relationships.length &&
      !results.calculated.length && !results.paths.length) {
    return `<p class="no-assignments">no assignments</p>`
  }
  const parts: string[] = []

  const byTag = new Map<string, typeof results.entities>()
  for (const ent of results.entities) {
    for (const tag of ent.tags) {
      if (!byTag.has(tag)) byTag.set(tag, [])
      byTag.get(tag)!.push(ent)
    }
  }
  parts.push(`<section class="entity-cards">`)
  for (const tag of [...byTag.keys()].sort()) {
    const cards = byTag.get(tag)!.map(ent => {
      const props = Object.entries(ent.props)
        .map(([k, v]) => `<div class="prop">${esc(k)}: ` +
          `${esc(fmtValue(v))}</div>`).join("")
      return `<div class="card card-${esc(ent.type)}">` +
        `<div class="card-title">${esc(ent.type)} · ` +
        `${esc(ent.id)}</div>${props}</div>`
    }).join("\n")
    parts.push(`<div class="tag-group" data-tag="${esc(tag)}">` +
      `<h3>${esc(tag)}</h3>\n${cards}</div>`)
  }
  parts.push(`</section>`)

  if (results.relationships.length) {
    const rows = results.relationships.map(r =>
      `<tr><td>${esc(r.type)}</td><td>${esc(r.id)}</td>` +
      `<td>${esc(r.source)} → ${esc(r.target)}</td></tr>`).join("\n")
    parts.push(`<section class="relationships"><table>` +
      `<tbody>${rows}</tbody></table></section>`)
  }

  if (results.paths.length) {
    const rows = results.paths.map(p =>
      `<li class="path-trace">${esc(p.label)}: ` +
      `${p.entities.map(esc).join(" — ")}</li>`).join("\n")
    parts.push(`<section class="paths"><ul>${rows}</ul></section>`)
  }

  if (results.calculated.length) {
    const rows = results.calculated.map(c => {
      const key = Object.entries(c.key)
        .map(([k, v]) => `${esc(k)}=${esc(String(v))}`).join(", ")
      return `<tr><td>{${c.tag}}</td><td>${key}</td>` +
        `<td>${esc(fmtValue(c.value))}</td></tr>`
    }).join("\n")
    parts.push(`<section class="calculated"><table>` +
      `<thead><tr><th>tag</th><th>per</th><th>value</th></tr></thead>` +
      `<tbody>${rows}</tbody></table></section>`)
  }
  return parts.join("\n")
}

/** Headline counts for a results document (card totals per tag). */
export function resultCounts(results: ResultsDoc): Record<string, number> {
  const counts: Record<string, number> = {}
  for (const ent of results.entities) {
    for (const tag of ent.tags) {
      counts[tag] = (counts[tag] ?? 0) + 1
    }
  }
  return counts
}
