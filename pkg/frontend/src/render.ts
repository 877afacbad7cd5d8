/** SVG rendering of a laid-out scene (pure string output, DOM-free). */

import { Scene, SceneElement } from "./layout.js"

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;")
    .replace(/>/g, "&gt;").replace(/"/g, "&quot;")
}

function rect(el: SceneElement, rx: number, cls: string): string {
  return `<rect class="${cls}" x="${el.x}" y="${el.y}" width="${el.w}" ` +
    `height="${el.h}" rx="${rx}" fill="${el.color}" stroke="#333"/>`
}

function text(x: number, y: number, s: string, size = 12,
              anchor = "middle"): string {
  return `<text x="${x}" y="${y}" font-size="${size}" ` +
    `text-anchor="${anchor}" font-family="sans-serif">${esc(s)}</text>`
}

function renderElement(el: SceneElement): string {
  const parts: string[] = []
  const cx = el.x + el.w / 2
  switch (el.kind) {
    case "start":
      parts.push(`<g class="start">` +
        text(el.x + 10, el.y + 18, el.label, 20) + `</g>`)
      break
    case "entity": {
      parts.push(`<g class="entity entity-${el.entityKind}">`)
      parts.push(rect(el, 4, `entity-box`))
      if (el.tag) {
        parts.push(text(el.x + 10, el.y + 14, el.tag, 11, "start"))
      }
      parts.push(text(cx, el.y + 24, el.label))
      if (el.sublabel) {
        parts.push(text(cx, el.y + 40, el.sublabel, 10))
      }
      if (el.latent) {
        const color = el.latent === "explicit" ? "#cc2222" : "#999999"
        parts.push(`<circle class="latent latent-${el.latent}" ` +
          `cx="${el.x + el.w - 8}" cy="${el.y + 8}" r="6" fill="${color}"/>`)
      }
      parts.push(`</g>`)
      break
    }
    case "rel":
    case "path": {
      parts.push(`<g class="${el.kind}">`)
      if (el.from && el.to) {
        const stroke = el.kind === "path" ? "#e26a5a" : "#333"
        parts.push(`<line x1="${el.from.x}" y1="${el.from.y}" ` +
          `x2="${el.to.x}" y2="${el.to.y}" stroke="${stroke}" ` +
          `stroke-width="2"/>`)
      }
      parts.push(text(cx, el.y + 12, el.label, 12))
      if (el.sublabel) {
        parts.push(text(cx, el.y + 26, el.sublabel, 12))
      }
      parts.push(`</g>`)
      break
    }
    case "quantifier":
      parts.push(`<g class="quantifier">`)
      parts.push(`<polygon points="${el.x},${el.y + 15} ${el.x + 14},${el.y} ` +
        `${el.x + 14},${el.y + 30}" fill="${el.color}"/>`)
      parts.push(text(el.x + 34, el.y + 20, el.label, 14, "start"))
      parts.push(`</g>`)
      break
    case "stage":
      parts.push(`<g class="stage">` + rect(el, 2, "stage-box") +
        text(el.x + 6, el.y + 17, el.label, 10, "start") + `</g>`)
      break
    case "marker":
      parts.push(`<g class="marker marker-${el.marker ?? "join"}">` +
        rect(el, 3, "marker-box") +
        text(cx, el.y + 15, el.label, 12) + `</g>`)
      break
  }
  return parts.join("")
}

/** Render a scene to a standalone SVG document string. */
export function renderScene(scene: Scene): string {
  const body = scene.elements.map(renderElement).join("\n")
  return `<svg xmlns="http://www.w3.org/2000/svg" ` +
    `viewBox="0 0 ${scene.width} ${scene.height}" ` +
    `width="${scene.width}" height="${scene.height}">\n${body}\n</svg>`
}
