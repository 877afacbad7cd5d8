/** Spawns the engine's HTTP service over the repo fixtures for the tests. */

import { ChildProcess, spawn } from "node:child_process"
import { existsSync } from "node:fs"
import { join, resolve } from "node:path"

const PORT = 8991
export const BASE_URL = `http://127.0.0.1:${PORT}`

let proc: ChildProcess | undefined

function repoRoot(): string {
  let dir = resolve(".")
  for (let i = 0; i < 4; i++) {
    if (existsSync(join(dir, "fixtures", "westeros.schema.json"))) return dir
    dir = resolve(dir, "..")
  }
  throw new Error("fixture files not found; run from the repository")
}

async function waitHealthy(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const res = await fetch(`${BASE_URL}/healthz`)
      if (res.ok) return
    } catch {
      // not up yet
    }
    await new Promise(r => setTimeout(r, 150))
  }
  throw new Error("engine service did not become healthy")
}

export async function setup(): Promise<void> {
  const root = repoRoot()
  proc = spawn("python3", [
    "-m", "v1graph.cli", "serve",
    "--schema", join(root, "fixtures", "westeros.schema.json"),
    "--graph", join(root, "fixtures", "westeros.graph.json"),
    "--port", String(PORT),
  ], { cwd: root, stdio: "ignore" })
  await waitHealthy()
}

export async function teardown(): Promise<void> {
  proc?.kill()
}
