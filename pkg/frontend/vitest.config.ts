import { defineConfig } from "vitest/config"

export default defineConfig({
  test: {
    globalSetup: ["tests/setup.ts"],
    include: ["tests/**/*.test.ts"],
    testTimeout: 30000,
    hookTimeout: 60000,
  },
})
