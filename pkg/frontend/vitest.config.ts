import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    globals: true,
    include: ["tests/**/*.test.ts"],
    // the live suite spawns a real server process
    testTimeout: 30000,
    hookTimeout: 30000,
  },
});
