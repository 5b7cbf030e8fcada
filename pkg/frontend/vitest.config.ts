import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    // payload_echo spawns the Python service and waits for it to load models
    testTimeout: 30_000,
    hookTimeout: 120_000,
  },
});
