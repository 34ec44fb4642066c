import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // the end-to-end test drives 60 s of simulated session time
    testTimeout: 180_000,
    hookTimeout: 120_000,
    pool: "forks",
  },
});
