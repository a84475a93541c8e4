import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    // conformance runs spawn rendered solver programs; give each test the
    // same 120 s wall budget the executor grants a coarse stage
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
