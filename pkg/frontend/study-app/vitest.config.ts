import { fileURLToPath } from "node:url";
import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    globalSetup: fileURLToPath(new URL("../shared/backend-global-setup.ts", import.meta.url)),
    testTimeout: 30000,
    hookTimeout: 60000,
  },
});
