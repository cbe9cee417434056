import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    include: ['test/**/*.test.ts'],
    environment: 'node',
    // the e2e file boots a real study server
    testTimeout: 30_000,
    hookTimeout: 60_000,
  },
});
