/**
 * Vitest global setup: boots the real backend for integration tests.
 *
 * Creates a throwaway store, seeds an admin account through the CLI,
 * starts the API server on a free port, and tears everything down at
 * the end of the run. Tests read the connection details from
 * process.env (inherited by workers) with a file fallback.
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";

const ADMIN_EMAIL = "panel@test.example";
const ADMIN_PASSWORD = "integration-pw";

export const INFO_FILE = join(tmpdir(), "studyalign-frontend-tests.json");

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.on("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port"));
        return;
      }
      probe.close(() => resolve(address.port));
    });
  });
}

async function waitForHealth(baseUrl: string, child: ChildProcess): Promise<void> {
  const deadline = Date.now() + 30_000;
  while (Date.now() < deadline) {
    if (child.exitCode !== null) {
      throw new Error(`backend exited early with code ${child.exitCode}`);
    }
    try {
      const response = await fetch(`${baseUrl}/api/v1/health`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error("backend did not become healthy within 30s");
}

let child: ChildProcess | undefined;
let workdir: string | undefined;

export async function setup(): Promise<void> {
  workdir = mkdtempSync(join(tmpdir(), "studyalign-it-"));
  const store = join(workdir, "store.json");

  const seeded = spawnSync(
    "python3",
    ["-m", "studyalign", "--store", store, "admin", "create", "--email", ADMIN_EMAIL, "--password", ADMIN_PASSWORD],
    { encoding: "utf-8" },
  );
  if (seeded.status !== 0) {
    throw new Error(`admin create failed: ${seeded.stderr}`);
  }

  const port = await freePort();
  child = spawn(
    "python3",
    ["-m", "studyalign", "--store", store, "serve", "--port", String(port), "--secret", "frontend-it"],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  const baseUrl = `http://127.0.0.1:${port}`;
  await waitForHealth(baseUrl, child);

  process.env.SA_BASE_URL = baseUrl;
  process.env.SA_ADMIN_EMAIL = ADMIN_EMAIL;
  process.env.SA_ADMIN_PASSWORD = ADMIN_PASSWORD;
  writeFileSync(
    INFO_FILE,
    JSON.stringify({ baseUrl, adminEmail: ADMIN_EMAIL, adminPassword: ADMIN_PASSWORD }),
  );
}

export async function teardown(): Promise<void> {
  if (child !== undefined) {
    child.kill("SIGTERM");
    await new Promise((resolve) => {
      const timer = setTimeout(() => {
        child?.kill("SIGKILL");
        resolve(undefined);
      }, 3000);
      child?.on("exit", () => {
        clearTimeout(timer);
        resolve(undefined);
      });
    });
  }
  if (workdir !== undefined) {
    rmSync(workdir, { recursive: true, force: true });
  }
  rmSync(INFO_FILE, { force: true });
}
