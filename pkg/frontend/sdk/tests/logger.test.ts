import { afterEach, describe, expect, it, vi } from "vitest";

import { StudyAlignLogger, init, resetForTests, taskFinished } from "../src/logger";
import { serializeNativeEvent } from "../src/serialize";
import type { SdkConfig } from "../src/types";
import { MemoryStorage } from "./buffer.test";

interface Call {
  url: string;
  body?: Record<string, any>;
  method: string;
}

function fakeServer(options: { failFirstBatches?: number } = {}) {
  const calls: Call[] = [];
  let failures = options.failFirstBatches ?? 0;
  const stored: Record<string, any[]> = {};
  const fetchFn = (async (input: any, initArg?: any) => {
    const url = String(input);
    const body = initArg?.body ? JSON.parse(initArg.body as string) : undefined;
    calls.push({ url, body, method: initArg?.method ?? "GET" });
    if (url.endsWith("/api/v1/logs/batch")) {
      if (failures > 0) {
        failures -= 1;
        throw new TypeError("network down");
      }
      const id = body.client_batch_id as string;
      if (!(id in stored)) stored[id] = body.events;
      return new Response(JSON.stringify({ accepted: stored[id].length, replayed: false }), { status: 201 });
    }
    if (url.includes("/procedure")) {
      return new Response(JSON.stringify({ progress: 0 }), { status: 200 });
    }
    if (url.includes("/finished")) {
      return new Response(JSON.stringify({ changed: true }), { status: 200 });
    }
    return new Response("{}", { status: 200 });
  }) as typeof fetch;
  return { calls, stored, fetchFn };
}

function makeLogger(overrides: Partial<SdkConfig> = {}, server = fakeServer()) {
  const logger = new StudyAlignLogger({
    baseUrl: "https://backend.example",
    participantUuid: "p-1",
    loggerKey: "key-1",
    conditionId: "cnd-1",
    flushIntervalMs: 0,
    storage: new MemoryStorage(),
    fetchFn: server.fetchFn,
    ...overrides,
  });
  return { logger, server };
}

afterEach(() => {
  resetForTests();
  vi.useRealTimers();
});

describe("logInteraction", () => {
  it("buffers an entry with a client timestamp", () => {
    const { logger } = makeLogger();
    const entry = logger.logInteraction("click", { type: "click", button: 0 });
    expect(entry.client_timestamp).toBeGreaterThan(0);
    expect(entry.native_event).toEqual({ type: "click", button: 0 });
    expect(logger.bufferedCount()).toBe(1);
  });

  it("accepts a custom document without a native event", () => {
    const { logger } = makeLogger();
    const entry = logger.logInteraction("custom", undefined, { note: "x" });
    expect(entry.native_event).toBeNull();
    expect(entry.custom).toEqual({ note: "x" });
  });

  it("rejects an entry with neither payload", () => {
    const { logger } = makeLogger();
    expect(() => logger.logInteraction("empty")).toThrow(/native event or a custom payload/);
  });

  it("auto-flushes at the batch threshold", async () => {
    const server = fakeServer();
    const { logger } = makeLogger({ batchSize: 5 }, server);
    for (let i = 0; i < 5; i += 1) logger.logInteraction("click", { type: "click", seq: i });
    await vi.waitFor(() => expect(logger.bufferedCount()).toBe(0));
    expect(server.calls.filter((c) => c.url.endsWith("/logs/batch"))).toHaveLength(1);
  });
});

describe("flush", () => {
  it("does nothing on an empty buffer", async () => {
    const { logger, server } = makeLogger();
    const result = await logger.flush();
    expect(result).toEqual({ sent: 0, requests: 0 });
    expect(server.calls).toHaveLength(0);
  });

  it("retains entries and reuses the batch id after a network failure", async () => {
    const server = fakeServer({ failFirstBatches: 1 });
    const { logger } = makeLogger({}, server);
    logger.logInteraction("click", { type: "click" });

    const first = await logger.flush();
    expect(first.sent).toBe(0);
    expect(logger.bufferedCount()).toBe(1);

    const second = await logger.flush();
    expect(second.sent).toBe(1);
    const batchCalls = server.calls.filter((c) => c.url.endsWith("/logs/batch"));
    expect(batchCalls).toHaveLength(2);
    expect(batchCalls[0]!.body!.client_batch_id).toBe(batchCalls[1]!.body!.client_batch_id);
    logger.dispose();
  });

  it("splits large buffers into multiple batches", async () => {
    const server = fakeServer();
    const { logger } = makeLogger({ batchSize: 10 }, server);
    for (let i = 0; i < 25; i += 1) logger.logInteraction("move", { type: "mousemove", seq: i });
    await vi.waitFor(() => expect(logger.bufferedCount()).toBe(0));
    const sizes = server.calls
      .filter((c) => c.url.endsWith("/logs/batch"))
      .map((c) => (c.body!.events as unknown[]).length);
    expect(sizes.reduce((a, b) => a + b, 0)).toBe(25);
    expect(Math.max(...sizes)).toBeLessThanOrEqual(10);
  });
});

describe("taskFinished", () => {
  it("flushes before signaling (flush-before-finish ordering)", async () => {
    const server = fakeServer();
    const { logger } = makeLogger({}, server);
    for (let i = 0; i < 10; i += 1) logger.logInteraction("keydown", { type: "keydown", seq: i });
    await logger.taskFinished();

    const urls = server.calls.map((c) => c.url);
    const lastBatch = urls.map((u) => u.endsWith("/logs/batch")).lastIndexOf(true);
    const finished = urls.findIndex((u) => u.includes("/finished"));
    expect(lastBatch).toBeGreaterThanOrEqual(0);
    expect(finished).toBeGreaterThan(lastBatch);
  });

  it("throws without initialization", async () => {
    await expect(taskFinished()).rejects.toThrow(/not initialized/);
  });

  it("module-level init wires the singleton", async () => {
    const server = fakeServer();
    init({
      baseUrl: "https://backend.example",
      participantUuid: "p-1",
      loggerKey: "key-1",
      conditionId: "cnd-1",
      flushIntervalMs: 0,
      storage: new MemoryStorage(),
      fetchFn: server.fetchFn,
    });
    await taskFinished();
    expect(server.calls.some((c) => c.url.includes("/finished"))).toBe(true);
  });
});

describe("serializeNativeEvent", () => {
  it("keeps whitelisted scalar fields and the target summary", () => {
    const doc = serializeNativeEvent({
      type: "click",
      timeStamp: 12.5,
      clientX: 10,
      clientY: 20,
      button: 0,
      target: { tagName: "BUTTON", id: "save", onclick: () => undefined },
      view: { window: true },
    });
    expect(doc).toEqual({
      type: "click",
      timeStamp: 12.5,
      clientX: 10,
      clientY: 20,
      button: 0,
      target: { tagName: "BUTTON", id: "save" },
    });
  });

  it("drops non-JSON values", () => {
    const doc = serializeNativeEvent({ type: "weird", detail: Number.NaN, key: "a" });
    expect(doc).toEqual({ type: "weird", key: "a" });
  });
});
