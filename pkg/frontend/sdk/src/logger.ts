import { serializeNativeEvent } from "./serialize";
import { DurableBuffer } from "./storage";
import type { FlushResult, LogEntry, SdkConfig } from "./types";

const DEFAULT_BATCH_SIZE = 50;
const DEFAULT_FLUSH_INTERVAL_MS = 5000;
const DEFAULT_CAPACITY = 5000;
const BACKOFF_BASE_MS = 1000;
const BACKOFF_FACTOR = 2;
const BACKOFF_CAP_MS = 60_000;

function mintBatchId(): string {
  const cryptoObj = globalThis.crypto as Crypto | undefined;
  if (cryptoObj?.randomUUID) return cryptoObj.randomUUID();
  return `b-${Date.now().toString(36)}-${Math.random().toString(36).slice(2, 12)}`;
}

/**
 * Interaction logger embedded in a prototype.
 *
 * Events are appended to a durable local buffer first and shipped to
 * the backend in batches; a failed flush retries with exponential
 * backoff reusing the same client_batch_id, so the server never stores
 * a batch twice. `taskFinished()` drains the buffer before signaling
 * the navigator (flush-before-finish).
 */
export class StudyAlignLogger {
  private readonly config: Required<Pick<SdkConfig, "baseUrl" | "participantUuid" | "loggerKey" | "conditionId">>;
  private readonly batchSize: number;
  private readonly flushIntervalMs: number;
  private readonly fetchFn: typeof fetch;
  private readonly buffer: DurableBuffer;
  private flushing = false;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;
  private intervalTimer: ReturnType<typeof setInterval> | null = null;
  private failureCount = 0;

  constructor(config: SdkConfig) {
    if (!config.baseUrl || !config.participantUuid || !config.loggerKey || !config.conditionId) {
      throw new Error("studyalign: SDK requires baseUrl, participantUuid, loggerKey, and conditionId");
    }
    this.config = {
      baseUrl: config.baseUrl.replace(/\/$/, ""),
      participantUuid: config.participantUuid,
      loggerKey: config.loggerKey,
      conditionId: config.conditionId,
    };
    this.batchSize = config.batchSize ?? DEFAULT_BATCH_SIZE;
    if (this.batchSize < 1 || this.batchSize > 500) {
      throw new Error("studyalign: batchSize must be between 1 and the server limit of 500");
    }
    this.flushIntervalMs = config.flushIntervalMs ?? DEFAULT_FLUSH_INTERVAL_MS;
    this.fetchFn = config.fetchFn ?? globalThis.fetch.bind(globalThis);
    const storage = config.storage ?? (globalThis as { localStorage?: SdkConfig["storage"] }).localStorage;
    if (!storage) {
      throw new Error("studyalign: no storage available; pass config.storage");
    }
    this.buffer = new DurableBuffer(
      storage,
      config.participantUuid,
      config.conditionId,
      config.maxBufferedEntries ?? DEFAULT_CAPACITY,
    );
    if (this.flushIntervalMs > 0) {
      this.intervalTimer = setInterval(() => {
        void this.flush().catch(() => undefined);
      }, this.flushIntervalMs);
    }
  }

  bufferedCount(): number {
    return this.buffer.totalBuffered();
  }

  evictedCount(): number {
    return this.buffer.evictedCount();
  }

  /** Queue one interaction. Triggers a flush at the batch threshold. */
  logInteraction(
    eventType: string,
    nativeEvent?: unknown,
    custom?: Record<string, unknown>,
  ): LogEntry {
    const entry: LogEntry = {
      event_type: eventType,
      client_timestamp: Date.now(),
      native_event: nativeEvent === undefined || nativeEvent === null ? null : serializeNativeEvent(nativeEvent),
      custom: custom ?? null,
    };
    if (entry.native_event === null && entry.custom === null) {
      throw new Error("studyalign: an event needs a native event or a custom payload");
    }
    this.buffer.append(entry);
    if (this.buffer.queuedCount() >= this.batchSize) {
      void this.flush().catch(() => undefined);
    }
    return entry;
  }

  logMouseInteraction(eventType: string, event: unknown, custom?: Record<string, unknown>): LogEntry {
    return this.logInteraction(eventType, event, custom);
  }

  logKeyboardInteraction(eventType: string, event: unknown, custom?: Record<string, unknown>): LogEntry {
    return this.logInteraction(eventType, event, custom);
  }

  logTouchInteraction(eventType: string, event: unknown, custom?: Record<string, unknown>): LogEntry {
    return this.logInteraction(eventType, event, custom);
  }

  logCustom(eventType: string, custom: Record<string, unknown>): LogEntry {
    return this.logInteraction(eventType, undefined, custom);
  }

  /** Ship buffered entries batch by batch. Resolves with the number of
   * events the server accepted during this call; on network failure the
   * entries stay buffered and a retry is scheduled with backoff. */
  async flush(): Promise<FlushResult> {
    if (this.flushing) return { sent: 0, requests: 0 };
    this.flushing = true;
    let sent = 0;
    let requests = 0;
    try {
      for (;;) {
        const batch = this.buffer.nextBatch(this.batchSize, mintBatchId);
        if (batch === null) break;
        requests += 1;
        const accepted = await this.sendBatch(batch.client_batch_id, batch.events);
        if (accepted === null) {
          this.scheduleRetry();
          break;
        }
        this.failureCount = 0;
        this.buffer.resolvePending();
        sent += batch.events.length;
      }
      return { sent, requests };
    } finally {
      this.flushing = false;
    }
  }

  private async sendBatch(clientBatchId: string, events: LogEntry[]): Promise<number | null> {
    try {
      const response = await this.fetchFn(`${this.config.baseUrl}/api/v1/logs/batch`, {
        method: "POST",
        headers: {
          "Content-Type": "application/json",
          "Logger-Api-Key": this.config.loggerKey,
        },
        body: JSON.stringify({
          participant_uuid: this.config.participantUuid,
          condition_id: this.config.conditionId,
          client_batch_id: clientBatchId,
          events,
        }),
      });
      if (response.status >= 500) return null; // retry later, same batch id
      if (!response.ok) {
        // 4xx: the server rejected the batch for good; surface loudly
        throw new Error(`studyalign: batch rejected (${response.status}): ${await response.text()}`);
      }
      const body = (await response.json()) as { accepted: number };
      return body.accepted;
    } catch (error) {
      if (error instanceof Error && error.message.startsWith("studyalign:")) throw error;
      return null; // network failure: keep buffered, retry
    }
  }

  private scheduleRetry(): void {
    if (this.retryTimer !== null) return;
    const delay = Math.min(BACKOFF_BASE_MS * BACKOFF_FACTOR ** this.failureCount, BACKOFF_CAP_MS);
    this.failureCount += 1;
    this.retryTimer = setTimeout(() => {
      this.retryTimer = null;
      void this.flush().catch(() => undefined);
    }, delay);
  }

  /** Flush everything, then tell the navigator the task is done. */
  async taskFinished(): Promise<void> {
    for (let attempt = 0; this.buffer.totalBuffered() > 0; attempt += 1) {
      const { sent } = await this.flush();
      if (this.buffer.totalBuffered() > 0 && sent === 0) {
        if (attempt >= 5) {
          throw new Error("studyalign: cannot finish, buffered events keep failing to flush");
        }
        await new Promise((r) => setTimeout(r, BACKOFF_BASE_MS * BACKOFF_FACTOR ** attempt));
      }
    }
    const headers = { "Logger-Api-Key": this.config.loggerKey };
    const view = await this.fetchFn(
      `${this.config.baseUrl}/api/v1/participants/${this.config.participantUuid}/procedure`,
      { headers },
    );
    if (!view.ok) {
      throw new Error(`studyalign: cannot read progress (${view.status})`);
    }
    const { progress } = (await view.json()) as { progress: number };
    const response = await this.fetchFn(
      `${this.config.baseUrl}/api/v1/participants/${this.config.participantUuid}/steps/${progress}/finished`,
      { method: "POST", headers },
    );
    if (!response.ok) {
      throw new Error(`studyalign: finished signal rejected (${response.status}): ${await response.text()}`);
    }
  }

  /** Stop background timers (page teardown). Buffered entries stay in
   * storage and flush after the next init. */
  dispose(): void {
    if (this.intervalTimer !== null) clearInterval(this.intervalTimer);
    if (this.retryTimer !== null) clearTimeout(this.retryTimer);
    this.intervalTimer = null;
    this.retryTimer = null;
  }
}

let active: StudyAlignLogger | null = null;

/** Module-level convenience mirroring the embedded usage pattern:
 * `init(...)` once, then `logInteraction`/`taskFinished` anywhere. */
export function init(config: SdkConfig): StudyAlignLogger {
  active?.dispose();
  active = new StudyAlignLogger(config);
  return active;
}

function requireInitialized(): StudyAlignLogger {
  if (active === null) {
    throw new Error("studyalign: SDK not initialized; call init(config) first");
  }
  return active;
}

export function logInteraction(eventType: string, nativeEvent?: unknown, custom?: Record<string, unknown>): LogEntry {
  return requireInitialized().logInteraction(eventType, nativeEvent, custom);
}

export async function flush(): Promise<FlushResult> {
  return requireInitialized().flush();
}

export async function taskFinished(): Promise<void> {
  return requireInitialized().taskFinished();
}

export function resetForTests(): void {
  active?.dispose();
  active = null;
}
