/** Storage-like backend for the durable buffer (window.localStorage in
 * browsers; tests inject an in-memory double). */
export interface KeyValueStorage {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export interface SdkConfig {
  /** Base URL of the backend, e.g. https://study.example */
  baseUrl: string;
  participantUuid: string;
  loggerKey: string;
  conditionId: string;
  /** Buffered entries per automatic flush. Must not exceed the server
   * batch limit (500). Default 50. */
  batchSize?: number;
  /** Interval of the periodic background flush in ms. Default 5000;
   * 0 disables the timer (manual flushes only). */
  flushIntervalMs?: number;
  /** Buffer capacity before oldest-first eviction. Default 5000. */
  maxBufferedEntries?: number;
  storage?: KeyValueStorage;
  fetchFn?: typeof fetch;
}

export interface LogEntry {
  event_type: string;
  client_timestamp: number;
  native_event?: Record<string, unknown> | null;
  custom?: Record<string, unknown> | null;
}

export interface PendingBatch {
  client_batch_id: string;
  events: LogEntry[];
}

export interface FlushResult {
  sent: number;
  requests: number;
}
