/** Server-sent-events client over fetch streaming.
 *
 * EventSource cannot set the Logger-Api-Key header, so the stream is
 * consumed through fetch with a ReadableStream reader instead; this
 * also makes the client testable in node. Lost connections reconnect
 * with exponential backoff; the server re-sends the gate state on
 * every connect, so reconnecting doubles as a gate re-query.
 */

export interface SseEvent {
  name: string;
  data: Record<string, unknown>;
}

export type ConnectionState = "connecting" | "connected" | "reconnecting" | "closed";

export interface NavigatorClientOptions {
  headers?: Record<string, string>;
  fetchFn?: typeof fetch;
  backoffBaseMs?: number;
  backoffCapMs?: number;
  onEvent: (event: SseEvent) => void;
  onStateChange?: (state: ConnectionState) => void;
}

/** Parse complete SSE blocks out of a text buffer; returns the events
 * found and the unconsumed remainder. */
export function parseSseChunk(buffer: string): { events: SseEvent[]; rest: string } {
  const events: SseEvent[] = [];
  const blocks = buffer.split("\n\n");
  const rest = blocks.pop() ?? "";
  for (const block of blocks) {
    let name = "";
    let data = "";
    for (const line of block.split("\n")) {
      if (line.startsWith("event:")) name = line.slice("event:".length).trim();
      else if (line.startsWith("data:")) data += line.slice("data:".length).trim();
    }
    if (name === "") continue;
    let parsed: Record<string, unknown> = {};
    try {
      parsed = data ? (JSON.parse(data) as Record<string, unknown>) : {};
    } catch {
      // tolerate non-JSON data payloads
    }
    events.push({ name, data: parsed });
  }
  return { events, rest };
}

export class NavigatorClient {
  private readonly fetchFn: typeof fetch;
  private readonly backoffBaseMs: number;
  private readonly backoffCapMs: number;
  private controller: AbortController | null = null;
  private closed = false;
  private attempts = 0;

  constructor(
    private readonly url: string,
    private readonly options: NavigatorClientOptions,
  ) {
    this.fetchFn = options.fetchFn ?? globalThis.fetch.bind(globalThis);
    this.backoffBaseMs = options.backoffBaseMs ?? 1000;
    this.backoffCapMs = options.backoffCapMs ?? 30_000;
  }

  start(): void {
    void this.loop();
  }

  close(): void {
    this.closed = true;
    this.controller?.abort();
    this.options.onStateChange?.("closed");
  }

  private async loop(): Promise<void> {
    while (!this.closed) {
      this.options.onStateChange?.(this.attempts === 0 ? "connecting" : "reconnecting");
      try {
        await this.consumeStream();
        if (this.closed) return;
      } catch {
        if (this.closed) return;
      }
      const delay = Math.min(this.backoffBaseMs * 2 ** this.attempts, this.backoffCapMs);
      this.attempts += 1;
      await new Promise((r) => setTimeout(r, delay));
    }
  }

  private async consumeStream(): Promise<void> {
    this.controller = new AbortController();
    const response = await this.fetchFn(this.url, {
      headers: { Accept: "text/event-stream", ...(this.options.headers ?? {}) },
      signal: this.controller.signal,
    });
    if (!response.ok || response.body === null) {
      throw new Error(`stream rejected: ${response.status}`);
    }
    this.options.onStateChange?.("connected");
    this.attempts = 0;
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done) return;
      buffer += decoder.decode(value, { stream: true });
      const { events, rest } = parseSseChunk(buffer);
      buffer = rest;
      for (const event of events) {
        this.options.onEvent(event);
      }
    }
  }
}
