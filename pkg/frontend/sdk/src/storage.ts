import type { KeyValueStorage, LogEntry, PendingBatch } from "./types";

interface BufferDocument {
  entries: LogEntry[];
  pending: PendingBatch | null;
  evicted: number;
}

const EMPTY: BufferDocument = { entries: [], pending: null, evicted: 0 };

/**
 * Durable event buffer keyed by participant and condition.
 *
 * Every mutation is written through to storage, so buffered entries
 * and the in-flight batch (with its client_batch_id) survive page
 * reloads. When the buffer is full the oldest entry is evicted and
 * counted; eviction is the only way an event can be lost.
 */
export class DurableBuffer {
  private readonly key: string;
  private doc: BufferDocument;

  constructor(
    private readonly storage: KeyValueStorage,
    participantUuid: string,
    conditionId: string,
    private readonly capacity: number,
  ) {
    this.key = `studyalign:buffer:${participantUuid}:${conditionId}`;
    this.doc = this.load();
  }

  private load(): BufferDocument {
    const raw = this.storage.getItem(this.key);
    if (raw === null) return { ...EMPTY, entries: [] };
    try {
      const parsed = JSON.parse(raw) as BufferDocument;
      return {
        entries: Array.isArray(parsed.entries) ? parsed.entries : [],
        pending: parsed.pending ?? null,
        evicted: parsed.evicted ?? 0,
      };
    } catch {
      return { ...EMPTY, entries: [] };
    }
  }

  private save(): void {
    this.storage.setItem(this.key, JSON.stringify(this.doc));
  }

  append(entry: LogEntry): void {
    this.doc.entries.push(entry);
    while (this.totalBuffered() > this.capacity) {
      this.doc.entries.shift();
      this.doc.evicted += 1;
      console.warn(`studyalign: buffer full, evicted oldest entry (total evicted: ${this.doc.evicted})`);
    }
    this.save();
  }

  /** Entries waiting in the buffer plus any in-flight batch. */
  totalBuffered(): number {
    return this.doc.entries.length + (this.doc.pending?.events.length ?? 0);
  }

  queuedCount(): number {
    return this.doc.entries.length;
  }

  evictedCount(): number {
    return this.doc.evicted;
  }

  /** The batch to send next: the unresolved in-flight batch if one
   * exists (same client_batch_id on retry), otherwise up to `size`
   * entries moved into a fresh batch. */
  nextBatch(size: number, mintId: () => string): PendingBatch | null {
    if (this.doc.pending !== null && this.doc.pending.events.length > 0) {
      return this.doc.pending;
    }
    if (this.doc.entries.length === 0) return null;
    const events = this.doc.entries.slice(0, size);
    this.doc.entries = this.doc.entries.slice(events.length);
    this.doc.pending = { client_batch_id: mintId(), events };
    this.save();
    return this.doc.pending;
  }

  /** The server accepted the in-flight batch. */
  resolvePending(): void {
    this.doc.pending = null;
    this.save();
  }

  clear(): void {
    this.storage.removeItem(this.key);
    this.doc = { ...EMPTY, entries: [] };
  }
}
