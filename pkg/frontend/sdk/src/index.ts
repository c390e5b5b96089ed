export { StudyAlignLogger, init, logInteraction, flush, taskFinished, resetForTests } from "./logger";
export { DurableBuffer } from "./storage";
export { serializeNativeEvent } from "./serialize";
export type { FlushResult, KeyValueStorage, LogEntry, PendingBatch, SdkConfig } from "./types";
