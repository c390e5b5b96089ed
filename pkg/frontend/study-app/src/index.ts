export { ParticipantApi, registerForStudy } from "./api";
export type { AdvanceResult, ApiError, PauseGate, ProcedureView, StepDescriptor } from "./api";
export { StudyApp } from "./app";
export type { StudyAppConfig } from "./app";
export { applyProceed, fromProcedureView, tickPause } from "./gate";
export type { GateState, StepViewModel } from "./gate";
export { render, conditionFrameUrl } from "./render";
export { sanitizeHtml } from "./sanitize";
export { NavigatorClient, parseSseChunk } from "./sse";
export type { ConnectionState, SseEvent } from "./sse";
export { bootStudyApp, parseStudyLink } from "./boot";
export type { BootOptions } from "./boot";
