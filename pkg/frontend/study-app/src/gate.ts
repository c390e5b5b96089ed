/** View-model for the current step and its gate.
 *
 * The server is the source of truth: the model is derived only from
 * server responses (procedure view, SSE events), never from local
 * navigation state, so reload and back/refresh are always safe.
 */

import type { ProcedureView, StepDescriptor } from "./api";

export type GateState = "locked" | "unlocked";

export interface StepViewModel {
  progress: number;
  stepCount: number;
  complete: boolean;
  step: StepDescriptor | null;
  gate: GateState;
  /** Seconds until a timed pause opens; null when not applicable. */
  pauseRemaining: number | null;
  studyTitle: string;
}

export function fromProcedureView(view: ProcedureView): StepViewModel {
  const complete = view.state === "done" || view.current_step === null;
  const step = view.current_step;
  let gate: GateState = "unlocked";
  let pauseRemaining: number | null = null;
  if (!complete && step !== null) {
    if (step.type === "condition" || step.type === "questionnaire") {
      gate = view.task_done ? "unlocked" : "locked";
    } else if (step.type === "pause") {
      gate = view.pause?.open ? "unlocked" : "locked";
      pauseRemaining = view.pause?.remaining_seconds ?? null;
    }
  }
  return {
    progress: view.progress,
    stepCount: view.step_count,
    complete,
    step,
    gate,
    pauseRemaining,
    studyTitle: view.study.title,
  };
}

/** The navigator pushed "proceed": the current gated step unlocks. */
export function applyProceed(model: StepViewModel): StepViewModel {
  if (model.step === null) return model;
  return { ...model, gate: "unlocked" };
}

/** One countdown tick for a timed pause; unlocks when it reaches 0. */
export function tickPause(model: StepViewModel, elapsedSeconds: number): StepViewModel {
  if (model.step?.type !== "pause" || model.step.mode !== "timed" || model.pauseRemaining === null) {
    return model;
  }
  const remaining = Math.max(0, model.pauseRemaining - elapsedSeconds);
  return { ...model, pauseRemaining: remaining, gate: remaining <= 0 ? "unlocked" : model.gate };
}
