/** Client-side mirror of the backend's study validation, for instant
 * feedback in the wizard's check step. The server re-validates at
 * creation and activation; the mirror never replaces that. */

import type { DraftConfig, DraftStep } from "./editor";
import type { StudyDraft } from "./wizard";

export interface Finding {
  code: string;
  path: string;
  message: string;
}

function isAbsoluteUrl(value: string): boolean {
  try {
    const url = new URL(value);
    return (url.protocol === "http:" || url.protocol === "https:") && url.host !== "";
  } catch {
    return false;
  }
}

function checkSteps(steps: DraftStep[], path: string, findings: Finding[], insideBlock: boolean): void {
  const orders = steps.map((s) => s.order).sort((a, b) => a - b);
  const expected = steps.map((_, i) => i + 1);
  if (JSON.stringify(orders) !== JSON.stringify(expected)) {
    findings.push({ code: "step_order", path, message: "step order numbers must be contiguous from 1" });
  }
  for (const step of steps) {
    const stepPath = `${path}.steps[${step.order}]`;
    const element = step.element;
    switch (element.type) {
      case "condition":
        if (!isAbsoluteUrl(element.prototype_url)) {
          findings.push({ code: "invalid_url", path: stepPath, message: "prototype URL must be absolute (https://...)" });
        }
        break;
      case "questionnaire":
        if (!isAbsoluteUrl(element.survey_url)) {
          findings.push({ code: "invalid_url", path: stepPath, message: "survey URL must be absolute (https://...)" });
        }
        break;
      case "pause":
        if (element.mode === "timed" && (element.duration === null || element.duration <= 0)) {
          findings.push({ code: "pause_duration", path: stepPath, message: "timed pauses need a duration above 0 seconds" });
        }
        break;
      case "block":
        if (insideBlock) {
          findings.push({ code: "nested_block", path: stepPath, message: "a block may not contain a block" });
          break;
        }
        if (element.steps.length === 0) {
          findings.push({ code: "empty_block", path: stepPath, message: "a block needs at least one step" });
        }
        checkSteps(element.steps, stepPath, findings, true);
        break;
      default:
        break;
    }
  }
}

export function validateDraft(study: StudyDraft, config: DraftConfig): Finding[] {
  const findings: Finding[] = [];
  if (!study.title.trim()) {
    findings.push({ code: "title", path: "study", message: "the study needs a title" });
  }
  if (Date.parse(study.start_date) > Date.parse(study.end_date)) {
    findings.push({ code: "date_range_inverted", path: "study", message: "the end date is before the start date" });
  }
  if (!Number.isInteger(study.planned_participants) || study.planned_participants < 1) {
    findings.push({ code: "planned_participants", path: "study", message: "plan at least one participant" });
  }
  if (config.steps.length === 0) {
    findings.push({ code: "empty_procedure", path: "procedure", message: "the procedure has no steps" });
  }
  checkSteps(config.steps, "procedure", findings, false);
  return findings;
}
