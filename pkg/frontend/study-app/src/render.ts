/** DOM rendering: full-height content area above, navigation toolbar
 * below, "next" control disabled exactly while the gate is locked. */

import type { StepDescriptor } from "./api";
import type { StepViewModel } from "./gate";
import { sanitizeHtml } from "./sanitize";

export interface RenderHandlers {
  onNext: () => void;
}

export interface FrameParams {
  baseUrl: string;
  participantUuid: string;
  loggerKey: string;
}

function formatRemaining(seconds: number): string {
  const units: Array<[number, string]> = [
    [86400, "d"],
    [3600, "h"],
    [60, "m"],
    [1, "s"],
  ];
  const parts: string[] = [];
  let left = Math.max(0, Math.ceil(seconds));
  for (const [span, label] of units) {
    if (left >= span || (label === "s" && parts.length === 0)) {
      parts.push(`${Math.floor(left / span)}${label}`);
      left %= span;
    }
  }
  return parts.slice(0, 2).join(" ");
}

export function conditionFrameUrl(step: StepDescriptor, params: FrameParams): string {
  const url = new URL(step.prototype_url ?? "");
  url.searchParams.set("sa_base", params.baseUrl);
  url.searchParams.set("sa_participant", params.participantUuid);
  url.searchParams.set("sa_key", params.loggerKey);
  url.searchParams.set("sa_condition", step.element_id);
  url.searchParams.set("sa_step", String(step.index));
  return url.toString();
}

function renderContent(model: StepViewModel, params: FrameParams): HTMLElement {
  const content = document.createElement("main");
  content.className = "sa-content";
  if (model.complete) {
    content.innerHTML = `<section class="sa-complete"><h1>Study complete</h1><p>Thank you for participating. You can close this tab.</p></section>`;
    return content;
  }
  const step = model.step as StepDescriptor;
  switch (step.type) {
    case "text": {
      const page = document.createElement("article");
      page.className = "sa-text-page";
      const heading = document.createElement("h1");
      heading.textContent = step.title ?? "";
      const body = document.createElement("div");
      body.innerHTML = sanitizeHtml(step.body ?? "");
      page.append(heading, body);
      content.append(page);
      break;
    }
    case "condition": {
      const frame = document.createElement("iframe");
      frame.className = "sa-embed";
      frame.id = "sa-prototype";
      frame.src = conditionFrameUrl(step, params);
      frame.setAttribute("title", step.name ?? "prototype");
      content.append(frame);
      break;
    }
    case "questionnaire": {
      const frame = document.createElement("iframe");
      frame.className = "sa-embed";
      frame.id = "sa-questionnaire";
      frame.src = step.resolved_url ?? step.survey_url ?? "";
      frame.setAttribute("title", step.name ?? "questionnaire");
      content.append(frame);
      break;
    }
    case "pause": {
      const page = document.createElement("article");
      page.className = "sa-pause";
      const heading = document.createElement("h1");
      heading.textContent = step.info?.title ?? "Pause";
      const body = document.createElement("div");
      body.innerHTML = sanitizeHtml(step.info?.body ?? "");
      page.append(heading, body);
      const status = document.createElement("p");
      status.id = "sa-pause-status";
      if (step.mode === "timed") {
        status.textContent =
          model.gate === "unlocked"
            ? "You can continue now."
            : `The study continues in ${formatRemaining(model.pauseRemaining ?? 0)}.`;
      } else {
        status.textContent =
          model.gate === "unlocked"
            ? "You can continue now."
            : "Waiting for the experimenter to continue the study.";
      }
      page.append(status);
      content.append(page);
      break;
    }
  }
  return content;
}

export function render(
  root: HTMLElement,
  model: StepViewModel,
  params: FrameParams,
  handlers: RenderHandlers,
): void {
  root.textContent = "";
  root.className = "sa-root";
  root.append(renderContent(model, params));

  const toolbar = document.createElement("footer");
  toolbar.className = "sa-toolbar";
  const progress = document.createElement("span");
  progress.id = "sa-progress";
  progress.textContent = model.complete
    ? "Done"
    : `Step ${model.progress + 1} of ${model.stepCount}`;
  const next = document.createElement("button");
  next.id = "sa-next";
  next.type = "button";
  next.textContent = "Next";
  next.disabled = model.complete || model.gate === "locked";
  next.addEventListener("click", () => {
    if (!next.disabled) handlers.onNext();
  });
  toolbar.append(progress, next);
  root.append(toolbar);
}
