/** Procedure editor operations backing the drag-and-drop list.
 *
 * All operations return a fresh draft (inputs are never mutated) with
 * order numbers renumbered to a contiguous 1..n sequence, mirroring
 * the backend's config invariants so the UI can reflect rule
 * violations immediately.
 */

export interface TextElement {
  type: "text";
  title: string;
  body: string;
}

export interface ConditionElement {
  type: "condition";
  name: string;
  prototype_url: string;
  config: Record<string, unknown>;
}

export interface QuestionnaireElement {
  type: "questionnaire";
  name: string;
  survey_url: string;
}

export interface PauseElement {
  type: "pause";
  mode: "timed" | "manual";
  duration: number | null;
  info: TextElement;
}

export interface BlockElement {
  type: "block";
  steps: DraftStep[];
}

export type DraftElement =
  | TextElement
  | ConditionElement
  | QuestionnaireElement
  | PauseElement
  | BlockElement;

export interface DraftStep {
  order: number;
  counterbalance: boolean;
  element: DraftElement;
}

export interface DraftConfig {
  steps: DraftStep[];
}

export class EditError extends Error {}

export const emptyConfig = (): DraftConfig => ({ steps: [] });

export const textElement = (title = "", body = ""): TextElement => ({ type: "text", title, body });
export const conditionElement = (name = "", prototypeUrl = ""): ConditionElement => ({
  type: "condition",
  name,
  prototype_url: prototypeUrl,
  config: {},
});
export const questionnaireElement = (name = "", surveyUrl = ""): QuestionnaireElement => ({
  type: "questionnaire",
  name,
  survey_url: surveyUrl,
});
export const pauseElement = (mode: "timed" | "manual" = "manual", duration: number | null = null): PauseElement => ({
  type: "pause",
  mode,
  duration,
  info: textElement("Pause"),
});
export const blockElement = (...elements: DraftElement[]): BlockElement => ({
  type: "block",
  steps: elements.map((element, index) => ({ order: index + 1, counterbalance: false, element })),
});

function clone<T>(value: T): T {
  return JSON.parse(JSON.stringify(value)) as T;
}

function renumber(steps: DraftStep[]): DraftStep[] {
  return steps.map((step, index) => ({ ...step, order: index + 1 }));
}

function withSteps(steps: DraftStep[]): DraftConfig {
  return { steps: renumber(steps) };
}

function checkIndex(config: DraftConfig, index: number): void {
  if (index < 0 || index >= config.steps.length) {
    throw new EditError(`no step at position ${index}`);
  }
}

export function addStep(config: DraftConfig, element: DraftElement, position?: number): DraftConfig {
  const steps = clone(config.steps);
  const at = position === undefined ? steps.length : position;
  if (at < 0 || at > steps.length) throw new EditError(`cannot insert at position ${at}`);
  steps.splice(at, 0, { order: 0, counterbalance: false, element: clone(element) });
  return withSteps(steps);
}

export function removeStep(config: DraftConfig, index: number): DraftConfig {
  checkIndex(config, index);
  const steps = clone(config.steps);
  steps.splice(index, 1);
  return withSteps(steps);
}

/** Drag-and-drop reordering. */
export function moveStep(config: DraftConfig, from: number, to: number): DraftConfig {
  checkIndex(config, from);
  checkIndex(config, to);
  const steps = clone(config.steps);
  const [moved] = steps.splice(from, 1);
  steps.splice(to, 0, moved as DraftStep);
  return withSteps(steps);
}

/** Drag a top-level step into a block. Blocks cannot nest. */
export function nestIntoBlock(config: DraftConfig, stepIndex: number, blockIndex: number): DraftConfig {
  checkIndex(config, stepIndex);
  checkIndex(config, blockIndex);
  if (stepIndex === blockIndex) throw new EditError("cannot nest a step into itself");
  const target = config.steps[blockIndex]!.element;
  if (target.type !== "block") throw new EditError("target step is not a block");
  const moving = config.steps[stepIndex]!.element;
  if (moving.type === "block") throw new EditError("a block may not contain a block");

  const steps = clone(config.steps);
  const [moved] = steps.splice(stepIndex, 1);
  const adjusted = blockIndex > stepIndex ? blockIndex - 1 : blockIndex;
  const block = steps[adjusted]!.element as BlockElement;
  block.steps = renumber([...block.steps, { ...(moved as DraftStep), counterbalance: false }]);
  return withSteps(steps);
}

/** Pull an inner step back out of a block, placing it after the block. */
export function extractFromBlock(config: DraftConfig, blockIndex: number, innerIndex: number): DraftConfig {
  checkIndex(config, blockIndex);
  const blockStep = config.steps[blockIndex]!;
  if (blockStep.element.type !== "block") throw new EditError("step is not a block");
  if (innerIndex < 0 || innerIndex >= blockStep.element.steps.length) {
    throw new EditError(`no inner step at position ${innerIndex}`);
  }
  const steps = clone(config.steps);
  const block = steps[blockIndex]!.element as BlockElement;
  const [extracted] = block.steps.splice(innerIndex, 1);
  block.steps = renumber(block.steps);
  steps.splice(blockIndex + 1, 0, extracted as DraftStep);
  return withSteps(steps);
}

/** The counterbalance checkbox next to each list entry. */
export function setFlag(config: DraftConfig, index: number, flagged: boolean): DraftConfig {
  checkIndex(config, index);
  const steps = clone(config.steps);
  steps[index]!.counterbalance = flagged;
  return withSteps(steps);
}

/** Instant client-side preview; finalization always relies on the
 * server's generator. */
export function variantPreviewCount(config: DraftConfig): number {
  const flagged = config.steps.filter((step) => step.counterbalance).length;
  return Math.max(1, flagged);
}

export function hasQuestionnaire(config: DraftConfig): boolean {
  return config.steps.some(
    (step) =>
      step.element.type === "questionnaire" ||
      (step.element.type === "block" && step.element.steps.some((inner) => inner.element.type === "questionnaire")),
  );
}
