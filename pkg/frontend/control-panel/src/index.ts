export { AdminApi } from "./api";
export type { PanelError } from "./api";
export {
  EditError,
  addStep,
  blockElement,
  conditionElement,
  emptyConfig,
  extractFromBlock,
  hasQuestionnaire,
  moveStep,
  nestIntoBlock,
  pauseElement,
  questionnaireElement,
  removeStep,
  setFlag,
  textElement,
  variantPreviewCount,
} from "./editor";
export type { BlockElement, DraftConfig, DraftElement, DraftStep } from "./editor";
export { validateDraft } from "./validation";
export type { Finding } from "./validation";
export { StudyWizard, emptyStudyDraft } from "./wizard";
export type { StudyDraft, WizardStep } from "./wizard";
