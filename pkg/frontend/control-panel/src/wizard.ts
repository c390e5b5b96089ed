/** Four-step study setup wizard: Study, Procedure, Integrations, Check.
 *
 * The integrations step exists only while the draft contains a
 * questionnaire, and its confirmation checkbox gates proceeding.
 * Finalize is available only on the check step with zero validation
 * findings; it creates the study through the API, which re-validates
 * server-side.
 */

import type { AdminApi } from "./api";
import { hasQuestionnaire, emptyConfig, type DraftConfig } from "./editor";
import { validateDraft, type Finding } from "./validation";

export type WizardStep = "study" | "procedure" | "integrations" | "check";

export interface StudyDraft {
  title: string;
  description: string;
  consent: string;
  start_date: string;
  end_date: string;
  planned_participants: number;
  access_mode: "open" | "closed";
}

export function emptyStudyDraft(): StudyDraft {
  const today = new Date();
  const nextYear = new Date(today.getTime() + 365 * 86400 * 1000);
  return {
    title: "",
    description: "",
    consent: "",
    start_date: today.toISOString(),
    end_date: nextYear.toISOString(),
    planned_participants: 1,
    access_mode: "open",
  };
}

export class StudyWizard {
  study: StudyDraft = emptyStudyDraft();
  config: DraftConfig = emptyConfig();
  integrationsConfirmed = false;
  dirty = false;
  private position: WizardStep = "study";

  /** Sidebar entries; integrations only with a questionnaire present. */
  steps(): WizardStep[] {
    const steps: WizardStep[] = ["study", "procedure"];
    if (hasQuestionnaire(this.config)) steps.push("integrations");
    steps.push("check");
    return steps;
  }

  current(): WizardStep {
    const steps = this.steps();
    // the integrations step can disappear when the questionnaire is
    // removed; fall back to the procedure step in that case
    return steps.includes(this.position) ? this.position : "procedure";
  }

  updateStudy(patch: Partial<StudyDraft>): void {
    this.study = { ...this.study, ...patch };
    this.dirty = true;
  }

  /** Apply an editor operation to the procedure draft. */
  editProcedure(edit: (config: DraftConfig) => DraftConfig): void {
    this.config = edit(this.config);
    this.dirty = true;
    if (!hasQuestionnaire(this.config)) this.integrationsConfirmed = false;
  }

  confirmIntegrations(checked: boolean): void {
    this.integrationsConfirmed = checked;
  }

  canProceed(): boolean {
    if (this.current() === "integrations") return this.integrationsConfirmed;
    return this.current() !== "check";
  }

  next(): WizardStep {
    if (!this.canProceed()) {
      throw new Error(
        this.current() === "integrations"
          ? "confirm the questionnaire integration instructions first"
          : "already on the final step",
      );
    }
    const steps = this.steps();
    const index = steps.indexOf(this.current());
    this.position = steps[Math.min(index + 1, steps.length - 1)] as WizardStep;
    return this.position;
  }

  back(): WizardStep {
    const steps = this.steps();
    const index = steps.indexOf(this.current());
    this.position = steps[Math.max(index - 1, 0)] as WizardStep;
    return this.position;
  }

  findings(): Finding[] {
    return validateDraft(this.study, this.config);
  }

  canFinalize(): boolean {
    return this.current() === "check" && this.findings().length === 0;
  }

  /** Create the study (draft state) through the API. */
  async finalize(api: AdminApi): Promise<Record<string, any>> {
    if (!this.canFinalize()) {
      throw new Error("finalize requires the check step with zero validation findings");
    }
    const detail = await api.createStudy({ ...this.study }, { steps: this.config.steps });
    this.dirty = false;
    return detail;
  }
}
