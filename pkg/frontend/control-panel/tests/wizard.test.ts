/** Wizard flow: builds the canonical two-block within-subject design,
 * shows the integrations step only when a questionnaire exists, and
 * blocks finalize while validation findings are nonzero. */

import { beforeAll, describe, expect, it } from "vitest";

import { AdminApi } from "../src/api";
import {
  addStep,
  blockElement,
  conditionElement,
  questionnaireElement,
  setFlag,
  textElement,
  variantPreviewCount,
} from "../src/editor";
import { StudyWizard } from "../src/wizard";
import { backendInfo, type BackendInfo } from "../../shared/test-backend";

let info: BackendInfo;

beforeAll(() => {
  info = backendInfo();
});

function api(): AdminApi {
  return new AdminApi(info.baseUrl);
}

function fillStudy(wizard: StudyWizard): void {
  wizard.updateStudy({
    title: "Within-subject editor comparison",
    description: "<p>compare two editors</p>",
    consent: "<p>consent text</p>",
    start_date: "2020-01-01T00:00:00+00:00",
    end_date: "2099-01-01T00:00:00+00:00",
    planned_participants: 12,
  });
}

function buildWithinSubjectProcedure(wizard: StudyWizard): void {
  wizard.editProcedure((c) => addStep(c, textElement("welcome", "<p>hello</p>")));
  wizard.editProcedure((c) =>
    addStep(
      c,
      blockElement(
        textElement("briefing a"),
        conditionElement("editor-a", "https://proto.example/a"),
        questionnaireElement("after a", "https://survey.example/a"),
      ),
    ),
  );
  wizard.editProcedure((c) =>
    addStep(
      c,
      blockElement(
        textElement("briefing b"),
        conditionElement("editor-b", "https://proto.example/b"),
        questionnaireElement("after b", "https://survey.example/b"),
      ),
    ),
  );
  wizard.editProcedure((c) => addStep(c, questionnaireElement("final", "https://survey.example/final")));
  wizard.editProcedure((c) => addStep(c, textElement("thanks", "<p>bye</p>")));
  wizard.editProcedure((c) => setFlag(c, 1, true));
  wizard.editProcedure((c) => setFlag(c, 2, true));
}

describe("study setup wizard", () => {
  it("walks all four steps and finalizes the within-subject design", async () => {
    const wizard = new StudyWizard();
    expect(wizard.current()).toBe("study");

    fillStudy(wizard);
    expect(wizard.next()).toBe("procedure");

    buildWithinSubjectProcedure(wizard);
    expect(variantPreviewCount(wizard.config)).toBe(2);
    expect(wizard.steps()).toEqual(["study", "procedure", "integrations", "check"]);

    expect(wizard.next()).toBe("integrations");
    expect(wizard.canProceed()).toBe(false);
    expect(() => wizard.next()).toThrow(/confirm the questionnaire integration/);
    wizard.confirmIntegrations(true);
    expect(wizard.next()).toBe("check");

    expect(wizard.findings()).toEqual([]);
    expect(wizard.canFinalize()).toBe(true);

    const panel = api();
    await panel.login(info.adminEmail, info.adminPassword);
    const detail = await wizard.finalize(panel);
    expect(detail.study.state).toBe("draft");
    expect(detail.findings).toEqual([]);
    const flags = detail.procedure_config.steps.map((s: any) => s.counterbalance);
    expect(flags).toEqual([false, true, true, false, false]);

    // the server generates exactly the previewed variant count
    await panel.activateStudy(detail.study.id);
    const regA = await fetch(`${info.baseUrl}/api/v1/studies/${detail.study.id}/participants`, { method: "POST" });
    const regB = await fetch(`${info.baseUrl}/api/v1/studies/${detail.study.id}/participants`, { method: "POST" });
    const variants = new Set([
      ((await regA.json()) as { variant_index: number }).variant_index,
      ((await regB.json()) as { variant_index: number }).variant_index,
    ]);
    expect(variants).toEqual(new Set([0, 1]));
  });

  it("skips the integrations step when no questionnaire exists", () => {
    const wizard = new StudyWizard();
    fillStudy(wizard);
    wizard.editProcedure((c) => addStep(c, textElement("hello")));
    wizard.editProcedure((c) => addStep(c, conditionElement("only", "https://proto.example/only")));
    expect(wizard.steps()).toEqual(["study", "procedure", "check"]);
    wizard.next();
    expect(wizard.next()).toBe("check");
  });

  it("re-adds the integrations step when a questionnaire appears", () => {
    const wizard = new StudyWizard();
    fillStudy(wizard);
    wizard.editProcedure((c) => addStep(c, textElement("hello")));
    expect(wizard.steps()).toContain("check");
    expect(wizard.steps()).not.toContain("integrations");
    wizard.editProcedure((c) => addStep(c, questionnaireElement("q", "https://survey.example/q")));
    expect(wizard.steps()).toContain("integrations");
  });

  it("blocks finalize while findings are nonzero", async () => {
    const wizard = new StudyWizard();
    fillStudy(wizard);
    wizard.next();
    wizard.editProcedure((c) => addStep(c, conditionElement("broken", "notaurl")));
    wizard.next(); // no questionnaire: straight to check
    expect(wizard.current()).toBe("check");

    const findings = wizard.findings();
    expect(findings.map((f) => f.code)).toContain("invalid_url");
    expect(wizard.canFinalize()).toBe(false);
    await expect(wizard.finalize(api())).rejects.toThrow(/zero validation findings/);

    // fixing the finding unblocks finalize
    wizard.editProcedure((c) => {
      const fixed = JSON.parse(JSON.stringify(c));
      fixed.steps[0].element.prototype_url = "https://proto.example/fixed";
      return fixed;
    });
    expect(wizard.canFinalize()).toBe(true);
  });

  it("finalize is not available before the check step", async () => {
    const wizard = new StudyWizard();
    fillStudy(wizard);
    wizard.editProcedure((c) => addStep(c, textElement("x")));
    expect(wizard.canFinalize()).toBe(false);
    await expect(wizard.finalize(api())).rejects.toThrow();
  });
});
