import { describe, expect, it } from "vitest";

import {
  EditError,
  addStep,
  blockElement,
  conditionElement,
  emptyConfig,
  extractFromBlock,
  hasQuestionnaire,
  moveStep,
  nestIntoBlock,
  questionnaireElement,
  removeStep,
  setFlag,
  textElement,
  variantPreviewCount,
} from "../src/editor";

function sample() {
  let config = emptyConfig();
  config = addStep(config, textElement("info"));
  config = addStep(config, conditionElement("a", "https://p.example/a"));
  config = addStep(config, blockElement(textElement("brief"), conditionElement("b", "https://p.example/b")));
  return config;
}

describe("editor operations", () => {
  it("adds steps with contiguous order numbers", () => {
    const config = sample();
    expect(config.steps.map((s) => s.order)).toEqual([1, 2, 3]);
  });

  it("inserts at a position", () => {
    const config = addStep(sample(), textElement("first"), 0);
    expect(config.steps[0]!.element).toMatchObject({ title: "first" });
    expect(config.steps.map((s) => s.order)).toEqual([1, 2, 3, 4]);
  });

  it("removes and renumbers", () => {
    const config = removeStep(sample(), 1);
    expect(config.steps).toHaveLength(2);
    expect(config.steps.map((s) => s.order)).toEqual([1, 2]);
  });

  it("reorders via drag and drop", () => {
    const config = moveStep(sample(), 0, 2);
    expect(config.steps[2]!.element).toMatchObject({ title: "info" });
    expect(config.steps.map((s) => s.order)).toEqual([1, 2, 3]);
  });

  it("does not mutate its input", () => {
    const before = sample();
    const snapshot = JSON.stringify(before);
    moveStep(before, 0, 2);
    setFlag(before, 0, true);
    expect(JSON.stringify(before)).toBe(snapshot);
  });

  it("nests a condition into a block", () => {
    const config = nestIntoBlock(sample(), 1, 2);
    expect(config.steps).toHaveLength(2);
    const block = config.steps[1]!.element;
    expect(block.type).toBe("block");
    if (block.type === "block") {
      expect(block.steps).toHaveLength(3);
      expect(block.steps.map((s) => s.order)).toEqual([1, 2, 3]);
    }
  });

  it("rejects block-in-block with a message", () => {
    let config = sample();
    config = addStep(config, blockElement(textElement("x")));
    expect(() => nestIntoBlock(config, 3, 2)).toThrow(EditError);
    expect(() => nestIntoBlock(config, 3, 2)).toThrow(/block may not contain a block/);
  });

  it("rejects nesting into a non-block", () => {
    expect(() => nestIntoBlock(sample(), 0, 1)).toThrow(/not a block/);
  });

  it("extracts an inner step back to the top level", () => {
    const config = extractFromBlock(sample(), 2, 0);
    expect(config.steps).toHaveLength(4);
    expect(config.steps[3]!.element).toMatchObject({ title: "brief" });
  });

  it("counterbalance flags drive the variant preview", () => {
    let config = sample();
    expect(variantPreviewCount(config)).toBe(1);
    config = setFlag(config, 1, true);
    config = setFlag(config, 2, true);
    expect(variantPreviewCount(config)).toBe(2);
  });

  it("detects questionnaires at the top level and inside blocks", () => {
    expect(hasQuestionnaire(sample())).toBe(false);
    const topLevel = addStep(sample(), questionnaireElement("q", "https://s.example/q"));
    expect(hasQuestionnaire(topLevel)).toBe(true);
    const nested = addStep(
      sample(),
      blockElement(questionnaireElement("q", "https://s.example/q")),
    );
    expect(hasQuestionnaire(nested)).toBe(true);
  });
});
