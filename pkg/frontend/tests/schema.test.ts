import { describe, expect, it } from "vitest";

import { emptyDoc, expressionError, validateDoc } from "../src/schema.js";
import { defaultBlock } from "../src/types.js";

describe("expression checker (mirrors the server grammar)", () => {
  it.each([
    "A+B", "-2^2", "1.5e3", ".5", "sin(x)*x", "min(1, 2)",
    "(rep - N/2) * dky / (gamma * tau)", "180*(rep - 2*floor(rep/2))",
  ])("accepts %s", (src) => {
    expect(expressionError(src)).toBeNull();
  });

  it.each(["", "  ", "1+", "(1+2", "1..2", "f(1,)", ")", "@", "a b"])(
    "rejects %s", (src) => {
      expect(expressionError(src)).not.toBeNull();
    });

  it("reports the offset", () => {
    expect(expressionError("1+")).toContain("offset 2");
  });
});

describe("document validation", () => {
  it("empty document is valid", () => {
    expect(validateDoc(emptyDoc())).toEqual([]);
  });

  it("flags unknown fields with a path", () => {
    const doc = emptyDoc();
    doc.blocks.push({ ...defaultBlock("delay"), color: "red" });
    const errors = validateDoc(doc);
    expect(errors.some((e) => e.includes(".blocks[0].color"))).toBe(true);
  });

  it("flags missing required fields", () => {
    const doc = emptyDoc();
    const block = defaultBlock("readout");
    delete (block as Record<string, string>).samples;
    doc.blocks.push(block);
    expect(validateDoc(doc).some((e) => e.includes("samples"))).toBe(true);
  });

  it("flags bad enum values", () => {
    const doc = emptyDoc();
    doc.blocks.push({ ...defaultBlock("readout"), read_grad_axis: "w" });
    expect(validateDoc(doc).some((e) => e.includes("read_grad_axis"))).toBe(true);
  });

  it("flags reserved variable names", () => {
    const doc = emptyDoc();
    doc.variables["rep"] = "1";
    expect(validateDoc(doc).some((e) => e.includes("reserved"))).toBe(true);
  });

  it("flags group-counter shadowing", () => {
    const doc = emptyDoc();
    doc.groups.push({ name: "TR", blocks: [] });
    doc.variables["rep_TR"] = "1";
    expect(validateDoc(doc).some((e) => e.includes("reserved"))).toBe(true);
  });

  it("flags references to undefined groups", () => {
    const doc = emptyDoc();
    doc.blocks.push(defaultBlock("group_ref"));
    expect(validateDoc(doc).some((e) => e.includes("group"))).toBe(true);
  });

  it("flags cyclic groups", () => {
    const doc = emptyDoc();
    doc.groups.push(
      { name: "a", blocks: [{ type: "group_ref", group: "b", repetitions: "1" }] },
      { name: "b", blocks: [{ type: "group_ref", group: "a", repetitions: "1" }] });
    expect(validateDoc(doc).some((e) => e.includes("cyclic"))).toBe(true);
  });

  it("flags non-positive scanner limits", () => {
    const doc = emptyDoc();
    doc.scanner.max_grad = 0;
    expect(validateDoc(doc).some((e) => e.includes("max_grad"))).toBe(true);
  });
});
