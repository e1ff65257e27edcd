import { describe, expect, it } from "vitest";

import { cloneDoc, emptyDoc, validateDoc } from "../src/schema.js";
import { EditError, Editor, UNDO_DEPTH } from "../src/state.js";

function editorWithBlocks(): Editor {
  const ed = new Editor();
  ed.insertBlock("rf_pulse");
  ed.insertBlock("gradient");
  ed.insertBlock("delay");
  return ed;
}

describe("editor state", () => {
  it("inserting from the palette appends a schema-valid block", () => {
    const ed = new Editor();
    ed.insertBlock("rf_pulse");
    expect(ed.doc.blocks).toHaveLength(1);
    expect(ed.doc.blocks[0].type).toBe("rf_pulse");
    expect(validateDoc(ed.doc)).toEqual([]);
    expect(ed.dirty).toBe(true);
  });

  it("every edit keeps the document schema-valid", () => {
    const ed = editorWithBlocks();
    ed.updateField({ group: null, index: 0 }, "flip_angle", "A+B");
    ed.setVariable("A", "45");
    ed.setVariable("B", "30");
    ed.setScannerField("b0", 1.5);
    ed.setDescription("demo");
    expect(validateDoc(ed.doc)).toEqual([]);
  });

  it("rejects invalid edits atomically", () => {
    const ed = editorWithBlocks();
    const before = JSON.stringify(ed.doc);
    expect(() => ed.updateField({ group: null, index: 0 }, "flip_angle", "1+")).toThrow(EditError);
    expect(() => ed.updateField({ group: null, index: 0 }, "shape", "square")).toThrow(EditError);
    expect(() => ed.setVariable("gamma", "1")).toThrow(EditError);
    expect(JSON.stringify(ed.doc)).toBe(before);
  });

  it("drag reorder moves block 3 before block 1", () => {
    const ed = editorWithBlocks();
    ed.moveBlock(null, 2, 0);
    expect(ed.doc.blocks.map((b) => b.type)).toEqual(["delay", "rf_pulse", "gradient"]);
  });

  it("undo replays to the identical document", () => {
    const ed = editorWithBlocks();
    const snapshots = [JSON.stringify(ed.doc)];
    ed.updateField({ group: null, index: 0 }, "flip_angle", "120");
    snapshots.push(JSON.stringify(ed.doc));
    ed.moveBlock(null, 0, 2);
    snapshots.push(JSON.stringify(ed.doc));
    ed.removeBlock({ group: null, index: 0 });
    expect(ed.canUndo()).toBe(true);
    ed.undo();
    expect(JSON.stringify(ed.doc)).toBe(snapshots[2]);
    ed.undo();
    expect(JSON.stringify(ed.doc)).toBe(snapshots[1]);
    ed.undo();
    expect(JSON.stringify(ed.doc)).toBe(snapshots[0]);
  });

  it("redo restores undone edits exactly", () => {
    const ed = editorWithBlocks();
    ed.updateField({ group: null, index: 1 }, "gx", "0.01");
    const after = JSON.stringify(ed.doc);
    ed.undo();
    expect(ed.canRedo()).toBe(true);
    ed.redo();
    expect(JSON.stringify(ed.doc)).toBe(after);
  });

  it("undo stack is bounded at depth 100", () => {
    const ed = new Editor();
    ed.insertBlock("delay");
    for (let i = 0; i < UNDO_DEPTH + 20; i++) {
      ed.updateField({ group: null, index: 0 }, "duration", `${i + 1}e-3`);
    }
    let undos = 0;
    while (ed.canUndo()) {
      ed.undo();
      undos++;
    }
    expect(undos).toBe(UNDO_DEPTH);
  });

  it("wrap selection into a group with repetition expression", () => {
    const ed = editorWithBlocks();
    ed.setVariable("N_matrix", "100");
    ed.wrapIntoGroup(0, 2, "TR", "N_matrix");
    expect(ed.doc.groups.map((g) => g.name)).toEqual(["TR"]);
    expect(ed.doc.groups[0].blocks.map((b) => b.type)).toEqual(["rf_pulse", "gradient"]);
    expect(ed.doc.blocks.map((b) => b.type)).toEqual(["group_ref", "delay"]);
    expect(ed.doc.blocks[0].repetitions).toBe("N_matrix");
    expect(validateDoc(ed.doc)).toEqual([]);
  });

  it("ungroup inlines the group blocks", () => {
    const ed = editorWithBlocks();
    ed.wrapIntoGroup(0, 2, "TR", "2");
    ed.ungroup(0);
    expect(ed.doc.blocks.map((b) => b.type)).toEqual(["rf_pulse", "gradient", "delay"]);
  });

  it("variable rename is not automatic: stale references stay", () => {
    const ed = new Editor();
    ed.setVariable("TE", "0.03");
    ed.insertBlock("delay");
    ed.updateField({ group: null, index: 0 }, "duration", "TE");
    // "rename" = delete + add under a new name; the block still says TE
    ed.removeVariable("TE");
    ed.setVariable("TE_ms", "0.03");
    expect(ed.doc.blocks[0].duration).toBe("TE");
    expect(validateDoc(ed.doc)).toEqual([]); // schema-valid; server flags the unknown name
  });

  it("loadDoc resets history and rejects invalid documents", () => {
    const ed = editorWithBlocks();
    const doc = cloneDoc(ed.doc);
    ed.loadDoc(doc);
    expect(ed.canUndo()).toBe(false);
    expect(ed.dirty).toBe(false);
    const bad = emptyDoc();
    (bad.scanner as { b0: number }).b0 = -1;
    expect(() => ed.loadDoc(bad)).toThrow(EditError);
  });

  it("group counters are accepted in group-scoped expressions", () => {
    const ed = new Editor();
    ed.insertBlock("gradient");
    ed.wrapIntoGroup(0, 1, "TR", "4");
    // editing inside the group referencing its counter stays schema-valid
    ed.updateField({ group: "TR", index: 0 }, "gy", "(rep - 2) * 0.001");
    expect(validateDoc(ed.doc)).toEqual([]);
  });
});
