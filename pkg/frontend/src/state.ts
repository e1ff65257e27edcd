/** Editor state: the current document, selection, dirty flag and an undo/redo
 * stack of document snapshots (depth 100).  Every committed edit must leave the
 * document schema-valid; invalid edits are rejected atomically. */

import { cloneDoc, emptyDoc, validateDoc } from "./schema.js";
import { Block, BlockType, SequenceDoc, defaultBlock } from "./types.js";

export const UNDO_DEPTH = 100;

/** Address of a block: the top-level list or a named group's list. */
export interface BlockPath {
  group: string | null;
  index: number;
}

export class EditError extends Error {}

type Listener = () => void;

export class Editor {
  doc: SequenceDoc = emptyDoc();
  selection: BlockPath | null = null;
  dirty = false;

  private undoStack: string[] = [];
  private redoStack: string[] = [];
  private listeners = new Set<Listener>();

  subscribe(fn: Listener): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }

  private notify(): void {
    for (const fn of this.listeners) fn();
  }

  /** Replace the whole document (file load); resets history and selection. */
  loadDoc(doc: SequenceDoc): void {
    const errors = validateDoc(doc);
    if (errors.length) throw new EditError(`document is not schema-valid: ${errors[0]}`);
    this.doc = cloneDoc(doc);
    this.selection = null;
    this.dirty = false;
    this.undoStack = [];
    this.redoStack = [];
    this.notify();
  }

  newDoc(): void {
    this.loadDoc(emptyDoc());
  }

  /** Apply a mutation atomically: snapshot, mutate, validate, commit or roll back. */
  apply(mutate: (doc: SequenceDoc) => void): void {
    const snapshot = JSON.stringify(this.doc);
    const draft = cloneDoc(this.doc);
    mutate(draft);
    const errors = validateDoc(draft);
    if (errors.length) throw new EditError(errors[0]);
    this.undoStack.push(snapshot);
    if (this.undoStack.length > UNDO_DEPTH) this.undoStack.shift();
    this.redoStack = [];
    this.doc = draft;
    this.dirty = true;
    this.notify();
  }

  canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  canRedo(): boolean {
    return this.redoStack.length > 0;
  }

  undo(): void {
    const snapshot = this.undoStack.pop();
    if (snapshot === undefined) return;
    this.redoStack.push(JSON.stringify(this.doc));
    this.doc = JSON.parse(snapshot) as SequenceDoc;
    this.dirty = true;
    this.notify();
  }

  redo(): void {
    const snapshot = this.redoStack.pop();
    if (snapshot === undefined) return;
    this.undoStack.push(JSON.stringify(this.doc));
    this.doc = JSON.parse(snapshot) as SequenceDoc;
    this.dirty = true;
    this.notify();
  }

  // -- block addressing

  private containerOf(doc: SequenceDoc, group: string | null): Block[] {
    if (group === null) return doc.blocks;
    const g = doc.groups.find((x) => x.name === group);
    if (!g) throw new EditError(`no group '${group}'`);
    return g.blocks;
  }

  blockAt(path: BlockPath): Block | null {
    const list = this.containerOf(this.doc, path.group);
    return list[path.index] ?? null;
  }

  select(path: BlockPath | null): void {
    this.selection = path;
    this.notify();
  }

  // -- edits

  insertBlock(type: BlockType, at?: BlockPath): BlockPath {
    const target: BlockPath = at ?? { group: null, index: this.doc.blocks.length };
    this.apply((doc) => {
      const list = this.containerOf(doc, target.group);
      list.splice(Math.min(target.index, list.length), 0, defaultBlock(type));
    });
    this.selection = target;
    return target;
  }

  removeBlock(path: BlockPath): void {
    this.apply((doc) => {
      const list = this.containerOf(doc, path.group);
      if (!list[path.index]) throw new EditError("no block at that position");
      list.splice(path.index, 1);
    });
    if (this.selection && this.selection.group === path.group &&
        this.selection.index === path.index) {
      this.selection = null;
    }
  }

  /** Drag-and-drop reorder within one container: remove at from, insert at to. */
  moveBlock(group: string | null, from: number, to: number): void {
    this.apply((doc) => {
      const list = this.containerOf(doc, group);
      if (!list[from]) throw new EditError("no block at that position");
      const [block] = list.splice(from, 1);
      list.splice(Math.min(to, list.length), 0, block);
    });
  }

  updateField(path: BlockPath, field: string, value: string): void {
    this.apply((doc) => {
      const list = this.containerOf(doc, path.group);
      const block = list[path.index];
      if (!block) throw new EditError("no block at that position");
      block[field] = value;
    });
  }

  /** Wrap a run of top-level blocks into a new group and reference it in place. */
  wrapIntoGroup(start: number, count: number, name: string, repetitions = "1"): void {
    this.apply((doc) => {
      if (doc.groups.some((g) => g.name === name)) {
        throw new EditError(`group '${name}' already exists`);
      }
      const taken = doc.blocks.splice(start, count);
      if (!taken.length) throw new EditError("nothing to group");
      doc.groups.push({ name, blocks: taken });
      doc.blocks.splice(start, 0, { type: "group_ref", group: name,
                                    repetitions } as Block);
    });
  }

  /** Replace a group reference with one inline copy of the group's blocks. */
  ungroup(index: number): void {
    this.apply((doc) => {
      const ref = doc.blocks[index];
      if (!ref || ref.type !== "group_ref") throw new EditError("not a group reference");
      const g = doc.groups.find((x) => x.name === ref.group);
      if (!g) throw new EditError(`no group '${ref.group}'`);
      doc.blocks.splice(index, 1, ...g.blocks.map((b) => ({ ...b })));
    });
  }

  setGroupRepetitions(index: number, repetitions: string): void {
    this.updateField({ group: null, index }, "repetitions", repetitions);
  }

  // -- variables (rename intentionally breaks references; badges surface them)

  setVariable(name: string, expression: string): void {
    this.apply((doc) => {
      doc.variables[name] = expression;
    });
  }

  removeVariable(name: string): void {
    this.apply((doc) => {
      if (!(name in doc.variables)) throw new EditError(`no variable '${name}'`);
      delete doc.variables[name];
    });
  }

  setScannerField(field: keyof SequenceDoc["scanner"], value: number): void {
    this.apply((doc) => {
      doc.scanner[field] = value;
    });
  }

  setDescription(text: string): void {
    this.apply((doc) => {
      doc.description = text;
    });
  }
}
