/** Sequence editor panels: block list (drag-and-drop reorder), block palette,
 * and group management. */

import { clear, h, panel } from "../dom.js";
import { Editor } from "../state.js";
import { BLOCK_LABELS, BLOCK_FIELDS, Block, BlockType } from "../types.js";

function blockSummary(block: Block): string {
  switch (block.type) {
    case "rf_pulse":
      return `${block.flip_angle}° ${block.shape ?? "hard"}`;
    case "gradient":
      return ["gx", "gy", "gz"].filter((a) => block[a] && block[a] !== "0")
        .map((a) => `${a}=${block[a]}`).join(" ") || "zero";
    case "delay":
      return block.duration;
    case "readout":
      return `${block.samples} samples on ${block.read_grad_axis}`;
    case "epi_acq":
      return `${block.n_lines}×${block.samples_per_line}`;
    case "group_ref":
      return `${block.group} × ${block.repetitions}`;
  }
}

export class SequencePanel {
  el: HTMLElement;
  private list: HTMLElement;
  private dragFrom: number | null = null;

  constructor(private editor: Editor, private container: string | null = null) {
    this.list = h("div", { class: "block-list", dataset: { testid: "sequence-list" } });
    this.el = panel("Sequence", this.list);
    editor.subscribe(() => this.render());
    this.render();
  }

  private blocks(): Block[] {
    if (this.container === null) return this.editor.doc.blocks;
    return this.editor.doc.groups.find((g) => g.name === this.container)?.blocks ?? [];
  }

  render(): void {
    clear(this.list);
    const selected = this.editor.selection;
    this.blocks().forEach((block, index) => {
      const isSelected = selected != null && selected.group === this.container &&
        selected.index === index;
      const chip = h("div", {
        class: `block-chip kind-${block.type}` + (isSelected ? " selected" : ""),
        draggable: true,
        dataset: { index: String(index) },
        onclick: () => this.editor.select({ group: this.container, index }),
        ondragstart: (e: DragEvent) => {
          this.dragFrom = index;
          e.dataTransfer?.setData("text/plain", String(index));
        },
        ondragover: (e: DragEvent) => e.preventDefault(),
        ondrop: (e: DragEvent) => {
          e.preventDefault();
          if (this.dragFrom !== null && this.dragFrom !== index) {
            this.editor.moveBlock(this.container, this.dragFrom, index);
          }
          this.dragFrom = null;
        },
      },
        h("span", { class: "block-kind" }, BLOCK_LABELS[block.type]),
        h("span", { class: "block-summary" }, blockSummary(block)),
        h("button", {
          class: "block-remove", title: "Delete block",
          onclick: (e: Event) => {
            e.stopPropagation();
            this.editor.removeBlock({ group: this.container, index });
          },
        }, "×"),
      );
      this.list.append(chip);
    });
    if (!this.blocks().length) {
      this.list.append(h("p", { class: "hint" }, "Add blocks from the palette."));
    }
  }
}

export class PalettePanel {
  el: HTMLElement;

  constructor(editor: Editor) {
    const kinds = Object.keys(BLOCK_FIELDS) as BlockType[];
    this.el = panel("Blocks",
      h("div", { class: "palette" },
        ...kinds.filter((k) => k !== "group_ref").map((kind) =>
          h("button", {
            class: "palette-btn",
            dataset: { kind },
            onclick: () => editor.insertBlock(kind),
          }, BLOCK_LABELS[kind])),
      ),
    );
  }
}

export class GroupsPanel {
  el: HTMLElement;
  private body: HTMLElement;

  constructor(private editor: Editor) {
    this.body = h("div", {});
    this.el = panel("Groups", this.body);
    editor.subscribe(() => this.render());
    this.render();
  }

  render(): void {
    clear(this.body);
    for (const g of this.editor.doc.groups) {
      this.body.append(h("div", { class: "group-row" },
        h("span", { class: "group-name" }, `${g.name} (${g.blocks.length} blocks)`),
        h("button", {
          onclick: () => this.editor.insertBlock("group_ref"),
          title: "Insert a reference, then pick the group in the parameters panel",
        }, "insert ref"),
      ));
    }
    const nameInput = h("input", { placeholder: "group name", size: 10 });
    const startInput = h("input", { type: "number", value: "0", min: "0", size: 3,
                                    title: "first block index" });
    const countInput = h("input", { type: "number", value: "1", min: "1", size: 3,
                                    title: "number of blocks" });
    const repsInput = h("input", { placeholder: "repetitions", value: "1", size: 8 });
    this.body.append(h("div", { class: "group-make" },
      nameInput, startInput, countInput, repsInput,
      h("button", {
        dataset: { testid: "make-group" },
        onclick: () => {
          this.editor.wrapIntoGroup(
            Number(startInput.value), Number(countInput.value),
            nameInput.value.trim(), repsInput.value.trim() || "1");
        },
      }, "wrap into group"),
    ));
  }
}
