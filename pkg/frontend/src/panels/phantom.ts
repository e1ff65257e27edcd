/** Phantom viewer: orthogonal slice browsing with the sequence's selected
 * slice overlaid on the matching plane (from /api/slice_preview). */

import { Api } from "../api.js";
import { h, panel } from "../dom.js";
import { blitImage, toRgba } from "../image.js";
import { Editor } from "../state.js";
import { SlicePlane } from "../types.js";

const PLANES = ["axial", "coronal", "sagittal"] as const;
const PLANE_AXIS: Record<string, string> = { axial: "z", coronal: "y", sagittal: "x" };

export class PhantomPanel {
  el: HTMLElement;
  private planeSelect: HTMLSelectElement;
  private indexInput: HTMLInputElement;
  private phantomSelect: HTMLSelectElement;
  private canvas: HTMLCanvasElement;
  private overlayInfo: HTMLElement;
  private dims: number[] | null = null;
  slicePlane: SlicePlane | null = null;

  constructor(private editor: Editor, private api: Api) {
    this.phantomSelect = h("select", {
      onchange: () => void this.show(),
    });
    this.planeSelect = h("select", { onchange: () => void this.show() },
      ...PLANES.map((p) => h("option", { value: p }, p)));
    this.indexInput = h("input", {
      type: "number", value: "0", min: "0",
      onchange: () => void this.show(),
    });
    this.canvas = h("canvas", { width: 220, height: 220, class: "phantom-canvas" });
    this.overlayInfo = h("span", { class: "hint", dataset: { testid: "slice-overlay" } });
    this.el = panel("Phantom viewer",
      h("div", { class: "phantom-controls" },
        this.phantomSelect, this.planeSelect, this.indexInput,
        h("button", { onclick: () => void this.updateSlicePreview() }, "Show sequence slice"),
      ),
      this.canvas, this.overlayInfo,
    );
  }

  async loadPhantoms(): Promise<void> {
    const phantoms = await this.api.phantoms();
    for (const p of phantoms) {
      this.phantomSelect.append(h("option", { value: p.id, dataset: {
        dims: JSON.stringify(p.grid_dims ?? []) } }, p.id));
    }
    await this.show();
  }

  async show(): Promise<void> {
    const id = this.phantomSelect.value;
    if (!id) return;
    const slice = await this.api.phantomSlice(
      id, this.planeSelect.value, Number(this.indexInput.value));
    const [rows, cols] = slice.shape;
    blitImage(this.canvas, toRgba(slice.data, cols, rows), cols, rows);
  }

  /** Fetch the slice selected by the current sequence and describe/overlay it. */
  async updateSlicePreview(): Promise<SlicePlane | null> {
    const out = await this.api.slicePreview(this.editor.doc);
    this.slicePlane = out.plane;
    if (!out.plane) {
      this.overlayInfo.textContent = "sequence selects no slice";
    } else {
      const matching = PLANE_AXIS[this.planeSelect.value] === out.plane.axis;
      this.overlayInfo.textContent =
        `slice on ${out.plane.axis}: center ${(out.plane.center_offset * 1e3).toFixed(1)} mm, ` +
        `thickness ${(out.plane.thickness * 1e3).toFixed(1)} mm` +
        (matching ? " (within this view)" : "");
    }
    return out.plane;
  }
}
