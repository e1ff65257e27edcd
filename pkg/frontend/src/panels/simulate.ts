/** Simulation launcher with progress display and the result image viewer.
 * The displayed pixel buffer is computed from the downloaded result file; the
 * UI does no Fourier or Bloch math. */

import { Api, pollJob } from "../api.js";
import { clear, h, panel } from "../dom.js";
import { blitImage, toRgba } from "../image.js";
import { parseResult, ResultFile } from "../resultfile.js";
import { Editor } from "../state.js";
import { JobStatus } from "../types.js";

export class SimulatePanel {
  el: HTMLElement;
  private phantomSelect: HTMLSelectElement;
  private progressBar: HTMLProgressElement;
  private statusLine: HTMLElement;
  private canvas: HTMLCanvasElement;
  private cancelBtn: HTMLButtonElement;
  private currentJob: string | null = null;

  /** Exposed for tests and the results panel: last rendered image buffer. */
  lastPixels: Uint8ClampedArray | null = null;
  lastResult: ResultFile | null = null;
  lastProgress: number[] = [];
  onFinished: ((status: JobStatus) => void) | null = null;

  constructor(private editor: Editor, private api: Api) {
    this.phantomSelect = h("select", { dataset: { testid: "phantom-select" } });
    this.progressBar = h("progress", { max: "1", value: "0" });
    this.statusLine = h("span", { class: "sim-status", dataset: { testid: "sim-status" } }, "idle");
    this.canvas = h("canvas", { width: 256, height: 256, class: "result-canvas" });
    this.cancelBtn = h("button", {
      disabled: true,
      onclick: () => {
        if (this.currentJob) void this.api.cancelJob(this.currentJob);
      },
    }, "Cancel");
    this.el = panel("Phantom & simulation",
      h("div", { class: "sim-controls" },
        this.phantomSelect,
        h("button", { dataset: { testid: "simulate" }, onclick: () => void this.launch() },
          "Simulate"),
        this.cancelBtn,
      ),
      h("div", { class: "sim-progress" }, this.progressBar, this.statusLine),
      this.canvas,
    );
  }

  async loadPhantoms(): Promise<void> {
    const phantoms = await this.api.phantoms();
    clear(this.phantomSelect);
    for (const p of phantoms) {
      this.phantomSelect.append(h("option", { value: p.id },
        `${p.id} (${p.n_spins} spins)`));
    }
  }

  async launch(phantomId?: string): Promise<JobStatus> {
    const phantom = phantomId ?? this.phantomSelect.value;
    this.lastProgress = [];
    this.statusLine.textContent = "submitting";
    const jobId = await this.api.simulate(this.editor.doc, phantom);
    this.currentJob = jobId;
    this.cancelBtn.disabled = false;
    const final = await pollJob(this.api, jobId, (s) => {
      this.lastProgress.push(s.progress);
      this.progressBar.value = s.progress;
      this.statusLine.textContent = `${s.state} ${(s.progress * 100).toFixed(0)}%`;
    });
    this.cancelBtn.disabled = true;
    this.currentJob = null;
    if (final.state === "done") {
      const buffer = await this.api.jobResult(jobId);
      this.showResult(buffer);
      this.statusLine.textContent = "done";
    } else {
      this.statusLine.textContent = final.state + (final.error ? `: ${final.error}` : "");
    }
    this.onFinished?.(final);
    return final;
  }

  /** Parse result bytes and render the magnitude image. */
  showResult(buffer: ArrayBuffer): ResultFile {
    const result = parseResult(buffer);
    const [rows, cols] = result.header.image_shape;
    this.lastResult = result;
    this.lastPixels = toRgba(result.magnitude, cols, rows);
    blitImage(this.canvas, this.lastPixels, cols, rows);
    return result;
  }
}
