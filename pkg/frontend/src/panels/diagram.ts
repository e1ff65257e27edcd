/** Sequence diagram viewer: fetches PlotSeries from the server on demand and
 * renders the channels client-side with wheel zoom and drag pan. */

import { Api } from "../api.js";
import {
  drawDiagram, fullWindow, panWindow, Polyline, seriesToPolylines, ViewWindow, zoomWindow,
} from "../diagram.js";
import { h, panel } from "../dom.js";
import { Editor } from "../state.js";
import { PlotSeries, Violation } from "../types.js";

export class DiagramPanel {
  el: HTMLElement;
  private canvas: HTMLCanvasElement;
  private info: HTMLElement;
  private series: PlotSeries | null = null;
  private view: ViewWindow = { t0: 0, t1: 1 };
  private dragX: number | null = null;

  /** Last rendered polylines (one per channel); exposed for tests. */
  lastPolylines: Polyline[] = [];
  onViolations: ((violations: Violation[]) => void) | null = null;

  constructor(private editor: Editor, private api: Api) {
    this.canvas = h("canvas", { width: 900, height: 360, class: "diagram-canvas" });
    this.info = h("span", { class: "diagram-info", dataset: { testid: "diagram-info" } });
    this.el = panel("Sequence diagram",
      h("div", { class: "diagram-controls" },
        h("button", { dataset: { testid: "refresh-diagram" },
                      onclick: () => void this.refresh() }, "Refresh"),
        h("button", { onclick: () => this.resetView() }, "Fit"),
        this.info,
      ),
      this.canvas,
    );
    this.canvas.addEventListener("wheel", (e) => {
      if (!this.series) return;
      e.preventDefault();
      const frac = e.offsetX / this.canvas.width;
      const center = this.view.t0 + frac * (this.view.t1 - this.view.t0);
      this.view = zoomWindow(this.view, center, e.deltaY > 0 ? 1.25 : 0.8);
      this.render();
    });
    this.canvas.addEventListener("mousedown", (e) => {
      this.dragX = e.offsetX;
    });
    this.canvas.addEventListener("mousemove", (e) => {
      if (this.dragX === null || !this.series) return;
      const dt = ((this.dragX - e.offsetX) / this.canvas.width) *
        (this.view.t1 - this.view.t0);
      this.view = panWindow(this.view, dt);
      this.dragX = e.offsetX;
      this.render();
    });
    this.canvas.addEventListener("mouseup", () => {
      this.dragX = null;
    });
  }

  async refresh(): Promise<PlotSeries> {
    const out = await this.api.plot(this.editor.doc);
    this.series = out.series;
    this.view = fullWindow(out.series);
    this.info.textContent =
      `${out.series.t.length} points, ${(out.total_duration * 1e3).toFixed(2)} ms` +
      (out.violations.length ? `, ${out.violations.length} limit violation(s)` : "");
    this.onViolations?.(out.violations);
    this.render();
    return out.series;
  }

  resetView(): void {
    if (this.series) {
      this.view = fullWindow(this.series);
      this.render();
    }
  }

  private render(): void {
    if (!this.series) return;
    const ctx = this.canvas.getContext("2d");
    if (ctx) {
      this.lastPolylines = drawDiagram(ctx, this.series, this.view,
                                       this.canvas.width, this.canvas.height);
    } else {
      // headless: still compute the polylines the canvas would show
      this.lastPolylines = seriesToPolylines(this.series, this.view,
                                             this.canvas.width, this.canvas.height);
    }
  }
}
