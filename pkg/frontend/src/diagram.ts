/** Sequence diagram rendering: pure series-to-polyline mapping plus a canvas
 * painter with zoom/pan.  All values come from the server's PlotSeries. */

import { PlotSeries } from "./types.js";

export interface ViewWindow {
  t0: number;
  t1: number;
}

export interface ChannelLane {
  name: string;
  values: number[];
  color: string;
}

export const CHANNEL_ORDER: { key: keyof PlotSeries; label: string; color: string }[] = [
  { key: "rf_mag", label: "|RF|", color: "#d33" },
  { key: "rf_phase", label: "RF phase", color: "#d93" },
  { key: "gx", label: "Gx", color: "#2a7" },
  { key: "gy", label: "Gy", color: "#27a" },
  { key: "gz", label: "Gz", color: "#72c" },
  { key: "adc_mask", label: "ADC", color: "#888" },
];

export interface Polyline {
  name: string;
  points: [number, number][]; // pixel coordinates
  color: string;
}

/** Zoom about a time point: factor < 1 zooms in. */
export function zoomWindow(view: ViewWindow, center: number, factor: number): ViewWindow {
  const t0 = center - (center - view.t0) * factor;
  const t1 = center + (view.t1 - center) * factor;
  return t1 - t0 > 1e-9 ? { t0, t1 } : view;
}

export function panWindow(view: ViewWindow, dt: number): ViewWindow {
  return { t0: view.t0 + dt, t1: view.t1 + dt };
}

export function fullWindow(series: PlotSeries): ViewWindow {
  const n = series.t.length;
  return n ? { t0: series.t[0], t1: series.t[n - 1] } : { t0: 0, t1: 1 };
}

/** Map each channel to pixel-space polylines inside width x height, stacking
 * one lane per channel.  Only samples inside the view window are kept (plus
 * one point on each side so lines continue off-screen). */
export function seriesToPolylines(series: PlotSeries, view: ViewWindow,
                                  width: number, height: number): Polyline[] {
  const n = series.t.length;
  const lanes = CHANNEL_ORDER.length;
  const laneH = height / lanes;
  const out: Polyline[] = [];
  if (!n || view.t1 <= view.t0) {
    return CHANNEL_ORDER.map((c) => ({ name: c.key, points: [], color: c.color }));
  }
  let lo = series.t.findIndex((t) => t >= view.t0);
  if (lo < 0) lo = n;
  lo = Math.max(0, lo - 1);
  let hi = n - 1;
  while (hi > 0 && series.t[hi] > view.t1) hi--;
  hi = Math.min(n - 1, hi + 1);

  CHANNEL_ORDER.forEach((chan, lane) => {
    const values = series[chan.key] as number[];
    let vmax = 0;
    for (let i = lo; i <= hi; i++) vmax = Math.max(vmax, Math.abs(values[i]));
    if (vmax === 0) vmax = 1;
    const yMid = lane * laneH + laneH / 2;
    const yScale = (laneH / 2) * 0.85;
    const points: [number, number][] = [];
    for (let i = lo; i <= hi; i++) {
      const x = ((series.t[i] - view.t0) / (view.t1 - view.t0)) * width;
      const y = yMid - (values[i] / vmax) * yScale;
      points.push([x, y]);
    }
    out.push({ name: chan.key, points, color: chan.color });
  });
  return out;
}

export function drawDiagram(ctx: CanvasRenderingContext2D, series: PlotSeries,
                            view: ViewWindow, width: number, height: number): Polyline[] {
  const polylines = seriesToPolylines(series, view, width, height);
  ctx.clearRect(0, 0, width, height);
  const laneH = height / CHANNEL_ORDER.length;
  ctx.strokeStyle = "#ddd";
  ctx.lineWidth = 1;
  CHANNEL_ORDER.forEach((chan, lane) => {
    const yMid = lane * laneH + laneH / 2;
    ctx.beginPath();
    ctx.moveTo(0, yMid);
    ctx.lineTo(width, yMid);
    ctx.stroke();
    ctx.fillStyle = "#666";
    ctx.font = "11px sans-serif";
    ctx.fillText(chan.label, 4, lane * laneH + 12);
  });
  for (const line of polylines) {
    if (line.points.length < 2) continue;
    ctx.strokeStyle = line.color;
    ctx.lineWidth = 1.2;
    ctx.beginPath();
    ctx.moveTo(line.points[0][0], line.points[0][1]);
    for (const [x, y] of line.points.slice(1)) ctx.lineTo(x, y);
    ctx.stroke();
  }
  return polylines;
}
