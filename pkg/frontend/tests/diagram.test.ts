import { describe, expect, it } from "vitest";

import {
  CHANNEL_ORDER, fullWindow, panWindow, seriesToPolylines, zoomWindow,
} from "../src/diagram.js";
import { PlotSeries } from "../src/types.js";

function series(n = 11): PlotSeries {
  const t = Array.from({ length: n }, (_, i) => i * 1e-3);
  const ramp = t.map((x) => x * 10);
  return {
    t,
    rf_mag: ramp,
    rf_phase: t.map(() => 0),
    gx: t.map((x) => Math.sin(x * 1000)),
    gy: ramp,
    gz: t.map(() => 0.5),
    adc_mask: t.map((_, i) => (i >= 5 ? 1 : 0)),
  };
}

describe("diagram geometry", () => {
  it("produces one polyline per channel", () => {
    const s = series();
    const lines = seriesToPolylines(s, fullWindow(s), 800, 300);
    expect(lines.map((l) => l.name)).toEqual(CHANNEL_ORDER.map((c) => c.key));
    for (const line of lines) expect(line.points).toHaveLength(s.t.length);
  });

  it("maps time to x linearly across the view", () => {
    const s = series();
    const [first] = seriesToPolylines(s, fullWindow(s), 1000, 300);
    expect(first.points[0][0]).toBeCloseTo(0, 6);
    expect(first.points.at(-1)![0]).toBeCloseTo(1000, 6);
    const mid = first.points[5][0];
    expect(mid).toBeCloseTo(500, 6);
  });

  it("keeps lanes stacked and inside the canvas", () => {
    const s = series();
    const lines = seriesToPolylines(s, fullWindow(s), 800, 360);
    const laneH = 360 / CHANNEL_ORDER.length;
    lines.forEach((line, lane) => {
      for (const [, y] of line.points) {
        expect(y).toBeGreaterThanOrEqual(lane * laneH - 1e-9);
        expect(y).toBeLessThanOrEqual((lane + 1) * laneH + 1e-9);
      }
    });
  });

  it("zoom narrows the window about the chosen center", () => {
    const view = { t0: 0, t1: 10 };
    const zoomed = zoomWindow(view, 5, 0.5);
    expect(zoomed).toEqual({ t0: 2.5, t1: 7.5 });
    const out = zoomWindow(zoomed, 5, 2);
    expect(out.t0).toBeCloseTo(0, 9);
    expect(out.t1).toBeCloseTo(10, 9);
  });

  it("pan shifts the window", () => {
    expect(panWindow({ t0: 1, t1: 3 }, 0.5)).toEqual({ t0: 1.5, t1: 3.5 });
  });

  it("zoomed view culls samples outside the window (plus guards)", () => {
    const s = series(101);
    const view = { t0: 0.04, t1: 0.06 };
    const lines = seriesToPolylines(s, view, 500, 300);
    expect(lines[0].points.length).toBeLessThan(30);
    expect(lines[0].points.length).toBeGreaterThan(10);
  });

  it("empty series yields empty polylines", () => {
    const empty: PlotSeries = { t: [], rf_mag: [], rf_phase: [], gx: [], gy: [],
                                gz: [], adc_mask: [] };
    const lines = seriesToPolylines(empty, { t0: 0, t1: 1 }, 100, 100);
    expect(lines.every((l) => l.points.length === 0)).toBe(true);
  });
});
