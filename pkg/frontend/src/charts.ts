/**
 * Small SVG line charts.
 *
 * Pure geometry (extents, ticks, polyline point strings) is separated
 * from DOM construction so the math is testable without a browser.
 * Charts plot final-iteration annual values, either one line per
 * region or a single national total.
 */

import type { Trace } from "./state";
import { annualValues } from "./state";

export interface ChartSeries {
  label: string;
  points: [number, number][];
}

export type RegionMode = "national" | "regional";

/** Sum the traces of one series across regions, year by year. */
export function nationalTotal(traces: readonly Trace[]): [number, number][] {
  const sums = new Map<number, number>();
  for (const trace of traces) {
    for (const [year, value] of annualValues(trace)) {
      sums.set(year, (sums.get(year) ?? 0) + value);
    }
  }
  return [...sums.entries()].sort((a, b) => a[0] - b[0]);
}

export function chartSeries(
  traces: readonly Trace[],
  mode: RegionMode,
): ChartSeries[] {
  if (mode === "national") {
    return [{ label: "national", points: nationalTotal(traces) }];
  }
  return traces.map((t) => ({
    label: t.objectName,
    points: annualValues(t),
  }));
}

export interface Extent {
  min: number;
  max: number;
}

/** Extent of all y values, widened so a flat line still has height. */
export function valueExtent(series: readonly ChartSeries[]): Extent {
  let min = Infinity;
  let max = -Infinity;
  for (const s of series) {
    for (const [, v] of s.points) {
      if (v < min) min = v;
      if (v > max) max = v;
    }
  }
  if (min > max) return { min: 0, max: 1 };
  if (min === max) {
    const pad = Math.abs(min) || 1;
    return { min: min - pad / 2, max: max + pad / 2 };
  }
  return { min, max };
}

export function yearExtent(series: readonly ChartSeries[]): Extent {
  let min = Infinity;
  let max = -Infinity;
  for (const s of series) {
    for (const [y] of s.points) {
      if (y < min) min = y;
      if (y > max) max = y;
    }
  }
  if (min > max) return { min: 0, max: 1 };
  if (min === max) return { min: min - 1, max: max + 1 };
  return { min, max };
}

/** Round tick positions covering [min, max], at most n+1 of them. */
export function niceTicks(min: number, max: number, n: number): number[] {
  if (!(max > min) || n < 1) return [min];
  const raw = (max - min) / n;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = (norm <= 1 ? 1 : norm <= 2 ? 2 : norm <= 5 ? 5 : 10) * mag;
  const ticks: number[] = [];
  for (let t = Math.ceil(min / step) * step; t <= max + step / 1e6; t += step) {
    ticks.push(Math.abs(t) < step / 1e6 ? 0 : t);
  }
  return ticks;
}

export interface Frame {
  width: number;
  height: number;
  pad: number;
}

export const DEFAULT_FRAME: Frame = { width: 420, height: 200, pad: 34 };

export function xPixel(year: number, years: Extent, frame: Frame): number {
  const span = years.max - years.min || 1;
  return frame.pad + ((year - years.min) / span) * (frame.width - 2 * frame.pad);
}

export function yPixel(value: number, values: Extent, frame: Frame): number {
  const span = values.max - values.min || 1;
  const unit = (value - values.min) / span;
  return frame.height - frame.pad - unit * (frame.height - 2 * frame.pad);
}

/** The points attribute for one polyline. */
export function polylinePoints(
  points: readonly [number, number][],
  years: Extent,
  values: Extent,
  frame: Frame,
): string {
  return points
    .map(([y, v]) =>
      `${xPixel(y, years, frame).toFixed(1)},${yPixel(v, values, frame).toFixed(1)}`,
    )
    .join(" ");
}

export function formatTick(value: number): string {
  const abs = Math.abs(value);
  if (abs >= 1e9) return `${(value / 1e9).toFixed(1)}B`;
  if (abs >= 1e6) return `${(value / 1e6).toFixed(1)}M`;
  if (abs >= 1e4) return `${(value / 1e3).toFixed(0)}k`;
  if (abs >= 100 || Number.isInteger(value)) return value.toFixed(0);
  return value.toPrecision(3);
}

const SVG_NS = "http://www.w3.org/2000/svg";
const PALETTE = ["#2563eb", "#dc2626", "#16a34a", "#9333ea", "#ea580c"];

function svgEl(tag: string, attrs: Record<string, string>): SVGElement {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, v);
  return el;
}

/** Build a complete chart: frame, ticks, one polyline per series. */
export function renderChart(
  title: string,
  units: string,
  series: readonly ChartSeries[],
  frame: Frame = DEFAULT_FRAME,
): SVGElement {
  const years = yearExtent(series);
  const values = valueExtent(series);
  const svg = svgEl("svg", {
    viewBox: `0 0 ${frame.width} ${frame.height}`,
    class: "chart",
    role: "img",
  });
  const caption = svgEl("text", {
    x: String(frame.pad),
    y: "14",
    class: "chart-title",
  });
  caption.textContent = units ? `${title} (${units})` : title;
  svg.appendChild(caption);
  for (const tick of niceTicks(values.min, values.max, 4)) {
    const py = yPixel(tick, values, frame);
    svg.appendChild(
      svgEl("line", {
        x1: String(frame.pad),
        x2: String(frame.width - frame.pad),
        y1: py.toFixed(1),
        y2: py.toFixed(1),
        class: "chart-grid",
      }),
    );
    const label = svgEl("text", {
      x: String(frame.pad - 4),
      y: (py + 3).toFixed(1),
      class: "chart-tick",
      "text-anchor": "end",
    });
    label.textContent = formatTick(tick);
    svg.appendChild(label);
  }
  for (const tick of niceTicks(years.min, years.max, 4)) {
    const px = xPixel(tick, years, frame);
    const label = svgEl("text", {
      x: px.toFixed(1),
      y: String(frame.height - frame.pad + 14),
      class: "chart-tick",
      "text-anchor": "middle",
    });
    label.textContent = String(Math.round(tick));
    svg.appendChild(label);
  }
  series.forEach((s, i) => {
    if (!s.points.length) return;
    svg.appendChild(
      svgEl("polyline", {
        points: polylinePoints(s.points, years, values, frame),
        fill: "none",
        stroke: PALETTE[i % PALETTE.length] ?? "#334155",
        "stroke-width": "1.6",
      }),
    );
    const [lastYear, lastValue] = s.points[s.points.length - 1] ?? [0, 0];
    if (series.length > 1) {
      const tag = svgEl("text", {
        x: (xPixel(lastYear, years, frame) + 3).toFixed(1),
        y: yPixel(lastValue, values, frame).toFixed(1),
        class: "chart-tick",
        fill: PALETTE[i % PALETTE.length] ?? "#334155",
      });
      tag.textContent = s.label;
      svg.appendChild(tag);
    }
  });
  return svg;
}
