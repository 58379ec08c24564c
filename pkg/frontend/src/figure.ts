/**
 * Deterministic SVG rendering: fixed layout, fixed palette, fixed number
 * formatting, no timestamps or random ids, so identical inputs produce
 * identical bytes.
 */

import { Series } from "./series.js";

export interface Panel {
  title?: string;
  series: Series[];
}

export interface Axes {
  t?: [number, number];
  m?: [number, number];
}

export interface FigureOptions {
  axes?: Axes;
  width?: number;
  height?: number;
}

const PANEL_W = 420;
const PANEL_H = 320;
const MARGIN = { left: 56, right: 16, top: 30, bottom: 42 };
const LEGEND_H = 22;

// colorblind-safe marker palette; theory curves stay black / light blue
const MARKER_COLORS = ["#e69f00", "#009e73", "#cc79a7", "#d55e00", "#0072b2", "#f0e442"];
const THEORY_COLOR = "#000000";
const APPROX_COLOR = "#56b4e9";

function fmt(x: number): string {
  if (!Number.isFinite(x)) return "0";
  const s = x.toPrecision(6);
  return s.includes(".") ? s.replace(/\.?0+$/, "").replace(/\.?0+e/, "e") : s;
}

function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (Number.isNaN(v)) continue;
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!(lo < hi)) {
    lo -= 0.5;
    hi += 0.5;
  }
  return [lo, hi];
}

function ticks(lo: number, hi: number, n = 5): number[] {
  const span = hi - lo;
  const raw = span / n;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = (norm >= 5 ? 5 : norm >= 2 ? 2 : 1) * mag;
  const out: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + 1e-12 * span; v += step) {
    out.push(Math.abs(v) < 1e-12 * span ? 0 : v);
  }
  return out;
}

class Scale {
  constructor(
    private lo: number,
    private hi: number,
    private a: number,
    private b: number,
  ) {}

  map(v: number): number {
    return this.a + ((v - this.lo) / (this.hi - this.lo)) * (this.b - this.a);
  }
}

function renderPanel(panel: Panel, axes: Axes, x0: number, y0: number): string {
  const allT = panel.series.flatMap((s) => s.t);
  const allM = panel.series.flatMap((s) => s.m);
  const [tLo, tHi] = axes.t ?? extent(allT);
  const [mLo, mHi] = axes.m ?? extent(allM);
  const sx = new Scale(tLo, tHi, x0 + MARGIN.left, x0 + PANEL_W - MARGIN.right);
  const sy = new Scale(mLo, mHi, y0 + PANEL_H - MARGIN.bottom, y0 + MARGIN.top);

  const parts: string[] = [];
  const axL = x0 + MARGIN.left;
  const axR = x0 + PANEL_W - MARGIN.right;
  const axT = y0 + MARGIN.top;
  const axB = y0 + PANEL_H - MARGIN.bottom;
  parts.push(
    `<rect x="${axL}" y="${axT}" width="${axR - axL}" height="${axB - axT}" fill="none" stroke="#333" stroke-width="1"/>`,
  );
  for (const tv of ticks(tLo, tHi)) {
    const px = fmt(sx.map(tv));
    parts.push(`<line x1="${px}" y1="${axB}" x2="${px}" y2="${axB + 4}" stroke="#333"/>`);
    parts.push(
      `<text x="${px}" y="${axB + 16}" font-size="11" text-anchor="middle" fill="#333">${fmt(tv)}</text>`,
    );
  }
  for (const mv of ticks(mLo, mHi)) {
    const py = fmt(sy.map(mv));
    parts.push(`<line x1="${axL - 4}" y1="${py}" x2="${axL}" y2="${py}" stroke="#333"/>`);
    parts.push(
      `<text x="${axL - 7}" y="${py}" font-size="11" text-anchor="end" dominant-baseline="middle" fill="#333">${fmt(mv)}</text>`,
    );
  }
  parts.push(
    `<text x="${fmt(x0 + PANEL_W / 2)}" y="${axB + 32}" font-size="12" text-anchor="middle" fill="#111">t</text>`,
  );
  parts.push(
    `<text x="${x0 + 14}" y="${fmt(y0 + PANEL_H / 2)}" font-size="12" text-anchor="middle" fill="#111" transform="rotate(-90 ${x0 + 14} ${fmt(y0 + PANEL_H / 2)})">m</text>`,
  );
  if (panel.title) {
    parts.push(
      `<text x="${fmt(x0 + PANEL_W / 2)}" y="${y0 + 18}" font-size="13" text-anchor="middle" fill="#111">${panel.title}</text>`,
    );
  }

  let markerIdx = 0;
  for (const s of panel.series) {
    const pts = s.t.map((tv, i) => `${fmt(sx.map(tv))},${fmt(sy.map(s.m[i]))}`);
    if (s.style === "markers") {
      const color = MARKER_COLORS[markerIdx % MARKER_COLORS.length];
      markerIdx += 1;
      parts.push(
        `<polyline points="${pts.join(" ")}" fill="none" stroke="${color}" stroke-width="1"/>`,
      );
      for (const p of pts) {
        const [px, py] = p.split(",");
        parts.push(`<circle cx="${px}" cy="${py}" r="2.2" fill="${color}"/>`);
      }
    } else {
      const color = s.style === "solid" ? THEORY_COLOR : APPROX_COLOR;
      const dash = s.style === "dashed" ? ' stroke-dasharray="6 3"' : "";
      parts.push(
        `<polyline points="${pts.join(" ")}" fill="none" stroke="${color}" stroke-width="1.8"${dash}/>`,
      );
    }
  }
  return parts.join("\n");
}

function renderLegend(panels: Panel[], width: number, y: number): string {
  const seen: { label: string; style: string; color: string }[] = [];
  for (const panel of panels) {
    let markerIdx = 0;
    for (const s of panel.series) {
      let color = s.style === "solid" ? THEORY_COLOR : APPROX_COLOR;
      if (s.style === "markers") {
        color = MARKER_COLORS[markerIdx % MARKER_COLORS.length];
        markerIdx += 1;
      }
      if (!seen.some((e) => e.label === s.label)) {
        seen.push({ label: s.label, style: s.style, color });
      }
    }
  }
  const parts: string[] = [];
  let x = 20;
  for (const e of seen) {
    if (e.style === "markers") {
      parts.push(`<circle cx="${x + 8}" cy="${y}" r="3" fill="${e.color}"/>`);
    } else {
      const dash = e.style === "dashed" ? ' stroke-dasharray="6 3"' : "";
      parts.push(
        `<line x1="${x}" y1="${y}" x2="${x + 16}" y2="${y}" stroke="${e.color}" stroke-width="2"${dash}/>`,
      );
    }
    parts.push(
      `<text x="${x + 22}" y="${y}" font-size="11" dominant-baseline="middle" fill="#111">${e.label}</text>`,
    );
    x += 30 + 7 * e.label.length;
  }
  return parts.join("\n");
}

export function renderFigure(panels: Panel[], options: FigureOptions = {}): string {
  if (panels.length === 0 || panels.every((p) => p.series.length === 0)) {
    throw new Error("nothing to plot: no series");
  }
  const width = options.width ?? PANEL_W * panels.length;
  const height = (options.height ?? PANEL_H) + LEGEND_H;
  const body = panels
    .map((p, i) => renderPanel(p, options.axes ?? {}, i * PANEL_W, 0))
    .join("\n");
  const legend = renderLegend(panels, width, height - LEGEND_H / 2 - 4);
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">\n` +
    `<rect width="${width}" height="${height}" fill="#ffffff"/>\n` +
    body +
    "\n" +
    legend +
    "\n</svg>\n"
  );
}
