/**
 * Plot specification: either a JSON file
 *
 *   {
 *     "inputs": [
 *       {"path": "out/fig1/compare.csv", "role": "compare", "panel": 0, "title": "h = 0.5"}
 *     ],
 *     "axes": {"t": [0, 1.5], "m": [0, 1]},
 *     "output": "fig1.svg"
 *   }
 *
 * or positional CSV paths with --roles r1,r2,... on the command line.
 */

import { readFileSync } from "fs";

import { Axes, Panel } from "./figure.js";
import { loadSeries } from "./series.js";

export interface PlotInput {
  path: string;
  role: string;
  label?: string;
  panel?: number;
  title?: string;
}

export interface PlotSpec {
  inputs: PlotInput[];
  axes?: Axes;
  output: string;
}

export class SpecError extends Error {}

export function parseSpec(text: string, path: string): PlotSpec {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    throw new SpecError(`${path}: invalid JSON: ${(err as Error).message}`);
  }
  const spec = raw as Partial<PlotSpec>;
  if (!Array.isArray(spec.inputs) || spec.inputs.length === 0) {
    throw new SpecError(`${path}: "inputs" must be a non-empty array`);
  }
  for (const input of spec.inputs) {
    if (typeof input.path !== "string" || typeof input.role !== "string") {
      throw new SpecError(`${path}: every input needs "path" and "role" strings`);
    }
  }
  if (typeof spec.output !== "string" || spec.output.length === 0) {
    throw new SpecError(`${path}: "output" (image path) is required`);
  }
  return spec as PlotSpec;
}

export function specFromArgs(paths: string[], roles: string[], output: string): PlotSpec {
  if (paths.length === 0) {
    throw new SpecError("no input CSVs given");
  }
  if (roles.length !== paths.length) {
    throw new SpecError(
      `got ${paths.length} input file(s) but ${roles.length} role(s); pass --roles r1,r2,...`,
    );
  }
  return {
    inputs: paths.map((path, i) => ({ path, role: roles[i] })),
    output,
  };
}

/** Load all inputs and group series into panels (default: one panel). */
export function buildPanels(spec: PlotSpec): Panel[] {
  const panels = new Map<number, Panel>();
  for (const input of spec.inputs) {
    const text = readFileSync(input.path, "utf-8");
    const series = loadSeries(input.path, text, input.role, input.label);
    const idx = input.panel ?? 0;
    const panel = panels.get(idx) ?? { title: input.title, series: [] };
    if (input.title && !panel.title) {
      panel.title = input.title;
    }
    panel.series.push(...series);
    panels.set(idx, panel);
  }
  return [...panels.entries()].sort((a, b) => a[0] - b[0]).map(([, p]) => p);
}
