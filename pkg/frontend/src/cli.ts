#!/usr/bin/env node
/**
 * plotkit: render annealctl CSV outputs into a deterministic SVG figure.
 *
 *   plotkit --spec plot.json
 *   plotkit compare.csv --out fig.svg                       (role defaults to compare)
 *   plotkit sim.csv slowflow.csv --roles sim:12,theory --out fig.svg
 */

import { readFileSync, writeFileSync } from "fs";

import { CsvError } from "./csv.js";
import { renderFigure } from "./figure.js";
import { PlotSpec, SpecError, buildPanels, parseSpec, specFromArgs } from "./spec.js";

interface Args {
  spec?: string;
  out: string;
  roles: string[];
  paths: string[];
}

function parseArgs(argv: string[]): Args {
  const args: Args = { out: "plot.svg", roles: [], paths: [] };
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (a === "--spec") {
      args.spec = argv[++i];
    } else if (a === "--out") {
      args.out = argv[++i];
    } else if (a === "--roles") {
      args.roles = (argv[++i] ?? "").split(",").filter((r) => r.length > 0);
    } else if (a.startsWith("--")) {
      throw new SpecError(`unknown option ${a}`);
    } else {
      args.paths.push(a);
    }
  }
  return args;
}

export function run(argv: string[]): number {
  let spec: PlotSpec;
  try {
    const args = parseArgs(argv);
    if (args.spec) {
      spec = parseSpec(readFileSync(args.spec, "utf-8"), args.spec);
    } else {
      const roles =
        args.roles.length === 0 && args.paths.length === 1 ? ["compare"] : args.roles;
      spec = specFromArgs(args.paths, roles, args.out);
    }
    const svg = renderFigure(buildPanels(spec), { axes: spec.axes });
    writeFileSync(spec.output, svg, "utf-8");
    console.log(`plotkit: wrote ${spec.output}`);
    return 0;
  } catch (err) {
    if (err instanceof CsvError || err instanceof SpecError) {
      console.error(`plotkit: ${err.message}`);
      return 1;
    }
    if ((err as NodeJS.ErrnoException).code === "ENOENT") {
      console.error(`plotkit: ${(err as Error).message}`);
      return 1;
    }
    throw err;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  process.exit(run(process.argv.slice(2)));
}
