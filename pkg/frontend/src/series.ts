/**
 * Mapping from input files + role tags to plottable series.
 *
 * Roles:
 *   sim:<M>   trajectory CSV (t,m,...) drawn as connected markers
 *   theory    solid curve (slow-flow output)
 *   approx    dashed curve (approximated theory)
 *   compare   annealctl compare.csv; expands into sim_m_M* marker series
 *             plus the theory_m and approx_m curves automatically
 */

import { CsvError, Table, column, parseCsv } from "./csv.js";

export type Role =
  | { kind: "sim"; M: number }
  | { kind: "theory" }
  | { kind: "approx" }
  | { kind: "compare" };

export type LineStyle = "markers" | "solid" | "dashed";

export interface Series {
  label: string;
  style: LineStyle;
  t: number[];
  m: number[];
}

export function parseRole(tag: string): Role {
  if (tag === "theory" || tag === "approx" || tag === "compare") {
    return { kind: tag };
  }
  const m = /^sim:(\d+)$/.exec(tag);
  if (m) {
    return { kind: "sim", M: parseInt(m[1], 10) };
  }
  throw new CsvError(`unknown role ${JSON.stringify(tag)}; expected sim:<M>, theory, approx or compare`);
}

function dropNan(t: number[], m: number[]): { t: number[]; m: number[] } {
  const tt: number[] = [];
  const mm: number[] = [];
  for (let i = 0; i < t.length; i++) {
    if (!Number.isNaN(m[i])) {
      tt.push(t[i]);
      mm.push(m[i]);
    }
  }
  return { t: tt, m: mm };
}

export function seriesFromTable(table: Table, role: Role, path: string, label?: string): Series[] {
  const t = column(table, "t", path);
  if (role.kind === "compare") {
    const out: Series[] = [];
    for (const col of table.columns) {
      const m = /^sim_m_M(\d+)$/.exec(col);
      if (m) {
        out.push({ label: `simulation M=${m[1]}`, style: "markers", t, m: column(table, col, path) });
      }
    }
    if (out.length === 0) {
      throw new CsvError(`${path}: compare file has no sim_m_M* columns`);
    }
    out.push({ label: "theory", style: "solid", t, m: column(table, "theory_m", path) });
    out.push({ label: "approx theory", style: "dashed", t, m: column(table, "approx_m", path) });
    return out;
  }
  const values = dropNan(t, column(table, "m", path));
  if (role.kind === "sim") {
    return [{ label: label ?? `simulation M=${role.M}`, style: "markers", ...values }];
  }
  if (role.kind === "theory") {
    return [{ label: label ?? "theory", style: "solid", ...values }];
  }
  return [{ label: label ?? "approx theory", style: "dashed", ...values }];
}

export function loadSeries(path: string, text: string, roleTag: string, label?: string): Series[] {
  return seriesFromTable(parseCsv(text, path), parseRole(roleTag), path, label);
}
