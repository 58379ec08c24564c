/**
 * Strict reader for annealctl CSV files: mandatory header row, '.' decimals,
 * one numeric record per line.
 */

export interface Table {
  columns: string[];
  rows: number[][];
}

export class CsvError extends Error {}

export function parseCsv(text: string, path: string): Table {
  const lines = text.split("\n").filter((ln) => ln.length > 0);
  if (lines.length === 0) {
    throw new CsvError(`${path}: empty CSV`);
  }
  const columns = lines[0].split(",").map((c) => c.trim());
  if (columns.some((c) => c.length === 0)) {
    throw new CsvError(`${path}: malformed header ${JSON.stringify(lines[0])}`);
  }
  if (lines.length === 1) {
    throw new CsvError(`${path}: header only, no data rows`);
  }
  const rows: number[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== columns.length) {
      throw new CsvError(
        `${path}: row ${i + 1} has ${cells.length} fields, header has ${columns.length}`,
      );
    }
    const row = cells.map(Number);
    const bad = row.findIndex((v, j) => Number.isNaN(v) && cells[j].trim() !== "nan");
    if (bad >= 0) {
      throw new CsvError(`${path}: row ${i + 1}, column ${columns[bad]}: not a number`);
    }
    rows.push(row);
  }
  return { columns, rows };
}

/** Extract one column; the error names the offending header and what exists. */
export function column(table: Table, name: string, path: string): number[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new CsvError(
      `${path}: missing column ${JSON.stringify(name)}; header has ` +
        table.columns.map((c) => JSON.stringify(c)).join(", "),
    );
  }
  return table.rows.map((r) => r[idx]);
}
