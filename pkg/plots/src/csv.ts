/**
 * Reader for the experiment CSV format: "#"-prefixed metadata lines, one
 * header row, comma-separated numeric/string cells.
 */

import * as fs from "fs";

export interface CsvTable {
  meta: string[];
  header: string[];
  rows: string[][];
}

export class SchemaError extends Error {}

export function readCsv(path: string): CsvTable {
  if (!fs.existsSync(path)) {
    throw new SchemaError(`input file not found: ${path}`);
  }
  const lines = fs.readFileSync(path, "utf-8").split(/\r?\n/);
  const meta: string[] = [];
  let header: string[] | null = null;
  const rows: string[][] = [];
  for (const line of lines) {
    if (line.trim() === "") continue;
    if (line.startsWith("#")) {
      meta.push(line);
      continue;
    }
    if (header === null) {
      header = line.split(",");
    } else {
      rows.push(line.split(","));
    }
  }
  if (header === null) {
    throw new SchemaError(`no header row in ${path}`);
  }
  return { meta, header, rows };
}

/** Column values as numbers; throws SchemaError naming a missing column. */
export function numericColumn(table: CsvTable, name: string): number[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new SchemaError(`missing column '${name}' (have: ${table.header.join(", ")})`);
  }
  return table.rows.map((r) => Number(r[idx]));
}

export function stringColumn(table: CsvTable, name: string): string[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new SchemaError(`missing column '${name}' (have: ${table.header.join(", ")})`);
  }
  return table.rows.map((r) => r[idx]);
}

export function requireRows(table: CsvTable, path: string): void {
  if (table.rows.length === 0) {
    throw new SchemaError(`no data rows in ${path}`);
  }
}

/**
 * Matrix CSV: first column is the x node, remaining header cells are the y
 * nodes; returns nodes and the dense value matrix.
 */
export function readMatrixCsv(path: string): { x: number[]; y: number[]; values: number[][] } {
  const table = readCsv(path);
  requireRows(table, path);
  if (table.header.length < 2) {
    throw new SchemaError(`matrix file ${path} needs at least two columns`);
  }
  const y = table.header.slice(1).map(Number);
  const x = table.rows.map((r) => Number(r[0]));
  const values = table.rows.map((r) => r.slice(1).map(Number));
  if (values.some((row) => row.length !== y.length || row.some((v) => !Number.isFinite(v)))) {
    throw new SchemaError(`non-numeric matrix entries in ${path}`);
  }
  return { x, y, values };
}
