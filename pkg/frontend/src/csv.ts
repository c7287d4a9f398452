import { readFileSync } from "node:fs";
import Papa from "papaparse";

/** Raised when an input file does not carry the columns a command needs. */
export class SchemaError extends Error {}

export interface Table {
  columns: string[];
  rows: Record<string, unknown>[];
}

/**
 * Read a headered CSV into memory. Inputs are opened read-only and never
 * written back; every renderer in this package is a pure reader.
 */
export function readCsv(path: string): Table {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<Record<string, unknown>>(text, {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  const fatal = parsed.errors.filter((e) => e.code !== "TooFewFields");
  if (fatal.length > 0) {
    throw new SchemaError(`${path}: ${fatal[0].message}`);
  }
  const columns = parsed.meta.fields ?? [];
  if (columns.length === 0) {
    throw new SchemaError(`${path}: no header row`);
  }
  return { columns, rows: parsed.data };
}

/**
 * Extract one column as numbers. Non-numeric cells become NaN so gaps stay
 * visible in the figure instead of silently vanishing.
 */
export function numericColumn(table: Table, name: string, path: string): number[] {
  if (!table.columns.includes(name)) {
    throw new SchemaError(
      `${path}: missing column "${name}" (has: ${table.columns.join(", ")})`,
    );
  }
  return table.rows.map((row) => {
    const v = row[name];
    if (typeof v === "number") return v;
    if (v === null || v === undefined) return NaN;
    return Number(v);
  });
}
