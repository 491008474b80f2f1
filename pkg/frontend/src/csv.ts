/** Strict CSV loading against the simulator's published artifact schemas. */

import { readFileSync } from "node:fs";
import Papa from "papaparse";

export type ColumnType = "number" | "string";

export interface ColumnSpec {
  name: string;
  type: ColumnType;
  /** Allowed values for string columns (e.g. the disarm decision enum). */
  values?: readonly string[];
}

/** Schema violations name the offending column so callers can fix inputs. */
export class SchemaError extends Error {}

export type Row = Record<string, number | string>;

export function parseTable(source: string, label: string, columns: ColumnSpec[]): Row[] {
  const parsed = Papa.parse<Record<string, string>>(source.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0];
    throw new SchemaError(`${label}: malformed CSV at row ${e.row}: ${e.message}`);
  }
  const found = parsed.meta.fields ?? [];
  for (const col of columns) {
    if (!found.includes(col.name)) {
      throw new SchemaError(`${label}: missing column "${col.name}"`);
    }
  }
  for (const name of found) {
    if (!columns.some((c) => c.name === name)) {
      throw new SchemaError(`${label}: unexpected column "${name}"`);
    }
  }

  const rows: Row[] = [];
  parsed.data.forEach((raw, i) => {
    const row: Row = {};
    for (const col of columns) {
      const cell = raw[col.name];
      if (cell === undefined || cell === "") {
        throw new SchemaError(`${label}: empty value in column "${col.name}" (data row ${i + 1})`);
      }
      if (col.type === "number") {
        const v = Number(cell);
        if (!Number.isFinite(v)) {
          throw new SchemaError(
            `${label}: non-numeric value "${cell}" in column "${col.name}" (data row ${i + 1})`,
          );
        }
        row[col.name] = v;
      } else {
        if (col.values && !col.values.includes(cell)) {
          throw new SchemaError(
            `${label}: invalid value "${cell}" in column "${col.name}" (data row ${i + 1});` +
              ` expected one of ${col.values.join(", ")}`,
          );
        }
        row[col.name] = cell;
      }
    }
    rows.push(row);
  });
  if (rows.length === 0) {
    throw new SchemaError(`${label}: no data rows`);
  }
  return rows;
}

export function readTable(path: string, columns: ColumnSpec[]): Row[] {
  return parseTable(readFileSync(path, "utf8"), path, columns);
}

// Published schemas of the simulator's CSV artifacts.

export const HEATMAP_COLUMNS: ColumnSpec[] = [
  { name: "x", type: "number" },
  { name: "z", type: "number" },
  { name: "value", type: "number" },
];

export const CURVES_COLUMNS: ColumnSpec[] = [
  { name: "agent", type: "string" },
  { name: "seed", type: "number" },
  { name: "env_step", type: "number" },
  { name: "reward", type: "number" },
];

export const TRAJECTORY_COLUMNS: ColumnSpec[] = [
  { name: "index", type: "number" },
  { name: "x", type: "number" },
  { name: "y", type: "number" },
  { name: "z", type: "number" },
  { name: "speed", type: "number" },
];

export const SWEEP_COLUMNS: ColumnSpec[] = [
  { name: "dl_pct", type: "number" },
  { name: "dm_pct", type: "number" },
  { name: "successes", type: "number" },
];

export const DESCENT_COLUMNS: ColumnSpec[] = [
  { name: "t", type: "number" },
  { name: "thrust", type: "number" },
  { name: "tilt", type: "number" },
  { name: "tension", type: "number" },
  { name: "clearance", type: "number" },
  { name: "decision", type: "string", values: ["continue", "disarm"] as const },
];
