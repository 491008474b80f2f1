import { describe, expect, it } from "vitest";
import { join } from "node:path";
import { fileURLToPath } from "node:url";

import {
  CURVES_COLUMNS,
  DESCENT_COLUMNS,
  HEATMAP_COLUMNS,
  parseTable,
  readTable,
  SchemaError,
} from "../src/csv.js";

const FIXTURES = join(fileURLToPath(new URL(".", import.meta.url)), "fixtures");

describe("schema validation", () => {
  it("loads a well-formed artifact", () => {
    const rows = readTable(join(FIXTURES, "heatmap.csv"), HEATMAP_COLUMNS);
    expect(rows).toHaveLength(20);
    expect(rows[0]).toEqual({ x: -1.0, z: 1.5, value: expect.any(Number) });
  });

  it("names a missing column", () => {
    expect(() => readTable(join(FIXTURES, "heatmap_missing_value.csv"), HEATMAP_COLUMNS)).toThrow(
      /missing column "value"/,
    );
  });

  it("names an unexpected column", () => {
    expect(() => readTable(join(FIXTURES, "heatmap_missing_value.csv"), HEATMAP_COLUMNS)).toThrow(
      SchemaError,
    );
    expect(() =>
      parseTable("x,z,value,extra\n0,1,2,3\n", "inline", HEATMAP_COLUMNS),
    ).toThrow(/unexpected column "extra"/);
  });

  it("names the column holding a non-numeric cell", () => {
    expect(() => readTable(join(FIXTURES, "curves_bad_number.csv"), CURVES_COLUMNS)).toThrow(
      /non-numeric value "not-a-number" in column "reward" \(data row 1\)/,
    );
  });

  it("names the column holding an out-of-enum value", () => {
    expect(() => readTable(join(FIXTURES, "descent_bad_decision.csv"), DESCENT_COLUMNS)).toThrow(
      /invalid value "armed" in column "decision"/,
    );
  });

  it("rejects empty cells and empty tables", () => {
    expect(() => parseTable("x,z,value\n1.0,,3.0\n", "inline", HEATMAP_COLUMNS)).toThrow(
      /empty value in column "z"/,
    );
    expect(() => parseTable("x,z,value\n", "inline", HEATMAP_COLUMNS)).toThrow(/no data rows/);
  });
});
