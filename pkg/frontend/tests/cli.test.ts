import { afterEach, describe, expect, it, vi } from "vitest";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";

import { main as heatmapMain } from "../src/heatmap.js";
import { main as curvesMain } from "../src/curves.js";
import { main as sweepMain } from "../src/sweep.js";
import { main as descentMain } from "../src/descent.js";
import { main as trajectoryMain } from "../src/trajectory.js";
import { EXIT_INPUT, EXIT_OK, EXIT_USAGE } from "../src/run.js";

const FIXTURES = join(fileURLToPath(new URL(".", import.meta.url)), "fixtures");
const fixture = (name: string) => join(FIXTURES, name);

function tmp(): string {
  return mkdtempSync(join(tmpdir(), "figtest-"));
}

afterEach(() => {
  vi.restoreAllMocks();
});

describe("figure entry points", () => {
  it("writes identical bytes on repeated runs", () => {
    const dir = tmp();
    try {
      const a = join(dir, "a.svg");
      const b = join(dir, "b.svg");
      expect(heatmapMain(["--input", fixture("heatmap.csv"), "--output", a])).toBe(EXIT_OK);
      expect(heatmapMain(["--input", fixture("heatmap.csv"), "--output", b])).toBe(EXIT_OK);
      expect(readFileSync(a, "utf8")).toBe(readFileSync(b, "utf8"));
      expect(readFileSync(a, "utf8")).toContain("<svg");
    } finally {
      rmSync(dir, { recursive: true, force: true });
    }
  });

  it("runs every figure kind against its fixture", () => {
    const dir = tmp();
    const err = vi.spyOn(console, "error").mockImplementation(() => {});
    try {
      const cases: Array<[(argv: string[]) => number, string[]]> = [
        [curvesMain, ["--input", fixture("curves.csv")]],
        [trajectoryMain, ["--input", fixture("trajectory.csv")]],
        [descentMain, ["--input", fixture("descent_log.csv")]],
        [sweepMain, ["--input", fixture("sweep_sacfd.csv"), "--input", fixture("sweep_sac.csv")]],
      ];
      cases.forEach(([entry, argv], i) => {
        const out = join(dir, `fig${i}.svg`);
        expect(entry([...argv, "--output", out])).toBe(EXIT_OK);
        expect(readFileSync(out, "utf8")).toContain("</svg>");
      });
      expect(err).not.toHaveBeenCalled();
    } finally {
      rmSync(dir, { recursive: true, force: true });
    }
  });

  it("exits 2 on missing flags and prints usage", () => {
    const err = vi.spyOn(console, "error").mockImplementation(() => {});
    expect(heatmapMain([])).toBe(EXIT_USAGE);
    expect(err.mock.calls.flat().join("\n")).toContain("usage:");
  });

  it("rejects a second --input for single-input figures", () => {
    const err = vi.spyOn(console, "error").mockImplementation(() => {});
    const code = heatmapMain([
      "--input",
      fixture("heatmap.csv"),
      "--input",
      fixture("heatmap.csv"),
      "--output",
      "/tmp/never.svg",
    ]);
    expect(code).toBe(EXIT_USAGE);
    expect(err.mock.calls.flat().join("\n")).toContain("exactly one");
  });

  it("exits 3 with a named column on schema violations", () => {
    const err = vi.spyOn(console, "error").mockImplementation(() => {});
    const dir = tmp();
    try {
      const code = heatmapMain([
        "--input",
        fixture("heatmap_missing_value.csv"),
        "--output",
        join(dir, "x.svg"),
      ]);
      expect(code).toBe(EXIT_INPUT);
      expect(err.mock.calls.flat().join("\n")).toContain('missing column "value"');
    } finally {
      rmSync(dir, { recursive: true, force: true });
    }
  });

  it("exits 3 on a missing input file", () => {
    const err = vi.spyOn(console, "error").mockImplementation(() => {});
    expect(curvesMain(["--input", "/nope/none.csv", "--output", "/tmp/never.svg"])).toBe(
      EXIT_INPUT,
    );
    expect(err.mock.calls.flat().join("\n")).toContain("none.csv");
  });
});
