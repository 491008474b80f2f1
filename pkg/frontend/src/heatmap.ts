/** Reward heatmap over the X-Z workspace slice, with the peak cell marked. */

import { HEATMAP_COLUMNS, readTable, Row, SchemaError } from "./csv.js";
import { axes, document, el, fmt, linearScale, text } from "./svg.js";
import { EXIT_OK, isDirectRun, runFigure } from "./run.js";

const RAMP: Array<[number, [number, number, number]]> = [
  [0.0, [20, 14, 54]],
  [0.25, [65, 48, 115]],
  [0.5, [36, 123, 142]],
  [0.75, [84, 188, 98]],
  [1.0, [248, 230, 33]],
];

export function rampColor(t: number): string {
  const v = Math.min(1, Math.max(0, t));
  for (let i = 1; i < RAMP.length; i++) {
    const [t1, c1] = RAMP[i];
    if (v <= t1) {
      const [t0, c0] = RAMP[i - 1];
      const f = (v - t0) / (t1 - t0);
      const rgb = c0.map((c, k) => Math.round(c + f * (c1[k] - c)));
      return `rgb(${rgb[0]},${rgb[1]},${rgb[2]})`;
    }
  }
  return "rgb(248,230,33)";
}

export function renderHeatmap(rows: Row[], label = "heatmap"): string {
  const xs = [...new Set(rows.map((r) => r.x as number))].sort((a, b) => a - b);
  const zs = [...new Set(rows.map((r) => r.z as number))].sort((a, b) => a - b);
  const seen = new Set<string>();
  let vmin = Infinity;
  let vmax = -Infinity;
  let peak: { x: number; z: number; value: number } | null = null;
  for (const r of rows) {
    const key = `${r.x}|${r.z}`;
    if (seen.has(key)) {
      throw new SchemaError(`${label}: duplicate grid cell at x=${r.x}, z=${r.z}`);
    }
    seen.add(key);
    const v = r.value as number;
    if (v < vmin) vmin = v;
    if (v > vmax) vmax = v;
    if (peak === null || v > peak.value) {
      peak = { x: r.x as number, z: r.z as number, value: v };
    }
  }
  const span = vmax > vmin ? vmax - vmin : 1;

  const frame = { width: 560, height: 480, left: 55, right: 95, top: 30, bottom: 40 };
  const ax = axes({
    frame,
    xDomain: [xs[0], xs[xs.length - 1]],
    yDomain: [zs[0], zs[zs.length - 1]],
    xLabel: "x [m]",
    yLabel: "z [m]",
    title: "reward field",
  });
  // cell size from the two smallest grid gaps (uniform grids expected)
  const dx = xs.length > 1 ? xs[1] - xs[0] : 1;
  const dz = zs.length > 1 ? zs[1] - zs[0] : 1;
  const cells: string[] = [];
  for (const r of rows) {
    const x0 = ax.x((r.x as number) - dx / 2);
    const x1 = ax.x((r.x as number) + dx / 2);
    const z0 = ax.y((r.z as number) - dz / 2);
    const z1 = ax.y((r.z as number) + dz / 2);
    cells.push(
      el("rect", {
        x: Math.min(x0, x1),
        y: Math.min(z0, z1),
        width: Math.abs(x1 - x0),
        height: Math.abs(z1 - z0),
        fill: rampColor(((r.value as number) - vmin) / span),
      }),
    );
  }

  const marker: string[] = [];
  if (peak) {
    const px = ax.x(peak.x);
    const pz = ax.y(peak.z);
    marker.push(el("circle", { cx: px, cy: pz, r: 6, fill: "none", stroke: "white", "stroke-width": 2 }));
    marker.push(el("circle", { cx: px, cy: pz, r: 1.5, fill: "white" }));
    marker.push(
      text(px + 9, pz - 6, `target (${fmt(peak.x)}, ${fmt(peak.z)})`, { fill: "white" }),
    );
  }

  // colorbar
  const barX = frame.width - frame.right + 18;
  const barTop = frame.top;
  const barH = frame.height - frame.top - frame.bottom;
  const bar: string[] = [];
  const steps = 64;
  const yOf = linearScale(0, 1, barTop + barH, barTop);
  for (let i = 0; i < steps; i++) {
    const t0 = i / steps;
    const t1 = (i + 1) / steps;
    bar.push(
      el("rect", {
        x: barX,
        y: Math.min(yOf(t0), yOf(t1)),
        width: 14,
        height: Math.abs(yOf(t1) - yOf(t0)) + 0.5,
        fill: rampColor((t0 + t1) / 2),
      }),
    );
  }
  bar.push(el("rect", { x: barX, y: barTop, width: 14, height: barH, fill: "none", stroke: "#444" }));
  bar.push(text(barX + 18, barTop + 10, fmt(vmax), {}));
  bar.push(text(barX + 18, barTop + barH, fmt(vmin), {}));

  const body = [ax.body, cells.join("\n"), marker.join("\n"), bar.join("\n")].join("\n");
  return document(frame.width, frame.height, body);
}

export function main(argv: string[]): number {
  return runFigure(argv, {
    usage: "usage: heatmap --input heatmap.csv --output figure.svg",
    render: (inputs) => renderHeatmap(readTable(inputs[0], HEATMAP_COLUMNS), inputs[0]),
  });
}

if (isDirectRun(import.meta.url)) {
  process.exit(main(process.argv.slice(2)) ?? EXIT_OK);
}
