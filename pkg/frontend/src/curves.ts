/** Learning curves: one line per (agent, seed), colors and legend per agent. */

import { CURVES_COLUMNS, readTable, Row } from "./csv.js";
import { axes, document, el, extent, PALETTE, polyline, text } from "./svg.js";
import { EXIT_OK, isDirectRun, runFigure } from "./run.js";

export function renderCurves(tables: Array<{ rows: Row[] }>): string {
  const agents: string[] = [];
  const series = new Map<string, Map<number, Array<[number, number]>>>();
  for (const { rows } of tables) {
    for (const r of rows) {
      const agent = r.agent as string;
      if (!series.has(agent)) {
        series.set(agent, new Map());
        agents.push(agent);
      }
      const perSeed = series.get(agent)!;
      const seed = r.seed as number;
      if (!perSeed.has(seed)) {
        perSeed.set(seed, []);
      }
      perSeed.get(seed)!.push([r.env_step as number, r.reward as number]);
    }
  }

  const allRows = tables.flatMap((t) => t.rows);
  const [x0, x1] = extent(allRows.map((r) => r.env_step as number));
  const [y0, y1] = extent(allRows.map((r) => r.reward as number));
  const pad = (y1 - y0) * 0.05;

  const frame = { width: 640, height: 420, left: 60, right: 20, top: 28, bottom: 42 };
  const ax = axes({
    frame,
    xDomain: [x0, x1],
    yDomain: [y0 - pad, y1 + pad],
    xLabel: "environment steps",
    yLabel: "reward",
    title: "learning curves",
  });

  const lines: string[] = [];
  agents.forEach((agent, i) => {
    const color = PALETTE[i % PALETTE.length];
    const perSeed = series.get(agent)!;
    for (const seed of [...perSeed.keys()].sort((a, b) => a - b)) {
      const pts = perSeed
        .get(seed)!
        .slice()
        .sort((a, b) => a[0] - b[0])
        .map(([sx, sy]) => [ax.x(sx), ax.y(sy)] as [number, number]);
      lines.push(polyline(pts, { stroke: color, "stroke-width": 1.4, opacity: 0.9 }));
    }
  });

  const legend: string[] = [];
  agents.forEach((agent, i) => {
    const lx = frame.left + 12;
    const ly = frame.top + 16 + i * 16;
    legend.push(
      el("line", {
        x1: lx,
        y1: ly - 4,
        x2: lx + 22,
        y2: ly - 4,
        stroke: PALETTE[i % PALETTE.length],
        "stroke-width": 2,
      }),
    );
    legend.push(text(lx + 28, ly, agent, {}));
  });

  const body = [ax.body, lines.join("\n"), legend.join("\n")].join("\n");
  return document(frame.width, frame.height, body);
}

export function main(argv: string[]): number {
  return runFigure(argv, {
    usage: "usage: curves --input curves.csv [--input more.csv ...] --output figure.svg",
    multiInput: true,
    render: (inputs) =>
      renderCurves(inputs.map((path) => ({ rows: readTable(path, CURVES_COLUMNS) }))),
  });
}

if (isDirectRun(import.meta.url)) {
  process.exit(main(process.argv.slice(2)) ?? EXIT_OK);
}
