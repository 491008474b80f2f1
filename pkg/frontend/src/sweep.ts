/** Robustness tolerance bars: per-agent min..max perturbation that stays
 * promising (>= 4/5 successes), one panel per swept axis. */

import { basename } from "node:path";

import { readTable, Row, SchemaError, SWEEP_COLUMNS } from "./csv.js";
import { axes, document, el, extent, fmt, PALETTE, text } from "./svg.js";
import { EXIT_OK, isDirectRun, runFigure } from "./run.js";

const PROMISING = 4;

export interface AxisInterval {
  lo: number;
  hi: number;
}

export function toleranceInterval(
  entries: Array<{ pct: number; successes: number }>,
  label: string,
): AxisInterval | null {
  const line = entries.slice().sort((a, b) => a.pct - b.pct);
  const i0 = line.findIndex((e) => e.pct === 0);
  if (i0 < 0) {
    throw new SchemaError(`${label}: sweep line lacks the nominal 0% point`);
  }
  if (line[i0].successes < PROMISING) {
    return null;
  }
  let lo = i0;
  while (lo > 0 && line[lo - 1].successes >= PROMISING) lo--;
  let hi = i0;
  while (hi + 1 < line.length && line[hi + 1].successes >= PROMISING) hi++;
  return { lo: line[lo].pct, hi: line[hi].pct };
}

export interface AgentSweep {
  name: string;
  tether: AxisInterval | null;
  mass: AxisInterval | null;
}

export function sweepIntervals(rows: Row[], name: string): AgentSweep {
  const tether = rows
    .filter((r) => r.dm_pct === 0)
    .map((r) => ({ pct: r.dl_pct as number, successes: r.successes as number }));
  const mass = rows
    .filter((r) => r.dl_pct === 0)
    .map((r) => ({ pct: r.dm_pct as number, successes: r.successes as number }));
  return {
    name,
    tether: toleranceInterval(tether, `${name} (tether line)`),
    mass: toleranceInterval(mass, `${name} (mass line)`),
  };
}

function panel(
  sweeps: AgentSweep[],
  pick: (s: AgentSweep) => AxisInterval | null,
  title: string,
  height: number,
): string {
  const frame = { width: 620, height, left: 110, right: 20, top: 30, bottom: 40 };
  const pcts = sweeps.flatMap((s) => {
    const iv = pick(s);
    return iv ? [iv.lo, iv.hi] : [];
  });
  const [lo, hi] = pcts.length ? extent([...pcts, 0]) : [-100, 100];
  const ax = axes({
    frame,
    xDomain: [lo - 10, hi + 10],
    yDomain: [0, sweeps.length],
    xLabel: "perturbation [%]",
    yLabel: "",
    title,
  });
  const parts: string[] = [ax.body];
  const zeroX = ax.x(0);
  parts.push(
    el("line", {
      x1: zeroX,
      y1: frame.top,
      x2: zeroX,
      y2: frame.height - frame.bottom,
      stroke: "#888",
      "stroke-dasharray": "4 3",
    }),
  );
  sweeps.forEach((s, i) => {
    const yMid = ax.y(sweeps.length - i - 0.5);
    const color = PALETTE[i % PALETTE.length];
    parts.push(text(frame.left - 8, yMid + 4, s.name, { "text-anchor": "end" }));
    const iv = pick(s);
    if (!iv) {
      parts.push(text(zeroX + 6, yMid + 4, "not promising at nominal", { fill: "#888" }));
      return;
    }
    const xLo = ax.x(iv.lo);
    const xHi = ax.x(iv.hi);
    parts.push(
      el("rect", {
        x: xLo,
        y: yMid - 7,
        width: Math.max(xHi - xLo, 1),
        height: 14,
        fill: color,
        opacity: 0.75,
      }),
    );
    for (const capX of [xLo, xHi]) {
      parts.push(el("line", { x1: capX, y1: yMid - 10, x2: capX, y2: yMid + 10, stroke: color, "stroke-width": 2 }));
    }
    parts.push(text(xHi + 6, yMid + 4, `${fmt(iv.lo, 0)}% .. ${fmt(iv.hi, 0)}%`, {}));
  });
  return parts.join("\n");
}

export function renderSweep(tables: Array<{ name: string; rows: Row[] }>): string {
  const sweeps = tables.map((t) => sweepIntervals(t.rows, t.name));
  const panelHeight = 90 + sweeps.length * 28;
  const top = panel(sweeps, (s) => s.tether, "tether length tolerance", panelHeight);
  const bottom = panel(sweeps, (s) => s.mass, "payload mass tolerance", panelHeight);
  const body = [top, el("g", { transform: `translate(0 ${panelHeight})` }, bottom)].join("\n");
  return document(620, panelHeight * 2, body);
}

function stem(path: string): string {
  return basename(path).replace(/\.[^.]*$/, "");
}

export function main(argv: string[]): number {
  return runFigure(argv, {
    usage: "usage: sweep --input sweep_agent.csv [--input more.csv ...] --output figure.svg",
    multiInput: true,
    render: (inputs) =>
      renderSweep(
        inputs.map((path) => ({ name: stem(path), rows: readTable(path, SWEEP_COLUMNS) })),
      ),
  });
}

if (isDirectRun(import.meta.url)) {
  process.exit(main(process.argv.slice(2)) ?? EXIT_OK);
}
