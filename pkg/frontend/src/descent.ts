/** Descent log time series: thrust, tension, clearance, tilt, disarm moment. */

import { DESCENT_COLUMNS, readTable, Row } from "./csv.js";
import { axes, document, el, extent, fmt, polyline, text } from "./svg.js";
import { EXIT_OK, isDirectRun, runFigure } from "./run.js";

const SERIES: Array<{ column: string; label: string; color: string; dash?: string }> = [
  { column: "thrust", label: "thrust [N]", color: "#1f77b4" },
  { column: "tension", label: "tension [N]", color: "#2ca02c" },
  { column: "clearance", label: "clearance [m]", color: "#9467bd" },
  { column: "tilt", label: "tilt [rad]", color: "#d62728", dash: "5 3" },
];

export function renderDescent(rows: Row[]): string {
  const ordered = rows.slice().sort((a, b) => (a.t as number) - (b.t as number));
  const ts = ordered.map((r) => r.t as number);
  const values = ordered.flatMap((r) => SERIES.map((s) => r[s.column] as number));
  const [v0, v1] = extent(values);
  const pad = (v1 - v0) * 0.08;

  const frame = { width: 640, height: 400, left: 60, right: 20, top: 28, bottom: 42 };
  const ax = axes({
    frame,
    xDomain: [ts[0], ts[ts.length - 1]],
    yDomain: [v0 - pad, v1 + pad],
    xLabel: "time [s]",
    yLabel: "signal",
    title: "descent log",
  });

  const parts: string[] = [ax.body];
  for (const s of SERIES) {
    const pts = ordered.map(
      (r) => [ax.x(r.t as number), ax.y(r[s.column] as number)] as [number, number],
    );
    const attrs: Record<string, string | number> = { stroke: s.color, "stroke-width": 1.6 };
    if (s.dash) {
      attrs["stroke-dasharray"] = s.dash;
    }
    parts.push(polyline(pts, attrs));
  }

  const disarmRow = ordered.find((r) => r.decision === "disarm");
  if (disarmRow) {
    const dx = ax.x(disarmRow.t as number);
    parts.push(
      el("line", {
        x1: dx,
        y1: frame.top,
        x2: dx,
        y2: frame.height - frame.bottom,
        stroke: "#d62728",
        "stroke-width": 1.5,
        "stroke-dasharray": "2 2",
      }),
    );
    parts.push(
      text(dx + 4, frame.top + 12, `disarm @ ${fmt(disarmRow.t as number, 1)} s`, {
        fill: "#d62728",
      }),
    );
  }

  SERIES.forEach((s, i) => {
    const lx = frame.left + 12;
    const ly = frame.top + 16 + i * 16;
    parts.push(
      el("line", {
        x1: lx,
        y1: ly - 4,
        x2: lx + 22,
        y2: ly - 4,
        stroke: s.color,
        "stroke-width": 2,
        ...(s.dash ? { "stroke-dasharray": s.dash } : {}),
      }),
    );
    parts.push(text(lx + 28, ly, s.label, {}));
  });

  return document(frame.width, frame.height, parts.join("\n"));
}

export function main(argv: string[]): number {
  return runFigure(argv, {
    usage: "usage: descent --input descent_log.csv --output figure.svg",
    render: (inputs) => renderDescent(readTable(inputs[0], DESCENT_COLUMNS)),
  });
}

if (isDirectRun(import.meta.url)) {
  process.exit(main(process.argv.slice(2)) ?? EXIT_OK);
}
