/** Commanded path in the X-Z plane plus its speed profile, side by side. */

import { readTable, Row, TRAJECTORY_COLUMNS } from "./csv.js";
import { axes, document, el, extent, polyline, text } from "./svg.js";
import { EXIT_OK, isDirectRun, runFigure } from "./run.js";

export function renderTrajectory(rows: Row[]): string {
  const ordered = rows.slice().sort((a, b) => (a.index as number) - (b.index as number));
  const xs = ordered.map((r) => r.x as number);
  const zs = ordered.map((r) => r.z as number);
  const speeds = ordered.map((r) => r.speed as number);
  const steps = ordered.map((r) => r.index as number);

  const width = 760;
  const height = 380;
  const pathFrame = { width: 360, height, left: 55, right: 15, top: 28, bottom: 42 };
  const [px0, px1] = extent(xs);
  const [pz0, pz1] = extent(zs);
  const padX = (px1 - px0) * 0.1;
  const padZ = (pz1 - pz0) * 0.1;
  const pathAx = axes({
    frame: pathFrame,
    xDomain: [px0 - padX, px1 + padX],
    yDomain: [pz0 - padZ, pz1 + padZ],
    xLabel: "x [m]",
    yLabel: "z [m]",
    title: "commanded path",
  });
  const pathPts = xs.map((x, i) => [pathAx.x(x), pathAx.y(zs[i])] as [number, number]);
  const start = pathPts[0];
  const end = pathPts[pathPts.length - 1];
  const left = [
    pathAx.body,
    polyline(pathPts, { stroke: "#1f77b4", "stroke-width": 1.6 }),
    el("circle", { cx: start[0], cy: start[1], r: 4, fill: "#2ca02c" }),
    text(start[0] + 7, start[1] + 4, "start", {}),
    el("rect", { x: end[0] - 4, y: end[1] - 4, width: 8, height: 8, fill: "#d62728" }),
    text(end[0] + 7, end[1] + 4, "end", {}),
  ].join("\n");

  const speedFrame = { width: 380, height, left: 55, right: 15, top: 28, bottom: 42 };
  const [s0, s1] = extent(speeds);
  const speedAx = axes({
    frame: speedFrame,
    xDomain: [steps[0], steps[steps.length - 1]],
    yDomain: [Math.min(0, s0), s1 * 1.08],
    xLabel: "sample index",
    yLabel: "speed [m/s]",
    title: "speed profile",
  });
  const speedPts = steps.map((s, i) => [speedAx.x(s), speedAx.y(speeds[i])] as [number, number]);
  const right = [speedAx.body, polyline(speedPts, { stroke: "#d62728", "stroke-width": 1.6 })].join(
    "\n",
  );

  const body = [left, el("g", { transform: `translate(${pathFrame.width} 0)` }, right)].join("\n");
  return document(width, height, body);
}

export function main(argv: string[]): number {
  return runFigure(argv, {
    usage: "usage: trajectory --input trajectory.csv --output figure.svg",
    render: (inputs) => renderTrajectory(readTable(inputs[0], TRAJECTORY_COLUMNS)),
  });
}

if (isDirectRun(import.meta.url)) {
  process.exit(main(process.argv.slice(2)) ?? EXIT_OK);
}
