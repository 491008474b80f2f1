/** Deterministic SVG building blocks shared by the figure scripts.
 *
 * Everything renders from input data alone: no timestamps, no randomness,
 * fixed number formatting, so identical inputs give identical bytes.
 */

export function fmt(v: number, decimals = 2): string {
  const s = v.toFixed(decimals);
  return s === "-0" || /^-0\.0+$/.test(s) ? s.slice(1) : s;
}

export function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export interface Attrs {
  [key: string]: string | number;
}

export function el(tag: string, attrs: Attrs, children = ""): string {
  const parts = Object.entries(attrs).map(
    ([k, v]) => `${k}="${typeof v === "number" ? fmt(v) : esc(v)}"`,
  );
  const open = parts.length ? `<${tag} ${parts.join(" ")}` : `<${tag}`;
  return children === "" ? `${open}/>` : `${open}>${children}</${tag}>`;
}

export function text(x: number, y: number, content: string, attrs: Attrs = {}): string {
  return el("text", { x, y, "font-size": 11, "font-family": "sans-serif", ...attrs }, esc(content));
}

export type Scale = (v: number) => number;

export function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0;
  if (span === 0) {
    return () => (r0 + r1) / 2;
  }
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

/** Round-numbered tick positions covering [lo, hi]; deterministic. */
export function ticks(lo: number, hi: number, target = 5): number[] {
  if (!(hi > lo)) {
    return [lo];
  }
  const rawStep = (hi - lo) / Math.max(1, target);
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = mag;
  for (const m of [1, 2, 5, 10]) {
    if (m * mag >= rawStep) {
      step = m * mag;
      break;
    }
  }
  const out: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return out;
}

export interface Frame {
  width: number;
  height: number;
  left: number;
  right: number;
  top: number;
  bottom: number;
}

export interface AxesSpec {
  frame: Frame;
  xDomain: [number, number];
  yDomain: [number, number];
  xLabel: string;
  yLabel: string;
  title?: string;
}

export interface Axes {
  x: Scale;
  y: Scale;
  body: string;
}

/** Plot frame with gridlines, tick labels, and axis titles. */
export function axes(spec: AxesSpec): Axes {
  const { frame } = spec;
  const x = linearScale(spec.xDomain[0], spec.xDomain[1], frame.left, frame.width - frame.right);
  const y = linearScale(spec.yDomain[0], spec.yDomain[1], frame.height - frame.bottom, frame.top);
  const parts: string[] = [];
  parts.push(
    el("rect", {
      x: frame.left,
      y: frame.top,
      width: frame.width - frame.left - frame.right,
      height: frame.height - frame.top - frame.bottom,
      fill: "white",
      stroke: "#444",
    }),
  );
  for (const t of ticks(spec.xDomain[0], spec.xDomain[1])) {
    const px = x(t);
    parts.push(
      el("line", {
        x1: px,
        y1: frame.top,
        x2: px,
        y2: frame.height - frame.bottom,
        stroke: "#ddd",
      }),
    );
    parts.push(
      text(px, frame.height - frame.bottom + 14, fmt(t, Math.abs(t) >= 100 ? 0 : 1), {
        "text-anchor": "middle",
      }),
    );
  }
  for (const t of ticks(spec.yDomain[0], spec.yDomain[1])) {
    const py = y(t);
    parts.push(
      el("line", {
        x1: frame.left,
        y1: py,
        x2: frame.width - frame.right,
        y2: py,
        stroke: "#ddd",
      }),
    );
    parts.push(
      text(frame.left - 6, py + 4, fmt(t, Math.abs(t) >= 100 ? 0 : 1), { "text-anchor": "end" }),
    );
  }
  const cx = (frame.left + frame.width - frame.right) / 2;
  parts.push(text(cx, frame.height - 6, spec.xLabel, { "text-anchor": "middle" }));
  parts.push(
    el(
      "g",
      { transform: `translate(12 ${(frame.top + frame.height - frame.bottom) / 2}) rotate(-90)` },
      text(0, 0, spec.yLabel, { "text-anchor": "middle" }),
    ),
  );
  if (spec.title) {
    parts.push(text(cx, frame.top - 8, spec.title, { "text-anchor": "middle", "font-size": 13 }));
  }
  return { x, y, body: parts.join("\n") };
}

export function polyline(points: Array<[number, number]>, attrs: Attrs): string {
  const pts = points.map(([px, py]) => `${fmt(px)},${fmt(py)}`).join(" ");
  return el("polyline", { points: pts, fill: "none", ...attrs });
}

export function document(width: number, height: number, body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}">\n${body}\n</svg>\n`
  );
}

/** Fixed series palette; agents keep colors by order of first appearance. */
export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  return [lo, hi];
}
