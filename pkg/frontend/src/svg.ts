/** Minimal deterministic SVG scene builder (no runtime dependencies). */

export interface Extent {
  min: number;
  max: number;
}

export function padExtent(values: number[], fraction = 0.08): Extent {
  let min = Math.min(...values);
  let max = Math.max(...values);
  if (!Number.isFinite(min) || !Number.isFinite(max)) {
    min = 0;
    max = 1;
  }
  if (max - min < 1e-12) {
    const pad = Math.max(1e-6, Math.abs(max) * 0.1, 0.5);
    return { min: min - pad, max: max + pad };
  }
  const pad = (max - min) * fraction;
  return { min: min - pad, max: max + pad };
}

export class Scale {
  constructor(
    private readonly domain: Extent,
    private readonly range: [number, number]
  ) {}

  map(v: number): number {
    const t = (v - this.domain.min) / (this.domain.max - this.domain.min);
    return this.range[0] + t * (this.range[1] - this.range[0]);
  }
}

/** Round-to-short representation so output bytes are stable across runs. */
export function fmt(v: number): string {
  if (Object.is(v, -0)) v = 0;
  const s = v.toFixed(2);
  return s.replace(/\.00$/, "").replace(/(\.\d)0$/, "$1");
}

export function niceTicks(extent: Extent, count = 5): number[] {
  const span = extent.max - extent.min;
  const rawStep = span / Math.max(1, count - 1);
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = mag;
  for (const mult of [1, 2, 2.5, 5, 10]) {
    if (mag * mult >= rawStep) {
      step = mag * mult;
      break;
    }
  }
  const start = Math.ceil(extent.min / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= extent.max + 1e-9; v += step) {
    ticks.push(Number(v.toPrecision(10)));
  }
  return ticks;
}

export function tickLabel(v: number): string {
  if (Number.isInteger(v)) return String(v);
  return String(Number(v.toPrecision(6)));
}

export interface SvgElement {
  toString(): string;
}

function attrs(pairs: Record<string, string | number>): string {
  return Object.entries(pairs)
    .map(([k, v]) => ` ${k}="${v}"`)
    .join("");
}

export function line(
  x1: number, y1: number, x2: number, y2: number,
  extra: Record<string, string | number> = {}
): string {
  return `<line${attrs({ x1: fmt(x1), y1: fmt(y1), x2: fmt(x2), y2: fmt(y2), ...extra })}/>`;
}

export function polyline(
  points: Array<[number, number]>,
  extra: Record<string, string | number> = {}
): string {
  const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
  return `<polyline${attrs({ points: pts, fill: "none", ...extra })}/>`;
}

export function circle(
  cx: number, cy: number, r: number,
  extra: Record<string, string | number> = {}
): string {
  return `<circle${attrs({ cx: fmt(cx), cy: fmt(cy), r, ...extra })}/>`;
}

export function text(
  x: number, y: number, content: string,
  extra: Record<string, string | number> = {}
): string {
  return `<text${attrs({ x: fmt(x), y: fmt(y), ...extra })}>${escapeXml(content)}</text>`;
}

export function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function document(
  width: number, height: number, body: string[]
): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
    ...body,
    "</svg>",
    "",
  ].join("\n");
}
