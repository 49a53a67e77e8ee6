/**
 * Figure composition: one curve per baseline from aggregated sweep rows.
 *
 * Every `<polyline>` carries `data-baseline` and `data-values` attributes
 * holding the exact CSV numbers it was drawn from, so consumers (and tests)
 * can verify the plotted data without reverse-engineering pixel coordinates.
 */

import { groupSeries, SweepRow } from "./csv.js";
import {
  Scale,
  circle,
  document as svgDocument,
  line,
  niceTicks,
  padExtent,
  polyline,
  text,
  tickLabel,
} from "./svg.js";

export const FIGURES: Record<string, { xLabel: string; title: string }> = {
  fig2: {
    xLabel: "iteration",
    title: "Convergence of the min secrecy rate",
  },
  fig3a: {
    xLabel: "transmit power budget (dBm)",
    title: "Min secrecy rate vs power budget",
  },
  fig3b: {
    xLabel: "RIS elements",
    title: "Min secrecy rate vs surface size",
  },
  fig3c: {
    xLabel: "BS antennas",
    title: "Min secrecy rate vs antenna count",
  },
  fig3d: {
    xLabel: "beampattern-gain requirement (dB)",
    title: "Min secrecy rate vs sensing demand",
  },
};

// one fixed color per baseline so every figure stays mutually consistent
const PALETTE: Record<string, string> = {
  "rsma-star-opt": "#1f77b4",
  "rsma-ris-conv": "#ff7f0e",
  "rsma-star-rand": "#2ca02c",
  "rsma-no-ris": "#d62728",
  "sdma-star-opt": "#9467bd",
};
const FALLBACK_COLORS = ["#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

export function baselineColor(label: string, index: number): string {
  const key = label.split("|")[0];
  return PALETTE[key] ?? FALLBACK_COLORS[index % FALLBACK_COLORS.length];
}

const WIDTH = 640;
const HEIGHT = 420;
const MARGIN = { left: 64, right: 16, top: 36, bottom: 48 };

export function renderFigure(figure: string, rows: SweepRow[]): string {
  const meta = FIGURES[figure];
  if (!meta) {
    throw new Error(
      `unknown figure id ${figure}; expected one of ${Object.keys(FIGURES).join(", ")}`
    );
  }
  const series = groupSeries(rows);
  const xs = rows.map((r) => r.value);
  const ys = rows.flatMap((r) => [
    r.meanOmega - r.stderrOmega,
    r.meanOmega + r.stderrOmega,
  ]);
  const xDomain = padExtent(xs);
  const yDomain = padExtent([...ys, 0]);
  const sx = new Scale(xDomain, [MARGIN.left, WIDTH - MARGIN.right]);
  const sy = new Scale(yDomain, [HEIGHT - MARGIN.bottom, MARGIN.top]);

  const body: string[] = [];

  // axes and grid
  for (const t of niceTicks(yDomain)) {
    const y = sy.map(t);
    body.push(line(MARGIN.left, y, WIDTH - MARGIN.right, y, {
      stroke: "#dddddd", "stroke-width": 1,
    }));
    body.push(text(MARGIN.left - 8, y + 4, tickLabel(t), {
      "text-anchor": "end", "font-size": 12, fill: "#333333",
    }));
  }
  for (const t of niceTicks(xDomain)) {
    const x = sx.map(t);
    body.push(line(x, HEIGHT - MARGIN.bottom, x, HEIGHT - MARGIN.bottom + 5, {
      stroke: "#333333", "stroke-width": 1,
    }));
    body.push(text(x, HEIGHT - MARGIN.bottom + 20, tickLabel(t), {
      "text-anchor": "middle", "font-size": 12, fill: "#333333",
    }));
  }
  body.push(line(MARGIN.left, MARGIN.top, MARGIN.left, HEIGHT - MARGIN.bottom, {
    stroke: "#333333", "stroke-width": 1,
  }));
  body.push(line(MARGIN.left, HEIGHT - MARGIN.bottom, WIDTH - MARGIN.right,
    HEIGHT - MARGIN.bottom, { stroke: "#333333", "stroke-width": 1 }));
  body.push(text(WIDTH / 2, HEIGHT - 12, meta.xLabel, {
    "text-anchor": "middle", "font-size": 13, fill: "#111111",
  }));
  body.push(text(16, HEIGHT / 2, "min secrecy rate (bits/s/Hz)", {
    "text-anchor": "middle", "font-size": 13, fill: "#111111",
    transform: `rotate(-90 16 ${HEIGHT / 2})`,
  }));
  body.push(text(WIDTH / 2, 20, meta.title, {
    "text-anchor": "middle", "font-size": 15, fill: "#111111",
  }));

  // curves
  let index = 0;
  for (const [label, bucket] of series.entries()) {
    const color = baselineColor(label, index);
    const pts: Array<[number, number]> = bucket.map((r) => [
      sx.map(r.value),
      sy.map(r.meanOmega),
    ]);
    for (const r of bucket) {
      if (r.stderrOmega > 0) {
        const x = sx.map(r.value);
        body.push(line(x, sy.map(r.meanOmega - r.stderrOmega), x,
          sy.map(r.meanOmega + r.stderrOmega),
          { stroke: color, "stroke-width": 1 }));
      }
    }
    body.push(polyline(pts, {
      stroke: color,
      "stroke-width": 2,
      "data-baseline": label,
      "data-values": bucket.map((r) => `${r.value}:${r.meanOmega}`).join(";"),
    }));
    for (const [x, y] of pts) {
      body.push(circle(x, y, 3, { fill: color }));
    }
    // legend entry
    const ly = MARGIN.top + 10 + index * 18;
    body.push(line(MARGIN.left + 10, ly, MARGIN.left + 34, ly, {
      stroke: color, "stroke-width": 2,
    }));
    body.push(text(MARGIN.left + 40, ly + 4, label, {
      "font-size": 12, fill: "#111111",
    }));
    index += 1;
  }

  return svgDocument(WIDTH, HEIGHT, body);
}

/** Extract the plotted (value, mean) pairs per baseline back out of an SVG. */
export function extractPlottedValues(svg: string): Map<string, Array<[number, number]>> {
  const out = new Map<string, Array<[number, number]>>();
  const re = /<polyline[^>]*data-baseline="([^"]*)"[^>]*data-values="([^"]*)"[^>]*\/>/g;
  let match: RegExpExecArray | null;
  while ((match = re.exec(svg)) !== null) {
    const pairs = match[2].split(";").map((cell) => {
      const [v, m] = cell.split(":");
      return [Number(v), Number(m)] as [number, number];
    });
    out.set(match[1], pairs);
  }
  return out;
}
