import { mkdtempSync, readFileSync, existsSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { CsvSchemaError, parseSweepCsv, groupSeries } from "../src/csv.js";
import { extractPlottedValues, renderFigure, FIGURES } from "../src/render.js";
import { run } from "../src/figplot.js";

const FIXTURES = join(__dirname, "..", "fixtures");
const fig3a = readFileSync(join(FIXTURES, "fig3a.csv"), "utf-8");
const fig2 = readFileSync(join(FIXTURES, "fig2.csv"), "utf-8");

describe("csv parsing", () => {
  it("reads every aggregated row", () => {
    const rows = parseSweepCsv(fig3a);
    expect(rows.length).toBe(15); // 3 power levels x 5 baselines
    expect(new Set(rows.map((r) => r.param))).toEqual(new Set(["power_dbm"]));
  });

  it("rejects an empty file", () => {
    expect(() => parseSweepCsv("")).toThrow(CsvSchemaError);
  });

  it("rejects a header-only file", () => {
    const header = fig3a.split("\n")[0];
    expect(() => parseSweepCsv(header + "\n")).toThrow(CsvSchemaError);
  });

  it("names the missing column", () => {
    const broken = fig3a.replace("mean_omega", "avg_omega");
    expect(() => parseSweepCsv(broken)).toThrow(/mean_omega/);
  });

  it("groups one series per baseline sorted by value", () => {
    const series = groupSeries(parseSweepCsv(fig3a));
    expect(series.size).toBe(5);
    for (const bucket of series.values()) {
      const values = bucket.map((r) => r.value);
      expect(values).toEqual([...values].sort((a, b) => a - b));
    }
  });
});

describe("figure rendering", () => {
  it("draws one curve per baseline with exact CSV values", () => {
    const rows = parseSweepCsv(fig3a);
    const svg = renderFigure("fig3a", rows);
    const plotted = extractPlottedValues(svg);
    expect(plotted.size).toBe(5);
    const series = groupSeries(rows);
    for (const [baseline, bucket] of series.entries()) {
      const got = plotted.get(baseline);
      expect(got).toBeDefined();
      expect(got).toEqual(bucket.map((r) => [r.value, r.meanOmega]));
    }
  });

  it("renders convergence traces per baseline", () => {
    const rows = parseSweepCsv(fig2);
    const svg = renderFigure("fig2", rows);
    const plotted = extractPlottedValues(svg);
    expect(plotted.size).toBe(4);
    for (const pairs of plotted.values()) {
      expect(pairs[0][0]).toBe(1); // iterations start at one
    }
  });

  it("is byte-deterministic", () => {
    const rows = parseSweepCsv(fig3a);
    expect(renderFigure("fig3a", rows)).toBe(renderFigure("fig3a", rows));
  });

  it("rejects unknown figure ids", () => {
    expect(() => renderFigure("fig9", parseSweepCsv(fig3a))).toThrow(/fig9/);
  });

  it("covers every advertised figure id", () => {
    for (const id of Object.keys(FIGURES)) {
      const svg = renderFigure(id, parseSweepCsv(fig3a));
      expect(svg.startsWith("<svg")).toBe(true);
    }
  });
});

describe("cli", () => {
  it("writes an SVG for a valid invocation", () => {
    const dir = mkdtempSync(join(tmpdir(), "figplot-"));
    const out = join(dir, "fig3a.svg");
    const code = run([
      "--figure", "fig3a", "--in", join(FIXTURES, "fig3a.csv"), "--out", out,
    ]);
    expect(code).toBe(0);
    const svg = readFileSync(out, "utf-8");
    expect(extractPlottedValues(svg).size).toBe(5);
  });

  it("writes nothing for an empty CSV", () => {
    const dir = mkdtempSync(join(tmpdir(), "figplot-"));
    const empty = join(dir, "empty.csv");
    writeFileSync(empty, "");
    const out = join(dir, "fig.svg");
    const code = run(["--figure", "fig3a", "--in", empty, "--out", out]);
    expect(code).toBe(1);
    expect(existsSync(out)).toBe(false);
  });

  it("fails cleanly on missing flags", () => {
    expect(run(["--figure", "fig3a"])).toBe(2);
  });
});
