/**
 * Reader for the sweep runner's aggregated CSV logs.
 *
 * Expected header:
 *   param,value,baseline,mean_omega,stderr_omega,mean_iters,n_infeasible,n_runs
 */

export interface SweepRow {
  param: string;
  value: number;
  baseline: string;
  meanOmega: number;
  stderrOmega: number;
  meanIters: number;
  nInfeasible: number;
  nRuns: number;
}

export const EXPECTED_COLUMNS = [
  "param",
  "value",
  "baseline",
  "mean_omega",
  "stderr_omega",
  "mean_iters",
  "n_infeasible",
  "n_runs",
];

export class CsvSchemaError extends Error {}

export function parseSweepCsv(text: string): SweepRow[] {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0 && !l.startsWith("#"));
  if (lines.length === 0) {
    throw new CsvSchemaError("empty CSV: no header row");
  }
  const header = lines[0].split(",").map((c) => c.trim());
  const missing = EXPECTED_COLUMNS.filter((c) => !header.includes(c));
  if (missing.length > 0) {
    throw new CsvSchemaError(
      `missing column(s): ${missing.join(", ")} (found: ${header.join(", ")})`
    );
  }
  const idx = Object.fromEntries(EXPECTED_COLUMNS.map((c) => [c, header.indexOf(c)]));
  const rows: SweepRow[] = [];
  for (const line of lines.slice(1)) {
    const cells = line.split(",");
    if (cells.length < header.length) {
      throw new CsvSchemaError(`short row: ${line}`);
    }
    const num = (name: string): number => {
      const raw = cells[idx[name]].trim();
      const v = Number(raw);
      if (!Number.isFinite(v)) {
        throw new CsvSchemaError(`non-numeric ${name}: ${raw}`);
      }
      return v;
    };
    rows.push({
      param: cells[idx.param].trim(),
      value: num("value"),
      baseline: cells[idx.baseline].trim(),
      meanOmega: num("mean_omega"),
      stderrOmega: num("stderr_omega"),
      meanIters: num("mean_iters"),
      nInfeasible: num("n_infeasible"),
      nRuns: num("n_runs"),
    });
  }
  if (rows.length === 0) {
    throw new CsvSchemaError("empty CSV: header only, no data rows");
  }
  return rows;
}

/** Group rows into one series per baseline, sorted by the swept value. */
export function groupSeries(rows: SweepRow[]): Map<string, SweepRow[]> {
  const series = new Map<string, SweepRow[]>();
  for (const row of rows) {
    const bucket = series.get(row.baseline) ?? [];
    bucket.push(row);
    series.set(row.baseline, bucket);
  }
  for (const bucket of series.values()) {
    bucket.sort((a, b) => a.value - b.value);
  }
  return new Map([...series.entries()].sort(([a], [b]) => a.localeCompare(b)));
}
