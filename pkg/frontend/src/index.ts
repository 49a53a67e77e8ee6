export { CsvSchemaError, EXPECTED_COLUMNS, groupSeries, parseSweepCsv } from "./csv.js";
export type { SweepRow } from "./csv.js";
export { FIGURES, baselineColor, extractPlottedValues, renderFigure } from "./render.js";
export { parseArgs, run } from "./figplot.js";
