#!/usr/bin/env node
/**
 * figplot — render one figure panel from a sweep CSV.
 *
 * Usage:
 *   figplot --figure fig3a --in sweep.csv --out fig3a.svg
 *
 * Output is SVG (vector, byte-deterministic for fixed input). Nothing is
 * written when the input fails schema validation.
 */

import { readFileSync, writeFileSync } from "node:fs";
import process from "node:process";

import { CsvSchemaError, parseSweepCsv } from "./csv.js";
import { FIGURES, renderFigure } from "./render.js";

interface CliArgs {
  figure: string;
  input: string;
  output: string;
}

export function parseArgs(argv: string[]): CliArgs {
  const args: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 1) {
    const token = argv[i];
    if (token === "--figure" || token === "--in" || token === "--out") {
      const value = argv[i + 1];
      if (value === undefined) {
        throw new Error(`missing value for ${token}`);
      }
      args[token.slice(2)] = value;
      i += 1;
    } else if (token === "--help" || token === "-h") {
      args.help = "1";
    } else {
      throw new Error(`unknown argument ${token}`);
    }
  }
  if (args.help) {
    printUsage();
    process.exit(0);
  }
  for (const required of ["figure", "in", "out"]) {
    if (!(required in args)) {
      throw new Error(`--${required} is required`);
    }
  }
  return { figure: args.figure, input: args.in, output: args.out };
}

function printUsage(): void {
  console.log("usage: figplot --figure <id> --in <sweep.csv> --out <figure.svg>");
  console.log(`figure ids: ${Object.keys(FIGURES).join(", ")}`);
}

export function run(argv: string[]): number {
  let args: CliArgs;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    printUsage();
    return 2;
  }
  try {
    const rows = parseSweepCsv(readFileSync(args.input, "utf-8"));
    const svg = renderFigure(args.figure, rows);
    writeFileSync(args.output, svg, "utf-8");
    console.log(`wrote ${args.output}`);
    return 0;
  } catch (err) {
    if (err instanceof CsvSchemaError) {
      console.error(`CSV schema error: ${err.message}`);
    } else {
      console.error(String(err instanceof Error ? err.message : err));
    }
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  process.exit(run(process.argv.slice(2)));
}
