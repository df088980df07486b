#!/usr/bin/env node
import { basename, extname, join } from "node:path";

import { SchemaError } from "./csv.js";
import { Model } from "./fit.js";
import { PlotSpec, RenderedFigure, render } from "./render.js";

const USAGE =
  "usage: locdiff-render render --csv <file> [--csv <file> ...] " +
  "--model tau|tau_log --out <svg path or directory> " +
  "[--title <text>] [--guides 1,0.5]";

export class UsageError extends Error {}

interface Args {
  csvs: string[];
  model: Model;
  out: string;
  title?: string;
  guides?: number[];
}

export function parseArgs(argv: string[]): Args {
  if (argv.length === 0 || argv[0] !== "render") {
    throw new UsageError(USAGE);
  }
  const csvs: string[] = [];
  let model: string | undefined;
  let out: string | undefined;
  let title: string | undefined;
  let guides: number[] | undefined;
  for (let i = 1; i < argv.length; i++) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (value === undefined) {
      throw new UsageError(`missing value for ${flag}\n${USAGE}`);
    }
    switch (flag) {
      case "--csv":
        csvs.push(value);
        break;
      case "--model":
        model = value;
        break;
      case "--out":
        out = value;
        break;
      case "--title":
        title = value;
        break;
      case "--guides":
        guides = value.split(",").map((s) => {
          const g = Number(s);
          if (Number.isNaN(g)) {
            throw new UsageError(`bad guide slope '${s}'`);
          }
          return g;
        });
        break;
      default:
        throw new UsageError(`unknown flag ${flag}\n${USAGE}`);
    }
    i++;
  }
  if (csvs.length === 0 || out === undefined) {
    throw new UsageError(USAGE);
  }
  if (model !== "tau" && model !== "tau_log") {
    throw new UsageError(`--model must be tau or tau_log, got '${model}'`);
  }
  return { csvs, model, out, title, guides };
}

/** With one input --out names the file; with several it is a directory
 *  and each figure lands at <out>/<csv stem>.svg. */
export function runRender(args: Args): RenderedFigure[] {
  const written: RenderedFigure[] = [];
  for (const csv of args.csvs) {
    const out =
      args.csvs.length === 1
        ? args.out
        : join(args.out, basename(csv, extname(csv)) + ".svg");
    const spec: PlotSpec = {
      csv,
      model: args.model,
      out,
      title: args.title,
      guides: args.guides,
    };
    written.push(...render(spec));
  }
  return written;
}

export function main(argv: string[]): number {
  try {
    const figures = runRender(parseArgs(argv));
    for (const fig of figures) {
      console.log(
        `wrote ${fig.out} (${fig.quantity}, slope ${fig.fit.slope.toFixed(3)})`,
      );
    }
    return 0;
  } catch (err) {
    const missingFile =
      err instanceof Error && (err as NodeJS.ErrnoException).code === "ENOENT";
    if (err instanceof UsageError || err instanceof SchemaError || missingFile) {
      console.error(String(err instanceof Error ? err.message : err));
      return 2;
    }
    throw err;
  }
}

const entry = process.argv[1] ?? "";
if (basename(entry) === "cli.js") {
  process.exit(main(process.argv.slice(2)));
}
