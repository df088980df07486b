import { mkdirSync, writeFileSync } from "node:fs";
import { basename, dirname, extname, join } from "node:path";

import { RateTable, SchemaError, readRateTable } from "./csv.js";
import { Fit, Model, fitRate, usableRows } from "./fit.js";
import { figureSvg } from "./svg.js";

export interface PlotSpec {
  /** input CSV path */
  csv: string;
  model: Model;
  /** output image path; with several quantities in the CSV it is used as
   *  a stem and one file per quantity is written next to it */
  out: string;
  title?: string;
  /** reference slopes for the dashed guide lines */
  guides?: number[];
}

export interface RenderedFigure {
  out: string;
  quantity: string;
  fit: Fit;
}

function outPathFor(spec: PlotSpec, quantity: string, many: boolean): string {
  if (!many) {
    return spec.out;
  }
  const ext = extname(spec.out) || ".svg";
  const stem = basename(spec.out, ext);
  return join(dirname(spec.out), `${stem}_${quantity}${ext}`);
}

/** Renders one figure per quantity found in the CSV.  Inputs are never
 *  touched; outputs are overwritten in place on re-runs. */
export function render(spec: PlotSpec): RenderedFigure[] {
  const table: RateTable = readRateTable(spec.csv);
  if (table.quantities.length === 0) {
    throw new SchemaError(`no data rows in '${spec.csv}'`);
  }
  const many = table.quantities.length > 1;
  const written: RenderedFigure[] = [];
  for (const quantity of table.quantities) {
    const fit = fitRate(table, quantity, spec.model);
    const rows = usableRows(table, quantity, spec.model);
    const svg = figureSvg(rows, fit, {
      title: spec.title ?? quantity,
      model: spec.model,
      guides: spec.guides ?? [1],
    });
    const out = outPathFor(spec, quantity, many);
    mkdirSync(dirname(out), { recursive: true });
    writeFileSync(out, svg, "utf8");
    written.push({ out, quantity, fit });
  }
  return written;
}
