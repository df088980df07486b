import { RateRow, RateTable, SchemaError } from "./csv.js";

export type Model = "tau" | "tau_log";

export interface Fit {
  quantity: string;
  model: Model;
  slope: number;
  intercept: number;
  r2: number;
  nRows: number;
}

export function abscissa(row: RateRow, model: Model): number {
  if (model === "tau") {
    return row.tau;
  }
  if (row.tauLog === null) {
    throw new SchemaError("missing column 'tau_log'");
  }
  return row.tauLog;
}

/** Rows a log-log fit can use: positive finite value and abscissa. */
export function usableRows(table: RateTable, quantity: string, model: Model): RateRow[] {
  return table.rows.filter(
    (r) =>
      r.quantity === quantity &&
      Number.isFinite(r.value) &&
      r.value > 0 &&
      Number.isFinite(abscissa(r, model)) &&
      abscissa(r, model) > 0,
  );
}

/** Least-squares slope of log(value) against log(abscissa).
 *  Same row filter and estimator as the producer of the CSVs, so the two
 *  fits agree far past the 3 decimals the figures print. */
export function fitRate(table: RateTable, quantity: string, model: Model): Fit {
  const rows = usableRows(table, quantity, model);
  if (rows.length < 4) {
    throw new SchemaError(
      `fit requires >= 4 usable rows for '${quantity}', have ${rows.length}`,
    );
  }
  const x = rows.map((r) => Math.log(abscissa(r, model)));
  const y = rows.map((r) => Math.log(r.value));
  const n = rows.length;
  const mx = x.reduce((a, b) => a + b, 0) / n;
  const my = y.reduce((a, b) => a + b, 0) / n;
  let sxx = 0;
  let sxy = 0;
  let ssTot = 0;
  for (let i = 0; i < n; i++) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    ssTot += (y[i] - my) * (y[i] - my);
  }
  if (sxx === 0) {
    throw new SchemaError(`all abscissa values coincide for '${quantity}'`);
  }
  const slope = sxy / sxx;
  const intercept = my - slope * mx;
  let ssRes = 0;
  for (let i = 0; i < n; i++) {
    const e = y[i] - (slope * x[i] + intercept);
    ssRes += e * e;
  }
  const r2 = ssTot === 0 ? 1 : 1 - ssRes / ssTot;
  return { quantity, model, slope, intercept, r2, nRows: n };
}
