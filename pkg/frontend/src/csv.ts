import { readFileSync } from "node:fs";

/** Raised for anything that makes a CSV unusable: missing columns,
 *  unparsable numbers, or too few rows to fit. */
export class SchemaError extends Error {}

export interface RateRow {
  eps: number;
  tau: number;
  tauLog: number | null;
  quantity: string;
  value: number;
}

export interface RateTable {
  columns: string[];
  rows: RateRow[];
  /** quantity names in first-appearance order */
  quantities: string[];
}

const REQUIRED = ["eps", "tau", "value"];

function toNumber(raw: string, column: string, line: number): number {
  const v = Number(raw);
  if (raw.trim() === "" || Number.isNaN(v)) {
    throw new SchemaError(`line ${line}: column '${column}' is not a number: '${raw}'`);
  }
  return v;
}

export function parseRateTable(text: string): RateTable {
  const lines = text.split(/\r?\n/).filter((l) => l.trim() !== "");
  if (lines.length === 0) {
    throw new SchemaError("empty CSV");
  }
  const columns = lines[0].split(",").map((c) => c.trim());
  for (const col of REQUIRED) {
    if (!columns.includes(col)) {
      throw new SchemaError(`missing column '${col}'`);
    }
  }
  const at = (name: string) => columns.indexOf(name);
  const iEps = at("eps");
  const iTau = at("tau");
  const iTauLog = at("tau_log");
  const iQuantity = at("quantity");
  const iValue = at("value");

  const rows: RateRow[] = [];
  const quantities: string[] = [];
  for (let k = 1; k < lines.length; k++) {
    const cells = lines[k].split(",");
    if (cells.length !== columns.length) {
      throw new SchemaError(`line ${k + 1}: expected ${columns.length} cells, got ${cells.length}`);
    }
    const quantity = iQuantity >= 0 ? cells[iQuantity].trim() : "value";
    const row: RateRow = {
      eps: toNumber(cells[iEps], "eps", k + 1),
      tau: toNumber(cells[iTau], "tau", k + 1),
      tauLog: iTauLog >= 0 ? toNumber(cells[iTauLog], "tau_log", k + 1) : null,
      quantity,
      value: toNumber(cells[iValue], "value", k + 1),
    };
    rows.push(row);
    if (!quantities.includes(quantity)) {
      quantities.push(quantity);
    }
  }
  return { columns, rows, quantities };
}

export function readRateTable(path: string): RateTable {
  return parseRateTable(readFileSync(path, "utf8"));
}
