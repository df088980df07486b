import { existsSync, mkdtempSync, readdirSync, statSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { UsageError, main, parseArgs } from "../src/cli.js";

const FIXTURES = new URL("../fixtures/", import.meta.url).pathname;

const HEADLINE = [
  "solution_diff_cos1",
  "op_diff_norm",
  "eigenvalue_diff_i0",
  "equilibrium_diff_max",
  "time_one_diff_max",
  "graph_diff",
  "attractor_hausdorff",
];

function tmp(): string {
  return mkdtempSync(join(tmpdir(), "plots-cli-"));
}

describe("parseArgs", () => {
  it("collects repeated --csv flags", () => {
    const args = parseArgs([
      "render", "--csv", "a.csv", "--csv", "b.csv",
      "--model", "tau_log", "--out", "figs", "--guides", "1,0.5",
    ]);
    expect(args.csvs).toEqual(["a.csv", "b.csv"]);
    expect(args.model).toBe("tau_log");
    expect(args.guides).toEqual([1, 0.5]);
  });

  it("rejects unknown subcommands, flags, and models", () => {
    expect(() => parseArgs(["plot"])).toThrowError(UsageError);
    expect(() => parseArgs(["render", "--bogus", "x"])).toThrowError(/unknown flag/);
    expect(() =>
      parseArgs(["render", "--csv", "a", "--model", "eps", "--out", "o"]),
    ).toThrowError(/tau or tau_log/);
    expect(() => parseArgs(["render", "--csv", "a", "--model", "tau"])).toThrowError(
      UsageError,
    );
  });
});

describe("main", () => {
  it("renders all seven headline CSVs in one invocation", () => {
    const dir = tmp();
    const argv = ["render"];
    for (const q of HEADLINE) {
      argv.push("--csv", `${FIXTURES}${q}.csv`);
    }
    argv.push("--model", "tau_log", "--out", dir);
    expect(main(argv)).toBe(0);
    const files = readdirSync(dir).filter((f) => f.endsWith(".svg"));
    expect(files).toHaveLength(7);
    for (const q of HEADLINE) {
      const path = join(dir, `${q}.svg`);
      expect(existsSync(path), q).toBe(true);
      expect(statSync(path).size).toBeGreaterThan(0);
    }
  });

  it("writes a lone input to the exact --out path", () => {
    const out = join(tmp(), "one.svg");
    const code = main([
      "render", "--csv", `${FIXTURES}graph_diff.csv`,
      "--model", "tau_log", "--out", out,
    ]);
    expect(code).toBe(0);
    expect(existsSync(out)).toBe(true);
  });

  it("exits 2 on schema failures and missing files", () => {
    const dir = tmp();
    expect(
      main(["render", "--csv", `${FIXTURES}one_row.csv`, "--model", "tau",
            "--out", join(dir, "x.svg")]),
    ).toBe(2);
    expect(
      main(["render", "--csv", `${FIXTURES}no_such.csv`, "--model", "tau",
            "--out", join(dir, "y.svg")]),
    ).toBe(2);
    expect(main(["render", "--model", "tau", "--out", dir])).toBe(2);
  });
});
