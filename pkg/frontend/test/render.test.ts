import { mkdtempSync, readFileSync, statSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { render } from "../src/render.js";

const FIXTURES = new URL("../fixtures/", import.meta.url).pathname;

function tmp(): string {
  return mkdtempSync(join(tmpdir(), "plots-"));
}

describe("render", () => {
  it("produces a nonempty figure from the golden elliptic artifact", () => {
    const dir = tmp();
    const written = render({
      csv: FIXTURES + "elliptic_rate.csv",
      model: "tau",
      out: join(dir, "elliptic.svg"),
    });
    // six quantities in the file, one figure each
    expect(written).toHaveLength(6);
    for (const fig of written) {
      expect(fig.out).toMatch(new RegExp(`elliptic_${fig.quantity}\\.svg$`));
      expect(statSync(fig.out).size).toBeGreaterThan(0);
      expect(readFileSync(fig.out, "utf8")).toContain("</svg>");
    }
  });

  it("writes a single-quantity figure to the exact path asked for", () => {
    const out = join(tmp(), "fig.svg");
    const written = render({
      csv: FIXTURES + "graph_diff.csv",
      model: "tau_log",
      out,
      title: "graph distance",
    });
    expect(written).toHaveLength(1);
    expect(written[0].out).toBe(out);
    const svg = readFileSync(out, "utf8");
    expect(svg).toContain("graph distance");
    expect(svg).toContain("guide slope 1");
    expect(svg).toContain("tau |log tau|");
    // one marker per sweep point
    expect(svg.match(/class="pt"/g)).toHaveLength(5);
    expect(svg.match(/class="fit"/g)).toHaveLength(1);
  });

  it("annotates every headline figure with the producer's slope to 3 decimals", () => {
    const fits = JSON.parse(readFileSync(FIXTURES + "fits.json", "utf8")).fits;
    const dir = tmp();
    for (const quantity of Object.keys(fits)) {
      const ref = fits[quantity];
      const [fig] = render({
        csv: `${FIXTURES}${quantity}.csv`,
        model: ref.model,
        out: join(dir, `${quantity}.svg`),
      });
      const svg = readFileSync(fig.out, "utf8");
      expect(svg, quantity).toContain(`fit slope ${ref.slope.toFixed(3)}`);
    }
  });

  it("rejects a one-row CSV through the fit contract", () => {
    const dir = tmp();
    expect(() =>
      render({
        csv: FIXTURES + "one_row.csv",
        model: "tau",
        out: join(dir, "x.svg"),
      }),
    ).toThrowError(/requires >= 4/);
  });

  it("re-renders byte-identically and never touches the input", () => {
    const input = FIXTURES + "attractor_hausdorff.csv";
    const before = readFileSync(input, "utf8");
    const out = join(tmp(), "a.svg");
    render({ csv: input, model: "tau_log", out });
    const first = readFileSync(out, "utf8");
    render({ csv: input, model: "tau_log", out });
    expect(readFileSync(out, "utf8")).toBe(first);
    expect(readFileSync(input, "utf8")).toBe(before);
  });
});
