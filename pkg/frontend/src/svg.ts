import { RateRow } from "./csv.js";
import { Fit, Model, abscissa } from "./fit.js";

export interface FigureOptions {
  title: string;
  model: Model;
  /** reference slopes drawn as dashed guide lines */
  guides: number[];
}

const W = 640;
const H = 480;
const MARGIN = { left: 72, right: 24, top: 48, bottom: 56 };
const LN10 = Math.log(10);

interface Pt {
  x: number;
  y: number;
}

function logTicks(lo: number, hi: number): { at: number; label: string }[] {
  const ticks: { at: number; label: string }[] = [];
  const mantissas = hi - lo < 1.5 ? [1, 2, 5] : [1];
  for (let e = Math.floor(lo) - 1; e <= Math.ceil(hi); e++) {
    for (const m of mantissas) {
      const at = e + Math.log10(m);
      if (at >= lo - 1e-9 && at <= hi + 1e-9) {
        ticks.push({ at, label: m === 1 ? `1e${e}` : `${m}e${e}` });
      }
    }
  }
  return ticks;
}

function fmt(v: number): string {
  return v.toFixed(1);
}

/** One log-log figure: scatter, fitted line, slope annotation, guide lines. */
export function figureSvg(rows: RateRow[], fit: Fit, opts: FigureOptions): string {
  const pts: Pt[] = rows.map((r) => ({ x: abscissa(r, opts.model), y: r.value }));
  const lx = pts.map((p) => Math.log10(p.x));
  const ly = pts.map((p) => Math.log10(p.y));
  const pad = 0.06;
  const xSpan = Math.max(Math.max(...lx) - Math.min(...lx), 0.1);
  const ySpan = Math.max(Math.max(...ly) - Math.min(...ly), 0.1);
  const xlo = Math.min(...lx) - pad * xSpan;
  const xhi = Math.max(...lx) + pad * xSpan;
  const ylo = Math.min(...ly) - pad * ySpan - 0.25; // room for guides below
  const yhi = Math.max(...ly) + pad * ySpan;

  const innerW = W - MARGIN.left - MARGIN.right;
  const innerH = H - MARGIN.top - MARGIN.bottom;
  const sx = (v: number) => MARGIN.left + ((v - xlo) / (xhi - xlo)) * innerW;
  const sy = (v: number) => MARGIN.top + ((yhi - v) / (yhi - ylo)) * innerH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}">`,
    `<rect width="${W}" height="${H}" fill="white"/>`,
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${innerW}" height="${innerH}" fill="none" stroke="#333" stroke-width="1"/>`,
  );

  for (const t of logTicks(xlo, xhi)) {
    const px = sx(t.at);
    parts.push(
      `<line x1="${fmt(px)}" y1="${MARGIN.top + innerH}" x2="${fmt(px)}" y2="${MARGIN.top + innerH + 5}" stroke="#333"/>`,
      `<text x="${fmt(px)}" y="${MARGIN.top + innerH + 20}" font-size="11" text-anchor="middle" font-family="sans-serif">${t.label}</text>`,
    );
  }
  for (const t of logTicks(ylo, yhi)) {
    const py = sy(t.at);
    parts.push(
      `<line x1="${MARGIN.left - 5}" y1="${fmt(py)}" x2="${MARGIN.left}" y2="${fmt(py)}" stroke="#333"/>`,
      `<text x="${MARGIN.left - 8}" y="${fmt(py + 4)}" font-size="11" text-anchor="end" font-family="sans-serif">${t.label}</text>`,
    );
  }
  const xName = opts.model === "tau" ? "tau" : "tau |log tau|";
  parts.push(
    `<text x="${MARGIN.left + innerW / 2}" y="${H - 14}" font-size="13" text-anchor="middle" font-family="sans-serif">${xName}</text>`,
    `<text x="18" y="${MARGIN.top + innerH / 2}" font-size="13" text-anchor="middle" font-family="sans-serif" transform="rotate(-90 18 ${MARGIN.top + innerH / 2})">${fit.quantity}</text>`,
  );

  // guide lines first so data sits on top; anchored under the leftmost point
  const x0 = Math.min(...lx);
  const x1 = Math.max(...lx);
  const anchorY = Math.min(...ly) - 0.15;
  for (const g of opts.guides) {
    const gy0 = anchorY;
    const gy1 = anchorY + g * (x1 - x0);
    parts.push(
      `<path class="guide" d="M ${fmt(sx(x0))} ${fmt(sy(gy0))} L ${fmt(sx(x1))} ${fmt(sy(gy1))}" stroke="#888" stroke-width="1" stroke-dasharray="5,4" fill="none"/>`,
      `<text x="${fmt(sx(x1) - 4)}" y="${fmt(sy(gy1) - 5)}" font-size="11" text-anchor="end" fill="#666" font-family="sans-serif">guide slope ${g}</text>`,
    );
  }

  const fy = (v: number) => (fit.intercept + fit.slope * v * LN10) / LN10;
  parts.push(
    `<path class="fit" d="M ${fmt(sx(x0))} ${fmt(sy(fy(x0)))} L ${fmt(sx(x1))} ${fmt(sy(fy(x1)))}" stroke="#d62728" stroke-width="1.5" fill="none"/>`,
  );
  for (const p of pts) {
    parts.push(
      `<circle class="pt" cx="${fmt(sx(Math.log10(p.x)))}" cy="${fmt(sy(Math.log10(p.y)))}" r="4" fill="#1f77b4"/>`,
    );
  }

  parts.push(
    `<text x="${MARGIN.left}" y="20" font-size="14" font-family="sans-serif" font-weight="bold">${opts.title}</text>`,
    `<text class="slope-annotation" x="${MARGIN.left}" y="38" font-size="12" font-family="sans-serif">fit slope ${fit.slope.toFixed(3)} (r^2 ${fit.r2.toFixed(3)}, n ${fit.nRows}, vs ${xName})</text>`,
    `</svg>`,
  );
  return parts.join("\n") + "\n";
}
