import type { FrontierPoint } from "./types.js";

const W = 560;
const H = 400;
const PAD = 52;

interface Box { x0: number; x1: number; y0: number; y1: number }

function box(points: FrontierPoint[]): Box {
  const xs = points.map((p) => p.alpha);
  const ys = points.map((p) => p.trade_cost);
  const x0 = Math.min(...xs, 0);
  const x1 = Math.max(...xs, 0);
  const y0 = Math.min(...ys, 0);
  const y1 = Math.max(...ys, 0);
  const sx = Math.max(x1 - x0, 1e-9);
  const sy = Math.max(y1 - y0, 1e-9);
  return { x0: x0 - 0.2 * sx, x1: x1 + 0.35 * sx, y0: y0 - 0.2 * sy, y1: y1 + 0.35 * sy };
}

function px(b: Box, x: number, y: number): [number, number] {
  return [
    PAD + ((x - b.x0) / (b.x1 - b.x0)) * (W - 2 * PAD),
    H - PAD - ((y - b.y0) / (b.y1 - b.y0)) * (H - 2 * PAD),
  ];
}

function fmt(v: number): string {
  return Math.abs(v) < 1e-9 ? "0" : v.toPrecision(4);
}

/**
 * SVG markup for one step's Pareto frontier: withdrawal on the x axis,
 * trading cost on the y axis, the attainable region shaded above-left of
 * the efficient vertices.  Every marker carries its server index in
 * data-index, which is the click contract with the app shell.
 */
export function frontierChartSvg(
  points: FrontierPoint[],
  selectedIndex: number | null = null,
  pendingIndex: number | null = null,
): string {
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${W} ${H}" ` +
    `width="${W}" height="${H}" role="img">`,
    `<rect width="${W}" height="${H}" fill="#fcfcfd"/>`,
  ];
  if (points.length === 0) {
    parts.push(`<text x="${W / 2}" y="${H / 2}" text-anchor="middle" ` +
      `font-size="14" fill="#555">no frontier for this step</text>`);
    parts.push("</svg>");
    return parts.join("\n");
  }
  const b = box(points);
  const [ax0, ay0] = px(b, Math.max(b.x0, 0), Math.max(b.y0, 0));
  parts.push(`<line x1="${PAD}" y1="${ay0.toFixed(1)}" x2="${W - PAD}" ` +
    `y2="${ay0.toFixed(1)}" stroke="#bbb"/>`);
  parts.push(`<line x1="${ax0.toFixed(1)}" y1="${PAD}" x2="${ax0.toFixed(1)}" ` +
    `y2="${H - PAD}" stroke="#bbb"/>`);
  parts.push(`<text x="${W - PAD}" y="${ay0 + 18}" text-anchor="end" ` +
    `font-size="12" fill="#444">withdrawal</text>`);
  parts.push(`<text x="${ax0 + 6}" y="${PAD - 10}" font-size="12" ` +
    `fill="#444">trading cost</text>`);

  // attainable region: everything componentwise worse than the frontier
  // (smaller withdrawal and/or larger cost), shaded from the sorted chain
  const chain = [...points].sort((p, q) => p.alpha - q.alpha);
  const poly: string[] = [];
  const [cx, cy] = px(b, chain[0].alpha, b.y1);
  poly.push(`${cx.toFixed(1)},${cy.toFixed(1)}`);
  for (const p of chain) {
    const [x, y] = px(b, p.alpha, p.trade_cost);
    poly.push(`${x.toFixed(1)},${y.toFixed(1)}`);
  }
  const last = chain[chain.length - 1];
  const [ex, ey] = px(b, last.alpha, b.y1);
  poly.push(`${ex.toFixed(1)},${ey.toFixed(1)}`);
  parts.push(`<polygon points="${poly.join(" ")}" fill="#deebf7" ` +
    `fill-opacity="0.8" stroke="none"/>`);
  if (chain.length > 1) {
    const line = chain.map((p) => {
      const [x, y] = px(b, p.alpha, p.trade_cost);
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    }).join(" ");
    parts.push(`<polyline points="${line}" fill="none" stroke="#3182bd" ` +
      `stroke-width="1.5"/>`);
  }
  for (const p of points) {
    const [x, y] = px(b, p.alpha, p.trade_cost);
    const selected = p.index === selectedIndex;
    const pend = p.index === pendingIndex;
    const fill = pend ? "#fd8d3c" : selected ? "#e6550d" : "#08519c";
    parts.push(
      `<circle class="frontier-point" data-index="${p.index}" ` +
      `cx="${x.toFixed(1)}" cy="${y.toFixed(1)}" r="${selected || pend ? 7 : 5}" ` +
      `fill="${fill}" stroke="white" stroke-width="1.5" cursor="pointer"/>`);
    parts.push(`<text x="${(x + 9).toFixed(1)}" y="${(y - 9).toFixed(1)}" ` +
      `font-size="11" fill="#333">(${fmt(p.alpha)}, ${fmt(p.trade_cost)})</text>`);
  }
  parts.push("</svg>");
  return parts.join("\n");
}
