import { frontierChartSvg } from "./frontier-chart.js";
import type { UiSessionView } from "./store.js";
import type { SessionState } from "./types.js";

function esc(s: string): string {
  return s.replace(/[&<>"]/g, (c) =>
    ({ "&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;" }[c] as string));
}

function money(v: number): string {
  return v.toFixed(3);
}

export function portfolioPanel(state: SessionState): string {
  const cells = state.portfolio.map(
    (v, i) => `<td class="num">${money(v)}</td><th>asset ${i}</th>`).join("");
  return `<table class="portfolio"><tr>${cells}</tr></table>`;
}

/** Cumulative withdrawals exactly as served; index 0 is the cash leg. */
export function totalsPanel(state: SessionState): string {
  const total = state.withdrawals[0];
  return `<div class="totals">cumulative withdrawal: ` +
    `<strong data-role="total-withdrawn">${money(total)}</strong></div>`;
}

export function historyTimeline(state: SessionState): string {
  if (state.history.length === 0) {
    return `<ol class="history" data-role="history"></ol>`;
  }
  const items = state.history.map((h) =>
    `<li>t=${h.t} @ ${esc(h.node)}: withdrew ${money(h.withdrawal[0])}` +
    `</li>`).join("");
  return `<ol class="history" data-role="history">${items}</ol>`;
}

export function branchPicker(state: SessionState): string {
  if (state.done || !state.successors || state.t >= state.T) {
    return "";
  }
  const radios = state.successors.map((nid, i) =>
    `<label><input type="radio" name="branch" value="${esc(nid)}"` +
    `${i === 0 ? " checked" : ""}/> ${esc(nid)}</label>`).join(" ");
  return `<fieldset class="branches" data-role="branches">` +
    `<legend>next market branch</legend>${radios}</fieldset>`;
}

/** Planar outline of the node's superhedging set for small asset counts. */
export function shpOutline(state: SessionState): string {
  if (!state.shp_here || state.d > 3) return "";
  const pts = state.shp_here.points.map((p) => [p[0], p[1]] as [number, number]);
  if (pts.length === 0) return "";
  const cx = pts.reduce((s, p) => s + p[0], 0) / pts.length;
  const cy = pts.reduce((s, p) => s + p[1], 0) / pts.length;
  pts.sort((p, q) => Math.atan2(p[1] - cy, p[0] - cx) - Math.atan2(q[1] - cy, q[0] - cx));
  const text = pts.map((p) => `(${p[0].toPrecision(4)}, ${p[1].toPrecision(4)})`);
  return `<div class="shp-outline" data-role="shp-outline">set vertices ` +
    `(first two assets): ${esc(text.join(" "))}</div>`;
}

export function conflictBanner(view: UiSessionView): string {
  if (!view.conflict) return "";
  return `<div class="banner conflict" data-role="conflict-banner">` +
    `Someone advanced this session first; the frontier was reloaded. ` +
    `<button data-role="dismiss-conflict">retry</button></div>`;
}

export function render(view: UiSessionView): string {
  if (!view.state) {
    return `<div class="app" data-phase="${view.phase}">` +
      (view.error ? `<div class="banner error">${esc(view.error)}</div>` : "loading") +
      `</div>`;
  }
  const st = view.state;
  const head =
    `<header>node <strong>${esc(st.node)}</strong>, ` +
    `t=${st.t}/${st.T}, version ${st.version}</header>`;
  const chart = st.done
    ? `<div class="summary" data-role="summary">strategy complete: total ` +
      `withdrawal <strong>${money(st.withdrawals[0])}</strong></div>`
    : frontierChartSvg(view.frontier, view.selectedIndex, view.pendingIndex);
  const err = view.error
    ? `<div class="banner error" data-role="error">${esc(view.error)}</div>` : "";
  return `<div class="app" data-phase="${view.phase}">` +
    conflictBanner(view) + err + head +
    portfolioPanel(st) + totalsPanel(st) + chart +
    branchPicker(st) + shpOutline(st) + historyTimeline(st) +
    (st.done ? "" :
      `<button data-role="advance" ${view.selectedIndex === null ? "disabled" : ""}>` +
      `advance</button>`) +
    `</div>`;
}
