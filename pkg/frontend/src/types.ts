/** Wire types mirroring the session service JSON exactly. */

export interface HistoryEntry {
  node: string;
  t: number;
  alpha: number;
  withdrawal: number[];
  trade: number[];
  portfolio_after: number[];
}

export interface SessionState {
  session_id: string;
  node: string;
  t: number;
  T: number;
  d: number;
  portfolio: number[];
  withdrawals: number[];
  version: number;
  done: boolean;
  history: HistoryEntry[];
  successors?: string[];
  shp_here?: { points: number[][]; rays: number[][] };
}

export interface FrontierPoint {
  alpha: number;
  trade_cost: number;
  v: number[];
  z: number[];
  index: number;
}

export interface FrontierPayload {
  version: number;
  frontier: FrontierPoint[];
}

export interface ApiErrorBody {
  error: { code: string; message: string };
}

export type ChooseSelection =
  | { frontier_index: number }
  | { custom: { alpha: number; z: number[] } };

/** Minimal structural subset of fetch so tests can inject a double. */
export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ status: number; json(): Promise<unknown> }>;
