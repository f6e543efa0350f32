import { ApiClient, isApiError } from "./client.js";
import type {
  ChooseSelection,
  FrontierPoint,
  SessionState,
} from "./types.js";

export type Phase = "idle" | "loading" | "ready" | "submitting" | "done";

/**
 * View model for one strategy session.
 *
 * All finance numbers are server state verbatim: totals, portfolios and
 * frontier points are displayed, never recomputed.  A choose round-trips
 * optimistically (the UI locks and shows the pending pick) and rolls back
 * on a version conflict, surfacing a retry banner.
 */
export interface UiSessionView {
  phase: Phase;
  sessionId: string | null;
  state: SessionState | null;
  frontier: FrontierPoint[];
  frontierVersion: number | null;
  selectedIndex: number | null;
  pendingIndex: number | null;
  conflict: boolean;
  error: string | null;
}

export class SessionStore {
  view: UiSessionView = {
    phase: "idle",
    sessionId: null,
    state: null,
    frontier: [],
    frontierVersion: null,
    selectedIndex: null,
    pendingIndex: null,
    conflict: false,
    error: null,
  };

  private listeners: Array<(view: UiSessionView) => void> = [];

  constructor(private readonly client: ApiClient) {}

  subscribe(fn: (view: UiSessionView) => void) {
    this.listeners.push(fn);
  }

  private emit() {
    for (const fn of this.listeners) fn(this.view);
  }

  totalWithdrawnCash(): number | null {
    // display only: the cumulative vector comes from the server
    return this.view.state ? this.view.state.withdrawals[0] : null;
  }

  async load(sessionId: string) {
    this.view = { ...this.view, phase: "loading", sessionId, error: null };
    this.emit();
    const res = await this.client.getState(sessionId);
    if (isApiError(res.body)) {
      this.view = { ...this.view, phase: "idle", error: res.body.error.message };
      this.emit();
      return;
    }
    this.view = { ...this.view, state: res.body.state };
    await this.syncFrontier();
  }

  async syncFrontier() {
    const { sessionId, state } = this.view;
    if (!sessionId || !state) return;
    if (state.done) {
      this.view = {
        ...this.view, phase: "done", frontier: [], frontierVersion: null,
        selectedIndex: null, pendingIndex: null,
      };
      this.emit();
      return;
    }
    const res = await this.client.getFrontier(sessionId);
    if (isApiError(res.body)) {
      if (res.status === 410) {
        this.view = { ...this.view, phase: "done", frontier: [] };
      } else {
        this.view = { ...this.view, phase: "ready", error: res.body.error.message };
      }
      this.emit();
      return;
    }
    this.view = {
      ...this.view,
      phase: "ready",
      frontier: res.body.frontier,
      frontierVersion: res.body.version,
      selectedIndex: null,
      pendingIndex: null,
      error: null,
    };
    this.emit();
  }

  select(index: number) {
    if (this.view.phase !== "ready") return;
    if (index < 0 || index >= this.view.frontier.length) return;
    this.view = { ...this.view, selectedIndex: index };
    this.emit();
  }

  dismissConflict() {
    this.view = { ...this.view, conflict: false };
    this.emit();
  }

  /**
   * Submit the current selection.  The pending marker renders
   * immediately; server truth replaces it on 200, a 409 rolls the view
   * back and raises the conflict banner (state and frontier refresh).
   */
  async chooseSelected(nextNode?: string): Promise<boolean> {
    const { sessionId, state, frontierVersion, selectedIndex } = this.view;
    if (!sessionId || !state || frontierVersion === null || selectedIndex === null) {
      return false;
    }
    return this.choose({ frontier_index: selectedIndex }, nextNode);
  }

  async choose(selection: ChooseSelection, nextNode?: string): Promise<boolean> {
    const { sessionId, state, frontierVersion } = this.view;
    if (!sessionId || !state || frontierVersion === null) return false;
    const pending = "frontier_index" in selection ? selection.frontier_index : null;
    this.view = {
      ...this.view, phase: "submitting", pendingIndex: pending, conflict: false,
    };
    this.emit();
    const res = await this.client.choose(sessionId, frontierVersion, selection,
                                         nextNode);
    if (res.status === 200 && !isApiError(res.body)) {
      this.view = { ...this.view, state: res.body.state, error: null };
      await this.syncFrontier();
      return true;
    }
    if (res.status === 409) {
      // stale version: roll back the optimistic pick and re-sync
      const fresh = await this.client.getState(sessionId);
      if (!isApiError(fresh.body)) {
        this.view = { ...this.view, state: fresh.body.state };
      }
      this.view = { ...this.view, conflict: true, pendingIndex: null };
      await this.syncFrontier();
      return false;
    }
    const message = isApiError(res.body) ? res.body.error.message : "request failed";
    this.view = {
      ...this.view, phase: "ready", pendingIndex: null, error: message,
    };
    this.emit();
    return false;
  }
}
