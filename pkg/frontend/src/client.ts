import type {
  ApiErrorBody,
  ChooseSelection,
  FetchLike,
  FrontierPayload,
  SessionState,
} from "./types.js";

export interface ApiResult<T> {
  status: number;
  body: T | ApiErrorBody;
}

export function isApiError(body: unknown): body is ApiErrorBody {
  return typeof body === "object" && body !== null && "error" in body;
}

/**
 * Thin typed client for the session endpoints.  Never throws on HTTP
 * error statuses: callers branch on the status code, which the store
 * relies on for conflict handling.
 */
export class ApiClient {
  constructor(
    private readonly base: string,
    private readonly fetchFn: FetchLike = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown):
      Promise<ApiResult<T>> {
    const resp = await this.fetchFn(this.base + path, {
      method,
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    return { status: resp.status, body: (await resp.json()) as T | ApiErrorBody };
  }

  createSession(payload: unknown) {
    return this.request<{ session_id: string; state: SessionState }>(
      "POST", "/sessions", payload);
  }

  getState(id: string) {
    return this.request<{ state: SessionState }>("GET", `/sessions/${id}/state`);
  }

  getFrontier(id: string) {
    return this.request<FrontierPayload>("GET", `/sessions/${id}/frontier`);
  }

  choose(id: string, version: number, selection: ChooseSelection,
         nextNode?: string) {
    const body: Record<string, unknown> = { version, ...selection };
    if (nextNode !== undefined) body.next_node = nextNode;
    return this.request<{ state: SessionState; chosen_next: string | null }>(
      "POST", `/sessions/${id}/choose`, body);
  }
}
