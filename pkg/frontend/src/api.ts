/** Typed client for the annotation service HTTP+JSON API. */

export interface SessionInfo {
  session_id: string;
  annotator: string;
  hit_id: string;
  cursor: number;
}

export interface ItemView {
  item: number;
  total: number;
  reference: string;
  left: string;
  right: string;
  highlight_left: number[];
  highlight_right: number[];
}

export type Side = "left" | "right";

/** Error envelope returned by the service: {code, message}. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ServiceClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    const body = await response.json();
    if (!response.ok) {
      throw new ApiError(
        response.status,
        typeof body?.code === "string" ? body.code : "Unknown",
        typeof body?.message === "string" ? body.message : response.statusText,
      );
    }
    return body as T;
  }

  createSession(annotator: string, hit: string): Promise<SessionInfo> {
    return this.request<SessionInfo>("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ annotator, hit }),
    });
  }

  getSession(sessionId: string): Promise<SessionInfo> {
    return this.request<SessionInfo>(`/sessions/${sessionId}`);
  }

  nextItem(sessionId: string): Promise<ItemView> {
    return this.request<ItemView>(`/sessions/${sessionId}/next`);
  }

  submitRating(
    sessionId: string,
    item: number,
    side: Side,
    raw: number,
    interacted: boolean,
  ): Promise<{ cursor: number }> {
    return this.request<{ cursor: number }>(`/sessions/${sessionId}/ratings`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ item, side, raw, interacted }),
    });
  }
}
