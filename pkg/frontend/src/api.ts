/**
 * Thin typed client for the review API.
 *
 * sent_ids contain "#", so they are always percent-encoded in paths. A 409
 * response is not an exception: it carries the fresh record so the caller
 * can reload and retry.
 */

import type {
  DecisionBody,
  PageView,
  Progress,
  RecordView,
  TypeConfig,
} from "./types";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export type DecisionResult =
  | { kind: "ok"; record: RecordView }
  | { kind: "stale"; record: RecordView; detail: string }
  | { kind: "invalid"; detail: string };

export class ReviewApi {
  constructor(
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
    private readonly base: string = "",
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.base + path);
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return (await response.json()) as T;
  }

  listSentences(params: {
    status?: string;
    type?: string;
    offset?: number;
    limit?: number;
  }): Promise<PageView> {
    const query = new URLSearchParams();
    if (params.status) query.set("status", params.status);
    if (params.type) query.set("type", params.type);
    if (params.offset !== undefined) query.set("offset", String(params.offset));
    if (params.limit !== undefined) query.set("limit", String(params.limit));
    const suffix = query.toString() ? `?${query.toString()}` : "";
    return this.getJson<PageView>(`/api/sentences${suffix}`);
  }

  getSentence(sentId: string): Promise<RecordView> {
    return this.getJson<RecordView>(
      `/api/sentences/${encodeURIComponent(sentId)}`,
    );
  }

  getTypes(): Promise<{ types: TypeConfig[] }> {
    return this.getJson<{ types: TypeConfig[] }>("/api/types");
  }

  getProgress(): Promise<Progress> {
    return this.getJson<Progress>("/api/progress");
  }

  async submitDecision(
    sentId: string,
    body: DecisionBody,
  ): Promise<DecisionResult> {
    const response = await this.fetchFn(
      `${this.base}/api/sentences/${encodeURIComponent(sentId)}/decision`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      },
    );
    if (response.ok) {
      return { kind: "ok", record: (await response.json()) as RecordView };
    }
    if (response.status === 409) {
      const payload = (await response.json()) as {
        detail: string;
        record: RecordView;
      };
      return { kind: "stale", record: payload.record, detail: payload.detail };
    }
    if (response.status === 422) {
      return { kind: "invalid", detail: await errorDetail(response) };
    }
    throw new ApiError(response.status, await errorDetail(response));
  }
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
    return JSON.stringify(body.detail ?? body);
  } catch {
    return response.statusText;
  }
}
