/**
 * Thin client for the audit service.
 *
 * Mutations carry the caller's last-seen revision in X-Expected-Revision;
 * a 409 surfaces as ConflictError so the caller can refresh and re-prompt,
 * a 422 carries the service's error payload verbatim, and a network failure
 * becomes OfflineError so the UI can block entry until connectivity returns.
 */

import type {
  ApiErrorPayload,
  DrawResponse,
  MvrResponse,
  OpenSessionRequest,
  SessionSnapshot,
} from "./types.js";

export class ConflictError extends Error {
  constructor(public payload: ApiErrorPayload) {
    super(payload.message);
    this.name = "ConflictError";
  }

  get currentRevision(): number | undefined {
    const rev = this.payload.details["current_revision"];
    return typeof rev === "number" ? rev : undefined;
  }
}

export class DomainError extends Error {
  constructor(public payload: ApiErrorPayload) {
    super(payload.message);
    this.name = "DomainError";
  }
}

export class OfflineError extends Error {
  constructor(cause: unknown) {
    super("service unreachable");
    this.name = "OfflineError";
    this.cause = cause;
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class AuditApi {
  constructor(
    private base: string = "",
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  async openSession(body: OpenSessionRequest): Promise<SessionSnapshot> {
    return this.request<SessionSnapshot>("POST", "/sessions", body);
  }

  async getSession(id: string): Promise<SessionSnapshot> {
    return this.request<SessionSnapshot>("GET", `/sessions/${id}`);
  }

  async postDraws(
    id: string,
    count: number,
    expectedRevision: number,
  ): Promise<DrawResponse> {
    return this.request<DrawResponse>(
      "POST",
      `/sessions/${id}/draws`,
      { count },
      expectedRevision,
    );
  }

  async postMvr(
    id: string,
    ordinal: number,
    votes: Record<string, string>,
    expectedRevision: number,
  ): Promise<MvrResponse> {
    return this.request<MvrResponse>(
      "POST",
      `/sessions/${id}/mvrs`,
      { ordinal, votes },
      expectedRevision,
    );
  }

  async fetchTranscript(id: string): Promise<string> {
    const resp = await this.raw("GET", `/sessions/${id}/transcript`);
    return resp.text();
  }

  private async raw(
    method: string,
    path: string,
    body?: unknown,
    expectedRevision?: number,
  ): Promise<Response> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (expectedRevision !== undefined) {
      headers["X-Expected-Revision"] = String(expectedRevision);
    }
    let resp: Response;
    try {
      resp = await this.fetchFn(`${this.base}${path}`, {
        method,
        headers,
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new OfflineError(err);
    }
    if (resp.status === 409) {
      throw new ConflictError((await resp.json()) as ApiErrorPayload);
    }
    if (resp.status === 422 || resp.status === 404) {
      throw new DomainError((await resp.json()) as ApiErrorPayload);
    }
    if (!resp.ok) {
      throw new DomainError({
        error: `HTTP_${resp.status}`,
        message: resp.statusText,
        details: {},
      });
    }
    return resp;
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    expectedRevision?: number,
  ): Promise<T> {
    const resp = await this.raw(method, path, body, expectedRevision);
    return (await resp.json()) as T;
  }
}
