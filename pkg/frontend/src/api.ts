// Typed wrapper over the study service HTTP endpoints.

import type { AnswerAck, AnswerBody, NextResponse, TaskSource } from './types.js';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = 'ApiError';
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

function newSessionId(): string {
  if (typeof crypto !== 'undefined' && 'randomUUID' in crypto) {
    return crypto.randomUUID();
  }
  return `s-${Date.now()}-${Math.floor(Math.random() * 1e9)}`;
}

export class StudyClient implements TaskSource {
  // One session id per client instance; the server treats the latest claim
  // as the live tab and 409s submissions from superseded ones.
  readonly sessionId: string;
  private readonly fetchImpl: FetchLike;

  constructor(
    readonly annotatorId: string,
    readonly baseUrl = '',
    fetchImpl?: FetchLike,
  ) {
    this.sessionId = newSessionId();
    this.fetchImpl = fetchImpl ?? ((input, init) => globalThis.fetch(input, init));
  }

  nextTask(): Promise<NextResponse> {
    return this.request<NextResponse>(
      `/api/session/${encodeURIComponent(this.annotatorId)}/next`,
      { method: 'GET' },
    );
  }

  submitAnswer(body: AnswerBody): Promise<AnswerAck> {
    return this.request<AnswerAck>(
      `/api/session/${encodeURIComponent(this.annotatorId)}/answer`,
      {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(body),
      },
    );
  }

  private async request<T>(path: string, init: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      ...init,
      headers: { ...(init.headers ?? {}), 'X-Session-Id': this.sessionId },
    });
    if (!response.ok) {
      let detail = `HTTP ${response.status}`;
      try {
        const data = (await response.json()) as { detail?: unknown };
        if (typeof data.detail === 'string') detail = data.detail;
      } catch {
        // non-JSON error body; keep the status line
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }
}
