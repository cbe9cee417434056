import { describe, expect, it } from 'vitest';

import { ApiError, StudyClient } from '../src/api.js';

interface Captured {
  url: string;
  init?: RequestInit;
}

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

function clientWith(responses: Response[], captured: Captured[]): StudyClient {
  return new StudyClient('ann 1', 'http://study.test', async (url, init) => {
    captured.push({ url, init });
    const next = responses.shift();
    if (!next) throw new TypeError('fetch failed');
    return next;
  });
}

describe('StudyClient', () => {
  it('fetches the next task with the session header', async () => {
    const captured: Captured[] = [];
    const client = clientWith(
      [jsonResponse(200, { done: true, progress: { answered: 8, total: 8 } })],
      captured,
    );
    const next = await client.nextTask();
    expect(next.done).toBe(true);
    expect(captured[0]?.url).toBe(
      'http://study.test/api/session/ann%201/next',
    );
    const headers = captured[0]?.init?.headers as Record<string, string>;
    expect(headers['X-Session-Id']).toBe(client.sessionId);
  });

  it('keeps one session id across calls', async () => {
    const captured: Captured[] = [];
    const client = clientWith(
      [
        jsonResponse(200, { done: true, progress: { answered: 0, total: 8 } }),
        jsonResponse(200, { accepted: true, progress: { answered: 1, total: 8 }, done: false }),
      ],
      captured,
    );
    await client.nextTask();
    await client.submitAnswer({
      question_id: 'q1',
      condition: 'video',
      choice: 0,
      confidence: 3,
    });
    const ids = captured.map(
      (c) => (c.init?.headers as Record<string, string>)['X-Session-Id'],
    );
    expect(ids[0]).toBe(ids[1]);
  });

  it('posts the answer body as JSON', async () => {
    const captured: Captured[] = [];
    const client = clientWith(
      [jsonResponse(200, { accepted: true, progress: { answered: 1, total: 8 }, done: false })],
      captured,
    );
    await client.submitAnswer({
      question_id: 'q2',
      condition: 'subtitle',
      choice: 3,
      confidence: 5,
    });
    expect(captured[0]?.init?.method).toBe('POST');
    expect(JSON.parse(String(captured[0]?.init?.body))).toEqual({
      question_id: 'q2',
      condition: 'subtitle',
      choice: 3,
      confidence: 5,
    });
  });

  it('turns error payloads into ApiError with the server detail', async () => {
    const client = clientWith(
      [jsonResponse(409, { detail: 'finish the single-modality stage before combined' })],
      [],
    );
    const err = await client
      .submitAnswer({ question_id: 'q1', condition: 'video+subtitle', choice: 0, confidence: 3 })
      .catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(409);
    expect((err as ApiError).message).toContain('single-modality');
  });

  it('falls back to the status line on a non-JSON error body', async () => {
    const client = new StudyClient('a', '', async () =>
      new Response('<html>gateway</html>', { status: 502 }),
    );
    const err = await client.nextTask().catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).message).toBe('HTTP 502');
  });

  it('lets transport failures propagate untouched', async () => {
    const client = new StudyClient('a', '', async () => {
      throw new TypeError('fetch failed');
    });
    await expect(client.nextTask()).rejects.toBeInstanceOf(TypeError);
  });
});
