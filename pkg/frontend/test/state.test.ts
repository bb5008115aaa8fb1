import { describe, expect, it } from 'vitest';
import { readFileSync } from 'node:fs';
import { join, dirname } from 'node:path';
import { fileURLToPath } from 'node:url';

import { ExplorerApi, ApiFailure } from '../src/api';
import { ExplorerSession, HISTORY_LIMIT, NORM_TOL } from '../src/state';
import { norm } from '../src/project';
import type { DecodeResponse, ModelInfo } from '../src/types';

const here = dirname(fileURLToPath(import.meta.url));
const fixtures = JSON.parse(
  readFileSync(join(here, 'fixtures', 'decode_queries.json'), 'utf-8'),
) as {
  model: ModelInfo;
  queries: Array<{ z: number[]; c_l: number; response: DecodeResponse }>;
};

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

/** Mock server replaying the stored backend responses for matching queries. */
function fixtureFetch(recorded: Array<{ z: number[]; c_l: number }>) {
  return async (input: string, init?: RequestInit): Promise<Response> => {
    if (input.endsWith('/model')) return jsonResponse(200, fixtures.model);
    if (input.endsWith('/decode')) {
      const payload = JSON.parse(String(init?.body)) as { z: number[]; c_l: number };
      recorded.push(payload);
      const n = norm(payload.z);
      if (Math.abs(n - 1) > NORM_TOL) {
        return jsonResponse(422, { error: 'norm_violation', norm: n });
      }
      const hit = fixtures.queries.find(
        (q) => Math.abs(q.c_l - payload.c_l) < 1e-12
          && q.z.every((v, i) => Math.abs(v - payload.z[i]) < 1e-9),
      );
      if (!hit) return jsonResponse(404, { error: 'no_fixture' });
      return jsonResponse(200, hit.response);
    }
    if (input.endsWith('/sample')) {
      const payload = JSON.parse(String(init?.body)) as { sampling: string; count: number };
      if (payload.sampling === 'envelope') {
        return jsonResponse(422, { error: 'bad_sampling', detail: 'gauss only' });
      }
      const z = Array.from({ length: payload.count }, (_, i) => {
        const t = (i + 1) / (payload.count + 1);
        const v = [Math.cos(6 * t), Math.sin(6 * t), 2 * t - 1];
        const n = norm(v);
        return v.map((x) => x / n);
      });
      return jsonResponse(200, { z, sampling: payload.sampling });
    }
    return jsonResponse(404, { error: 'not_found' });
  };
}

function makeSession(recorded: Array<{ z: number[]; c_l: number }> = []) {
  const api = new ExplorerApi('http://test', fixtureFetch(recorded));
  return new ExplorerSession(api);
}

describe('decode fidelity against stored backend responses', () => {
  it('displays every stored query verbatim (shape and metrics)', async () => {
    const session = makeSession();
    await session.init();
    for (const q of fixtures.queries) {
      await session.pick(q.z, q.c_l);
      const shown = session.state.lastResponse;
      expect(shown).not.toBeNull();
      // exact equality: the UI must not transform server numbers
      expect(shown!.shape).toEqual(q.response.shape);
      expect(shown!.c_l_recomputed).toBe(q.response.c_l_recomputed);
      expect(shown!.error).toBe(q.response.error);
      expect(shown!.w).toBe(q.response.w);
    }
    expect(session.state.history.length).toBe(Math.min(fixtures.queries.length, HISTORY_LIMIT));
  });

  it('keeps at most 20 history entries, newest first', async () => {
    const session = makeSession();
    await session.init();
    for (let round = 0; round < 3; round += 1) {
      for (const q of fixtures.queries) {
        await session.pick(q.z, q.c_l);
      }
    }
    expect(session.state.history.length).toBe(HISTORY_LIMIT);
    const newest = session.state.history[0];
    const last = fixtures.queries[fixtures.queries.length - 1];
    expect(newest.c_l).toBe(last.c_l);
  });
});

describe('unit-norm guard', () => {
  it('projects spherical latents before sending', async () => {
    const recorded: Array<{ z: number[]; c_l: number }> = [];
    const session = makeSession(recorded);
    await session.init();
    const raw = fixtures.queries[0].z.map((v) => v * 3.7); // badly scaled pick
    await session.pick(raw, fixtures.queries[0].c_l);
    expect(recorded.length).toBe(1);
    expect(Math.abs(norm(recorded[0].z) - 1)).toBeLessThanOrEqual(NORM_TOL);
    expect(session.state.lastResponse).not.toBeNull();
  });

  it('refuses to normalize a zero vector', async () => {
    const session = makeSession();
    await session.init();
    expect(() => session.prepareLatent([0, 0, 0])).toThrow();
  });

  it('surfaces a 422 inline when the server rejects a norm', async () => {
    // bypass the projection to exercise the server-side guard path
    const recorded: Array<{ z: number[]; c_l: number }> = [];
    const api = new ExplorerApi('http://test', fixtureFetch(recorded));
    const session = makeSession();
    await session.init();
    await expect(api.decode([0.9, 0, 0], 0.5)).rejects.toThrowError(ApiFailure);
    try {
      await api.decode([0.9, 0, 0], 0.5);
    } catch (err) {
      expect((err as ApiFailure).status).toBe(422);
      expect((err as ApiFailure).body.error).toBe('norm_violation');
    }
  });
});

describe('sampling overlay', () => {
  it('adds count markers with unit norm', async () => {
    const session = makeSession();
    await session.init();
    await session.sampleBatch(30, 'random');
    expect(session.state.sampled.length).toBe(30);
    for (const z of session.state.sampled) {
      expect(Math.abs(norm(z) - 1)).toBeLessThan(1e-9);
    }
  });

  it('count zero is a no-op', async () => {
    const session = makeSession();
    await session.init();
    await session.sampleBatch(0, 'random');
    expect(session.state.sampled.length).toBe(0);
    expect(session.state.notice).toBeNull();
  });

  it('envelope sampling on a sphere model surfaces the rejection', async () => {
    const session = makeSession();
    await session.init();
    await session.sampleBatch(5, 'envelope');
    expect(session.state.notice).toContain('sampling rejected');
  });
});

describe('request coalescing', () => {
  it('runs at most one decode at a time and keeps only the latest queued pick', async () => {
    let inFlight = 0;
    let maxInFlight = 0;
    const decoded: number[] = [];
    const slowFetch = async (input: string, init?: RequestInit): Promise<Response> => {
      if (input.endsWith('/model')) return jsonResponse(200, fixtures.model);
      const payload = JSON.parse(String(init?.body)) as { z: number[]; c_l: number };
      inFlight += 1;
      maxInFlight = Math.max(maxInFlight, inFlight);
      await new Promise((resolve) => setTimeout(resolve, 5));
      inFlight -= 1;
      decoded.push(payload.c_l);
      return jsonResponse(200, { ...fixtures.queries[0].response, c_l: payload.c_l });
    };
    const session = new ExplorerSession(new ExplorerApi('http://test', slowFetch));
    await session.init();
    const z = fixtures.queries[0].z;
    const first = session.pick(z, 0.1);
    void session.pick(z, 0.2); // superseded
    void session.pick(z, 0.3); // latest queued wins
    await first;
    expect(maxInFlight).toBe(1);
    expect(decoded).toEqual([0.1, 0.3]);
  });
});
