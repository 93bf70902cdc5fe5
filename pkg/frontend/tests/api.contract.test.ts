/**
 * Contract tests against recorded API fixtures.
 *
 * The fixtures mirror the session service's documented response shapes; the
 * client must parse them without touching the numbers.
 */

import { describe, expect, it } from 'vitest';
import { ApiError, SessionApi, FetchLike } from '../src/api.js';

const sessionFixture = {
  id: 'abc123def456',
  model_family: 'mvn',
  revision: 2,
  input_revision: 2,
  n_e: 10,
  k: 4,
  marginals: [[5.0, 6.35], [2.0, 2.67], [1.0, 1.34], [3.0, 5.02]],
  hypers: [
    { mu0: 5.0, gamma: 10.0, alpha: 5.0, beta: 16.915389775998402 },
    { mu0: 2.0, gamma: 10.0, alpha: 5.0, beta: 4.166430348047302 },
    { mu0: 1.0, gamma: 10.0, alpha: 5.0, beta: 1.0729317771095005 },
    { mu0: 3.0, gamma: 10.0, alpha: 5.0, beta: 37.87191046984335 },
  ],
  concordances: [{ pair: [1, 2], p: 0.6 }],
  coherency: [
    {
      pair: [1, 2],
      elicited_r: 0.3090169943749474,
      interval: [-0.99, 0.99],
      in_interval: true,
      concordance_interval: [0.045, 0.955],
      elicited_concordance: 0.6,
    },
  ],
  jobs: [],
  revisions: [{ revision: 1, kind: 'create', at: 1 }],
};

const jobFixture = {
  id: 'job111',
  session_id: 'abc123def456',
  status: 'running',
  progress: 0.42,
  stale: false,
  error: null,
  config: { seed: 7, chains: 4, warmup: 2000, samples: 5000, thin: 1 },
};

const summaryFixture = {
  parameters: { 't_med': { mean: 0.73, sd: 0.26, quantiles: { '0.5': 0.7261 } } },
  observables: { 'lam': { mean: 1.0, sd: 0.3, quantiles: { '0.5': 0.954 } } },
  stale: false,
  seed: 7,
  engine_version: '0.1.0',
};

function fixtureFetch(routes: Record<string, { status: number; body: unknown }>): FetchLike {
  return async (input, init) => {
    const key = `${init?.method ?? 'GET'} ${input}`;
    const hit = routes[key];
    if (!hit) throw new Error(`unexpected request ${key}`);
    return new Response(JSON.stringify(hit.body), {
      status: hit.status,
      headers: { 'Content-Type': 'application/json' },
    });
  };
}

describe('session API client', () => {
  it('parses the session shape and preserves solved hyperparameters', async () => {
    const api = new SessionApi('http://svc', fixtureFetch({
      'GET http://svc/sessions/abc123def456': { status: 200, body: sessionFixture },
    }));
    const session = await api.getSession('abc123def456');
    expect(session.k).toBe(4);
    expect(Array.isArray(session.hypers)).toBe(true);
    const hypers = session.hypers as { beta: number }[];
    expect(hypers[0]!.beta).toBeCloseTo(16.915389775998402, 12);
    expect(session.coherency?.[0]?.in_interval).toBe(true);
  });

  it('sends marginals as-is and returns the refreshed session', async () => {
    let captured: unknown = null;
    const fetchImpl: FetchLike = async (input, init) => {
      captured = JSON.parse(String(init?.body));
      return new Response(JSON.stringify(sessionFixture), { status: 200 });
    };
    const api = new SessionApi('http://svc', fetchImpl);
    await api.putMarginals('abc123def456', { quantiles: [[5, 6.35]], n_e: 10 });
    expect(captured).toEqual({ quantiles: [[5, 6.35]], n_e: 10 });
  });

  it('parses job status and summaries', async () => {
    const api = new SessionApi('http://svc', fixtureFetch({
      'GET http://svc/jobs/job111': { status: 200, body: jobFixture },
      'GET http://svc/jobs/job111/results/summary': { status: 200, body: summaryFixture },
    }));
    const job = await api.getJob('job111');
    expect(job.status).toBe('running');
    expect(job.progress).toBeCloseTo(0.42, 12);
    const summary = await api.jobSummary('job111');
    expect(summary.parameters['t_med']!.quantiles['0.5']).toBeCloseTo(0.7261, 12);
  });

  it('raises typed errors carrying the service error shape', async () => {
    const api = new SessionApi('http://svc', fixtureFetch({
      'GET http://svc/sessions/zzz': {
        status: 404,
        body: { code: 'not_found', message: "unknown session 'zzz'", details: {} },
      },
    }));
    await expect(api.getSession('zzz')).rejects.toMatchObject({
      status: 404,
      code: 'not_found',
    });
    await expect(api.getSession('zzz')).rejects.toBeInstanceOf(ApiError);
  });

  it('encodes density query names', async () => {
    const seen: string[] = [];
    const fetchImpl: FetchLike = async (input) => {
      seen.push(String(input));
      return new Response(JSON.stringify({ name: 'x', x: [0], pdf: [1] }), { status: 200 });
    };
    const api = new SessionApi('http://svc', fetchImpl);
    await api.jobDensity('j', 'conc_1_2');
    expect(seen[0]).toBe('http://svc/jobs/j/results/density?name=conc_1_2');
  });
});
