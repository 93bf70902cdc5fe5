/**
 * Typed client for the session service.
 *
 * Every number the workbench displays comes through this module; the client
 * performs no statistical computation of its own.
 */

export interface NormalGammaHypers {
  mu0: number;
  gamma: number;
  alpha: number;
  beta: number;
}

export interface CoherencyReportDto {
  pair: [number, number];
  elicited_r: number;
  /** null when no value keeps the matrix positive definite at all */
  interval: [number, number] | null;
  in_interval: boolean;
  concordance_interval: [number, number] | null;
  elicited_concordance: number;
  infeasible?: boolean;
  reason?: string;
}

export interface SessionDto {
  id: string;
  model_family: 'mvn' | 'exponential' | 'regression';
  revision: number;
  input_revision: number;
  n_e: number | null;
  k: number | null;
  marginals: unknown;
  hypers: NormalGammaHypers[] | Record<string, number> | null;
  concordances: { pair: [number, number]; p: number }[] | null;
  coherency: CoherencyReportDto[] | null;
  jobs: string[];
  revisions: { revision: number; kind: string; at: number }[];
}

export interface JobDto {
  id: string;
  session_id: string;
  status: 'queued' | 'running' | 'done' | 'failed';
  progress: number;
  stale: boolean;
  error: string | null;
  config: { seed: number; chains: number; warmup: number; samples: number; thin: number };
}

export interface SummaryEntry {
  mean: number;
  sd: number;
  quantiles: Record<string, number>;
}

export interface JobSummaryDto {
  parameters: Record<string, SummaryEntry>;
  observables: Record<string, SummaryEntry>;
  stale: boolean;
  seed: number;
  engine_version: string;
}

export interface DensityGridDto {
  name?: string;
  component?: number;
  x: number[];
  pdf: number[];
}

export interface ApiErrorBody {
  code: string;
  message: string;
  details: Record<string, unknown>;
}

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly details: Record<string, unknown>;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.status = status;
    this.code = body.code;
    this.details = body.details ?? {};
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class SessionApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { 'Content-Type': 'application/json' } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    const payload = await resp.json();
    if (!resp.ok) {
      throw new ApiError(resp.status, payload as ApiErrorBody);
    }
    return payload as T;
  }

  createSession(body: { model_family: string; k?: number; n_e?: number }): Promise<SessionDto> {
    return this.request('POST', '/sessions', body);
  }

  getSession(id: string): Promise<SessionDto> {
    return this.request('GET', `/sessions/${id}`);
  }

  putMarginals(id: string, body: Record<string, unknown>): Promise<SessionDto> {
    return this.request('PUT', `/sessions/${id}/marginals`, body);
  }

  putConcordances(
    id: string,
    concordances: { pair: [number, number]; p: number }[],
  ): Promise<SessionDto> {
    return this.request('PUT', `/sessions/${id}/concordances`, { concordances });
  }

  getCoherency(id: string): Promise<{ coherency: CoherencyReportDto[] }> {
    return this.request('GET', `/sessions/${id}/coherency`);
  }

  previewDensity(id: string, component: number): Promise<DensityGridDto> {
    return this.request('GET', `/sessions/${id}/preview?component=${component}`);
  }

  startJob(id: string, body: Record<string, unknown>): Promise<JobDto> {
    return this.request('POST', `/sessions/${id}/jobs`, body);
  }

  getJob(jobId: string): Promise<JobDto> {
    return this.request('GET', `/jobs/${jobId}`);
  }

  jobSummary(jobId: string): Promise<JobSummaryDto> {
    return this.request('GET', `/jobs/${jobId}/results/summary`);
  }

  jobDensity(jobId: string, name: string): Promise<DensityGridDto> {
    return this.request('GET', `/jobs/${jobId}/results/density?name=${encodeURIComponent(name)}`);
  }

  schema(): Promise<Record<string, unknown>> {
    return this.request('GET', '/api/schema');
  }
}
