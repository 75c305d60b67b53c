// Typed client for the fairing session service. Every number the UI shows
// comes out of these response types; nothing is recomputed client-side.

export interface CombSample {
  t: number;
  point: number[];
  normal: number[];
  curvature: number;
  tooth_end: number[];
}

export interface Comb {
  scale: number;
  samples: CombSample[];
}

export interface Metrics {
  k: number;
  fit_abs: number;
  energy_abs: number;
  fit_rel: number;
  energy_rel: number;
  iter_rel: number;
}

export interface Diagnostics {
  diagonally_dominant: boolean;
  inf_norm: number;
  spectral_radius: number;
  reliable: boolean;
}

export type SessionStatus = 'idle' | 'running' | 'diverged';

export interface Snapshot {
  id: string;
  status: SessionStatus;
  reason: string | null;
  k: number;
  round: number;
  m: number;
  n: number;
  dim: number;
  degree: number;
  r: number;
  control_points: number[][];
  knots: number[];
  omega: number[];
  curve_samples: number[][];
  comb: Comb;
  metrics: Metrics;
  diagnostics: Diagnostics;
}

export interface WeightRange {
  from: number; // 1-based, inclusive
  to: number;
  omega: number;
}

export interface WeightsBody {
  base_omega?: number;
  ranges?: WeightRange[];
}

export interface StopBody {
  tol?: number;
  max_iters?: number;
  mode?: 'delta' | 'residual';
}

export interface RoundRecord {
  control_points: number[][];
  omega: number[];
  iterations: number;
  k_after: number;
  stop: { tol: number; max_iters: number; mode: string };
  stop_reason: string;
  trace: number[][]; // rows [fit_abs, energy_abs, fit_rel, energy_rel, iter_rel]
}

export interface HistoryEntry {
  action: string;
  body: Record<string, unknown>;
}

export interface History {
  history: HistoryEntry[];
  rounds: RoundRecord[];
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = 'ApiError';
  }
}

async function readDetail(response: Response): Promise<string> {
  try {
    const body = await response.json();
    if (body && typeof body.detail === 'string') {
      return body.detail;
    }
  } catch {
    // non-JSON error body; fall through to the status line
  }
  return `${response.status} ${response.statusText}`;
}

export class SessionClient {
  constructor(private readonly base: string) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
      init.headers = { 'Content-Type': 'application/json' };
    }
    const response = await fetch(this.base + path, init);
    if (!response.ok) {
      throw new ApiError(response.status, await readDetail(response));
    }
    return (await response.json()) as T;
  }

  createSession(body: Record<string, unknown>): Promise<Snapshot> {
    return this.request<Snapshot>('POST', '/sessions', body);
  }

  getSnapshot(id: string): Promise<Snapshot> {
    return this.request<Snapshot>('GET', `/sessions/${id}`);
  }

  getComb(id: string, samples?: number, scale?: number): Promise<Comb> {
    const query = new URLSearchParams();
    if (samples !== undefined) query.set('samples', String(samples));
    if (scale !== undefined) query.set('scale', String(scale));
    const suffix = query.size > 0 ? `?${query.toString()}` : '';
    return this.request<Comb>('GET', `/sessions/${id}/comb${suffix}`);
  }

  getHistory(id: string): Promise<History> {
    return this.request<History>('GET', `/sessions/${id}/history`);
  }

  paintWeights(id: string, body: WeightsBody): Promise<Snapshot> {
    return this.request<Snapshot>('POST', `/sessions/${id}/weights`, body);
  }

  step(id: string, count: number): Promise<Snapshot> {
    return this.request<Snapshot>('POST', `/sessions/${id}/step`, { count });
  }

  run(id: string, stop: StopBody, background = false): Promise<Snapshot> {
    const body: Record<string, unknown> = { ...stop };
    if (background) {
      body.background = true;
    }
    return this.request<Snapshot>('POST', `/sessions/${id}/run`, body);
  }

  insertKnots(id: string, values: number[]): Promise<Snapshot> {
    return this.request<Snapshot>('POST', `/sessions/${id}/knots`, { values });
  }

  /** Start a background run and poll until the session leaves "running". */
  async runToCompletion(
    id: string,
    stop: StopBody,
    pollMs = 250,
    onUpdate?: (snapshot: Snapshot) => void,
  ): Promise<Snapshot> {
    let snapshot = await this.run(id, stop, true);
    while (snapshot.status === 'running') {
      if (onUpdate) onUpdate(snapshot);
      await new Promise((resolve) => setTimeout(resolve, pollMs));
      snapshot = await this.getSnapshot(id);
    }
    return snapshot;
  }
}
