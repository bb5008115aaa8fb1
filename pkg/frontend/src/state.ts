import { ApiFailure, ExplorerApi } from './api';
import { toUnitSphere, norm } from './project';
import type {
  DecodeResponse, HistoryEntry, LatentMap, ModelInfo, Overlay,
} from './types';

export const HISTORY_LIMIT = 20;
export const NORM_TOL = 1e-6;

export interface ExplorerState {
  model: ModelInfo | null;
  map: LatentMap | null;
  overlay: Overlay;
  selectedZ: number[] | null;
  selectedCl: number;
  lastResponse: DecodeResponse | null;
  history: HistoryEntry[];
  sampled: number[][];
  notice: string | null;
  pending: boolean;
}

export function initialState(): ExplorerState {
  return {
    model: null,
    map: null,
    overlay: 'c_l',
    selectedZ: null,
    selectedCl: 0.687,
    lastResponse: null,
    history: [],
    sampled: [],
    notice: null,
    pending: false,
  };
}

/**
 * Decode orchestration: at most one request in flight; picks arriving while
 * busy coalesce to the latest one; every displayed value is taken verbatim
 * from the server response.
 */
export class ExplorerSession {
  state = initialState();
  private queued: { z: number[]; cL: number } | null = null;
  private listeners: Array<(s: ExplorerState) => void> = [];

  constructor(private readonly api: ExplorerApi, private readonly retries = 1) {}

  onChange(fn: (s: ExplorerState) => void): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn(this.state);
  }

  async init(): Promise<void> {
    this.state.model = await this.api.model();
    if (this.state.model.has_dataset) {
      this.state.map = await this.api.latentMap();
    }
    this.emit();
  }

  setOverlay(overlay: Overlay): void {
    this.state.overlay = overlay;
    this.emit();
  }

  setLabel(cL: number): void {
    this.state.selectedCl = cL;
    this.emit();
  }

  /** Spherical latents are projected to unit norm before they are sent. */
  prepareLatent(z: number[]): number[] {
    if (this.state.model?.kind === 'sphere') {
      const u = toUnitSphere(z);
      if (Math.abs(norm(u) - 1) > NORM_TOL) throw new Error('projection failed');
      return u;
    }
    return z.slice();
  }

  async pick(z: number[], cL = this.state.selectedCl): Promise<void> {
    const prepared = this.prepareLatent(z);
    if (this.state.pending) {
      this.queued = { z: prepared, cL };
      return;
    }
    await this.runDecode(prepared, cL);
    while (this.queued) {
      const next = this.queued;
      this.queued = null;
      await this.runDecode(next.z, next.cL);
    }
  }

  private async runDecode(z: number[], cL: number): Promise<void> {
    this.state.pending = true;
    this.state.notice = null;
    this.emit();
    try {
      const resp = await this.decodeWithRetry(z, cL);
      this.state.selectedZ = z;
      this.state.selectedCl = cL;
      this.state.lastResponse = resp;
      this.state.history = [{ z, c_l: cL, response: resp }, ...this.state.history]
        .slice(0, HISTORY_LIMIT);
    } catch (err) {
      if (err instanceof ApiFailure) {
        this.state.notice = err.status === 422
          ? `rejected by server: ${err.body.error}`
          : `server error: ${err.message}`;
      } else {
        this.state.notice = `network failure: ${String(err)}`;
      }
    } finally {
      this.state.pending = false;
      this.emit();
    }
  }

  private async decodeWithRetry(z: number[], cL: number): Promise<DecodeResponse> {
    let lastErr: unknown;
    for (let attempt = 0; attempt <= this.retries; attempt += 1) {
      try {
        return await this.api.decode(z, cL);
      } catch (err) {
        lastErr = err;
        if (err instanceof ApiFailure) throw err; // server verdicts are final
        this.state.notice = 'network failure, retrying...';
        this.emit();
      }
    }
    throw lastErr;
  }

  async sampleBatch(count: number, sampling: string, seed = 0): Promise<void> {
    if (count === 0) return;
    try {
      const resp = await this.api.sample(count, sampling, seed);
      this.state.sampled = resp.z;
      this.state.notice = null;
    } catch (err) {
      this.state.sampled = [];
      this.state.notice = err instanceof ApiFailure
        ? `sampling rejected: ${err.body.error}`
        : `network failure: ${String(err)}`;
    }
    this.emit();
  }
}

/** Squared error between the slider label and the recomputed value, as shown
 * in the metrics panel; null when the solver failed (server said so). */
export function displayedError(resp: DecodeResponse): number | null {
  return resp.error;
}
