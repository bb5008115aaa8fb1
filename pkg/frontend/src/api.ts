import type { ApiError, DecodeResponse, LatentMap, ModelInfo, SampleResponse } from './types';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiFailure extends Error {
  constructor(readonly status: number, readonly body: ApiError) {
    super(`${body.error}${body.detail ? `: ${body.detail}` : ''}`);
  }
}

/** Thin typed client; every displayed number comes verbatim from a response. */
export class ExplorerApi {
  constructor(
    private readonly base: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.base + path, init);
    const body = await resp.json();
    if (!resp.ok) throw new ApiFailure(resp.status, body as ApiError);
    return body as T;
  }

  model(): Promise<ModelInfo> {
    return this.request<ModelInfo>('/model');
  }

  latentMap(): Promise<LatentMap> {
    return this.request<LatentMap>('/latent-map');
  }

  decode(z: number[], cL: number): Promise<DecodeResponse> {
    return this.request<DecodeResponse>('/decode', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ z, c_l: cL }),
    });
  }

  sample(count: number, sampling: string, seed = 0): Promise<SampleResponse> {
    return this.request<SampleResponse>('/sample', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ count, sampling, seed }),
    });
  }
}
