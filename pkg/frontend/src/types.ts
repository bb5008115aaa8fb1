export type LatentKind = 'gauss' | 'sphere';

export interface ModelInfo {
  kind: LatentKind;
  d: number;
  n_points: number;
  conditional: boolean;
  alpha: number;
  latent_width: number;
  has_dataset: boolean;
}

export interface DecodeResponse {
  shape: number[][];
  c_l: number;
  c_l_recomputed: number | null;
  error: number | null;
  w: number | null;
  solver_failure?: string;
  roundness_failure?: string;
}

export interface LatentMap {
  ids: string[];
  z: number[][];
  c_l: number[];
  family: string[];
}

export interface SampleResponse {
  z: number[][];
  sampling: string;
}

export interface ApiError {
  error: string;
  detail?: string;
  norm?: number;
}

export type Overlay = 'c_l' | 'family' | 'w';

export interface HistoryEntry {
  z: number[];
  c_l: number;
  response: DecodeResponse;
}
