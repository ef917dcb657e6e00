/** Shared types for the latent-space explorer. */

export interface ModelInfo {
  n_layers: number;
  hidden_dim: number;
  latent_dim: number;
  bound_schedule: number[];
  conditioning: string;
  levels: number[];
  max_resolution: number;
  shape_names: string[];
}

export interface MeshPayload {
  vertices: Float32Array; // 3 * nVerts
  indices: Uint32Array;   // 3 * nTris
  nVerts: number;
  nTris: number;
  evals: number;
}

export interface SliceGrid {
  values: Float32Array; // res * res, row-major
  res: number;
  axis: number;
  offset: number;
}

export type MeshSource =
  | { shape_id: number }
  | { latent: number[] }
  | { interpolate: { a: number; b: number; t: number } };

export interface MeshRequestBody {
  source: MeshSource;
  level: number;
  resolution: number;
  refine_from?: number;
  tau?: number;
}

export interface SliceRequestBody {
  source: MeshSource;
  level: number;
  axis: number;
  offset: number;
  res: number;
}

export interface ExplorerState {
  shapeA: number;
  shapeB: number;
  /** interpolation weight in [0, 1]; 0 shows shapeA */
  t: number;
  level: number;
  resolution: number;
  autoLod: boolean;
  cameraDistance: number;
}
