/** Explorer state store with clamping against the served model's limits. */

import type { ExplorerState, MeshRequestBody, ModelInfo } from "./types";

export type Listener = (state: ExplorerState) => void;

const clamp = (v: number, lo: number, hi: number) => Math.min(hi, Math.max(lo, v));

export class ExplorerStore {
  private state: ExplorerState;
  private listeners = new Set<Listener>();

  constructor(private info: ModelInfo) {
    const maxLevel = info.n_layers - 1;
    this.state = {
      shapeA: 0,
      shapeB: Math.min(1, info.shape_names.length - 1),
      t: 0,
      level: maxLevel,
      resolution: Math.min(128, info.max_resolution),
      autoLod: false,
      cameraDistance: 2.0,
    };
  }

  get(): ExplorerState {
    return { ...this.state };
  }

  get maxLevel(): number {
    return this.info.n_layers - 1;
  }

  /**
   * Apply a partial update; out-of-range values are clamped so the UI can
   * never emit a request the server would reject.  Listeners fire only when
   * something actually changed.
   */
  update(patch: Partial<ExplorerState>): boolean {
    const next: ExplorerState = { ...this.state, ...patch };
    const nShapes = Math.max(1, this.info.shape_names.length);
    next.shapeA = clamp(Math.round(next.shapeA), 0, nShapes - 1);
    next.shapeB = clamp(Math.round(next.shapeB), 0, nShapes - 1);
    next.t = clamp(next.t, 0, 1);
    next.level = clamp(Math.round(next.level), 1, this.maxLevel);
    next.resolution = clamp(Math.round(next.resolution), 8, this.info.max_resolution);
    next.cameraDistance = Math.max(0, next.cameraDistance);
    const changed = JSON.stringify(next) !== JSON.stringify(this.state);
    this.state = next;
    if (changed) this.listeners.forEach((fn) => fn(this.get()));
    return changed;
  }

  subscribe(fn: Listener): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }

  /** The /mesh request body for the current state. */
  meshRequest(): MeshRequestBody {
    const s = this.state;
    const source =
      s.t <= 0
        ? { shape_id: s.shapeA }
        : s.t >= 1
          ? { shape_id: s.shapeB }
          : { interpolate: { a: s.shapeA, b: s.shapeB, t: s.t } };
    return { source, level: s.level, resolution: s.resolution };
  }
}
