/**
 * Glue between the state store and the mesh service.
 *
 * State changes are debounced (150 ms); each fetch carries a monotonic
 * request id and stale responses are dropped, so the displayed mesh always
 * corresponds to the newest request.  Errors surface through a toast
 * callback while the last good mesh stays on screen.
 */

import { ExplorerApi } from "./api";
import { debounce } from "./debounce";
import { LatestGate, takeLatest } from "./latest";
import { DistanceLod } from "./lod";
import { ExplorerStore } from "./state";
import type { MeshPayload, MeshRequestBody } from "./types";

export interface ControllerHooks {
  onMesh(mesh: MeshPayload, requestId: number): void;
  onError(message: string): void;
  onRequestIssued?(body: MeshRequestBody, requestId: number): void;
}

export const DEBOUNCE_MS = 150;

export class ExplorerController {
  readonly gate = new LatestGate();
  readonly lod: DistanceLod;
  lastMesh: MeshPayload | null = null;
  private requestMesh: () => void;

  constructor(
    private store: ExplorerStore,
    private api: ExplorerApi,
    private hooks: ControllerHooks,
    lod: DistanceLod = new DistanceLod(),
    debounceMs: number = DEBOUNCE_MS,
  ) {
    this.lod = lod;
    const fetchLatest = takeLatest(
      this.gate,
      async (id: number, body: MeshRequestBody) => {
        this.hooks.onRequestIssued?.(body, id);
        return this.api.mesh(body);
      },
      (mesh, id) => {
        this.lastMesh = mesh;
        this.hooks.onMesh(mesh, id);
      },
      (err) => this.hooks.onError(err instanceof Error ? err.message : String(err)),
    );
    this.requestMesh = debounce(() => void fetchLatest(this.store.meshRequest()), debounceMs);
    this.store.subscribe(() => this.requestMesh());
  }

  /** Fetch immediately (initial load), bypassing the debounce window. */
  refreshNow(): void {
    const body = this.store.meshRequest();
    const id = this.gate.issue();
    this.hooks.onRequestIssued?.(body, id);
    this.api
      .mesh(body)
      .then((mesh) => {
        if (this.gate.isCurrent(id)) {
          this.lastMesh = mesh;
          this.hooks.onMesh(mesh, id);
        }
      })
      .catch((err) => {
        if (this.gate.isCurrent(id)) {
          this.hooks.onError(err instanceof Error ? err.message : String(err));
        }
      });
  }

  /** Camera moved: with auto-LoD on, look the level up in the distance table. */
  cameraMoved(distance: number): void {
    const state = this.store.get();
    this.store.update({ cameraDistance: distance });
    if (!state.autoLod) return;
    const level = this.lod.levelFor(distance, 1, this.store.maxLevel);
    if (level !== state.level) this.store.update({ level });
  }
}
