/**
 * Last-write-wins gate for async responses.
 *
 * Each request takes a monotonically increasing id; a response is applied
 * only if no newer request has been issued since, so a slow early response
 * can never overwrite a fresher mesh.
 */
export class LatestGate {
  private nextId = 0;
  private newest = -1;

  issue(): number {
    this.newest = this.nextId;
    return this.nextId++;
  }

  /** True when `id` is still the most recently issued request. */
  isCurrent(id: number): boolean {
    return id === this.newest;
  }

  get issued(): number {
    return this.nextId;
  }
}

/**
 * Wrap an async producer so that only the latest call's result reaches
 * `apply`; superseded results are dropped (and reported to `onStale`).
 * The producer receives the issued request id for instrumentation.
 */
export function takeLatest<A extends any[], R>(
  gate: LatestGate,
  produce: (id: number, ...args: A) => Promise<R>,
  apply: (result: R, id: number) => void,
  onError?: (err: unknown) => void,
  onStale?: (id: number) => void,
): (...args: A) => Promise<void> {
  return async (...args: A) => {
    const id = gate.issue();
    try {
      const result = await produce(id, ...args);
      if (gate.isCurrent(id)) {
        apply(result, id);
      } else {
        onStale?.(id);
      }
    } catch (err) {
      if (gate.isCurrent(id)) onError?.(err);
    }
  };
}
