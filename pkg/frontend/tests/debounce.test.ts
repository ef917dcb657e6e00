import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";
import { debounce } from "../src/debounce";

describe("debounce", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("collapses a rapid burst into one trailing call", () => {
    const fn = vi.fn();
    const d = debounce(fn, 150);
    for (let i = 0; i < 10; i++) {
      d(i);
      vi.advanceTimersByTime(20);
    }
    expect(fn).not.toHaveBeenCalled();
    vi.advanceTimersByTime(150);
    expect(fn).toHaveBeenCalledTimes(1);
    expect(fn).toHaveBeenLastCalledWith(9);
  });

  it("fires once per call when calls are spaced beyond the window", () => {
    const fn = vi.fn();
    const d = debounce(fn, 150);
    for (let i = 0; i < 5; i++) {
      d(i);
      vi.advanceTimersByTime(200);
    }
    expect(fn).toHaveBeenCalledTimes(5);
  });

  it("cancel drops the pending call", () => {
    const fn = vi.fn();
    const d = debounce(fn, 150);
    d(1);
    d.cancel();
    vi.advanceTimersByTime(500);
    expect(fn).not.toHaveBeenCalled();
  });

  it("flush fires the pending call immediately", () => {
    const fn = vi.fn();
    const d = debounce(fn, 150);
    d(7);
    d.flush();
    expect(fn).toHaveBeenCalledWith(7);
  });
});
