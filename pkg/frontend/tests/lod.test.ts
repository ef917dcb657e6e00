import { describe, expect, it } from "vitest";
import { DistanceLod } from "../src/lod";

describe("DistanceLod", () => {
  const lod = new DistanceLod([
    { maxDistance: 1.5, level: 6 },
    { maxDistance: 2.5, level: 4 },
    { maxDistance: 4.0, level: 2 },
    { maxDistance: Infinity, level: 1 },
  ]);

  it("maps near to fine and far to coarse", () => {
    expect(lod.levelFor(1.0, 1, 6)).toBe(6);
    expect(lod.levelFor(2.0, 1, 6)).toBe(4);
    expect(lod.levelFor(100, 1, 6)).toBe(1);
  });

  it("doubling the distance never increases the level", () => {
    for (const d of [0.5, 1.0, 1.4, 2.0, 2.4, 3.5, 6.0]) {
      expect(lod.levelFor(2 * d, 1, 6)).toBeLessThanOrEqual(lod.levelFor(d, 1, 6));
    }
  });

  it("honors the configured step at a doubling boundary", () => {
    // distance 1.2 -> level 6; doubled to 2.4 -> level 4 per the table
    expect(lod.levelFor(1.2, 1, 6)).toBe(6);
    expect(lod.levelFor(2.4, 1, 6)).toBe(4);
  });

  it("clamps to the model's level range", () => {
    expect(lod.levelFor(0.1, 1, 3)).toBe(3);
    expect(lod.levelFor(99, 2, 6)).toBe(2);
  });

  it("rejects an empty table and sorts rows", () => {
    expect(() => new DistanceLod([])).toThrow();
    const unsorted = new DistanceLod([
      { maxDistance: Infinity, level: 1 },
      { maxDistance: 1.0, level: 5 },
    ]);
    expect(unsorted.levelFor(0.5, 1, 6)).toBe(5);
  });
});
