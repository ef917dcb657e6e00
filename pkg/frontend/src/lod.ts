/**
 * Camera-distance to level-of-detail mapping.
 *
 * A piecewise table: each row is [maxDistance, level]; the first row whose
 * maxDistance exceeds the camera distance wins, and beyond the last row the
 * coarsest listed level is used.  The table is editable from the settings
 * panel and levels are clamped to the model's range on lookup.
 */
export type LodRow = { maxDistance: number; level: number };

export const DEFAULT_LOD_TABLE: LodRow[] = [
  { maxDistance: 1.5, level: 6 },
  { maxDistance: 2.5, level: 4 },
  { maxDistance: 4.0, level: 2 },
  { maxDistance: Infinity, level: 1 },
];

export class DistanceLod {
  private table: LodRow[];

  constructor(table: LodRow[] = DEFAULT_LOD_TABLE) {
    this.table = [];
    this.setTable(table);
  }

  setTable(table: LodRow[]): void {
    if (!table.length) throw new Error("LoD table must have at least one row");
    this.table = [...table].sort((a, b) => a.maxDistance - b.maxDistance);
  }

  getTable(): LodRow[] {
    return this.table.map((r) => ({ ...r }));
  }

  levelFor(distance: number, minLevel: number, maxLevel: number): number {
    let level = this.table[this.table.length - 1].level;
    for (const row of this.table) {
      if (distance <= row.maxDistance) {
        level = row.level;
        break;
      }
    }
    return Math.min(maxLevel, Math.max(minLevel, level));
  }
}
