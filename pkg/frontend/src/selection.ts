/** Brush selection over projected points, with exact undo/redo.
 *
 * Selection state is a set of point indices. Every mutating gesture pushes a
 * snapshot, so undo restores the precise previous set; redo replays it.
 * Rendering never mutates anything here.
 */

import type { ScreenPoint, Stroke } from "./types.js";

export type BrushMode = "select" | "unselect";

export class SelectionModel {
  private current = new Set<number>();
  private undoStack: Set<number>[] = [];
  private redoStack: Set<number>[] = [];

  get selected(): ReadonlySet<number> {
    return this.current;
  }

  get size(): number {
    return this.current.size;
  }

  has(index: number): boolean {
    return this.current.has(index);
  }

  /** Apply one brush stroke; returns how many point memberships changed. */
  applyStroke(projected: ScreenPoint[], stroke: Stroke, mode: BrushMode): number {
    const hits = hitIndices(projected, stroke);
    if (hits.length === 0) return 0;
    const next = new Set(this.current);
    let changed = 0;
    for (const idx of hits) {
      if (mode === "select") {
        if (!next.has(idx)) {
          next.add(idx);
          changed++;
        }
      } else if (next.delete(idx)) {
        changed++;
      }
    }
    if (changed === 0) return 0;
    this.push(next);
    return changed;
  }

  selectAll(count: number): void {
    const next = new Set<number>();
    for (let i = 0; i < count; i++) next.add(i);
    this.push(next);
  }

  clear(): void {
    if (this.current.size === 0) return;
    this.push(new Set());
  }

  undo(): boolean {
    const prev = this.undoStack.pop();
    if (prev === undefined) return false;
    this.redoStack.push(this.current);
    this.current = prev;
    return true;
  }

  redo(): boolean {
    const next = this.redoStack.pop();
    if (next === undefined) return false;
    this.undoStack.push(this.current);
    this.current = next;
    return true;
  }

  private push(next: Set<number>): void {
    this.undoStack.push(this.current);
    this.current = next;
    this.redoStack = [];
  }
}

/** Indices of points whose projection lies within the brush radius of the stroke. */
export function hitIndices(projected: ScreenPoint[], stroke: Stroke): number[] {
  const hits: number[] = [];
  const r2 = stroke.radius * stroke.radius;
  for (let i = 0; i < projected.length; i++) {
    const p = projected[i];
    if (!Number.isFinite(p.x) || p.depth <= 0) continue;
    for (const s of stroke.points) {
      const dx = p.x - s.x;
      const dy = p.y - s.y;
      if (dx * dx + dy * dy <= r2) {
        hits.push(i);
        break;
      }
    }
  }
  return hits;
}
