/** Canvas-2D painter: far-to-near point splats, selection highlighted.
 *
 * Read-only over cloud and selection; all picking happens in the selection
 * model, never here.
 */

import type { ScreenPoint } from "./types.js";
import type { Rgb } from "./colors.js";

export interface DrawOptions {
  pointSize: number;
  background: string;
}

export const DEFAULT_DRAW: DrawOptions = { pointSize: 2, background: "#14141c" };

export function sortFarToNear(projected: ScreenPoint[]): number[] {
  const order: number[] = [];
  for (let i = 0; i < projected.length; i++) {
    if (Number.isFinite(projected[i].x) && projected[i].depth > 0) order.push(i);
  }
  order.sort((a, b) => projected[b].depth - projected[a].depth);
  return order;
}

export function draw(
  ctx: CanvasRenderingContext2D,
  w: number,
  h: number,
  projected: ScreenPoint[],
  colors: Rgb[],
  selected: ReadonlySet<number>,
  options: DrawOptions = DEFAULT_DRAW,
): void {
  ctx.fillStyle = options.background;
  ctx.fillRect(0, 0, w, h);
  const s = options.pointSize;
  const order = sortFarToNear(projected);
  for (const i of order) {
    const p = projected[i];
    if (p.x < -s || p.x > w + s || p.y < -s || p.y > h + s) continue;
    const [r, g, b] = colors[i];
    if (selected.has(i)) {
      ctx.fillStyle = "#ff9830";
      ctx.fillRect(p.x - s, p.y - s, 2 * s + 1, 2 * s + 1);
    } else {
      ctx.fillStyle = `rgb(${r},${g},${b})`;
      ctx.fillRect(p.x - s / 2, p.y - s / 2, s, s);
    }
  }
}
