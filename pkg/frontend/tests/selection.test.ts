import { describe, expect, it } from "vitest";

import { OrbitCamera } from "../src/camera.js";
import { SelectionModel, hitIndices } from "../src/selection.js";
import type { ScreenPoint } from "../src/types.js";
import { planarCloud } from "./testutil.js";

function grid(points: Array<[number, number]>): ScreenPoint[] {
  return points.map(([x, y]) => ({ x, y, depth: 1 }));
}

describe("brush hit testing", () => {
  it("selects points within the radius of any stroke sample", () => {
    const pts = grid([[10, 10], [14, 10], [40, 40]]);
    const hits = hitIndices(pts, { points: [{ x: 11, y: 10 }], radius: 5 });
    expect(hits).toEqual([0, 1]);
  });

  it("ignores unprojectable points", () => {
    const pts: ScreenPoint[] = [
      { x: NaN, y: NaN, depth: -1 },
      { x: 5, y: 5, depth: 2 },
    ];
    expect(hitIndices(pts, { points: [{ x: 5, y: 5 }], radius: 10 })).toEqual([1]);
  });
});

describe("selection model", () => {
  it("brush over empty space changes nothing", () => {
    const model = new SelectionModel();
    const changed = model.applyStroke(grid([[0, 0]]), { points: [{ x: 500, y: 500 }], radius: 3 }, "select");
    expect(changed).toBe(0);
    expect(model.size).toBe(0);
    expect(model.undo()).toBe(false); // no-op strokes leave no undo entry
  });

  it("select-all then undo restores the empty selection", () => {
    const model = new SelectionModel();
    model.selectAll(100);
    expect(model.size).toBe(100);
    expect(model.undo()).toBe(true);
    expect(model.size).toBe(0);
  });

  it("undo/redo is a strict inverse pair over a gesture sequence", () => {
    const pts = grid([[0, 0], [10, 0], [20, 0], [30, 0]]);
    const model = new SelectionModel();
    const states: number[][] = [[...model.selected].sort((a, b) => a - b)];
    model.applyStroke(pts, { points: [{ x: 0, y: 0 }], radius: 12 }, "select");
    states.push([...model.selected].sort((a, b) => a - b));
    model.applyStroke(pts, { points: [{ x: 30, y: 0 }], radius: 5 }, "select");
    states.push([...model.selected].sort((a, b) => a - b));
    model.applyStroke(pts, { points: [{ x: 10, y: 0 }], radius: 3 }, "unselect");
    states.push([...model.selected].sort((a, b) => a - b));

    for (let k = states.length - 2; k >= 0; k--) {
      expect(model.undo()).toBe(true);
      expect([...model.selected].sort((a, b) => a - b)).toEqual(states[k]);
    }
    for (let k = 1; k < states.length; k++) {
      expect(model.redo()).toBe(true);
      expect([...model.selected].sort((a, b) => a - b)).toEqual(states[k]);
    }
  });

  it("a new gesture clears the redo branch", () => {
    const pts = grid([[0, 0], [50, 0]]);
    const model = new SelectionModel();
    model.applyStroke(pts, { points: [{ x: 0, y: 0 }], radius: 3 }, "select");
    model.undo();
    model.applyStroke(pts, { points: [{ x: 50, y: 0 }], radius: 3 }, "select");
    expect(model.redo()).toBe(false);
    expect([...model.selected]).toEqual([1]);
  });

  it("unselect only touches selected points", () => {
    const pts = grid([[0, 0], [4, 0]]);
    const model = new SelectionModel();
    model.applyStroke(pts, { points: [{ x: 0, y: 0 }], radius: 1 }, "select");
    const changed = model.applyStroke(pts, { points: [{ x: 4, y: 0 }], radius: 1 }, "unselect");
    expect(changed).toBe(0);
    expect(model.has(0)).toBe(true);
  });

  it("one stroke captures >= 95% of a projected cluster at default radius", () => {
    const cloud = planarCloud(24, 18, 2.0, 50);
    const camera = new OrbitCamera();
    camera.fit(cloud);
    const projected = camera.project(cloud, 800, 600);
    // cluster: the 5x5 pixel block around (12, 9)
    const cluster: number[] = [];
    for (let i = 0; i < cloud.count; i++) {
      if (Math.abs(cloud.u[i] - 12) <= 2 && Math.abs(cloud.v[i] - 9) <= 2) cluster.push(i);
    }
    const xs = cluster.map((i) => projected[i].x);
    const ys = cluster.map((i) => projected[i].y);
    const cx = xs.reduce((a, b) => a + b, 0) / xs.length;
    const cy = ys.reduce((a, b) => a + b, 0) / ys.length;
    const radius = Math.max(...cluster.map((i) => Math.hypot(projected[i].x - cx, projected[i].y - cy))) + 1;
    const model = new SelectionModel();
    model.applyStroke(projected, { points: [{ x: cx, y: cy }], radius }, "select");
    const captured = cluster.filter((i) => model.has(i)).length;
    expect(captured / cluster.length).toBeGreaterThanOrEqual(0.95);
  });
});
