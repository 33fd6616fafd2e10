/** Point coloring: raw RGB, log-scaled variance heatmap, material classes. */

import type { Cloud } from "./types.js";

export type Rgb = [number, number, number];

/** Cool-to-hot ramp over t in [0, 1]; red minus blue grows strictly with t. */
export function heatColor(t: number): Rgb {
  const x = Math.min(1, Math.max(0, t));
  const r = x;
  const g = 1 - Math.abs(2 * x - 1); // peaks mid-ramp
  const b = 1 - x;
  return [Math.round(255 * r), Math.round(255 * g), Math.round(255 * b)];
}

/** Variance spans orders of magnitude, so normalize on a log scale. */
export function varianceHeatmap(variance: Float32Array): Rgb[] {
  let hi = 0;
  for (let i = 0; i < variance.length; i++) hi = Math.max(hi, variance[i]);
  const denom = Math.log1p(Math.max(hi, 1e-6));
  const out: Rgb[] = new Array(variance.length);
  for (let i = 0; i < variance.length; i++) {
    out[i] = heatColor(Math.log1p(Math.max(0, variance[i])) / denom);
  }
  return out;
}

const CLASS_PALETTE: Rgb[] = [
  [96, 168, 96],   // 0: diffuse
  [235, 200, 80],  // 1: rough specular
  [235, 130, 60],  // 2: partially reflective/transmissive
  [220, 60, 60],   // 3: mirror / clear glass
];
const UNLABELED_COLOR: Rgb = [128, 128, 140];

export function classColor(classId: number): Rgb {
  return classId >= 0 && classId < CLASS_PALETTE.length
    ? CLASS_PALETTE[classId]
    : UNLABELED_COLOR;
}

export function pointColors(
  cloud: Cloud,
  mode: "rgb" | "variance" | "class",
  classIds?: Uint8Array,
): Rgb[] {
  if (mode === "variance") return varianceHeatmap(cloud.variance);
  if (mode === "class") {
    const out: Rgb[] = new Array(cloud.count);
    for (let i = 0; i < cloud.count; i++) {
      out[i] = classColor(classIds ? classIds[i] : 255);
    }
    return out;
  }
  const out: Rgb[] = new Array(cloud.count);
  for (let i = 0; i < cloud.count; i++) {
    out[i] = [cloud.r[i], cloud.g[i], cloud.b[i]];
  }
  return out;
}
