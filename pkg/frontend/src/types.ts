/** Core data shapes shared across the cleaning tool. */

/** Structure-of-arrays point cloud, one entry per valid disparity pixel. */
export interface Cloud {
  readonly count: number;
  readonly x: Float32Array;
  readonly y: Float32Array;
  readonly z: Float32Array;
  readonly r: Uint8Array;
  readonly g: Uint8Array;
  readonly b: Uint8Array;
  readonly variance: Float32Array;
  readonly u: Uint32Array;
  readonly v: Uint32Array;
}

export type ColorMode = "rgb" | "variance" | "class";

export interface ScreenPoint {
  x: number;
  y: number;
  /** camera-space depth; points behind the near plane carry depth <= 0 */
  depth: number;
}

export interface Stroke {
  points: { x: number; y: number }[];
  radius: number;
}
