/** Orbit camera with a plain software projection; no GPU involved.
 *
 * Conventions match the labeling pipeline: world x right, y down, z forward.
 * The camera orbits a target point at a distance, azimuth rotating around
 * the world y axis, elevation tilting toward it.
 */

import type { Cloud, ScreenPoint } from "./types.js";

export interface OrbitState {
  target: [number, number, number];
  radius: number;
  azimuth: number;   // radians, 0 looks along +z toward the target
  elevation: number; // radians, positive looks down from above
  fovY: number;      // vertical field of view, radians
}

export class OrbitCamera {
  state: OrbitState;

  constructor(state?: Partial<OrbitState>) {
    this.state = {
      target: [0, 0, 1],
      radius: 2,
      azimuth: 0,
      elevation: 0,
      fovY: (55 * Math.PI) / 180,
      ...state,
    };
  }

  /** Camera basis: eye position plus right/up/forward rows. */
  basis(): { eye: [number, number, number]; right: number[]; up: number[]; fwd: number[] } {
    const { target, radius, azimuth, elevation } = this.state;
    const ce = Math.cos(elevation);
    const se = Math.sin(elevation);
    const ca = Math.cos(azimuth);
    const sa = Math.sin(azimuth);
    // offset from target back toward the viewer
    const off: [number, number, number] = [-radius * ce * sa, -radius * se, -radius * ce * ca];
    const eye: [number, number, number] = [
      target[0] + off[0],
      target[1] + off[1],
      target[2] + off[2],
    ];
    const fwd = norm([-off[0], -off[1], -off[2]]);
    const worldUp: [number, number, number] = [0, -1, 0]; // y points down in image space
    let right = cross(worldUp, fwd);
    const rl = len(right);
    if (rl < 1e-9) {
      right = [1, 0, 0];
    } else {
      right = [right[0] / rl, right[1] / rl, right[2] / rl];
    }
    const up = cross(fwd, right);
    return { eye, right, up, fwd };
  }

  /** Project every cloud point to pixel coordinates on a w x h viewport. */
  project(cloud: Cloud, w: number, h: number): ScreenPoint[] {
    const { eye, right, up, fwd } = this.basis();
    const f = (0.5 * h) / Math.tan(this.state.fovY / 2);
    const cx = w / 2;
    const cy = h / 2;
    const out: ScreenPoint[] = new Array(cloud.count);
    for (let i = 0; i < cloud.count; i++) {
      const dx = cloud.x[i] - eye[0];
      const dy = cloud.y[i] - eye[1];
      const dz = cloud.z[i] - eye[2];
      const zc = dx * fwd[0] + dy * fwd[1] + dz * fwd[2];
      if (zc <= 1e-6) {
        out[i] = { x: NaN, y: NaN, depth: zc };
        continue;
      }
      const xc = dx * right[0] + dy * right[1] + dz * right[2];
      const yc = dx * up[0] + dy * up[1] + dz * up[2];
      out[i] = { x: cx + (f * xc) / zc, y: cy - (f * yc) / zc, depth: zc };
    }
    return out;
  }

  orbit(dAzimuth: number, dElevation: number): void {
    this.state.azimuth += dAzimuth;
    const lim = Math.PI / 2 - 0.01;
    this.state.elevation = Math.min(lim, Math.max(-lim, this.state.elevation + dElevation));
  }

  zoom(factor: number): void {
    this.state.radius = Math.min(100, Math.max(0.05, this.state.radius * factor));
  }

  /** Frame the cloud: target at the centroid, radius covering the extent. */
  fit(cloud: Cloud): void {
    if (cloud.count === 0) return;
    let sx = 0;
    let sy = 0;
    let sz = 0;
    for (let i = 0; i < cloud.count; i++) {
      sx += cloud.x[i];
      sy += cloud.y[i];
      sz += cloud.z[i];
    }
    const c: [number, number, number] = [sx / cloud.count, sy / cloud.count, sz / cloud.count];
    let r2 = 0;
    for (let i = 0; i < cloud.count; i++) {
      const dx = cloud.x[i] - c[0];
      const dy = cloud.y[i] - c[1];
      const dz = cloud.z[i] - c[2];
      r2 = Math.max(r2, dx * dx + dy * dy + dz * dz);
    }
    this.state.target = c;
    this.state.radius = Math.max(0.2, 2.2 * Math.sqrt(r2));
  }
}

function cross(a: number[], b: number[]): number[] {
  return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
}

function len(a: number[]): number {
  return Math.hypot(a[0], a[1], a[2]);
}

function norm(a: number[]): number[] {
  const l = len(a);
  return [a[0] / l, a[1] / l, a[2] / l];
}
