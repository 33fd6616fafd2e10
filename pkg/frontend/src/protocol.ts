/** Wire formats of the labeling service.
 *
 * Cloud stream: little-endian 27-byte records
 *   f32 x, y, z; u8 r, g, b; f32 variance; u32 u; u32 v
 * Scene list / RLE masks: line-oriented key=value text. The RLE encoding is
 * byte-compatible with the pipeline side: width, height, then alternating
 * keep/remove run lengths over row-major pixels, starting with a keep run.
 */

import type { Cloud } from "./types.js";

export const RECORD_SIZE = 27;

export function decodeCloud(buffer: ArrayBuffer): Cloud {
  if (buffer.byteLength % RECORD_SIZE !== 0) {
    throw new Error(
      `truncated cloud stream: ${buffer.byteLength} bytes is not a multiple of ${RECORD_SIZE}`,
    );
  }
  const count = buffer.byteLength / RECORD_SIZE;
  const view = new DataView(buffer);
  const cloud = {
    count,
    x: new Float32Array(count),
    y: new Float32Array(count),
    z: new Float32Array(count),
    r: new Uint8Array(count),
    g: new Uint8Array(count),
    b: new Uint8Array(count),
    variance: new Float32Array(count),
    u: new Uint32Array(count),
    v: new Uint32Array(count),
  };
  for (let i = 0; i < count; i++) {
    const o = i * RECORD_SIZE;
    cloud.x[i] = view.getFloat32(o, true);
    cloud.y[i] = view.getFloat32(o + 4, true);
    cloud.z[i] = view.getFloat32(o + 8, true);
    cloud.r[i] = view.getUint8(o + 12);
    cloud.g[i] = view.getUint8(o + 13);
    cloud.b[i] = view.getUint8(o + 14);
    cloud.variance[i] = view.getFloat32(o + 15, true);
    cloud.u[i] = view.getUint32(o + 19, true);
    cloud.v[i] = view.getUint32(o + 23, true);
  }
  return cloud;
}

export function encodeCloud(cloud: Cloud): ArrayBuffer {
  const buffer = new ArrayBuffer(cloud.count * RECORD_SIZE);
  const view = new DataView(buffer);
  for (let i = 0; i < cloud.count; i++) {
    const o = i * RECORD_SIZE;
    view.setFloat32(o, cloud.x[i], true);
    view.setFloat32(o + 4, cloud.y[i], true);
    view.setFloat32(o + 8, cloud.z[i], true);
    view.setUint8(o + 12, cloud.r[i]);
    view.setUint8(o + 13, cloud.g[i]);
    view.setUint8(o + 14, cloud.b[i]);
    view.setFloat32(o + 15, cloud.variance[i], true);
    view.setUint32(o + 19, cloud.u[i], true);
    view.setUint32(o + 23, cloud.v[i], true);
  }
  return buffer;
}

function parseKv(text: string): Map<string, string> {
  const out = new Map<string, string>();
  for (const raw of text.split("\n")) {
    const line = raw.trim();
    if (!line || line.startsWith("#")) continue;
    const eq = line.indexOf("=");
    if (eq < 1) throw new Error(`expected key=value, got ${JSON.stringify(line)}`);
    const key = line.slice(0, eq).trim();
    if (out.has(key)) throw new Error(`duplicate key ${key}`);
    out.set(key, line.slice(eq + 1).trim());
  }
  return out;
}

export function parseSceneList(text: string): string[] {
  const kv = parseKv(text);
  const count = Number(kv.get("count") ?? "0");
  const scenes: string[] = [];
  for (let k = 0; k < count; k++) {
    const id = kv.get(`scene.${k}`);
    if (id === undefined) throw new Error(`scene list missing scene.${k}`);
    scenes.push(id);
  }
  return scenes;
}

/** Removal mask from selected point indices, serialized as the RLE text format. */
export function buildMaskText(
  width: number,
  height: number,
  selected: Iterable<number>,
  u: Uint32Array,
  v: Uint32Array,
): string {
  const removal = new Uint8Array(width * height);
  for (const idx of selected) {
    removal[v[idx] * width + u[idx]] = 1;
  }
  const runs: number[] = [];
  let runValue = 0; // keep runs come first
  let runLength = 0;
  for (let i = 0; i < removal.length; i++) {
    if (removal[i] === runValue) {
      runLength++;
    } else {
      runs.push(runLength);
      runValue = removal[i];
      runLength = 1;
    }
  }
  runs.push(runLength);
  return `width=${width}\nheight=${height}\nruns=${runs.join(" ")}\n`;
}

/** Server-equivalent decode, used to verify commits round-trip exactly. */
export function decodeMaskText(text: string): { width: number; height: number; removal: Uint8Array } {
  const kv = parseKv(text);
  for (const key of ["width", "height", "runs"]) {
    if (!kv.has(key)) throw new Error(`mask text missing ${key}`);
  }
  const width = Number(kv.get("width"));
  const height = Number(kv.get("height"));
  if (!Number.isInteger(width) || !Number.isInteger(height) || width < 1 || height < 1) {
    throw new Error(`invalid mask size ${width}x${height}`);
  }
  const runsText = kv.get("runs")!.trim();
  const runs = runsText ? runsText.split(/\s+/).map(Number) : [];
  if (runs.some((r) => !Number.isInteger(r) || r < 0)) {
    throw new Error("invalid run length");
  }
  const total = runs.reduce((a, b) => a + b, 0);
  if (total !== width * height) {
    throw new Error(`run lengths sum to ${total}, expected ${width * height}`);
  }
  const removal = new Uint8Array(width * height);
  let pos = 0;
  let removing = false;
  for (const r of runs) {
    if (removing) removal.fill(1, pos, pos + r);
    pos += r;
    removing = !removing;
  }
  return { width, height, removal };
}
