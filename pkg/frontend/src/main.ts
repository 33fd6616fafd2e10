/** DOM wiring for the cleaning tool: orbit navigation, brushing, commits. */

import { Api } from "./api.js";
import { OrbitCamera } from "./camera.js";
import { pointColors, type Rgb } from "./colors.js";
import { buildMaskText } from "./protocol.js";
import { draw } from "./renderer.js";
import { SelectionModel, type BrushMode } from "./selection.js";
import type { Cloud, ColorMode, ScreenPoint } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const params = new URLSearchParams(window.location.search);
const api = new Api(params.get("api") ?? "http://127.0.0.1:8787");

const canvas = el<HTMLCanvasElement>("viewport");
const ctx = canvas.getContext("2d")!;
const status = el<HTMLElement>("status");
const sceneSelect = el<HTMLSelectElement>("scene");
const modeButtons: Record<ColorMode, HTMLButtonElement> = {
  rgb: el("mode-rgb"),
  variance: el("mode-variance"),
  class: el("mode-class"),
};
const brushButtons: Record<BrushMode, HTMLButtonElement> = {
  select: el("brush-select"),
  unselect: el("brush-unselect"),
};
const radiusInput = el<HTMLInputElement>("brush-radius");

let cloud: Cloud | null = null;
let classIds: Uint8Array | undefined;
let sceneId = "";
let labelSize: { width: number; height: number } | null = null;
let colorMode: ColorMode = "rgb";
let brushMode: BrushMode = "select";
let colors: Rgb[] = [];
let projected: ScreenPoint[] = [];
const camera = new OrbitCamera();
const selection = new SelectionModel();

function say(text: string): void {
  status.textContent = text;
}

function recolor(): void {
  if (cloud) colors = pointColors(cloud, colorMode, classIds);
}

function render(): void {
  if (!cloud) return;
  projected = camera.project(cloud, canvas.width, canvas.height);
  draw(ctx, canvas.width, canvas.height, projected, colors, selection.selected);
}

async function loadScene(id: string): Promise<void> {
  say(`loading ${id} ...`);
  try {
    cloud = await api.cloud(id);
  } catch (err) {
    cloud = null;
    say(String(err));
    return;
  }
  sceneId = id;
  classIds = await loadClassIds(id, cloud);
  let w = 0;
  let h = 0;
  for (let i = 0; i < cloud.count; i++) {
    if (cloud.u[i] >= w) w = cloud.u[i] + 1;
    if (cloud.v[i] >= h) h = cloud.v[i] + 1;
  }
  labelSize = await loadLabelSize(id) ?? { width: w, height: h };
  camera.fit(cloud);
  recolor();
  render();
  say(`${id}: ${cloud.count} points`);
}

/** Label resolution from the reference image; falls back to the uv extent. */
async function loadLabelSize(id: string): Promise<{ width: number; height: number } | null> {
  try {
    const img = await loadImage(api.imageUrl(id));
    return { width: img.naturalWidth, height: img.naturalHeight };
  } catch {
    return null;
  }
}

/** Optional material classes, sampled per point from the mask image. */
async function loadClassIds(id: string, pts: Cloud): Promise<Uint8Array | undefined> {
  try {
    const img = await loadImage(api.materialUrl(id));
    const off = document.createElement("canvas");
    off.width = img.naturalWidth;
    off.height = img.naturalHeight;
    const octx = off.getContext("2d")!;
    octx.drawImage(img, 0, 0);
    const data = octx.getImageData(0, 0, off.width, off.height).data;
    const ids = new Uint8Array(pts.count);
    for (let i = 0; i < pts.count; i++) {
      ids[i] = data[4 * (pts.v[i] * off.width + pts.u[i])];
    }
    return ids;
  } catch {
    modeButtons.class.disabled = true;
    return undefined;
  }
}

function loadImage(url: string): Promise<HTMLImageElement> {
  return new Promise((resolve, reject) => {
    const img = new Image();
    img.crossOrigin = "anonymous";
    img.onload = () => resolve(img);
    img.onerror = () => reject(new Error(`image load failed: ${url}`));
    img.src = url;
  });
}

// --- pointer interaction: left drag brushes, right drag orbits, wheel zooms ---

let dragging: "brush" | "orbit" | null = null;
let last = { x: 0, y: 0 };

canvas.addEventListener("contextmenu", (e) => e.preventDefault());
canvas.addEventListener("mousedown", (e) => {
  const rect = canvas.getBoundingClientRect();
  last = { x: e.clientX - rect.left, y: e.clientY - rect.top };
  dragging = e.button === 2 || e.shiftKey ? "orbit" : "brush";
  if (dragging === "brush") applyBrush(last.x, last.y);
});
canvas.addEventListener("mousemove", (e) => {
  if (!dragging) return;
  const rect = canvas.getBoundingClientRect();
  const x = e.clientX - rect.left;
  const y = e.clientY - rect.top;
  if (dragging === "orbit") {
    camera.orbit((x - last.x) * 0.008, (y - last.y) * 0.008);
    render();
  } else {
    applyBrush(x, y);
  }
  last = { x, y };
});
window.addEventListener("mouseup", () => (dragging = null));
canvas.addEventListener("wheel", (e) => {
  e.preventDefault();
  camera.zoom(e.deltaY > 0 ? 1.12 : 1 / 1.12);
  render();
});

function applyBrush(x: number, y: number): void {
  if (!cloud) return;
  const changed = selection.applyStroke(
    projected,
    { points: [{ x, y }], radius: Number(radiusInput.value) },
    brushMode,
  );
  if (changed > 0) {
    render();
    say(`${selection.size} points selected`);
  }
}

// --- toolbar -----------------------------------------------------------------

for (const mode of Object.keys(modeButtons) as ColorMode[]) {
  modeButtons[mode].addEventListener("click", () => {
    colorMode = mode;
    for (const m of Object.keys(modeButtons) as ColorMode[]) {
      modeButtons[m].classList.toggle("active", m === mode);
    }
    recolor();
    render();
  });
}
for (const mode of Object.keys(brushButtons) as BrushMode[]) {
  brushButtons[mode].addEventListener("click", () => {
    brushMode = mode;
    for (const m of Object.keys(brushButtons) as BrushMode[]) {
      brushButtons[m].classList.toggle("active", m === mode);
    }
  });
}

el<HTMLButtonElement>("undo").addEventListener("click", () => {
  if (selection.undo()) {
    render();
    say(`${selection.size} points selected`);
  }
});
el<HTMLButtonElement>("redo").addEventListener("click", () => {
  if (selection.redo()) {
    render();
    say(`${selection.size} points selected`);
  }
});
el<HTMLButtonElement>("clear").addEventListener("click", () => {
  selection.clear();
  render();
  say("selection cleared");
});

el<HTMLButtonElement>("commit").addEventListener("click", async () => {
  if (!cloud || !labelSize) return;
  if (selection.size === 0 && !window.confirm("Commit an empty (all-keep) mask?")) {
    return;
  }
  const text = buildMaskText(
    labelSize.width, labelSize.height, selection.selected, cloud.u, cloud.v,
  );
  say("committing mask ...");
  try {
    const removed = await api.commitMask(sceneId, text);
    say(`mask stored (${removed} pixels removed); selection kept until reload`);
  } catch (err) {
    say(`${err} — selection preserved, retry when the service is reachable`);
  }
});

sceneSelect.addEventListener("change", () => void loadScene(sceneSelect.value));

async function boot(): Promise<void> {
  try {
    const ids = await api.scenes();
    sceneSelect.replaceChildren(
      ...ids.map((id) => {
        const opt = document.createElement("option");
        opt.value = id;
        opt.textContent = id;
        return opt;
      }),
    );
    if (ids.length > 0) await loadScene(ids[0]);
    else say("service reachable, but no scenes found");
  } catch (err) {
    say(`${err} — is 'stereoforge serve' running?`);
  }
}

void boot();
