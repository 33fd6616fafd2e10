"""Local HTTP service backing the point-cloud cleaning UI.

Endpoints (all responses carry explicit Content-Length):

    GET  /scenes              structured text: count=N, scene.K=<id>
    GET  /scene/{id}/cloud    little-endian records:
                              f32 x,y,z; u8 r,g,b; f32 variance; u32 u; u32 v
    GET  /scene/{id}/image    reference image PNG
    GET  /scene/{id}/material material-class mask PNG (404 when unannotated)
    POST /scene/{id}/mask     RLE removal mask (structured text); stored as
                              <scene>/manual_mask.rle for cmd_postprocess

Reads are concurrent; mask uploads serialize behind a lock. Scene ids are
bundle subdirectory names under the served root.
"""

from __future__ import annotations

import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from . import imio, labels
from .camera import load_calibration
from .errors import StereoforgeError

CLOUD_DTYPE = np.dtype(
    [
        ("x", "<f4"), ("y", "<f4"), ("z", "<f4"),
        ("r", "u1"), ("g", "u1"), ("b", "u1"),
        ("variance", "<f4"), ("u", "<u4"), ("v", "<u4"),
    ]
)
assert CLOUD_DTYPE.itemsize == 27


def cloud_to_bytes(cloud: labels.PointCloud) -> bytes:
    rec = np.zeros(cloud.count, dtype=CLOUD_DTYPE)
    rec["x"], rec["y"], rec["z"] = cloud.xyz[:, 0], cloud.xyz[:, 1], cloud.xyz[:, 2]
    rec["r"], rec["g"], rec["b"] = cloud.rgb[:, 0], cloud.rgb[:, 1], cloud.rgb[:, 2]
    rec["variance"] = cloud.variance
    rec["u"], rec["v"] = cloud.uv[:, 0], cloud.uv[:, 1]
    return rec.tobytes()


def cloud_from_bytes(payload: bytes) -> labels.PointCloud:
    if len(payload) % CLOUD_DTYPE.itemsize:
        raise StereoforgeError(f"cloud stream length {len(payload)} is not a record multiple")
    rec = np.frombuffer(payload, dtype=CLOUD_DTYPE)
    return labels.PointCloud(
        xyz=np.stack([rec["x"], rec["y"], rec["z"]], axis=-1).astype(np.float32),
        rgb=np.stack([rec["r"], rec["g"], rec["b"]], axis=-1),
        variance=rec["variance"].astype(np.float32),
        uv=np.stack([rec["u"], rec["v"]], axis=-1).astype(np.uint32),
    )


class SceneStore:
    """Scene bundles on disk, as produced by the synth/match/postprocess commands."""

    def __init__(self, root: Path):
        self.root = Path(root)
        if not self.root.is_dir():
            raise StereoforgeError(f"scene root not found: {self.root}")
        self._mutate = threading.Lock()

    def scene_ids(self) -> list[str]:
        ids = []
        for child in sorted(self.root.iterdir()):
            if child.is_dir() and (child / "calib.txt").exists() and self._disp_path(child):
                ids.append(child.name)
        return ids

    def _scene_dir(self, scene_id: str) -> Path:
        if not re.fullmatch(r"[A-Za-z0-9_.-]+", scene_id):
            raise KeyError(scene_id)
        path = self.root / scene_id
        if not path.is_dir():
            raise KeyError(scene_id)
        return path

    @staticmethod
    def _disp_path(scene: Path) -> Path | None:
        for rel in ("postprocess/disp_final.pfm", "match/dstar.pfm", "gt/disp_L.pfm"):
            if (scene / rel).exists():
                return scene / rel
        return None

    def scene_list_text(self) -> str:
        ids = self.scene_ids()
        lines = [f"count={len(ids)}"]
        lines += [f"scene.{k}={sid}" for k, sid in enumerate(ids)]
        return "\n".join(lines) + "\n"

    def image_path(self, scene_id: str) -> Path:
        scene = self._scene_dir(scene_id)
        frames = sorted((scene / "frames").glob("L_t*.png"))
        if not frames:
            raise KeyError(scene_id)
        return frames[0]

    def material_path(self, scene_id: str) -> Path:
        path = self._scene_dir(scene_id) / "gt" / "material.png"
        if not path.exists():
            raise KeyError(scene_id)
        return path

    def load_cloud(self, scene_id: str) -> labels.PointCloud:
        scene = self._scene_dir(scene_id)
        disp_path = self._disp_path(scene)
        if disp_path is None:
            raise KeyError(scene_id)
        disp = imio.disparity_from_pfm(disp_path)
        variance = None
        ustar = scene / "match" / "ustar.pfm"
        if ustar.exists():
            var, _ = imio.pfm_read(ustar)
            if var.shape == disp.values.shape:
                variance = var.astype(np.float64)
        rgb = imio.load_gray8(self.image_path(scene_id))
        calib = load_calibration(scene / "calib.txt")
        return labels.export_point_cloud(
            disp, rgb, calib.cam_l, calib.rig_lr.baseline, variance=variance
        )

    def store_mask(self, scene_id: str, text: str) -> int:
        scene = self._scene_dir(scene_id)
        removal = imio.rle_decode(text, source=f"scene {scene_id} mask upload")
        disp_path = self._disp_path(scene)
        disp = imio.disparity_from_pfm(disp_path)
        if removal.shape != disp.values.shape:
            raise StereoforgeError(
                f"mask {removal.shape[1]}x{removal.shape[0]} does not match "
                f"disparity {disp.width}x{disp.height}"
            )
        with self._mutate:
            (scene / "manual_mask.rle").write_text(text, encoding="utf-8")
        return int(removal.sum())


_ROUTE = re.compile(r"^/scene/([A-Za-z0-9_.-]+)/(cloud|image|material|mask)$")


class _Handler(BaseHTTPRequestHandler):
    store: SceneStore  # assigned by make_server

    def _send(self, code: int, content_type: str, payload: bytes) -> None:
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def _send_text(self, code: int, text: str) -> None:
        self._send(code, "text/plain; charset=utf-8", text.encode("utf-8"))

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def do_GET(self):
        try:
            if self.path == "/scenes":
                self._send_text(200, self.store.scene_list_text())
                return
            m = _ROUTE.match(self.path)
            if not m:
                self._send_text(404, "not found\n")
                return
            scene_id, what = m.groups()
            if what == "cloud":
                payload = cloud_to_bytes(self.store.load_cloud(scene_id))
                self._send(200, "application/octet-stream", payload)
            elif what == "image":
                self._send(200, "image/png", self.store.image_path(scene_id).read_bytes())
            elif what == "material":
                self._send(200, "image/png", self.store.material_path(scene_id).read_bytes())
            else:
                self._send_text(405, "mask is POST-only\n")
        except KeyError:
            self._send_text(404, "unknown scene\n")
        except StereoforgeError as exc:
            self._send_text(400, f"error: {exc}\n")

    def do_POST(self):
        try:
            m = _ROUTE.match(self.path)
            if not m or m.group(2) != "mask":
                self._send_text(404, "not found\n")
                return
            length = int(self.headers.get("Content-Length", "0"))
            if length <= 0:
                self._send_text(400, "missing request body\n")
                return
            body = self.rfile.read(length).decode("utf-8")
            removed = self.store.store_mask(m.group(1), body)
            self._send_text(200, f"ok=1\nremoved={removed}\n")
        except KeyError:
            self._send_text(404, "unknown scene\n")
        except StereoforgeError as exc:
            self._send_text(400, f"error: {exc}\n")


def make_server(root: Path, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    store = SceneStore(root)
    handler = type("BoundHandler", (_Handler,), {"store": store})
    return ThreadingHTTPServer((host, port), handler)


def serve_forever(root: Path, host: str = "127.0.0.1", port: int = 8787) -> None:
    server = make_server(root, host, port)
    print(f"serving {root} on http://{host}:{server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
