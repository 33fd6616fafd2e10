"""Shared geometry helpers for the test suite (independent of package internals)."""

from __future__ import annotations

import numpy as np

from stereoforge.camera import PinholeCamera, RigidTransform, StereoRig


def rodrigues(axis, angle: float) -> np.ndarray:
    """Rotation matrix from axis-angle (independent of any package helper)."""
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    k = np.array(
        [[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]]
    )
    return np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * (k @ k)


def random_camera(rng: np.random.Generator, width=None, height=None) -> PinholeCamera:
    width = int(width if width is not None else rng.integers(240, 800))
    height = int(height if height is not None else rng.integers(180, 600))
    f = float(rng.uniform(0.7, 1.6)) * width
    return PinholeCamera(
        fx=f * float(rng.uniform(0.98, 1.02)),
        fy=f * float(rng.uniform(0.98, 1.02)),
        cx=(width - 1) / 2.0 + float(rng.uniform(-0.04, 0.04)) * width,
        cy=(height - 1) / 2.0 + float(rng.uniform(-0.04, 0.04)) * height,
        width=width,
        height=height,
    )


def random_rotation(rng: np.random.Generator, max_deg: float) -> np.ndarray:
    axis = rng.normal(size=3)
    angle = np.radians(rng.uniform(-max_deg, max_deg))
    return rodrigues(axis, angle)


def random_rig(rng: np.random.Generator, max_deg: float = 4.0) -> StereoRig:
    """Near-horizontal stereo rig with equal-size cameras and a small relative rotation."""
    cam = random_camera(rng)
    cam2 = PinholeCamera(
        fx=cam.fx * float(rng.uniform(0.97, 1.03)),
        fy=cam.fy * float(rng.uniform(0.97, 1.03)),
        cx=cam.cx + float(rng.uniform(-4, 4)),
        cy=cam.cy + float(rng.uniform(-4, 4)),
        width=cam.width,
        height=cam.height,
    )
    r = random_rotation(rng, max_deg)
    baseline = float(rng.uniform(0.05, 0.2))
    center = np.array(
        [baseline, rng.uniform(-0.05, 0.05) * baseline, rng.uniform(-0.05, 0.05) * baseline]
    )
    t = -r @ center  # target center in ref frame is `center`
    return StereoRig(cam_ref=cam, cam_tgt=cam2, ref_to_tgt=RigidTransform(r, t))


def points_in_front(rng: np.random.Generator, rig: StereoRig, n: int) -> np.ndarray:
    """World points comfortably inside both view frusta (world = ref frame)."""
    cam = rig.cam_ref
    z = rng.uniform(1.0, 6.0, size=n)
    u = rng.uniform(0.25 * cam.width, 0.75 * cam.width, size=n)
    v = rng.uniform(0.25 * cam.height, 0.75 * cam.height, size=n)
    x = (u - cam.cx) / cam.fx * z
    y = (v - cam.cy) / cam.fy * z
    return np.stack([x, y, z], axis=-1)


def project_rectified(a_new: np.ndarray, r_new: np.ndarray, pts_cam: np.ndarray) -> np.ndarray:
    """Project camera-frame points through a rectifying rotation + new intrinsics."""
    rect = pts_cam @ r_new.T
    z = rect[..., 2]
    u = a_new[0, 0] * rect[..., 0] / z + a_new[0, 2]
    v = a_new[1, 1] * rect[..., 1] / z + a_new[1, 2]
    return np.stack([u, v], axis=-1)
