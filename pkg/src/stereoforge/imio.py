"""File formats: PFM disparity maps, 8/16-bit PNG images and masks, and
run-length-encoded removal masks.

PFM follows the Middlebury convention: header ``Pf\\n<w> <h>\\n<scale>\\n``,
negative scale meaning little-endian, float32 samples stored bottom row
first. Invalid pixels serialize as +inf. Round trips are byte-exact.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .camera import DisparityMap
from .errors import FormatError, ShapeError
from .labels import MATERIAL_CLASSES, UNLABELED, MaterialMask
from . import kvtext

PNG16_SCALE = 256.0


def pfm_write(path: str | Path, values: np.ndarray, scale: float = -1.0) -> None:
    values = np.asarray(values, dtype=np.float32)
    if values.ndim != 2:
        raise ShapeError("PFM writer expects a single-channel image")
    if scale == 0:
        raise ValueError("PFM scale must be nonzero")
    h, w = values.shape
    data = values[::-1, :]  # bottom-to-top
    if scale < 0:
        payload = data.astype("<f4").tobytes()
    else:
        payload = data.astype(">f4").tobytes()
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(f"{scale:g}\n".encode("ascii"))
        f.write(payload)


def _read_token(f, path) -> bytes:
    tok = b""
    while True:
        c = f.read(1)
        if not c:
            raise FormatError(f"{path}: truncated PFM header")
        if c in b" \t\r\n":
            if tok:
                return tok
            continue
        tok += c


def pfm_read(path: str | Path) -> tuple[np.ndarray, float]:
    path = Path(path)
    with open(path, "rb") as f:
        magic = _read_token(f, path)
        if magic not in (b"Pf", b"PF"):
            raise FormatError(f"{path}: bad PFM magic {magic!r}")
        if magic == b"PF":
            raise FormatError(f"{path}: color PFM not supported")
        try:
            w = int(_read_token(f, path))
            h = int(_read_token(f, path))
            scale = float(_read_token(f, path))
        except ValueError as exc:
            raise FormatError(f"{path}: malformed PFM header") from exc
        if w < 1 or h < 1 or scale == 0:
            raise FormatError(f"{path}: invalid PFM dimensions or scale")
        payload = f.read(w * h * 4)
        if len(payload) != w * h * 4:
            raise FormatError(f"{path}: truncated PFM payload")
    dtype = "<f4" if scale < 0 else ">f4"
    data = np.frombuffer(payload, dtype=dtype).reshape(h, w)
    return data[::-1, :].astype(np.float32), scale


def disparity_to_pfm(path: str | Path, disp: DisparityMap) -> None:
    values = np.where(disp.valid, disp.values, np.inf).astype(np.float32)
    pfm_write(path, values)


def disparity_from_pfm(path: str | Path) -> DisparityMap:
    values, _ = pfm_read(path)
    valid = np.isfinite(values) & (values > 0)
    return DisparityMap(values=np.where(valid, values, 0.0).astype(np.float64), valid=valid)


# --- PNG -----------------------------------------------------------------------

def save_gray8(path: str | Path, img: np.ndarray) -> None:
    img = np.asarray(img)
    if img.dtype != np.uint8:
        img = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    Image.fromarray(img, mode="L").save(path, format="PNG")


def load_gray8(path: str | Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8)


def save_bool_png(path: str | Path, mask: np.ndarray) -> None:
    save_gray8(path, np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8))


def load_bool_png(path: str | Path) -> np.ndarray:
    return load_gray8(path) > 127


def disparity_to_png16(path: str | Path, disp: DisparityMap) -> None:
    """16-bit PNG alternative encoding: value = round(disparity * 256), 0 = invalid."""
    q = np.rint(disp.values * PNG16_SCALE)
    q = np.where(disp.valid & (q >= 1) & (q <= 65535), q, 0).astype(np.uint16)
    Image.fromarray(q).save(path, format="PNG")


def disparity_from_png16(path: str | Path) -> DisparityMap:
    with Image.open(path) as im:
        q = np.asarray(im, dtype=np.uint16)
    valid = q > 0
    return DisparityMap(values=q.astype(np.float64) / PNG16_SCALE, valid=valid)


def save_material_png(path: str | Path, mask: MaterialMask) -> None:
    Image.fromarray(mask.labels, mode="L").save(path, format="PNG")


def load_material_png(path: str | Path) -> MaterialMask:
    with Image.open(path) as im:
        labels = np.asarray(im, dtype=np.uint8)
    bad = ~np.isin(labels, (*MATERIAL_CLASSES, UNLABELED))
    if bad.any():
        raise FormatError(f"{path}: {int(bad.sum())} pixels outside material classes")
    return MaterialMask(labels=labels)


# --- RLE removal masks ------------------------------------------------------------

def rle_encode(removal: np.ndarray) -> str:
    """Structured-text run-length encoding, alternating keep/remove, keep first."""
    removal = np.asarray(removal, dtype=bool)
    if removal.ndim != 2:
        raise ShapeError("removal mask must be 2D")
    h, w = removal.shape
    flat = removal.ravel()
    runs: list[int] = []
    if flat.size:
        changes = np.nonzero(np.diff(flat))[0] + 1
        bounds = np.concatenate([[0], changes, [flat.size]])
        lengths = np.diff(bounds).tolist()
        if flat[0]:  # first run must be a keep run
            lengths = [0] + lengths
        runs = [int(x) for x in lengths]
    else:
        runs = []
    pairs = {
        "width": str(w),
        "height": str(h),
        "runs": " ".join(str(r) for r in runs),
    }
    return kvtext.dump_kv(pairs)


def rle_decode(text: str, source: str = "<rle>") -> np.ndarray:
    kv = kvtext.parse_kv(text, source)
    for key in ("width", "height", "runs"):
        if key not in kv:
            raise FormatError(f"{source}: missing key {key!r}")
    w = int(kv["width"])
    h = int(kv["height"])
    if w < 1 or h < 1:
        raise FormatError(f"{source}: invalid mask size {w}x{h}")
    runs = [int(x) for x in kv["runs"].split()] if kv["runs"].strip() else []
    if any(r < 0 for r in runs):
        raise FormatError(f"{source}: negative run length")
    total = sum(runs)
    if total != w * h:
        raise FormatError(f"{source}: run lengths sum to {total}, expected {w * h}")
    flat = np.zeros(w * h, dtype=bool)
    pos = 0
    removing = False
    for r in runs:
        if removing:
            flat[pos : pos + r] = True
        pos += r
        removing = not removing
    return flat.reshape(h, w)
