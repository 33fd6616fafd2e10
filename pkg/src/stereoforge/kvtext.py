"""Line-oriented ``key=value`` text format used by calibration, scene, and config files.

Rules: UTF-8, one pair per line, ``#`` starts a comment line, blank lines
ignored, duplicate keys rejected.
"""

from __future__ import annotations

from pathlib import Path

from .errors import FormatError


def parse_kv(text: str, source: str = "<string>") -> dict[str, str]:
    """Parse key=value lines into an ordered dict, rejecting duplicates."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"{source}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise FormatError(f"{source}:{lineno}: empty key")
        if key in out:
            raise FormatError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def dump_kv(pairs: dict[str, str]) -> str:
    return "".join(f"{k}={v}\n" for k, v in pairs.items())


def load_kv(path: str | Path) -> dict[str, str]:
    path = Path(path)
    return parse_kv(path.read_text(encoding="utf-8"), source=str(path))


def save_kv(path: str | Path, pairs: dict[str, str]) -> None:
    Path(path).write_text(dump_kv(pairs), encoding="utf-8")


def fmt_floats(values) -> str:
    """Serialize a float sequence with full round-trip precision."""
    return " ".join(repr(float(v)) for v in values)


def parse_floats(value: str, count: int | None = None, source: str = "<value>") -> list[float]:
    parts = value.split()
    try:
        floats = [float(p) for p in parts]
    except ValueError as exc:
        raise FormatError(f"{source}: not a float list: {value!r}") from exc
    if count is not None and len(floats) != count:
        raise FormatError(f"{source}: expected {count} floats, got {len(floats)}")
    return floats
