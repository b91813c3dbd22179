"""Binary field files with JSON sidecars.

Layout (little-endian)::

    b"HJRD" | u32 version=1 | u32 dim
    dim x (f64 min | f64 max | u64 count | u8 periodic)
    prod(count) x f64 values, row-major

Every ``name.hjrd`` is written alongside ``name.json`` carrying the same grid
metadata plus free-form labels.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import InvalidSpec
from .grid import Field, GridSpec, make_grid

MAGIC = b"HJRD"
VERSION = 1
_DIM_RECORD = struct.Struct("<ddQB")


def grid_metadata(grid) -> dict:
    s = grid.spec
    return {
        "dim": s.dim,
        "min": list(s.min),
        "max": list(s.max),
        "count": list(s.count),
        "periodic": list(s.periodic),
    }


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def encode_field(field: Field) -> bytes:
    s = field.grid.spec
    parts = [MAGIC, struct.pack("<II", VERSION, s.dim)]
    for j in range(s.dim):
        parts.append(_DIM_RECORD.pack(s.min[j], s.max[j], s.count[j], int(s.periodic[j])))
    parts.append(np.ascontiguousarray(field.values, dtype="<f8").tobytes())
    return b"".join(parts)


def decode_field(data: bytes) -> Field:
    if data[:4] != MAGIC:
        raise InvalidSpec("not a field file (bad magic)")
    version, dim = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise InvalidSpec(f"unsupported field format version {version}")
    offset = 12
    lo, hi, count, periodic = [], [], [], []
    for _ in range(dim):
        a, b, c, p = _DIM_RECORD.unpack_from(data, offset)
        offset += _DIM_RECORD.size
        lo.append(a)
        hi.append(b)
        count.append(c)
        periodic.append(bool(p))
    grid = make_grid(GridSpec(lo, hi, count, periodic))
    expected = grid.size * 8
    if len(data) - offset != expected:
        raise InvalidSpec(f"field payload is {len(data) - offset} bytes, expected {expected}")
    values = np.frombuffer(data, dtype="<f8", offset=offset).astype(np.float64)
    return Field(grid, values)


def save_field(field: Field, path, labels: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_field(field))
    meta = grid_metadata(field.grid)
    meta["format"] = "HJRD"
    meta["version"] = VERSION
    meta["labels"] = labels or {}
    sidecar_path(path).write_text(json.dumps(meta, indent=2))
    return path


def load_field(path) -> Field:
    return decode_field(Path(path).read_bytes())


def load_labels(path) -> dict:
    side = sidecar_path(path)
    if not side.exists():
        return {}
    return json.loads(side.read_text()).get("labels", {})
