"""Mode-field container formats.

Reference encoding is a self-describing JSON document with base64-packed
little-endian arrays; a compact binary variant with a fixed header is also
provided.  Axes are float64 in metres, field components complex64 or
complex128 row-major over (r, z), the core mask one byte per cell, and the
permittivity float64 in F/m.
"""

from __future__ import annotations

import base64
import json
import struct
from pathlib import Path

import numpy as np

from ringlock.overlap import ModeFieldGrid

FORMAT_NAME = "ringlock-modefield"
FORMAT_VERSION = 1
_MAGIC = b"RLMF"


def _pack(arr: np.ndarray, dtype: str) -> dict:
    data = np.ascontiguousarray(arr.astype(dtype)).tobytes()
    return {"dtype": dtype, "data": base64.b64encode(data).decode("ascii")}


def _unpack(entry: dict, shape: tuple[int, ...]) -> np.ndarray:
    raw = base64.b64decode(entry["data"])
    return np.frombuffer(raw, dtype=np.dtype(entry["dtype"])).reshape(shape).copy()


def save_json(grid: ModeFieldGrid, path: str | Path, field_dtype: str = "complex128") -> None:
    if field_dtype not in ("complex64", "complex128"):
        raise ValueError(f"field_dtype must be complex64 or complex128, got {field_dtype}")
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "units": "m",
        "shape": list(grid.shape),
        "r_axis": _pack(grid.r_axis, "float64"),
        "z_axis": _pack(grid.z_axis, "float64"),
        "e_r": _pack(grid.e_r, field_dtype),
        "e_phi": _pack(grid.e_phi, field_dtype),
        "e_z": _pack(grid.e_z, field_dtype),
        "core_mask": _pack(grid.core_mask, "uint8"),
        "permittivity": _pack(grid.permittivity, "float64"),
    }
    Path(path).write_text(json.dumps(doc))


def load_json(path: str | Path) -> ModeFieldGrid:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != FORMAT_NAME:
        raise ValueError(f"not a {FORMAT_NAME} file: {path}")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported version {doc.get('version')}")
    shape = tuple(doc["shape"])
    return ModeFieldGrid(
        r_axis=_unpack(doc["r_axis"], (shape[0],)),
        z_axis=_unpack(doc["z_axis"], (shape[1],)),
        e_r=_unpack(doc["e_r"], shape),
        e_phi=_unpack(doc["e_phi"], shape),
        e_z=_unpack(doc["e_z"], shape),
        core_mask=_unpack(doc["core_mask"], shape).astype(bool),
        permittivity=_unpack(doc["permittivity"], shape),
    )


def save_binary(grid: ModeFieldGrid, path: str | Path, field_dtype: str = "complex128") -> None:
    codes = {"complex64": 0, "complex128": 1}
    if field_dtype not in codes:
        raise ValueError(f"field_dtype must be complex64 or complex128, got {field_dtype}")
    nr, nz = grid.shape
    header = _MAGIC + struct.pack("<III B", FORMAT_VERSION, nr, nz, codes[field_dtype])
    chunks = [
        grid.r_axis.astype("<f8").tobytes(),
        grid.z_axis.astype("<f8").tobytes(),
        grid.e_r.astype(field_dtype).astype(f"<{np.dtype(field_dtype).str[1:]}").tobytes(),
        grid.e_phi.astype(field_dtype).astype(f"<{np.dtype(field_dtype).str[1:]}").tobytes(),
        grid.e_z.astype(field_dtype).astype(f"<{np.dtype(field_dtype).str[1:]}").tobytes(),
        grid.core_mask.astype("u1").tobytes(),
        grid.permittivity.astype("<f8").tobytes(),
    ]
    Path(path).write_bytes(header + b"".join(chunks))


def load_binary(path: str | Path) -> ModeFieldGrid:
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError(f"bad magic in {path}")
    version, nr, nz, code = struct.unpack("<III B", raw[4 : 4 + 13])
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported version {version}")
    field_dtype = {0: "<c8", 1: "<c16"}[code]
    itemsize = np.dtype(field_dtype).itemsize
    off = 4 + 13
    n = nr * nz

    def take(dtype, count, shape):
        nonlocal off
        size = np.dtype(dtype).itemsize * count
        arr = np.frombuffer(raw[off : off + size], dtype=dtype).reshape(shape).copy()
        off += size
        return arr

    r_axis = take("<f8", nr, (nr,))
    z_axis = take("<f8", nz, (nz,))
    e_r = take(field_dtype, n, (nr, nz))
    e_phi = take(field_dtype, n, (nr, nz))
    e_z = take(field_dtype, n, (nr, nz))
    mask = take("u1", n, (nr, nz)).astype(bool)
    eps = take("<f8", n, (nr, nz))
    return ModeFieldGrid(r_axis, z_axis, e_r, e_phi, e_z, mask, eps)
