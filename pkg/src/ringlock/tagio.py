"""Timestamp and histogram interchange formats.

Timestamps travel as little-endian int64 picoseconds, one binary file per
channel, with a JSON sidecar describing the channels.  Histograms are CSV
with bin centers in picoseconds.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ringlock.photons import CoincidenceHistogram

SIDECAR_VERSION = 1


def write_timestamps(stem: str | Path, channels: dict[str, np.ndarray]) -> Path:
    """Write per-channel timestamps (seconds) as int64-ps binaries + sidecar."""
    stem = Path(stem)
    meta = {"version": SIDECAR_VERSION, "resolution_ps": 1, "channels": []}
    for name, times in channels.items():
        ps = np.round(np.asarray(times, dtype=float) * 1e12).astype("<i8")
        fname = f"{stem.name}.{name}.bin"
        (stem.parent / fname).write_bytes(ps.tobytes())
        meta["channels"].append({"name": name, "file": fname, "count": int(ps.size)})
    sidecar = stem.with_suffix(".json")
    sidecar.write_text(json.dumps(meta, indent=2))
    return sidecar


def read_timestamps(sidecar: str | Path) -> dict[str, np.ndarray]:
    """Read a timestamp sidecar; returns channel name -> times in seconds."""
    sidecar = Path(sidecar)
    meta = json.loads(sidecar.read_text())
    if meta.get("version") != SIDECAR_VERSION:
        raise ValueError(f"unsupported sidecar version {meta.get('version')}")
    out = {}
    for ch in meta["channels"]:
        raw = (sidecar.parent / ch["file"]).read_bytes()
        ps = np.frombuffer(raw, dtype="<i8")
        if ps.size != ch["count"]:
            raise ValueError(f"channel {ch['name']}: expected {ch['count']} stamps, found {ps.size}")
        out[ch["name"]] = ps.astype(float) * 1e-12
    return out


def histogram_to_csv(h: CoincidenceHistogram, path: str | Path) -> None:
    lines = ["bin_center_ps,counts"]
    for t, c in zip(h.bin_centers(), h.counts):
        lines.append(f"{t * 1e12:.6f},{int(c)}")
    Path(path).write_text("\n".join(lines) + "\n")


def histogram_from_csv(path: str | Path, integration_time: float = float("nan")) -> CoincidenceHistogram:
    rows = Path(path).read_text().strip().splitlines()[1:]
    centers = np.array([float(r.split(",")[0]) for r in rows]) * 1e-12
    counts = np.array([int(r.split(",")[1]) for r in rows], dtype=np.int64)
    if centers.size < 2:
        raise ValueError("histogram CSV needs at least two bins")
    bin_width = float(np.diff(centers).mean())
    t_start = float(centers[0] - bin_width / 2.0)
    return CoincidenceHistogram(bin_width, t_start, counts, integration_time)
