"""File formats: PWHF binary grids, trajectory CSV with JSON sidecars,
and the per-run manifest.

Grid layout (little-endian): magic "PWHF", u32 version=1, u32 Nx, u32 Ny,
f64 dx, f64 dy, f64 t, then Nx*Ny f64 values row-major.  Trajectories are
decimal CSV (17 significant digits, exact float round-trip) so they stay
human-diffable; grids are binary for size.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import PilotwaveError

MAGIC = b"PWHF"
VERSION = 1
_HEADER = struct.Struct("<4sIII3d")  # magic, version, Nx, Ny, dx, dy, t

CSV_HEADER = "t_s,x_m,y_m,vx_mps,vy_mps,F_N,phase"


class FileFormatError(PilotwaveError):
    """Corrupt or foreign file content."""


def write_grid(field_values: np.ndarray, path, *, dx: float, dy: float, t: float = 0.0) -> None:
    """Write one scalar field in the PWHF binary format."""
    arr = np.ascontiguousarray(field_values, dtype="<f8")
    if arr.ndim != 2:
        raise ValueError("grid field must be 2-D")
    if not np.all(np.isfinite(arr)):
        raise ValueError("grid field contains non-finite values")
    header = _HEADER.pack(MAGIC, VERSION, arr.shape[0], arr.shape[1], dx, dy, t)
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(arr.tobytes())
    os.replace(tmp, path)


def read_grid(path):
    """Read a PWHF grid; returns (field, header_dict)."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise FileFormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, nx, ny, dx, dy, t = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FileFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FileFormatError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + nx * ny * 8
    if len(raw) != expected:
        raise FileFormatError(f"{path}: size {len(raw)} != expected {expected}")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(nx, ny).copy()
    return data, {"Nx": nx, "Ny": ny, "dx": dx, "dy": dy, "t": t}


@dataclass
class TrajectoryRecord:
    """Sampled droplet states plus reproduction metadata and wave snapshots."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    F: np.ndarray
    phase: np.ndarray
    metadata: dict = field(default_factory=dict)
    snapshots: list = field(default_factory=list)  # (t, eta) or (t, eta, phi)
    termination: str = "completed"

    def __post_init__(self):
        n = len(self.t)
        for name in ("x", "y", "vx", "vy", "F", "phase"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"column '{name}' length mismatch")
        if n > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("time stamps must be strictly increasing")

    @property
    def n_samples(self) -> int:
        return len(self.t)

    def columns(self) -> np.ndarray:
        return np.column_stack([self.t, self.x, self.y, self.vx, self.vy, self.F, self.phase])

    def speeds(self) -> np.ndarray:
        return np.hypot(self.vx, self.vy)


def write_trajectory(record: TrajectoryRecord, path) -> None:
    """CSV at 17 significant digits plus a .meta.json sidecar."""
    cols = record.columns()
    lines = [CSV_HEADER]
    lines.extend(",".join(f"{v:.17g}" for v in row) for row in cols)
    tmp = str(path) + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")
    os.replace(tmp, path)

    meta = dict(record.metadata)
    meta["termination"] = record.termination
    meta["n_samples"] = record.n_samples
    sidecar = _sidecar_path(path)
    tmp = sidecar + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, sidecar)


def _sidecar_path(path) -> str:
    base = str(path)
    return (base[:-4] if base.endswith(".csv") else base) + ".meta.json"


def read_trajectory(path) -> TrajectoryRecord:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != CSV_HEADER:
                raise FileFormatError(f"{path}: unexpected CSV header '{header}'")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
    except OSError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc
    if data.size == 0:
        data = np.zeros((0, 7))
    if data.shape[1] != 7:
        raise FileFormatError(f"{path}: expected 7 columns, got {data.shape[1]}")
    meta = {}
    termination = "completed"
    sidecar = _sidecar_path(path)
    if os.path.exists(sidecar):
        with open(sidecar, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
        termination = meta.pop("termination", "completed")
        meta.pop("n_samples", None)
    return TrajectoryRecord(
        t=data[:, 0], x=data[:, 1], y=data[:, 2], vx=data[:, 3], vy=data[:, 4],
        F=data[:, 5], phase=data[:, 6], metadata=meta, termination=termination,
    )


def write_manifest(path, manifest: dict) -> None:
    """Atomic JSON manifest written once at run end."""
    tmp = str(path) + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
