"""Binary cached-grid files.

Layout (all little-endian):
    bytes 0..6   magic b"DWGRID1"
    byte  7      which tile: b"r" or b"u"
    bytes 8..15  float64 delta
    bytes 16..19 uint32 resolution
    payload      2 * (resolution+1)^2 float64, row-major with the x node
                 index as the slow axis; component 1 block then component 2.

Writes are deterministic: identical grids give byte-identical files.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"DWGRID1"


def write_grid(path: str | Path, which: str, delta: float, grid: np.ndarray) -> None:
    """grid has shape (2, res+1, res+1)."""
    if which not in ("r", "u"):
        raise ValueError(f"which must be 'r' or 'u', got {which!r}")
    if grid.ndim != 3 or grid.shape[0] != 2 or grid.shape[1] != grid.shape[2]:
        raise ValueError(f"grid shape {grid.shape} is not (2, res+1, res+1)")
    res = grid.shape[1] - 1
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(which.encode())
        fh.write(struct.pack("<d", delta))
        fh.write(struct.pack("<I", res))
        fh.write(np.ascontiguousarray(grid, dtype="<f8").tobytes())


def read_grid(path: str | Path) -> tuple[str, float, np.ndarray]:
    raw = Path(path).read_bytes()
    if raw[:7] != MAGIC:
        raise ValueError(f"{path}: bad magic {raw[:7]!r}")
    which = raw[7:8].decode()
    (delta,) = struct.unpack("<d", raw[8:16])
    (res,) = struct.unpack("<I", raw[16:20])
    n = (res + 1) * (res + 1)
    data = np.frombuffer(raw[20:], dtype="<f8", count=2 * n).reshape(2, res + 1, res + 1)
    return which, delta, data.copy()
