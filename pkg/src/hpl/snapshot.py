"""HPFLD1 binary field snapshots and checkpoints.

Layout (little-endian)::

    b"HPFLD1" | Nx:u32 | Ny:u32 | Y:f64 | Lx:f64 | ell:f64 | u[Nx, Ny+2]:f64 (row-major)

A checkpoint appends one extra record, ``t:f64 | ut[Nx, Ny+2]:f64``.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .domain import Grid

MAGIC = b"HPFLD1"
_HEADER = struct.Struct("<6sIIddd")


class SnapshotFormatError(ValueError):
    pass


def _header(grid: Grid) -> bytes:
    return _HEADER.pack(MAGIC, grid.Nx, grid.Ny, grid.Y, grid.Lx, grid.ell)


def encode(grid: Grid, u: np.ndarray, ut: np.ndarray | None = None, t: float | None = None) -> bytes:
    u = grid.check(u, "u")
    parts = [_header(grid), np.ascontiguousarray(u, dtype="<f8").tobytes()]
    if ut is not None:
        if t is None:
            raise ValueError("a checkpoint needs both ut and t")
        ut = grid.check(ut, "ut")
        parts += [struct.pack("<d", t), np.ascontiguousarray(ut, dtype="<f8").tobytes()]
    return b"".join(parts)


def decode(data: bytes, dealias_cutoff: int | None = None):
    """Return ``(grid, u, ut, t)``; ``ut`` and ``t`` are ``None`` for a plain snapshot."""
    if len(data) < _HEADER.size:
        raise SnapshotFormatError("file shorter than HPFLD1 header")
    magic, nx, ny, Y, Lx, ell = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}")
    grid = Grid(Nx=nx, Ny=ny, Y=Y, Lx=Lx, ell=ell, dealias_cutoff=dealias_cutoff)
    n = nx * (ny + 2) * 8
    off = _HEADER.size
    if len(data) == off + n:
        u = np.frombuffer(data, "<f8", count=nx * (ny + 2), offset=off).reshape(grid.shape)
        return grid, u.copy(), None, None
    if len(data) == off + 2 * n + 8:
        u = np.frombuffer(data, "<f8", count=nx * (ny + 2), offset=off).reshape(grid.shape)
        (t,) = struct.unpack_from("<d", data, off + n)
        ut = np.frombuffer(data, "<f8", count=nx * (ny + 2), offset=off + n + 8).reshape(grid.shape)
        return grid, u.copy(), ut.copy(), t
    raise SnapshotFormatError(f"payload size {len(data) - off} matches neither snapshot nor checkpoint")


def write(path, grid: Grid, u, ut=None, t=None) -> Path:
    path = Path(path)
    path.write_bytes(encode(grid, u, ut, t))
    return path


def read(path, dealias_cutoff: int | None = None):
    return decode(Path(path).read_bytes(), dealias_cutoff)
