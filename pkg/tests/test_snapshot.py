import struct

import numpy as np
import pytest

from hpl import snapshot
from hpl.domain import Grid


@pytest.fixture
def grid():
    return Grid(Nx=8, Ny=6, Y=3.0, ell=1.5)


def test_header_layout(grid):
    data = snapshot.encode(grid, grid.zeros())
    magic, nx, ny, Y, Lx, ell = struct.unpack_from("<6sIIddd", data)
    assert (magic, nx, ny, Y, ell) == (b"HPFLD1", 8, 6, 3.0, 1.5)
    assert len(data) == struct.calcsize("<6sIIddd") + 8 * 8 * 8


def test_snapshot_round_trip(grid, tmp_path):
    u = np.random.default_rng(0).normal(size=grid.shape)
    path = snapshot.write(tmp_path / "u.hpf", grid, u)
    g2, u2, ut2, t2 = snapshot.read(path)
    assert g2 == grid and ut2 is None and t2 is None
    assert np.array_equal(u2, u)


def test_checkpoint_round_trip(grid):
    rng = np.random.default_rng(1)
    u, ut = rng.normal(size=(2, *grid.shape))
    g2, u2, ut2, t2 = snapshot.decode(snapshot.encode(grid, u, ut, 0.125))
    assert np.array_equal(u2, u) and np.array_equal(ut2, ut) and t2 == 0.125


def test_row_major_order(grid):
    u = np.arange(grid.Nx * (grid.Ny + 2), dtype=float).reshape(grid.shape)
    data = snapshot.encode(grid, u)
    vals = np.frombuffer(data[struct.calcsize("<6sIIddd"):], "<f8")
    assert np.array_equal(vals, np.arange(u.size))


def test_bad_inputs(grid):
    with pytest.raises(snapshot.SnapshotFormatError, match="magic"):
        snapshot.decode(b"XXXXXX" + snapshot.encode(grid, grid.zeros())[6:])
    with pytest.raises(snapshot.SnapshotFormatError):
        snapshot.decode(snapshot.encode(grid, grid.zeros())[:-8])
    with pytest.raises(snapshot.SnapshotFormatError):
        snapshot.decode(b"HP")
    with pytest.raises(ValueError, match="ut and t"):
        snapshot.encode(grid, grid.zeros(), grid.zeros())
